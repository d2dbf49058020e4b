"""
Work-directory settings loader/saver for guestmix.

Settings are persisted to ``guestmix_settings.yaml`` under the work directory.
They cover ambient preferences only (logging); pipeline parameters live in the
run config handled by ``guestmix.core.config_manager``.
"""

import os
from typing import Any, Dict

import yaml

from guestmix._config import SETTINGS_FILENAME, WORKDIR


SETTINGS_DEFAULTS: Dict[str, Any] = {
    # Logging
    "log_enabled": True,
    "log_level": "INFO",
    "log_to_file": True,
}


SETTINGS_TEMPLATE = f"""\
# guestmix work-directory settings
# Auto-generated on first command. Edit freely.
# Delete this file to reset all values to defaults.

# Logging
log_enabled: {str(SETTINGS_DEFAULTS.get("log_enabled")).lower()}
log_level: {SETTINGS_DEFAULTS.get("log_level")}                    # DEBUG | INFO | WARNING | ERROR | CRITICAL
log_to_file: {str(SETTINGS_DEFAULTS.get("log_to_file")).lower()}                  # one log file per command under logs/
"""


_cached: Dict[str, Any] = {}


def _settings_path(workdir: str = WORKDIR) -> str:
    return os.path.join(workdir, SETTINGS_FILENAME)


def ensure_settings_file(workdir: str = WORKDIR) -> str:
    """Create settings file with defaults if it does not exist."""
    path = _settings_path(workdir)
    if not os.path.exists(path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(SETTINGS_TEMPLATE)
    return path


def load_settings(workdir: str = WORKDIR) -> Dict[str, Any]:
    """Load and cache settings from disk with defaults merged in."""
    global _cached
    path = _settings_path(workdir)
    merged = dict(SETTINGS_DEFAULTS)

    if os.path.exists(path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
            if isinstance(data, dict):
                merged.update(data)
        except (OSError, yaml.YAMLError):
            pass

    _cached = merged
    return merged


def get(key: str, default: Any = None) -> Any:
    """Get one setting value from cache (lazy-loading if needed)."""
    if not _cached:
        load_settings(WORKDIR)
    return _cached.get(key, SETTINGS_DEFAULTS.get(key, default))
