import logging
import os
import sys
import threading
from typing import Dict, Optional

from guestmix._config import ENV_KEY_LOG_LEVEL

_LOG_CONFIG = {
    "console": {
        "level": "INFO",
        "format": "\033[32m%(asctime)s \033[33m[%(levelname)s] \033[34m%(name)s:%(lineno)d \033[0m%(message)s",
        "datefmt": "%Y-%m-%d %H:%M:%S"
    },
    "file": {
        "level": "DEBUG",
        "format": "%(asctime)s [%(levelname)s %(name)s:%(funcName)s:%(lineno)d] %(message)s"
    }
}

_LOGGER_LOCK = threading.RLock()
_LIBRARY_ROOT_LOGGER = None
_CONSOLE_HANDLER = None
_FILE_HANDLERS: Dict[str, logging.Handler] = {}
CONSOLE_DISABLED = logging.CRITICAL + 1


def get_library_root():
    return __name__.split(".")[0]


def configure_project_root_logger(
        log_config: Optional[Dict] = None
):
    global _LIBRARY_ROOT_LOGGER, _CONSOLE_HANDLER
    log_config = log_config or _LOG_CONFIG

    with _LOGGER_LOCK:
        if _LIBRARY_ROOT_LOGGER:
            return

        # Read logging settings from workspace config
        try:
            from guestmix.utils.settings import get as _get_setting
            log_enabled = _get_setting("log_enabled", True)
            log_level = str(_get_setting("log_level", "INFO")).upper()
        except Exception:
            log_enabled = True
            log_level = "INFO"
        log_level = os.environ.get(ENV_KEY_LOG_LEVEL, log_level).upper()

        _LIBRARY_ROOT_LOGGER = logging.getLogger(get_library_root())
        _LIBRARY_ROOT_LOGGER.propagate = False
        _LIBRARY_ROOT_LOGGER.setLevel("DEBUG")

        _CONSOLE_HANDLER = logging.StreamHandler(sys.stderr)
        _CONSOLE_HANDLER.setFormatter(logging.Formatter(
            log_config["console"]["format"],
            datefmt=log_config["console"].get("datefmt"),
        ))
        _CONSOLE_HANDLER.setLevel(log_level if log_enabled else CONSOLE_DISABLED)
        _LIBRARY_ROOT_LOGGER.addHandler(_CONSOLE_HANDLER)


def set_console_level(level: str) -> None:
    """Override the console handler level (``--verbose`` / ``--quiet``)."""
    configure_project_root_logger()
    if _CONSOLE_HANDLER is not None:
        _CONSOLE_HANDLER.setLevel(level.upper())


def disable_console() -> None:
    """Silence the console handler; file handlers keep receiving records."""
    configure_project_root_logger()
    if _CONSOLE_HANDLER is not None:
        _CONSOLE_HANDLER.setLevel(CONSOLE_DISABLED)


def console_level() -> int:
    configure_project_root_logger()
    return _CONSOLE_HANDLER.level if _CONSOLE_HANDLER is not None else CONSOLE_DISABLED


def attach_file_handler(log_path: str, log_config: Optional[Dict] = None) -> None:
    log_config = log_config or _LOG_CONFIG
    configure_project_root_logger()

    with _LOGGER_LOCK:
        key = os.path.abspath(log_path)
        if key in _FILE_HANDLERS:
            return
        os.makedirs(os.path.dirname(key), exist_ok=True)
        file_handler = logging.FileHandler(log_path, mode="a", encoding="utf-8")
        datefmt = log_config["console"].get("datefmt", None)
        file_handler.setFormatter(logging.Formatter(log_config["file"]["format"], datefmt=datefmt))
        file_handler.setLevel(log_config["file"]["level"])
        _FILE_HANDLERS[key] = file_handler
        _LIBRARY_ROOT_LOGGER.addHandler(file_handler)


def detach_file_handlers() -> None:
    with _LOGGER_LOCK:
        for handler in _FILE_HANDLERS.values():
            if _LIBRARY_ROOT_LOGGER is not None:
                _LIBRARY_ROOT_LOGGER.removeHandler(handler)
            handler.close()
        _FILE_HANDLERS.clear()


def get_logger(name: str = None):
    if name == "__main__":
        name = get_library_root() + ".__main__"
    configure_project_root_logger()
    return logging.getLogger(name)
