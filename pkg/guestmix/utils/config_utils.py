"""
Helpers for run-config files and ``--set section.key=value`` overrides.
"""

from __future__ import annotations

import ast
import re
from typing import Any, Dict, Iterable

import yaml

from guestmix.errors import UsageError

# PyYAML reads ``5e-3`` as a string; learning rates are written that way.
yaml_float_pattern = re.compile(
    r'''^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
         |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
         |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
         |[-+]?\.(?:inf|Inf|INF)
         |\.(?:nan|NaN|NAN))$''', re.X)
yaml.SafeLoader.add_implicit_resolver(
    'tag:yaml.org,2002:float',
    yaml_float_pattern,
    list('-+0123456789.')
)


def dump_yaml(data: Dict[str, Any]) -> str:
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True, default_flow_style=False)


def parse_value(val_str: Any) -> Any:
    """Parse one ``--set`` value: Python literals first, then true/false/null words.

    Non-string values are returned as-is.
    """
    if not isinstance(val_str, str):
        return val_str
    try:
        return ast.literal_eval(val_str)
    except (ValueError, SyntaxError):
        lowered = val_str.lower()
        if lowered == "true":
            return True
        if lowered == "false":
            return False
        if lowered in ("none", "null"):
            return None
        return val_str


def parse_overrides(pairs: Iterable[str]) -> Dict[str, Any]:
    """``["train.lr=0.01", ...]`` → ``{"train.lr": 0.01}``; later pairs win."""
    overrides: Dict[str, Any] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key = key.strip()
        if not sep or not key or any(not part for part in key.split(".")):
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got '{pair}'")
        overrides[key] = parse_value(raw.strip())
    return overrides


def unflatten_dict(d: Dict[str, Any], sep: str = '.') -> Dict[str, Any]:
    """``{'train.lr': 1}`` → ``{'train': {'lr': 1}}``.

    A key that is both a value and a section (``model=1`` next to ``model.kind=x``)
    raises ``UsageError``.
    """
    result: Dict[str, Any] = {}
    for k, v in d.items():
        parts = k.split(sep)
        target = result
        for depth, part in enumerate(parts[:-1]):
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise UsageError(f"'{sep.join(parts[:depth + 1])}' is a value, not a section")
        if isinstance(target.get(parts[-1]), dict):
            raise UsageError(f"'{k}' is a section, not a value")
        target[parts[-1]] = v
    return result


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return ``base`` updated recursively with ``override`` (inputs untouched)."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
