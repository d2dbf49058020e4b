"""
Per-command reproducibility manifests.

A manifest records what a command read and wrote (content hashes), the resolved
config and the seed. It carries no timestamps, so identical reruns produce
identical manifests.
"""

from __future__ import annotations

import os
from typing import Any, Dict, Iterable, Optional

from guestmix._config import MANIFESTS_DIR
from guestmix.utils.hashing import sha256_file
from guestmix.utils.io_utils import read_json, write_json


def _hash_paths(paths: Iterable[str], base_dir: Optional[str]) -> Dict[str, str]:
    hashed: Dict[str, str] = {}
    for path in paths:
        if not path or not os.path.isfile(path):
            continue
        key = os.path.relpath(path, base_dir) if base_dir else path
        hashed[key.replace(os.sep, "/")] = sha256_file(path)
    return dict(sorted(hashed.items()))


def manifest_path(workdir: str, command: str) -> str:
    return os.path.join(workdir, MANIFESTS_DIR, f"{command}.json")


def build_manifest(
    command: str,
    *,
    version: str,
    seed: Optional[int],
    config: Dict[str, Any],
    inputs: Iterable[str] = (),
    outputs: Iterable[str] = (),
    workdir: Optional[str] = None,
) -> Dict[str, Any]:
    return {
        "command": command,
        "version": version,
        "seed": seed,
        "config": config,
        "inputs": _hash_paths(inputs, None),
        "outputs": _hash_paths(outputs, workdir),
    }


def write_manifest(workdir: str, command: str, **kwargs: Any) -> str:
    """Write ``manifests/<command>.json`` and return its path."""
    payload = build_manifest(command, workdir=workdir, **kwargs)
    path = manifest_path(workdir, command)
    write_json(path, payload)
    return path


def stale_inputs(manifest: Dict[str, Any]) -> Dict[str, str]:
    """Inputs whose current content hash differs from the recorded one."""
    stale: Dict[str, str] = {}
    for path, digest in (manifest.get("inputs") or {}).items():
        if not os.path.isfile(path):
            stale[path] = "missing"
        elif sha256_file(path) != digest:
            stale[path] = "changed"
    return stale


def load_manifest(workdir: str, command: str) -> Dict[str, Any]:
    return read_json(manifest_path(workdir, command))
