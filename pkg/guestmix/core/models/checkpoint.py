"""
Binary checkpoint container.

Layout::

    b"GUESTMIX"                magic
    uint64 little-endian       header length in bytes
    header                     canonical UTF-8 JSON
    blocks                     little-endian float64, in header order

The header holds ``format_version``, ``kind``, ``architecture``, ``config``,
``seed`` and ``blocks`` (a list of ``{"name", "shape"}``). Readers reject any
block whose byte size disagrees with its declared shape.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC
from guestmix.errors import CheckpointError
from guestmix.utils import get_logger
from guestmix.utils.io_utils import atomic_write_bytes, require_file

logger = get_logger(__name__)

_LENGTH = struct.Struct("<Q")
_DTYPE = np.dtype("<f8")


@dataclass(frozen=True)
class CheckpointHeader:
    kind: str
    architecture: Dict[str, Any]
    config: Dict[str, Any]
    seed: int
    blocks: Tuple[Tuple[str, Tuple[int, ...]], ...]
    format_version: int = CHECKPOINT_FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "kind": self.kind,
            "architecture": self.architecture,
            "config": self.config,
            "seed": self.seed,
            "blocks": [{"name": name, "shape": list(shape)} for name, shape in self.blocks],
        }


def encode_checkpoint(
    kind: str,
    architecture: Dict[str, Any],
    blocks: Sequence[Tuple[str, np.ndarray]],
    *,
    config: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> bytes:
    names = [name for name, _ in blocks]
    if len(set(names)) != len(names):
        raise CheckpointError(f"duplicate block names in {names}")
    arrays = [np.ascontiguousarray(array, dtype=_DTYPE) for _, array in blocks]
    for (name, _), array in zip(blocks, arrays):
        if not np.all(np.isfinite(array)):
            raise CheckpointError(f"block '{name}' contains non-finite values")
    header = CheckpointHeader(
        kind=kind,
        architecture=architecture,
        config=config or {},
        seed=int(seed),
        blocks=tuple((name, tuple(int(d) for d in array.shape)) for name, array in zip(names, arrays)),
    )
    header_json = json.dumps(header.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    header_bytes = header_json.encode("utf-8")
    return b"".join([CHECKPOINT_MAGIC, _LENGTH.pack(len(header_bytes)), header_bytes, *(a.tobytes() for a in arrays)])


def write_checkpoint(path: str, kind: str, architecture: Dict[str, Any], blocks, **kwargs: Any) -> None:
    atomic_write_bytes(path, encode_checkpoint(kind, architecture, blocks, **kwargs))
    logger.info("Checkpoint written: %s (%d blocks)", path, len(blocks))


def decode_checkpoint(data: bytes, path: Optional[str] = None) -> Tuple[CheckpointHeader, Dict[str, np.ndarray]]:
    prefix = len(CHECKPOINT_MAGIC)
    if data[:prefix] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a guestmix checkpoint (bad magic)", path=path)
    if len(data) < prefix + _LENGTH.size:
        raise CheckpointError("truncated checkpoint header", path=path)
    (header_len,) = _LENGTH.unpack_from(data, prefix)
    start = prefix + _LENGTH.size
    if len(data) < start + header_len:
        raise CheckpointError("truncated checkpoint header", path=path)
    try:
        raw = json.loads(data[start:start + header_len].decode("utf-8"))
        version = int(raw["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version}", path=path)
        header = CheckpointHeader(
            kind=str(raw["kind"]),
            architecture=dict(raw["architecture"]),
            config=dict(raw.get("config") or {}),
            seed=int(raw["seed"]),
            blocks=tuple((str(b["name"]), tuple(int(d) for d in b["shape"])) for b in raw["blocks"]),
            format_version=version,
        )
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint header: {exc}", path=path) from exc

    arrays: Dict[str, np.ndarray] = {}
    offset = start + header_len
    for name, shape in header.blocks:
        if any(d < 0 for d in shape):
            raise CheckpointError(f"block '{name}' declares negative shape {shape}", path=path)
        size = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        if offset + size > len(data):
            raise CheckpointError(f"block '{name}' is truncated: shape {shape} needs {size} bytes", path=path)
        if size == 0:
            arrays[name] = np.zeros(shape, dtype=np.float64)
        else:
            flat = np.frombuffer(data, dtype=_DTYPE, count=size // _DTYPE.itemsize, offset=offset)
            arrays[name] = flat.reshape(shape).astype(np.float64)
        offset += size
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes after the declared blocks", path=path)
    return header, arrays


def read_checkpoint(path: str) -> Tuple[CheckpointHeader, Dict[str, np.ndarray]]:
    require_file(path)
    with open(path, "rb") as handle:
        data = handle.read()
    return decode_checkpoint(data, path)
