"""File IO helpers shared by core services and the CLI.

Writes are atomic (temp file + ``os.replace``) so an interrupted command never
leaves a half-written artifact behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any, Dict, Iterable, Iterator, List, Tuple

from guestmix.errors import MissingArtifactError, RecordParseError


def canonical_json(payload: Any, *, indent: int | None = 2) -> str:
    """Serialize with sorted keys so equal payloads give equal bytes."""
    return json.dumps(payload, indent=indent, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=f".{os.path.basename(path)}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str, payload: Any) -> None:
    atomic_write_text(path, canonical_json(payload))


def read_json(path: str) -> Any:
    require_file(path)
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_jsonl(path: str, rows: Iterable[Dict[str, Any]]) -> int:
    lines = [json.dumps(row, sort_keys=True, ensure_ascii=False) for row in rows]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def iter_jsonl(path: str) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield ``(line_number, object)`` pairs; blank lines are skipped."""
    require_file(path)
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"invalid JSON: {exc.msg}", path=path, line=line_number) from exc
            if not isinstance(obj, dict):
                raise RecordParseError("expected a JSON object", path=path, line=line_number)
            yield line_number, obj


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    return [obj for _, obj in iter_jsonl(path)]


def iter_tsv(path: str, *, min_columns: int = 1) -> Iterator[Tuple[int, List[str]]]:
    """Yield ``(line_number, fields)`` for non-empty, non-comment TSV lines."""
    require_file(path)
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = [field.strip() for field in line.split("\t")]
            if len(fields) < min_columns:
                raise RecordParseError(
                    f"expected at least {min_columns} tab-separated columns, got {len(fields)}",
                    path=path,
                    line=line_number,
                )
            yield line_number, fields


def write_tsv(path: str, rows: Iterable[Iterable[Any]], header: Iterable[str] | None = None) -> None:
    lines = []
    if header is not None:
        lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(str(value) for value in row))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_word_list(path: str) -> List[str]:
    """One entry per line, ``#`` comments and blank lines ignored."""
    return [fields[0] for _, fields in iter_tsv(path)]


def require_file(path: str) -> str:
    if not path or not os.path.isfile(path):
        raise MissingArtifactError("required file not found", path=path)
    return path
