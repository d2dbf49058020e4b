"""
Review ingestion, sentence segmentation, tokenization, and deduplication.

Sentences are split with auditable rules (no statistical model): a boundary is
``.``, ``!`` or ``?`` followed by whitespace and an uppercase letter, unless the
word ending at the punctuation is a known abbreviation.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import regex

from guestmix._config import CSV_REQUIRED_COLUMNS, DEFAULT_ABBREVIATIONS_PATH, REVIEW_FORMATS
from guestmix.errors import DataError, MissingArtifactError, RecordParseError, UsageError
from guestmix.utils import get_logger
from guestmix.utils.hashing import normalize_text, sentence_id as _sentence_id
from guestmix.utils.io_utils import read_word_list
from guestmix.utils.time_utils import format_date, parse_date

logger = get_logger(__name__)

_BOUNDARY = regex.compile(r"[.!?](?=\s+\p{Lu})")
_TOKEN = regex.compile(r"\p{L}+(?:-\p{L}+)*")


@dataclass(frozen=True)
class Review:
    review_id: str
    business_id: str
    text: str
    date: Optional[datetime.date] = None
    lat: Optional[float] = None
    lon: Optional[float] = None


@dataclass(frozen=True)
class Token:
    surface: str
    folded: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    review_id: str
    index: int
    text: str
    tokens: Tuple[Token, ...] = field(repr=False)
    business_id: str = ""
    date: Optional[datetime.date] = None

    @property
    def folded_tokens(self) -> List[str]:
        return [token.folded for token in self.tokens]

    def to_record(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "review_id": self.review_id,
            "business_id": self.business_id,
            "date": format_date(self.date),
            "index": self.index,
            "text": self.text,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Sentence":
        text = str(record["text"])
        return make_sentence(
            text,
            review_id=str(record.get("review_id", "")),
            index=int(record.get("index", 0)),
            business_id=str(record.get("business_id", "") or ""),
            date=parse_date(record.get("date")),
            expected_id=record.get("sentence_id"),
        )


@dataclass
class IngestStats:
    records_in: int = 0
    records_out: int = 0
    skipped: int = 0
    skipped_lines: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records_in": self.records_in,
            "records_out": self.records_out,
            "skipped": self.skipped,
            "skipped_lines": list(self.skipped_lines),
        }


# ═══════════════════════════════════════════════════════════════
#  Ingestion
# ═══════════════════════════════════════════════════════════════

def _optional_float(value) -> Optional[float]:
    if value is None or (isinstance(value, str) and not value.strip()):
        return None
    return float(value)


def _build_review(obj: dict) -> Review:
    for key in ("review_id", "business_id", "text"):
        if key not in obj or obj[key] is None:
            raise ValueError(f"missing required key '{key}'")
    review_id = str(obj["review_id"]).strip()
    if not review_id:
        raise ValueError("review_id is empty")
    text = str(obj["text"])
    if not text.strip():
        raise ValueError("text is empty")
    lat, lon = _optional_float(obj.get("lat")), _optional_float(obj.get("lon"))
    if lat is not None and not -90.0 <= lat <= 90.0:
        raise ValueError(f"lat out of range: {lat}")
    if lon is not None and not -180.0 <= lon <= 180.0:
        raise ValueError(f"lon out of range: {lon}")
    return Review(
        review_id=review_id,
        business_id=str(obj["business_id"]).strip(),
        text=text,
        date=parse_date(obj.get("date")),
        lat=lat,
        lon=lon,
    )


def _iter_jsonl_objects(handle) -> Iterator[Tuple[int, object]]:
    for line_number, line in enumerate(handle, start=1):
        if not line.strip():
            continue
        try:
            yield line_number, json.loads(line)
        except json.JSONDecodeError as exc:
            yield line_number, exc


def _iter_csv_objects(handle, path: str) -> Iterator[Tuple[int, object]]:
    reader = csv.DictReader(handle, delimiter=",", quotechar='"', doublequote=True)
    header = reader.fieldnames or []
    missing = [column for column in CSV_REQUIRED_COLUMNS if column not in header]
    if missing:
        raise RecordParseError(f"CSV header lacks columns: {', '.join(missing)}", path=path, line=1)
    for row in reader:
        if None in row:
            yield reader.line_num, ValueError("row has more fields than the header")
        else:
            yield reader.line_num, row


def ingest_reviews(
    path: str,
    fmt: Optional[str] = None,
    *,
    strict: bool = False,
    stats: Optional[IngestStats] = None,
) -> Iterator[Review]:
    """Yield reviews from a JSONL or CSV file in file order.

    In lenient mode malformed records are logged, counted in ``stats`` and skipped;
    in strict mode the first malformed record raises ``RecordParseError`` with its
    line number. Duplicate review ids count as malformed.
    """
    if not os.path.isfile(path):
        raise MissingArtifactError("review file not found", path=path)
    fmt = (fmt or os.path.splitext(path)[1].lstrip(".")).lower()
    if fmt == "json":
        fmt = "jsonl"
    if fmt not in REVIEW_FORMATS:
        raise UsageError(f"unknown review format '{fmt}' (expected one of {', '.join(REVIEW_FORMATS)})")
    stats = stats if stats is not None else IngestStats()
    seen_ids = set()

    try:
        handle = open(path, "r", encoding="utf-8", newline="" if fmt == "csv" else None)
    except OSError as exc:
        raise MissingArtifactError(f"cannot read review file: {exc}", path=path) from exc

    with handle:
        objects = _iter_jsonl_objects(handle) if fmt == "jsonl" else _iter_csv_objects(handle, path)
        try:
            for line_number, obj in objects:
                stats.records_in += 1
                try:
                    if isinstance(obj, Exception):
                        raise obj
                    if not isinstance(obj, dict):
                        raise ValueError("expected a JSON object")
                    review = _build_review(obj)
                    if review.review_id in seen_ids:
                        raise ValueError(f"duplicate review_id '{review.review_id}'")
                except (ValueError, TypeError) as exc:
                    if strict:
                        raise RecordParseError(str(exc), path=path, line=line_number) from exc
                    stats.skipped += 1
                    stats.skipped_lines.append(line_number)
                    logger.warning("Skipping malformed record at %s:%d: %s", path, line_number, exc)
                    continue
                seen_ids.add(review.review_id)
                stats.records_out += 1
                yield review
        except UnicodeDecodeError as exc:
            raise DataError(f"file is not valid UTF-8: {exc}", path=path) from exc


# ═══════════════════════════════════════════════════════════════
#  Sentences and tokens
# ═══════════════════════════════════════════════════════════════

def load_abbreviations(path: str = DEFAULT_ABBREVIATIONS_PATH) -> frozenset:
    """Case-folded abbreviation set from a one-per-line file with ``#`` comments."""
    return frozenset(entry.casefold() for entry in read_word_list(path))


_DEFAULT_ABBREVIATIONS: Optional[frozenset] = None


def default_abbreviations() -> frozenset:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = load_abbreviations(DEFAULT_ABBREVIATIONS_PATH)
    return _DEFAULT_ABBREVIATIONS


def _ends_with_abbreviation(text: str, end: int, abbreviations: frozenset) -> bool:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:end].casefold()
    if word in abbreviations:
        return True
    # "(z.B." or quoted forms
    stripped = word.lstrip("([\"'„»")
    return stripped in abbreviations


def split_sentences(text: str, abbreviations: Optional[Iterable[str]] = None) -> List[str]:
    """Split review text into sentences with boundary whitespace removed."""
    if not text or not text.strip():
        return []
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(a.casefold() for a in abbreviations)

    sentences: List[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.end()
        if match.group() == "." and _ends_with_abbreviation(text, end, abbrevs):
            continue
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(text: str) -> List[Token]:
    """Letter runs (umlauts and ß included) joined by word-internal hyphens."""
    return [
        Token(surface=m.group(), folded=m.group().casefold(), start=m.start(), end=m.end())
        for m in _TOKEN.finditer(text)
    ]


def fold_tokens(text: str) -> List[str]:
    return [token.folded for token in tokenize(text)]


def make_sentence(
    text: str,
    *,
    review_id: str = "",
    index: int = 0,
    business_id: str = "",
    date: Optional[datetime.date] = None,
    expected_id: Optional[str] = None,
) -> Sentence:
    sid = _sentence_id(text)
    if expected_id is not None and str(expected_id) != sid:
        raise RecordParseError(f"sentence_id {expected_id} does not match its text (expected {sid})")
    if index < 0:
        raise ValueError("sentence index must be >= 0")
    return Sentence(
        sentence_id=sid,
        review_id=review_id,
        index=index,
        text=text,
        tokens=tuple(tokenize(text)),
        business_id=business_id,
        date=date,
    )


def review_sentences(review: Review, abbreviations: Optional[Iterable[str]] = None) -> List[Sentence]:
    return [
        make_sentence(
            text,
            review_id=review.review_id,
            index=index,
            business_id=review.business_id,
            date=review.date,
        )
        for index, text in enumerate(split_sentences(review.text, abbreviations))
    ]


# ═══════════════════════════════════════════════════════════════
#  Deduplication
# ═══════════════════════════════════════════════════════════════

class Deduplicator:
    """Shared seen-set for a single merge point over sentence streams."""

    def __init__(self) -> None:
        self._seen: set = set()
        self.duplicates = 0

    def __call__(self, sentences: Iterable[Sentence]) -> Iterator[Sentence]:
        for sentence in sentences:
            if sentence.sentence_id in self._seen:
                self.duplicates += 1
                continue
            self._seen.add(sentence.sentence_id)
            yield sentence

    @property
    def unique_count(self) -> int:
        return len(self._seen)


def dedupe(sentences: Iterable[Sentence]) -> Tuple[List[Sentence], int]:
    """Keep the first occurrence of each normalized sentence, preserving order."""
    dedup = Deduplicator()
    unique = list(dedup(sentences))
    return unique, dedup.duplicates


def sentences_from_texts(texts: Sequence[str]) -> List[Sentence]:
    """Ad-hoc sentences (no review provenance), e.g. for ``predict`` on raw text."""
    return [make_sentence(text, review_id="", index=i) for i, text in enumerate(texts)]


__all__ = [
    "Review",
    "Token",
    "Sentence",
    "IngestStats",
    "Deduplicator",
    "ingest_reviews",
    "load_abbreviations",
    "split_sentences",
    "tokenize",
    "fold_tokens",
    "make_sentence",
    "review_sentences",
    "dedupe",
    "sentences_from_texts",
    "normalize_text",
]
