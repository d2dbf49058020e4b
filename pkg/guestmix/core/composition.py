"""
Guest-composition estimates from positive sentences.

The estimator counts mentions, not guests: each positive sentence contributes
one mention per distinct country among its gazetteer spans, and a business's
share for a country is its mention count over all mentions in the window.
"""

from __future__ import annotations

import csv
import datetime
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import geojson

from guestmix._config import AGGREGATION_WINDOWS, ALL_TIME_LABEL, DEFAULT_MIN_SUPPORT, DEFAULT_WINDOW
from guestmix.core.corpus import Sentence
from guestmix.core.gazetteer import Gazetteer, match
from guestmix.errors import CoordinateError, DataError, RecordParseError
from guestmix.utils import get_logger
from guestmix.utils.io_utils import atomic_write_text, require_file, write_tsv
from guestmix.utils.time_utils import format_date, parse_date

logger = get_logger(__name__)

Window = Union[Tuple[datetime.date, datetime.date], str]


@dataclass(frozen=True)
class MentionRecord:
    business_id: str
    country: str
    sentence_id: str
    timestamp: Optional[datetime.date] = None

    def to_record(self) -> dict:
        return {
            "business_id": self.business_id,
            "country": self.country,
            "sentence_id": self.sentence_id,
            "date": format_date(self.timestamp),
        }


@dataclass
class MentionStats:
    positive: int = 0
    attributed: int = 0
    unattributed: int = 0
    records: int = 0

    def to_dict(self) -> dict:
        return {
            "positive": self.positive,
            "attributed": self.attributed,
            "unattributed": self.unattributed,
            "records": self.records,
        }


@dataclass(frozen=True)
class CompositionEstimate:
    business_id: str
    window: Window
    shares: Dict[str, float]
    support: int
    counts: Dict[str, int] = field(default_factory=dict)

    @property
    def window_label(self) -> str:
        return window_label(self.window)

    def to_dict(self) -> dict:
        start, end = (None, None) if isinstance(self.window, str) else self.window
        return {
            "business_id": self.business_id,
            "window": self.window_label,
            "window_start": format_date(start),
            "window_end": format_date(end),
            "support": self.support,
            "shares": dict(self.shares),
            "counts": dict(self.counts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompositionEstimate":
        try:
            if data["window"] == ALL_TIME_LABEL:
                window: Window = ALL_TIME_LABEL
            else:
                window = (parse_date(data["window_start"]), parse_date(data["window_end"]))
            return cls(
                business_id=str(data["business_id"]),
                window=window,
                shares={str(k): float(v) for k, v in data["shares"].items()},
                support=int(data["support"]),
                counts={str(k): int(v) for k, v in (data.get("counts") or {}).items()},
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise DataError(f"invalid composition record: {exc}") from exc


# ═══════════════════════════════════════════════════════════════
#  Mentions
# ═══════════════════════════════════════════════════════════════

def _label_of(prediction) -> bool:
    return bool(getattr(prediction, "label", prediction))


def extract_mentions(
    sentences: Sequence[Sentence],
    predictions: Union[Mapping[str, object], Sequence[object]],
    gazetteer: Gazetteer,
    *,
    stats: Optional[MentionStats] = None,
) -> List[MentionRecord]:
    """One record per distinct country per positive sentence.

    ``predictions`` is either keyed by ``sentence_id`` or aligned with
    ``sentences``; values are booleans or objects with a ``label``.
    Positive sentences without spans are only counted in ``stats``.
    """
    if isinstance(predictions, Mapping):
        missing = [s.sentence_id for s in sentences if s.sentence_id not in predictions]
        if missing:
            raise DataError(f"{len(missing)} sentence(s) have no prediction, e.g. {missing[:3]}")
        labels = [_label_of(predictions[s.sentence_id]) for s in sentences]
    else:
        if len(predictions) != len(sentences):
            raise DataError(f"{len(predictions)} predictions for {len(sentences)} sentences")
        labels = [_label_of(p) for p in predictions]

    stats = stats if stats is not None else MentionStats()
    records: List[MentionRecord] = []
    for sentence, positive in zip(sentences, labels):
        if not positive:
            continue
        stats.positive += 1
        countries = sorted({span.term.country for span in match(gazetteer, sentence)})
        if not countries:
            stats.unattributed += 1
            continue
        stats.attributed += 1
        records.extend(
            MentionRecord(sentence.business_id, country, sentence.sentence_id, sentence.date)
            for country in countries
        )
    stats.records = len(records)
    if stats.unattributed:
        logger.warning("%d positive sentence(s) matched no gazetteer term and were not attributed", stats.unattributed)
    return records


# ═══════════════════════════════════════════════════════════════
#  Aggregation
# ═══════════════════════════════════════════════════════════════

def _month_end(year: int, month: int) -> datetime.date:
    if month == 12:
        return datetime.date(year, 12, 31)
    return datetime.date(year, month + 1, 1) - datetime.timedelta(days=1)


def window_of(date: datetime.date, window: str) -> Window:
    """``(start, end]`` interval containing ``date``."""
    if window == "month":
        first = datetime.date(date.year, date.month, 1)
        return first - datetime.timedelta(days=1), _month_end(date.year, date.month)
    if window == "quarter":
        first_month = 3 * ((date.month - 1) // 3) + 1
        first = datetime.date(date.year, first_month, 1)
        return first - datetime.timedelta(days=1), _month_end(date.year, first_month + 2)
    if window == "all":
        return ALL_TIME_LABEL
    raise ValueError(f"unknown window '{window}' (expected one of {', '.join(AGGREGATION_WINDOWS)})")


def window_label(window: Window) -> str:
    if isinstance(window, str):
        return window
    start, end = window
    return f"{format_date(start)}..{format_date(end)}"


def _window_sort_key(window: Window):
    return (0, "", "") if isinstance(window, str) else (1, window[0].isoformat(), window[1].isoformat())


def aggregate(
    records: Iterable[MentionRecord],
    window: str = DEFAULT_WINDOW,
    min_support: int = DEFAULT_MIN_SUPPORT,
) -> List[CompositionEstimate]:
    """Mention shares per ``(business, window)`` with at least ``min_support`` mentions.

    Undated records only count toward the all-time window. Output is sorted by
    business then window start; shares are sorted by country code.
    """
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    groups: Dict[Tuple[str, Window], Counter] = defaultdict(Counter)
    undated = 0
    for record in records:
        if window != "all" and record.timestamp is None:
            undated += 1
            continue
        key = window_of(record.timestamp, window) if window != "all" else ALL_TIME_LABEL
        groups[(record.business_id, key)][record.country] += 1
    if undated:
        logger.info("%d undated mention(s) left out of %s windows", undated, window)

    estimates: List[CompositionEstimate] = []
    suppressed = 0
    ordered = sorted(groups.items(), key=lambda item: (item[0][0], _window_sort_key(item[0][1])))
    for (business_id, key), counts in ordered:
        total = sum(counts.values())
        if total < min_support:
            suppressed += 1
            continue
        ordered = dict(sorted(counts.items()))
        estimates.append(CompositionEstimate(
            business_id=business_id,
            window=key,
            shares={country: count / total for country, count in ordered.items()},
            support=total,
            counts=ordered,
        ))
    if suppressed:
        logger.info("%d group(s) below min_support=%d suppressed", suppressed, min_support)
    return estimates


# ═══════════════════════════════════════════════════════════════
#  Locations and GeoJSON
# ═══════════════════════════════════════════════════════════════

def validate_coordinates(lat: float, lon: float, *, path: Optional[str] = None, line: Optional[int] = None) -> None:
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise CoordinateError(f"coordinates out of range: lat={lat}, lon={lon}", path=path, line=line)


def load_locations(path: str) -> Dict[str, Tuple[float, float]]:
    """``business_id,lat,lon`` CSV (header required) to ``{business_id: (lat, lon)}``."""
    require_file(path)
    locations: Dict[str, Tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = {"business_id", "lat", "lon"} - set(reader.fieldnames or ())
        if missing:
            raise RecordParseError(f"locations file lacks column(s): {', '.join(sorted(missing))}", path=path, line=1)
        for row in reader:
            line = reader.line_num
            try:
                lat, lon = float(row["lat"]), float(row["lon"])
            except (TypeError, ValueError) as exc:
                raise RecordParseError(f"invalid coordinate: {exc}", path=path, line=line) from exc
            validate_coordinates(lat, lon, path=path, line=line)
            business_id = (row["business_id"] or "").strip()
            if not business_id:
                raise RecordParseError("empty business_id", path=path, line=line)
            locations[business_id] = (lat, lon)
    logger.debug("Loaded %d location(s) from %s", len(locations), path)
    return locations


def write_locations(path: str, locations: Mapping[str, Tuple[float, float]]) -> None:
    output = io.StringIO(newline="")
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(["business_id", "lat", "lon"])
    for business_id in sorted(locations):
        lat, lon = locations[business_id]
        validate_coordinates(lat, lon)
        writer.writerow([business_id, repr(float(lat)), repr(float(lon))])
    atomic_write_text(path, output.getvalue())


def export_geojson(
    estimates: Sequence[CompositionEstimate],
    locations: Mapping[str, Tuple[float, float]],
) -> Tuple[geojson.FeatureCollection, List[str]]:
    """One Point feature per estimate; returns ``(collection, businesses without coordinates)``."""
    if not estimates:
        raise DataError("no composition estimates to export")
    features = []
    missing: List[str] = []
    for estimate in estimates:
        location = locations.get(estimate.business_id)
        if location is None:
            if estimate.business_id not in missing:
                missing.append(estimate.business_id)
            continue
        lat, lon = location
        validate_coordinates(lat, lon)
        features.append(geojson.Feature(
            id=f"{estimate.business_id}/{estimate.window_label}",
            geometry=geojson.Point((lon, lat)),
            properties={
                "business_id": estimate.business_id,
                "window": estimate.window_label,
                "support": estimate.support,
                "shares": dict(estimate.shares),
            },
        ))
    if missing:
        logger.warning("%d business(es) have no coordinates and were written to the side list", len(missing))
    return geojson.FeatureCollection(features), missing


def dumps_geojson(collection: geojson.FeatureCollection) -> str:
    return geojson.dumps(collection, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_geojson(path: str, collection: geojson.FeatureCollection) -> None:
    if not collection.is_valid:
        raise DataError(f"refusing to write invalid GeoJSON: {collection.errors()}", path=path)
    atomic_write_text(path, dumps_geojson(collection))


def write_missing_locations(path: str, missing: Sequence[str]) -> None:
    write_tsv(path, [[business_id] for business_id in missing], header=["business_id"])


__all__ = [
    "MentionRecord",
    "MentionStats",
    "CompositionEstimate",
    "extract_mentions",
    "aggregate",
    "window_of",
    "window_label",
    "load_locations",
    "write_locations",
    "export_geojson",
    "dumps_geojson",
    "write_geojson",
    "write_missing_locations",
]
