"""
Tests for guestmix.core.composition: mentions, windows, aggregation and GeoJSON.
"""
import datetime
import json

import pytest

from guestmix.core.composition import (
    CompositionEstimate,
    MentionRecord,
    MentionStats,
    aggregate,
    dumps_geojson,
    export_geojson,
    extract_mentions,
    load_locations,
    window_of,
    write_geojson,
    write_locations,
)
from guestmix.core.corpus import make_sentence
from guestmix.errors import CoordinateError, DataError, RecordParseError

D = datetime.date


def _sentence(text, business="b1", date=None, index=0):
    return make_sentence(text, review_id=f"r-{text}", index=index, business_id=business, date=date)


def _records(business, country, n, date=None):
    return [MentionRecord(business, country, f"{business}-{country}-{i}", date) for i in range(n)]


# ═══════════════════════════════════════════════════════════════
#  Mentions
# ═══════════════════════════════════════════════════════════════


def test_extract_mentions_one_record_per_country(gazetteer):
    sentences = [
        _sentence("Viele Russen und noch mehr Russen."),
        _sentence("Russen und Italiener am Pool."),
        _sentence("Beim Italiener war es gut."),
        _sentence("Die Gäste waren alle nett."),
    ]
    stats = MentionStats()
    records = extract_mentions(sentences, [True, True, False, True], gazetteer, stats=stats)
    assert [(r.country, r.sentence_id) for r in records] == [
        ("RU", sentences[0].sentence_id),
        ("IT", sentences[1].sentence_id),
        ("RU", sentences[1].sentence_id),
    ]
    assert stats.to_dict() == {"positive": 3, "attributed": 2, "unattributed": 1, "records": 3}


def test_extract_mentions_keyed_predictions(gazetteer):
    sentence = _sentence("Viele Holländer.")
    records = extract_mentions([sentence], {sentence.sentence_id: True}, gazetteer)
    assert records[0].country == "NL"
    with pytest.raises(DataError):
        extract_mentions([sentence], {}, gazetteer)
    with pytest.raises(DataError):
        extract_mentions([sentence], [True, False], gazetteer)


# ═══════════════════════════════════════════════════════════════
#  Windows and aggregation
# ═══════════════════════════════════════════════════════════════


def test_month_and_quarter_windows_are_half_open():
    assert window_of(D(2019, 3, 2), "month") == (D(2019, 2, 28), D(2019, 3, 31))
    assert window_of(D(2019, 3, 31), "month") == (D(2019, 2, 28), D(2019, 3, 31))
    assert window_of(D(2020, 2, 29), "month") == (D(2020, 1, 31), D(2020, 2, 29))
    assert window_of(D(2019, 12, 5), "quarter") == (D(2019, 9, 30), D(2019, 12, 31))
    assert window_of(D(2019, 1, 1), "quarter") == (D(2018, 12, 31), D(2019, 3, 31))
    assert window_of(D(2019, 1, 1), "all") == "all-time"
    with pytest.raises(ValueError):
        window_of(D(2019, 1, 1), "week")


def test_aggregate_shares_sum_to_one():
    records = _records("b1", "RU", 3) + _records("b1", "DE", 1) + _records("b2", "IT", 1)
    estimates = aggregate(records, "all", min_support=2)
    assert len(estimates) == 1
    estimate = estimates[0]
    assert estimate.business_id == "b1"
    assert estimate.shares == {"DE": 0.25, "RU": 0.75}
    assert list(estimate.shares) == ["DE", "RU"]
    assert estimate.support == 4
    assert sum(estimate.shares.values()) == pytest.approx(1.0)


def test_aggregate_by_month_skips_undated():
    records = (
        _records("b1", "RU", 2, D(2019, 3, 2))
        + _records("b1", "IT", 1, D(2019, 4, 1))
        + _records("b1", "US", 5)
    )
    estimates = aggregate(records, "month", min_support=1)
    assert [e.window_label for e in estimates] == ["2019-02-28..2019-03-31", "2019-03-31..2019-04-30"]
    assert estimates[0].shares == {"RU": 1.0}
    with pytest.raises(ValueError):
        aggregate(records, "month", min_support=0)


def test_estimate_dict_round_trip():
    estimate = aggregate(_records("b1", "RU", 2, D(2019, 5, 5)), "quarter", min_support=1)[0]
    assert CompositionEstimate.from_dict(estimate.to_dict()) == estimate
    with pytest.raises(DataError):
        CompositionEstimate.from_dict({"window": "all-time"})


# ═══════════════════════════════════════════════════════════════
#  Locations and GeoJSON
# ═══════════════════════════════════════════════════════════════


def test_locations_csv_round_trip(tmp_path):
    path = str(tmp_path / "locations.csv")
    write_locations(path, {"b2": (48.1, 11.5), "b1": (-33.9, 151.2)})
    assert load_locations(path) == {"b1": (-33.9, 151.2), "b2": (48.1, 11.5)}


def test_locations_reject_bad_rows(tmp_path):
    path = tmp_path / "locations.csv"
    path.write_text("business_id,lat,lon\nb1,91,0\n", encoding="utf-8")
    with pytest.raises(CoordinateError) as excinfo:
        load_locations(str(path))
    assert excinfo.value.line == 2
    path.write_text("business_id,lat\nb1,1\n", encoding="utf-8")
    with pytest.raises(RecordParseError):
        load_locations(str(path))
    path.write_text("business_id,lat,lon\nb1,north,0\n", encoding="utf-8")
    with pytest.raises(RecordParseError):
        load_locations(str(path))


def test_export_geojson_points_are_lon_lat(tmp_path):
    estimates = aggregate(_records("b1", "RU", 2) + _records("b2", "IT", 2), "all", min_support=1)
    collection, missing = export_geojson(estimates, {"b1": (47.26, 11.39)})
    assert missing == ["b2"]
    assert len(collection["features"]) == 1
    feature = collection["features"][0]
    assert feature["geometry"]["coordinates"] == [11.39, 47.26]
    assert feature["properties"]["shares"] == {"RU": 1.0}

    path = tmp_path / "composition.geojson"
    write_geojson(str(path), collection)
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["type"] == "FeatureCollection"
    assert dumps_geojson(collection) == path.read_text(encoding="utf-8")


def test_export_geojson_needs_estimates():
    with pytest.raises(DataError):
        export_geojson([], {})
