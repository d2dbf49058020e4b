"""
Tests for guestmix.core.corpus: ingestion, segmentation, tokenization, dedup.
"""
import datetime
import json

import pytest
from hypothesis import given, settings, strategies as st

from guestmix.core.corpus import (
    Deduplicator,
    IngestStats,
    Sentence,
    dedupe,
    ingest_reviews,
    make_sentence,
    review_sentences,
    sentences_from_texts,
    split_sentences,
    tokenize,
)
from guestmix.errors import MissingArtifactError, RecordParseError, UsageError
from guestmix.utils.hashing import normalize_text, sentence_id


# ═══════════════════════════════════════════════════════════════
#  Segmentation and tokens
# ═══════════════════════════════════════════════════════════════


def test_split_sentences_on_terminal_punctuation():
    text = "Das Hotel war toll. Die Gäste waren laut! Kommen wir wieder? Ja."
    assert split_sentences(text) == [
        "Das Hotel war toll.",
        "Die Gäste waren laut!",
        "Kommen wir wieder?",
        "Ja.",
    ]


def test_split_sentences_keeps_abbreviations():
    text = "Es gab z.B. Pizza. Dr. Müller war auch da. Ca. zehn Gäste kamen."
    assert split_sentences(text) == [
        "Es gab z.B. Pizza.",
        "Dr. Müller war auch da.",
        "Ca. zehn Gäste kamen.",
    ]


def test_split_sentences_requires_uppercase_after_boundary():
    assert split_sentences("Preis 3.5 Sterne. gut so") == ["Preis 3.5 Sterne. gut so"]


def test_split_sentences_empty_input():
    assert split_sentences("") == []
    assert split_sentences("   \n ") == []


def test_split_sentences_custom_abbreviations():
    assert split_sentences("Siehe Abs. Drei.", abbreviations=["abs."]) == ["Siehe Abs. Drei."]
    assert split_sentences("Siehe Abs. Drei.", abbreviations=[]) == ["Siehe Abs.", "Drei."]


def test_tokenize_letters_umlauts_and_hyphens():
    tokens = tokenize("Die Öster-reicher aßen 3 Würstel, ok?")
    assert [t.surface for t in tokens] == ["Die", "Öster-reicher", "aßen", "Würstel", "ok"]
    assert tokens[1].folded == "öster-reicher"
    assert tokens[2].folded == "assen"
    assert tokens[0].start == 0 and tokens[0].end == 3


@given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Zs", "Po")), max_size=60))
@settings(max_examples=80, deadline=None)
def test_tokens_point_back_into_the_text(text):
    for token in tokenize(text):
        assert text[token.start:token.end] == token.surface
        assert token.folded == token.surface.casefold()


# ═══════════════════════════════════════════════════════════════
#  Sentence ids and records
# ═══════════════════════════════════════════════════════════════


def test_sentence_id_ignores_case_and_whitespace():
    assert sentence_id("Das  Hotel\twar  VOLL.") == sentence_id("das hotel war voll.")
    assert len(sentence_id("x")) == 16
    assert normalize_text("  ÄB ") == "äb"


def test_sentence_record_round_trip_checks_id():
    sentence = make_sentence(
        "Die Russen waren laut.", review_id="r1", index=2, business_id="b1", date=datetime.date(2020, 5, 1)
    )
    record = sentence.to_record()
    assert record["date"] == "2020-05-01"
    assert Sentence.from_record(record) == sentence

    record["text"] = "Etwas anderes."
    with pytest.raises(RecordParseError):
        Sentence.from_record(record)


def test_make_sentence_rejects_negative_index():
    with pytest.raises(ValueError):
        make_sentence("Hallo.", index=-1)


def test_sentences_from_texts_numbers_sentences():
    sentences = sentences_from_texts(["Eins.", "Zwei."])
    assert [s.index for s in sentences] == [0, 1]
    assert all(s.review_id == "" for s in sentences)


# ═══════════════════════════════════════════════════════════════
#  Ingestion
# ═══════════════════════════════════════════════════════════════


def test_ingest_jsonl_reads_reviews_with_coordinates(reviews_file):
    stats = IngestStats()
    reviews = list(ingest_reviews(reviews_file, stats=stats))
    assert [r.review_id for r in reviews] == ["r1", "r2", "r3"]
    assert reviews[0].date == datetime.date(2019, 3, 2)
    assert (reviews[0].lat, reviews[0].lon) == (47.26, 11.39)
    assert reviews[2].lat is None
    assert stats.records_in == 3 and stats.records_out == 3 and stats.skipped == 0


def _write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return str(path)


def test_ingest_lenient_skips_malformed_records(tmp_path):
    path = _write_lines(tmp_path / "bad.jsonl", [
        json.dumps({"review_id": "a", "business_id": "b", "text": "Gut."}),
        "{not json",
        json.dumps({"review_id": "c", "business_id": "b"}),
        json.dumps({"review_id": "a", "business_id": "b", "text": "Doppelt."}),
        "",
        json.dumps({"review_id": "d", "business_id": "b", "text": "Auch gut.", "date": "2021-01-05T10:00:00Z"}),
    ])
    stats = IngestStats()
    reviews = list(ingest_reviews(path, stats=stats))
    assert [r.review_id for r in reviews] == ["a", "d"]
    assert reviews[1].date == datetime.date(2021, 1, 5)
    assert stats.skipped == 3
    assert stats.skipped_lines == [2, 3, 4]


def test_ingest_strict_raises_with_line_number(tmp_path):
    path = _write_lines(tmp_path / "bad.jsonl", [
        json.dumps({"review_id": "a", "business_id": "b", "text": "Gut."}),
        "[1, 2]",
    ])
    with pytest.raises(RecordParseError) as excinfo:
        list(ingest_reviews(path, strict=True))
    assert excinfo.value.line == 2
    assert excinfo.value.exit_code == 2


def test_ingest_treats_out_of_range_coordinates_as_malformed(tmp_path):
    path = _write_lines(tmp_path / "coords.jsonl", [
        json.dumps({"review_id": "r1", "business_id": "b1", "text": "Gut.", "lat": 47.2, "lon": 11.3}),
        json.dumps({"review_id": "r2", "business_id": "b2", "text": "Gut.", "lat": 200.0, "lon": 11.3}),
        json.dumps({"review_id": "r3", "business_id": "b3", "text": "Gut.", "lat": 47.0, "lon": -181}),
    ])
    stats = IngestStats()
    reviews = list(ingest_reviews(path, stats=stats))
    assert [r.review_id for r in reviews] == ["r1"]
    assert stats.records_out + stats.skipped == stats.records_in == 3
    assert stats.skipped_lines == [2, 3]

    with pytest.raises(RecordParseError) as excinfo:
        list(ingest_reviews(path, strict=True))
    assert excinfo.value.line == 2


def test_ingest_csv(tmp_path):
    path = tmp_path / "reviews.csv"
    path.write_text(
        'business_id,review_id,text,date\n'
        'b1,r1,"Viele Amerikaner, sehr laut.",2020-02-02\n'
        'b1,r2,"Ruhig.",\n',
        encoding="utf-8",
    )
    reviews = list(ingest_reviews(str(path)))
    assert [r.text for r in reviews] == ["Viele Amerikaner, sehr laut.", "Ruhig."]
    assert reviews[1].date is None


def test_ingest_csv_requires_columns(tmp_path):
    path = tmp_path / "reviews.csv"
    path.write_text("id,text\n1,Hallo\n", encoding="utf-8")
    with pytest.raises(RecordParseError):
        list(ingest_reviews(str(path)))


def test_ingest_unknown_format_and_missing_file(tmp_path):
    path = tmp_path / "reviews.xml"
    path.write_text("<x/>", encoding="utf-8")
    with pytest.raises(UsageError):
        list(ingest_reviews(str(path)))
    with pytest.raises(MissingArtifactError):
        list(ingest_reviews(str(tmp_path / "missing.jsonl")))


# ═══════════════════════════════════════════════════════════════
#  Deduplication
# ═══════════════════════════════════════════════════════════════


def test_review_sentences_carry_provenance(reviews_file):
    review = next(iter(ingest_reviews(reviews_file)))
    sentences = review_sentences(review)
    assert [s.index for s in sentences] == [0, 1, 2]
    assert {s.business_id for s in sentences} == {"b1"}
    assert sentences[0].date == datetime.date(2019, 3, 2)


def test_dedupe_keeps_first_occurrence(reviews_file):
    sentences = [s for review in ingest_reviews(reviews_file) for s in review_sentences(review)]
    unique, duplicates = dedupe(sentences)
    assert duplicates == 1
    assert len(unique) == len(sentences) - 1
    assert [s.text for s in unique].count("Das Zimmer war sauber.") == 1
    assert unique[1].review_id == "r1"


def test_deduplicator_shares_state_across_streams():
    dedup = Deduplicator()
    first = list(dedup(sentences_from_texts(["A b.", "C d."])))
    second = list(dedup(sentences_from_texts(["a  B.", "E f."])))
    assert len(first) == 2 and len(second) == 1
    assert dedup.duplicates == 1
    assert dedup.unique_count == 3
