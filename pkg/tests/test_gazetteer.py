"""
Tests for guestmix.core.gazetteer: lexicon loading, matching, inflection,
k-NN expansion and corpus filtering.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from guestmix.core.corpus import sentences_from_texts
from guestmix.core.gazetteer import (
    ExpansionRow,
    Gazetteer,
    NationalityTerm,
    TermMatcher,
    build_gazetteer,
    expand_with_knn,
    filter_corpus,
    inflect,
    is_country_code,
    load_lexicon,
    match,
    naive_find_all,
    resolve_overlaps,
    write_lexicon,
)
from guestmix.errors import LexiconError


# ═══════════════════════════════════════════════════════════════
#  Terms and lexicon files
# ═══════════════════════════════════════════════════════════════


def test_country_codes_are_checked_against_iso_3166():
    assert is_country_code("DE")
    assert not is_country_code("XX")
    assert not is_country_code("de")
    assert not is_country_code("DEU")


def test_term_rejects_bad_fields():
    with pytest.raises(ValueError):
        NationalityTerm("Russe", "XX")
    with pytest.raises(ValueError):
        NationalityTerm("   ", "RU")
    with pytest.raises(ValueError):
        NationalityTerm("Russe", "RU", kind="noun")


def test_load_lexicon(small_lexicon):
    g = load_lexicon(small_lexicon)
    assert len(g) == 6
    assert g.get("RUSSE").country == "RU"
    assert g.get("russisch").kind == "adjective"
    assert g.countries() == ["IT", "NL", "RU", "US"]
    assert "Holländer" in g


def test_load_lexicon_reports_every_problem(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text(
        "# comment\n"
        "Russe\tRU\tdemonym\n"
        "Marsianer\tXX\tdemonym\n"
        "russe\tRU\tdemonym\n",
        encoding="utf-8",
    )
    with pytest.raises(LexiconError) as excinfo:
        load_lexicon(str(path))
    message = str(excinfo.value)
    assert "line 3" in message
    assert "line 4" in message
    assert excinfo.value.exit_code == 2


def test_duplicate_terms_in_gazetteer_raise():
    with pytest.raises(LexiconError):
        Gazetteer([NationalityTerm("Russe", "RU"), NationalityTerm("RUSSE", "RU")])


def test_write_lexicon_keeps_sources(tmp_path, small_lexicon):
    g = build_gazetteer(small_lexicon)
    out = str(tmp_path / "expanded.tsv")
    write_lexicon(g, out)
    again = load_lexicon(out)
    assert {(t.surface, t.source) for t in again.terms} == {(t.surface, t.source) for t in g.terms}


def test_bundled_lexicon_covers_reference_countries(gazetteer):
    for surface, country in [("Andorraner", "AD"), ("Afghane", "AF"), ("Amerikaner", "US"), ("Chinese", "CN")]:
        assert gazetteer.get(surface).country == country


# ═══════════════════════════════════════════════════════════════
#  Inflection
# ═══════════════════════════════════════════════════════════════


def test_inflect_er_and_e_endings():
    er = [t.surface for t in inflect(NationalityTerm("Italiener", "IT"))]
    assert er == ["Italienern", "Italienerin", "Italienerinnen", "Italieners"]
    assert [t.surface for t in inflect(NationalityTerm("Russe", "RU"))] == ["Russen"]
    assert all(t.source == "inflected" for t in inflect(NationalityTerm("Russe", "RU")))


def test_inflect_skips_adjectives_and_known_forms():
    assert inflect(NationalityTerm("russisch", "RU", kind="adjective")) == []
    assert [t.surface for t in inflect(NationalityTerm("Italiener", "IT"), existing={"italienern"})] == [
        "Italienerin", "Italienerinnen", "Italieners",
    ]


def test_build_gazetteer_with_and_without_inflections(small_lexicon):
    plain = build_gazetteer(small_lexicon, inflections=False)
    full = build_gazetteer(small_lexicon)
    assert len(plain) == 6
    assert "Russen" not in plain
    assert full.get("Russen").country == "RU"
    assert full.get("Amerikanerinnen").country == "US"
    assert len(full.by_source("seed")) == 6


# ═══════════════════════════════════════════════════════════════
#  Matching
# ═══════════════════════════════════════════════════════════════


def test_match_whole_tokens_only():
    g = Gazetteer([NationalityTerm("Ami", "US", kind="slang")])
    assert match(g, "Die Familie war nett.") == []
    spans = match(g, "Ein Ami saß neben uns.")
    assert [(s.token_start, s.token_end) for s in spans] == [(1, 2)]
    assert (spans[0].char_start, spans[0].char_end) == (4, 7)


def test_match_is_case_insensitive(gazetteer):
    spans = match(gazetteer, "VIELE RUSSEN UND italiener.")
    assert [s.term.country for s in spans] == ["RU", "IT"]


def test_longest_match_wins_at_shared_start():
    g = Gazetteer([
        NationalityTerm("Neu", "NZ", kind="slang"),
        NationalityTerm("Neu Seeländer", "NZ", kind="slang"),
    ])
    spans = match(g, "Viele Neu Seeländer hier.")
    assert len(spans) == 1
    assert spans[0].term.surface == "Neu Seeländer"


def test_resolve_overlaps_left_to_right():
    found = [(0, 2, "a b"), (1, 3, "b c"), (1, 2, "b"), (3, 4, "d")]
    assert resolve_overlaps(found) == [(0, 2, "a b"), (3, 4, "d")]


def test_veto_removes_terms_from_matching(small_lexicon):
    g = build_gazetteer(small_lexicon).with_veto(["Russen"])
    assert "Russen" in g
    assert match(g, "Viele Russen.") == []
    assert len(match(g, "Ein Russe.")) == 1


def test_empty_gazetteer_matches_nothing():
    assert match(Gazetteer(), "Viele Russen.") == []


_TOKENS = st.sampled_from(["a", "b", "c", "ab", "ba"])


@given(
    keys=st.lists(st.lists(_TOKENS, min_size=1, max_size=3).map(" ".join), max_size=6),
    folded=st.lists(_TOKENS, max_size=12),
)
@settings(max_examples=200, deadline=None)
def test_automaton_agrees_with_naive_scan(keys, folded):
    assert TermMatcher(keys).find_all(folded) == naive_find_all(keys, folded)


def _random_dictionary(rng, tokens, size):
    keys = set()
    while len(keys) < size:
        length = int(rng.integers(1, 4))
        keys.add(" ".join(rng.choice(tokens, size=length)))
    return sorted(keys)


@pytest.mark.slow
def test_automaton_agrees_with_naive_scan_on_a_large_dictionary():
    rng = np.random.default_rng(11)
    tokens = [f"t{i}" for i in range(60)] + ["russen", "russe", "briten"]
    keys = _random_dictionary(rng, tokens, 500)
    matcher = TermMatcher(keys)
    assert len(matcher) == 500
    hits = 0
    for _ in range(10_000):
        folded = list(rng.choice(tokens, size=int(rng.integers(0, 16))))
        found = matcher.find_all(folded)
        expected = naive_find_all(keys, folded)
        assert found == expected
        assert resolve_overlaps(found) == resolve_overlaps(expected)
        hits += bool(found)
    assert hits > 1_000


# ═══════════════════════════════════════════════════════════════
#  k-NN expansion
# ═══════════════════════════════════════════════════════════════


def _reasons(report, seed):
    return {row.neighbor: row.reason for row in report if row.seed == seed}


def test_expand_with_knn_adds_neighbours_as_slang(small_lexicon, toy_table):
    g = build_gazetteer(small_lexicon, inflections=False)
    expanded, report = expand_with_knn(g, toy_table, k=4, min_sim=0.5, veto=["Touristen"])

    assert _reasons(report, "Russe") == {
        "Russen": "added",
        "Amis": "added",
        "Italiener": "existing",
        "Touristen": "vetoed",
    }
    amis = expanded.get("Amis")
    assert (amis.country, amis.kind, amis.source) == ("RU", "slang", "expanded")
    assert len(expanded.by_source("expanded")) == 2
    assert len(match(expanded, "Wieder diese Amis.")) == 1


def test_expand_with_knn_reports_missing_seeds(small_lexicon, toy_table):
    g = build_gazetteer(small_lexicon, inflections=False)
    _, report = expand_with_knn(g, toy_table, k=2)
    missing = {row.seed for row in report if row.reason == "seed_not_in_vocab"}
    assert missing == {"russisch", "italienisch", "Amerikaner", "Holländer"}
    assert ExpansionRow("x", "", None, False, "seed_not_in_vocab").to_fields()[2] == ""


def test_expand_with_knn_similarity_threshold(small_lexicon, toy_table):
    g = build_gazetteer(small_lexicon, inflections=False)
    _, report = expand_with_knn(g, toy_table, k=6, min_sim=0.5)
    rows = [row for row in report if row.seed == "Russe"]
    assert len(rows) == 6
    assert rows[-1].reason == "below_min_sim"
    assert not rows[-1].accepted
    sims = [row.similarity for row in rows]
    assert sims == sorted(sims, reverse=True)


def test_expand_with_k_zero_is_identity(small_lexicon, toy_table):
    g = build_gazetteer(small_lexicon, inflections=False)
    expanded, report = expand_with_knn(g, toy_table, k=0)
    assert report == []
    assert len(expanded) == len(g)
    with pytest.raises(ValueError):
        expand_with_knn(g, toy_table, k=-1)


# ═══════════════════════════════════════════════════════════════
#  Filtering
# ═══════════════════════════════════════════════════════════════


def test_filter_corpus_partitions_and_counts(gazetteer):
    sentences = sentences_from_texts([
        "Viele Russen und Italiener hier.",
        "Das Essen war gut.",
        "Wieder Russen am Pool.",
        "Die Touristen waren laut.",
    ])
    with_terms, without_terms, stats = filter_corpus(gazetteer, sentences)
    assert [s.index for s in with_terms] == [0, 2]
    assert [s.index for s in without_terms] == [1, 3]
    assert stats.total == 4
    assert stats.term_counts == {"Russen": 2, "Italiener": 1}
    assert stats.country_counts == {"RU": 2, "IT": 1}
    assert stats.to_dict()["occurrences"] == 3
