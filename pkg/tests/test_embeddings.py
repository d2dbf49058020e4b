"""
Tests for guestmix.core.embeddings.
"""
import numpy as np
import pytest

from guestmix.core import embeddings
from guestmix.core.corpus import tokenize
from guestmix.core.embeddings import (
    EmbeddingTable,
    SubwordHasher,
    cosine,
    embed_token,
    knn,
    load_vec,
    ngrams,
    write_vec,
)
from guestmix.errors import EmbeddingFormatError, MissingArtifactError, OutOfVocabularyError, ZeroVectorError


def _vec_file(tmp_path, text):
    path = tmp_path / "vectors.vec"
    path.write_text(text, encoding="utf-8")
    return str(path)


# ═══════════════════════════════════════════════════════════════
#  .vec files
# ═══════════════════════════════════════════════════════════════


def test_load_vec(tmp_path):
    table = load_vec(_vec_file(tmp_path, "3 2\nRussen 1 0\nPizza 0 1\nHotel 0.5 0.5\n"))
    assert len(table) == 3
    assert table.dim == 2
    np.testing.assert_allclose(table.vector("Pizza"), [0.0, 1.0])


def test_load_vec_keeps_first_duplicate(tmp_path):
    table = load_vec(_vec_file(tmp_path, "3 2\nRussen 1 0\nRussen 0 1\nPizza 0 1\n"))
    assert len(table) == 2
    assert table.duplicates == 1
    np.testing.assert_allclose(table.vector("Russen"), [1.0, 0.0])


@pytest.mark.parametrize(
    "text, line",
    [
        ("3\nRussen 1 0\n", 1),
        ("x 2\nRussen 1 0\n", 1),
        ("1 2\nRussen 1\n", 2),
        ("2 2\nRussen 1 0\nPizza 1 nope\n", 3),
        ("1 2\nRussen 1 nan\n", 2),
    ],
)
def test_load_vec_format_errors_name_the_line(tmp_path, text, line):
    with pytest.raises(EmbeddingFormatError) as excinfo:
        load_vec(_vec_file(tmp_path, text))
    assert excinfo.value.line == line


def test_load_vec_row_count_must_match_header(tmp_path):
    with pytest.raises(EmbeddingFormatError):
        load_vec(_vec_file(tmp_path, "5 2\nRussen 1 0\n"))


def test_load_vec_missing_file(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_vec(str(tmp_path / "nope.vec"))


def test_write_vec_then_load(tmp_path, toy_table):
    path = str(tmp_path / "out.vec")
    write_vec(toy_table, path)
    again = load_vec(path)
    assert again.words == toy_table.words
    np.testing.assert_allclose(again.matrix, toy_table.matrix, rtol=1e-8)


def test_table_lookup_falls_back_to_folded_form(toy_table):
    assert toy_table.index_of("russen") == toy_table.index_of("Russen")
    assert toy_table.index_of("Franzosen") is None
    with pytest.raises(OutOfVocabularyError):
        toy_table.vector("Franzosen")


def test_table_rejects_duplicates_and_bad_shapes():
    with pytest.raises(ValueError):
        EmbeddingTable(["a", "a"], np.eye(2))
    with pytest.raises(ValueError):
        EmbeddingTable(["a"], np.eye(2))


# ═══════════════════════════════════════════════════════════════
#  Similarity
# ═══════════════════════════════════════════════════════════════


def test_cosine_basics():
    assert cosine([1, 0], [1, 0]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 3]) == pytest.approx(0.0)
    assert cosine([1, 1], [-2, -2]) == pytest.approx(-1.0)
    with pytest.raises(ZeroVectorError):
        cosine([0, 0], [1, 0])
    with pytest.raises(ValueError):
        cosine([1, 0], [1, 0, 0])


def test_knn_excludes_query_and_sorts_descending(toy_table):
    result = knn(toy_table, "Russe", 4)
    words = [word for word, _ in result]
    assert "Russe" not in words
    assert set(words) == {"Russen", "Italiener", "Amis", "Touristen"}
    sims = [sim for _, sim in result]
    assert sims == sorted(sims, reverse=True)


def test_knn_ties_break_by_word():
    table = EmbeddingTable(["c", "b", "a", "q"], np.array([[1.0, 0], [1.0, 0], [1.0, 0], [1.0, 0.1]]))
    assert [word for word, _ in knn(table, "q", 3)] == ["a", "b", "c"]


def _tied_table(size, dim, seed):
    rng = np.random.default_rng(seed)
    distinct = size - size // 5
    matrix = rng.normal(size=(distinct, dim))
    copies = matrix[rng.integers(0, distinct, size=size - distinct)]
    matrix = np.vstack([matrix, copies])[rng.permutation(size)]
    words = [f"w{i:05d}" for i in rng.permutation(size)]
    return EmbeddingTable(words, matrix)


def _exhaustive_knn(table, query_index, k):
    query = table.matrix[query_index]
    scored = [
        (-cosine(row, query), word)
        for index, (word, row) in enumerate(zip(table.words, table.matrix))
        if index != query_index
    ]
    return [word for _, word in sorted(scored)[:k]]


@pytest.mark.parametrize("size", [50, 500, 5000])
def test_knn_matches_exhaustive_scan(size):
    table = _tied_table(size, dim=6, seed=size)
    for query_index in np.random.default_rng(1).integers(0, size, size=4):
        word = table.words[query_index]
        for k in (1, 10, size):
            result = knn(table, word, k)
            assert [w for w, _ in result] == _exhaustive_knn(table, query_index, k)
            for neighbor, sim in result:
                assert sim == pytest.approx(cosine(table.vector(neighbor), table.matrix[query_index]))


def test_knn_k_larger_than_table_and_zero(toy_table):
    assert len(knn(toy_table, "Hotel", 100)) == len(toy_table) - 1
    assert knn(toy_table, "Hotel", 0) == []
    with pytest.raises(OutOfVocabularyError):
        knn(toy_table, "Franzosen", 3)


def test_knn_vector_query_and_zero_query(toy_table):
    result = knn(toy_table, np.eye(8)[2], 1)
    assert result[0][0] == "Hotel"
    assert result[0][1] == pytest.approx(1.0)
    with pytest.raises(ZeroVectorError):
        knn(toy_table, np.zeros(8), 1)


# ═══════════════════════════════════════════════════════════════
#  Subwords
# ═══════════════════════════════════════════════════════════════


def test_ngrams_of_bracketed_word():
    assert ngrams("ami", 3, 4) == ["<am", "ami", "mi>", "<ami", "ami>"]
    assert ngrams("", 3, 6) == []


def test_subword_hasher_validates_arguments():
    with pytest.raises(ValueError):
        SubwordHasher(4, buckets=1000)
    with pytest.raises(ValueError):
        SubwordHasher(0)
    with pytest.raises(ValueError):
        SubwordHasher(4, min_n=5, max_n=3)


def test_subword_buckets_are_stable():
    first = SubwordHasher(4, buckets=1024)
    second = SubwordHasher(4, buckets=1024)
    assert first.bucket_ids("afgahnen") == second.bucket_ids("afgahnen")
    assert all(0 <= b < 1024 for b in first.bucket_ids("afgahnen"))


def test_bucket_id_cache_is_bounded(monkeypatch):
    monkeypatch.setattr(embeddings, "SUBWORD_CACHE_SIZE", 8)
    hasher = SubwordHasher(4, buckets=1024)
    words = [f"wort{i}" for i in range(50)]
    for word in words:
        hasher.bucket_ids(word)
    assert hasher.cache_info().currsize == 8
    assert hasher.bucket_ids(words[0]) == SubwordHasher(4, buckets=1024).bucket_ids(words[0])


def test_fit_to_table_reduces_loss(toy_table):
    hasher = SubwordHasher(toy_table.dim, buckets=4096)
    history = hasher.fit_to_table(toy_table, epochs=20, lr=0.5, seed=1)
    assert history[-1] < history[0]
    ids, rows = hasher.state()
    restored = SubwordHasher(toy_table.dim, buckets=4096)
    restored.load_state(ids, rows)
    np.testing.assert_allclose(restored.vector("russe"), hasher.vector("russe"))


def test_fitted_subwords_place_misspellings_near_the_original(toy_table):
    hasher = SubwordHasher(toy_table.dim, buckets=4096)
    hasher.fit_to_table(toy_table, epochs=50, lr=0.5, seed=0)
    misspelled = hasher.vector("italiner")
    assert cosine(misspelled, toy_table.vector("Italiener")) > cosine(misspelled, toy_table.vector("Pizza"))


def test_embed_token_sources(toy_table):
    hasher = SubwordHasher(toy_table.dim, buckets=1024)
    token = tokenize("HOTEL")[0]
    vector, source = embed_token(token, toy_table, hasher, with_source=True)
    assert source == "vocab"
    np.testing.assert_allclose(vector, toy_table.vector("Hotel"))

    _, source = embed_token("Afgahnen", toy_table, hasher, with_source=True)
    assert source == "subword"

    vector, source = embed_token("Afgahnen", toy_table, None, with_source=True)
    assert source == "empty"
    assert not vector.any()
