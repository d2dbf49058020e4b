"""
Pretrained word vectors, exact cosine k-NN, and hashed character n-gram
vectors for out-of-vocabulary tokens.

Vectors are read from the plain-text ``.vec`` format: a ``count dim`` header
followed by ``word v1 ... vdim`` rows.
"""

from __future__ import annotations

import functools
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from guestmix._config import (
    SUBWORD_BUCKETS,
    SUBWORD_CACHE_SIZE,
    SUBWORD_FIT_EPOCHS,
    SUBWORD_FIT_LR,
    SUBWORD_MAX_N,
    SUBWORD_MIN_N,
    VEC_WRITE_PRECISION,
)
from guestmix.errors import EmbeddingFormatError, MissingArtifactError, OutOfVocabularyError, ZeroVectorError
from guestmix.utils import get_logger
from guestmix.utils.hashing import fnv1a_64
from guestmix.utils.io_utils import atomic_write_text

logger = get_logger(__name__)

SOURCE_VOCAB = "vocab"
SOURCE_SUBWORD = "subword"
SOURCE_EMPTY = "empty"


class EmbeddingTable:
    """Immutable word → vector table with cached row norms."""

    def __init__(self, words: Sequence[str], matrix: np.ndarray) -> None:
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(words):
            raise ValueError(f"matrix shape {matrix.shape} does not fit {len(words)} words")
        if matrix.shape[1] <= 0:
            raise ValueError("embedding dimension must be positive")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("embedding matrix contains non-finite values")

        self.words: Tuple[str, ...] = tuple(words)
        self.vocab: Dict[str, int] = {}
        for index, word in enumerate(self.words):
            if word in self.vocab:
                raise ValueError(f"duplicate word '{word}'")
            self.vocab[word] = index

        # Tokens arrive case-folded; first row wins for folded collisions ("Amis"/"amis").
        self._folded: Dict[str, int] = {}
        for index, word in enumerate(self.words):
            self._folded.setdefault(word.casefold(), index)

        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.norms = np.linalg.norm(matrix, axis=1)
        self.norms.setflags(write=False)
        self.duplicates = 0

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def index_of(self, token: str) -> Optional[int]:
        """Row for an exact word, falling back to its case-folded form."""
        index = self.vocab.get(token)
        if index is None:
            index = self._folded.get(token.casefold())
        return index

    def vector(self, word: str) -> np.ndarray:
        index = self.index_of(word)
        if index is None:
            raise OutOfVocabularyError(word)
        return self.matrix[index]

    def __repr__(self) -> str:
        return f"EmbeddingTable(size={len(self)}, dim={self.dim})"


# ═══════════════════════════════════════════════════════════════
#  .vec files
# ═══════════════════════════════════════════════════════════════

def load_vec(path: str) -> EmbeddingTable:
    """Load a ``.vec`` text file.

    Duplicate words keep their first row; the number of dropped rows is logged
    and stored on ``table.duplicates``. Dimension errors and non-finite values
    abort with the offending line number.
    """
    try:
        handle = open(path, "r", encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingArtifactError("embedding file not found", path=path) from exc

    with handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError("header must be 'count dim'", path=path, line=1)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError("header must be 'count dim'", path=path, line=1) from exc
        if count < 0 or dim <= 0:
            raise EmbeddingFormatError(f"invalid header values {count} {dim}", path=path, line=1)

        words: List[str] = []
        rows: List[np.ndarray] = []
        seen = set()
        duplicates = 0
        line_number = 1
        for line_number, line in enumerate(handle, start=2):
            parts = line.rstrip("\r\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"expected {dim} components for '{word}', got {len(values)}", path=path, line=line_number
                )
            try:
                row = np.array([float(value) for value in values], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(f"non-numeric component for '{word}'", path=path, line=line_number) from exc
            if not np.all(np.isfinite(row)):
                raise EmbeddingFormatError(f"non-finite component for '{word}'", path=path, line=line_number)
            if word in seen:
                duplicates += 1
                continue
            seen.add(word)
            words.append(word)
            rows.append(row)

    if len(words) + duplicates != count:
        raise EmbeddingFormatError(
            f"header declares {count} rows, file has {len(words) + duplicates}", path=path, line=line_number
        )
    if duplicates:
        logger.warning("%s: %d duplicate word(s) ignored (first occurrence kept)", path, duplicates)

    matrix = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float64)
    table = EmbeddingTable(words, matrix)
    table.duplicates = duplicates
    logger.info("Loaded %d vectors of dim %d from %s", len(table), dim, path)
    return table


def write_vec(table: EmbeddingTable, path: str, precision: int = VEC_WRITE_PRECISION) -> None:
    lines = [f"{len(table)} {table.dim}"]
    for word, row in zip(table.words, table.matrix):
        lines.append(word + " " + " ".join(f"{value:.{precision}g}" for value in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ═══════════════════════════════════════════════════════════════
#  Similarity
# ═══════════════════════════════════════════════════════════════

def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero vector")
    return min(1.0, max(-1.0, float(np.dot(a, b)) / (norm_a * norm_b)))


def similarities(table: EmbeddingTable, vector: np.ndarray) -> np.ndarray:
    """Cosine of ``vector`` against every row; zero rows score 0."""
    query = np.asarray(vector, dtype=np.float64)
    if query.shape != (table.dim,):
        raise ValueError(f"query has shape {query.shape}, table dim is {table.dim}")
    query_norm = float(np.linalg.norm(query))
    if query_norm == 0.0:
        raise ZeroVectorError("k-NN query is a zero vector")
    dots = table.matrix @ query
    denom = table.norms * query_norm
    sims = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
    return np.clip(sims, -1.0, 1.0)


def knn(
    table: EmbeddingTable,
    query: Union[str, Sequence[float], np.ndarray],
    k: int,
) -> List[Tuple[str, float]]:
    """Exact k nearest neighbours by cosine, descending, ties by word.

    A word query is excluded from its own result list.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    exclude = None
    if isinstance(query, str):
        exclude = table.index_of(query)
        if exclude is None:
            raise OutOfVocabularyError(query)
        vector = table.matrix[exclude]
    else:
        vector = np.asarray(query, dtype=np.float64)

    available = len(table) - (1 if exclude is not None else 0)
    k = min(k, available)
    if k == 0:
        return []

    sims = similarities(table, vector)
    if exclude is not None:
        sims = sims.copy()
        sims[exclude] = -np.inf

    if k < len(sims):
        kth = np.partition(sims, len(sims) - k)[len(sims) - k]
        candidates = np.flatnonzero(sims >= kth)
    else:
        candidates = np.arange(len(sims))
    if exclude is not None:
        candidates = candidates[candidates != exclude]

    ranked = sorted(candidates.tolist(), key=lambda i: (-sims[i], table.words[i]))
    return [(table.words[i], float(sims[i])) for i in ranked[:k]]


# ═══════════════════════════════════════════════════════════════
#  Subword fallback
# ═══════════════════════════════════════════════════════════════

def ngrams(word: str, min_n: int = SUBWORD_MIN_N, max_n: int = SUBWORD_MAX_N) -> List[str]:
    """Character n-grams of ``<word>`` ordered by (length, position)."""
    bracketed = f"<{word}>"
    return [
        bracketed[start:start + n]
        for n in range(min_n, max_n + 1)
        for start in range(0, len(bracketed) - n + 1)
    ]


class SubwordHasher:
    """Hashed n-gram bucket vectors.

    Only buckets that were ever written hold a row; the rest read as zero, so
    the logical ``buckets x dim`` table never materializes. Rows are trainable
    parameters and are mutated in place by the optimizer.
    """

    def __init__(
        self,
        dim: int,
        buckets: int = SUBWORD_BUCKETS,
        min_n: int = SUBWORD_MIN_N,
        max_n: int = SUBWORD_MAX_N,
    ) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        if buckets <= 0 or buckets & (buckets - 1):
            raise ValueError("buckets must be a power of two")
        if not 1 <= min_n <= max_n:
            raise ValueError("need 1 <= min_n <= max_n")
        self.dim = dim
        self.buckets = buckets
        self.min_n = min_n
        self.max_n = max_n
        self.rows: Dict[int, np.ndarray] = {}
        self._cached_ids = functools.lru_cache(maxsize=SUBWORD_CACHE_SIZE)(self._compute_ids)

    def ngrams(self, word: str) -> List[str]:
        return ngrams(word, self.min_n, self.max_n)

    def bucket(self, gram: str) -> int:
        return fnv1a_64(gram.encode("utf-8")) % self.buckets

    def _compute_ids(self, word: str) -> Tuple[int, ...]:
        return tuple(self.bucket(gram) for gram in self.ngrams(word))

    def bucket_ids(self, word: str) -> Tuple[int, ...]:
        return self._cached_ids(word)

    def cache_info(self):
        return self._cached_ids.cache_info()

    def row(self, bucket: int) -> np.ndarray:
        existing = self.rows.get(bucket)
        return existing if existing is not None else np.zeros(self.dim, dtype=np.float64)

    def writable_row(self, bucket: int) -> np.ndarray:
        existing = self.rows.get(bucket)
        if existing is None:
            existing = np.zeros(self.dim, dtype=np.float64)
            self.rows[bucket] = existing
        return existing

    def vector(self, word: str) -> np.ndarray:
        ids = self.bucket_ids(word)
        if not ids:
            return np.zeros(self.dim, dtype=np.float64)
        total = np.zeros(self.dim, dtype=np.float64)
        for bucket in ids:
            row = self.rows.get(bucket)
            if row is not None:
                total += row
        return total / len(ids)

    def accumulate_grad(self, word: str, grad: np.ndarray, into: Dict[int, np.ndarray]) -> None:
        """Spread the gradient of ``vector(word)`` over its bucket rows."""
        ids = self.bucket_ids(word)
        if not ids:
            return
        share = grad / len(ids)
        for bucket in ids:
            slot = into.get(bucket)
            if slot is None:
                into[bucket] = share.copy()
            else:
                slot += share

    def fit_to_table(
        self,
        table: EmbeddingTable,
        *,
        epochs: int = SUBWORD_FIT_EPOCHS,
        lr: float = SUBWORD_FIT_LR,
        seed: int = 0,
        words: Optional[Iterable[str]] = None,
    ) -> List[float]:
        """Train bucket rows so each word's n-gram mean approximates its vector.

        Plain SGD on ``0.5 * ||mean - target||^2`` over case-folded vocabulary
        words. Returns the mean loss per epoch.
        """
        if table.dim != self.dim:
            raise ValueError(f"hasher dim {self.dim} != table dim {table.dim}")
        targets: Dict[str, np.ndarray] = {}
        for word in (words if words is not None else table.words):
            index = table.index_of(word)
            if index is None:
                continue
            targets.setdefault(word.casefold(), table.matrix[index])
        keys = sorted(targets)
        rng = np.random.default_rng(seed)
        history: List[float] = []
        for epoch in range(epochs):
            total = 0.0
            for position in rng.permutation(len(keys)):
                word = keys[position]
                ids = self.bucket_ids(word)
                if not ids:
                    continue
                error = self.vector(word) - targets[word]
                total += 0.5 * float(error @ error)
                step = lr * error / len(ids)
                for bucket in ids:
                    self.writable_row(bucket)[...] -= step
            mean = total / max(1, len(keys))
            if not math.isfinite(mean):
                raise FloatingPointError(f"subword fit diverged at epoch {epoch + 1}")
            history.append(mean)
            logger.debug("subword fit epoch %d: loss %.6f", epoch + 1, mean)
        logger.info("Fitted %d subword buckets on %d words", len(self.rows), len(keys))
        return history

    def state(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(bucket ids, rows)`` in ascending bucket order."""
        ids = np.array(sorted(self.rows), dtype=np.int64)
        rows = np.vstack([self.rows[int(i)] for i in ids]) if len(ids) else np.zeros((0, self.dim))
        return ids, rows

    def load_state(self, ids: np.ndarray, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=np.float64).reshape(len(ids), self.dim)
        self.rows = {int(bucket): rows[i].copy() for i, bucket in enumerate(ids)}

    def __repr__(self) -> str:
        return (
            f"SubwordHasher(dim={self.dim}, buckets={self.buckets}, "
            f"n={self.min_n}..{self.max_n}, touched={len(self.rows)})"
        )


def embed_token(
    token,
    table: Optional[EmbeddingTable],
    hasher: Optional[SubwordHasher],
    *,
    with_source: bool = False,
):
    """Vector for one token: its table row, else its n-gram mean, else zeros.

    ``token`` may be a ``Token`` or a string; lookup uses the case-folded form.
    With ``with_source=True`` returns ``(vector, "vocab" | "subword" | "empty")``.
    """
    folded = token.folded if hasattr(token, "folded") else str(token).casefold()
    dim = table.dim if table is not None else hasher.dim
    if table is not None and hasher is not None and table.dim != hasher.dim:
        raise ValueError(f"table dim {table.dim} != hasher dim {hasher.dim}")

    index = table.index_of(folded) if table is not None else None
    if index is not None:
        vector, source = table.matrix[index].copy(), SOURCE_VOCAB
    elif hasher is not None and hasher.bucket_ids(folded):
        vector, source = hasher.vector(folded), SOURCE_SUBWORD
    else:
        vector, source = np.zeros(dim, dtype=np.float64), SOURCE_EMPTY
    return (vector, source) if with_source else vector


__all__ = [
    "EmbeddingTable",
    "SubwordHasher",
    "load_vec",
    "write_vec",
    "cosine",
    "similarities",
    "knn",
    "ngrams",
    "embed_token",
    "SOURCE_VOCAB",
    "SOURCE_SUBWORD",
    "SOURCE_EMPTY",
]
