"""
TF-IDF features with a linear SVM trained by primal sub-gradient descent.

The SVM minimizes ``lambda/2 * ||w||^2 + mean(hinge)`` with the step size
``1/(lambda*t)`` and a projection onto the ball of radius ``1/sqrt(lambda)``.
The bias is a weight on a constant feature and is regularized with ``w``.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import DEFAULT_MIN_DF, DEFAULT_SEED, DEFAULT_SVM_EPOCHS, DEFAULT_SVM_LAMBDA
from guestmix.core.dataset import LabeledSentence
from guestmix.core.models.base import (
    Classifier,
    ParameterCount,
    SentenceLike,
    folded_tokens,
    gold_labels,
    require_both_classes,
    sigmoid,
)
from guestmix.errors import CheckpointError, NotFittedError
from guestmix.utils import get_logger

logger = get_logger(__name__)

SparseVector = Tuple[np.ndarray, np.ndarray]


class TfidfVectorizer:
    """Smoothed IDF ``ln((1+N)/(1+df)) + 1``; rows are L2-normalized."""

    def __init__(self, min_df: int = DEFAULT_MIN_DF) -> None:
        if min_df < 1:
            raise ValueError("min_df must be >= 1")
        self.min_df = min_df
        self.vocabulary: Optional[Dict[str, int]] = None
        self.idf: Optional[np.ndarray] = None

    @property
    def fitted(self) -> bool:
        return self.vocabulary is not None

    def fit(self, documents: Sequence[Sequence[str]]) -> "TfidfVectorizer":
        df: Counter = Counter()
        for tokens in documents:
            df.update(set(tokens))
        kept = sorted(token for token, count in df.items() if count >= self.min_df)
        n_docs = len(documents)
        self.vocabulary = {token: column for column, token in enumerate(kept)}
        self.idf = np.array([math.log((1 + n_docs) / (1 + df[token])) + 1.0 for token in kept], dtype=np.float64)
        logger.debug("tf-idf vocabulary: %d of %d tokens kept", len(kept), len(df))
        return self

    def transform(self, tokens: Sequence[str]) -> SparseVector:
        """Sparse ``(indices, values)`` with sorted indices; unseen tokens are ignored."""
        if not self.fitted:
            raise NotFittedError("TfidfVectorizer.transform called before fit")
        if not tokens:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        counts = Counter(token for token in tokens if token in self.vocabulary)
        if not counts:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        indices = np.array(sorted(self.vocabulary[token] for token in counts), dtype=np.int64)
        inverse = {self.vocabulary[token]: count for token, count in counts.items()}
        tf = np.array([inverse[i] for i in indices], dtype=np.float64) / len(tokens)
        values = tf * self.idf[indices]
        norm = float(np.linalg.norm(values))
        return indices, values / norm

    def transform_dense(self, tokens: Sequence[str]) -> np.ndarray:
        indices, values = self.transform(tokens)
        dense = np.zeros(len(self.vocabulary), dtype=np.float64)
        dense[indices] = values
        return dense


class LinearSvm:
    def __init__(
        self, lam: float = DEFAULT_SVM_LAMBDA, epochs: int = DEFAULT_SVM_EPOCHS, seed: int = DEFAULT_SEED
    ) -> None:
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if epochs < 1:
            raise ValueError("epochs must be >= 1")
        self.lam = lam
        self.epochs = epochs
        self.seed = seed
        self.w: Optional[np.ndarray] = None
        self.b = 0.0

    def decision(self, x: SparseVector) -> float:
        if self.w is None:
            raise NotFittedError("LinearSvm used before fit")
        indices, values = x
        return float(self.w[indices] @ values) + self.b

    def fit(self, xs: Sequence[SparseVector], ys: Sequence[bool], n_features: int) -> "LinearSvm":
        require_both_classes(ys)
        signs = np.where(np.asarray(ys, dtype=bool), 1.0, -1.0)
        w = np.zeros(n_features, dtype=np.float64)
        b = 0.0
        radius = 1.0 / math.sqrt(self.lam)
        rng = np.random.default_rng(self.seed)
        t = 0
        for _ in range(self.epochs):
            for i in rng.permutation(len(xs)):
                t += 1
                eta = 1.0 / (self.lam * t)
                indices, values = xs[i]
                y = signs[i]
                margin = y * (float(w[indices] @ values) + b)
                w *= 1.0 - eta * self.lam
                if margin < 1.0:
                    w[indices] += eta * y * values
                    b += eta * y
                # the bias is neither shrunk nor projected
                norm = math.sqrt(float(w @ w))
                if norm > radius:
                    w *= radius / norm
        self.w, self.b = w, b
        return self


class TfidfSvmClassifier(Classifier):
    kind = "tfidf-svm"

    def __init__(
        self,
        *,
        lam: float = DEFAULT_SVM_LAMBDA,
        epochs: int = DEFAULT_SVM_EPOCHS,
        min_df: int = DEFAULT_MIN_DF,
        seed: int = DEFAULT_SEED,
        max_seq_len: Optional[int] = None,
    ) -> None:
        self.vectorizer = TfidfVectorizer(min_df)
        self.svm = LinearSvm(lam, epochs, seed)
        self.max_seq_len = max_seq_len

    def _tokens(self, item: SentenceLike) -> List[str]:
        return folded_tokens(item, self.max_seq_len)

    def fit(self, train: Sequence[LabeledSentence], validation: Optional[Sequence[LabeledSentence]] = None):
        labels = gold_labels(train)
        require_both_classes(labels)
        documents = [self._tokens(item) for item in train]
        self.vectorizer.fit(documents)
        xs = [self.vectorizer.transform(doc) for doc in documents]
        self.svm.fit(xs, labels, len(self.vectorizer.vocabulary))
        logger.info(
            "Trained tf-idf SVM on %d sentences (%d features, lambda=%g)",
            len(train), len(self.vectorizer.vocabulary), self.svm.lam,
        )
        return self

    def decision_function(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        return np.array([self.svm.decision(self.vectorizer.transform(self._tokens(s))) for s in sentences])

    def predict_proba(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        return np.atleast_1d(sigmoid(self.decision_function(sentences)))

    def count_parameters(self) -> ParameterCount:
        if self.svm.w is None:
            raise NotFittedError("model is not fitted")
        return ParameterCount.from_layers([("linear", len(self.svm.w) + 1)])

    def architecture(self) -> Dict[str, Any]:
        if not self.vectorizer.fitted:
            raise NotFittedError("model is not fitted")
        vocabulary = sorted(self.vectorizer.vocabulary, key=self.vectorizer.vocabulary.get)
        return {
            "vocabulary": vocabulary,
            "lambda": self.svm.lam,
            "epochs": self.svm.epochs,
            "min_df": self.vectorizer.min_df,
            "seed": self.svm.seed,
            "max_seq_len": self.max_seq_len,
        }

    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return [("idf", self.vectorizer.idf), ("w", self.svm.w), ("b", np.array([self.svm.b]))]

    @classmethod
    def from_state(
        cls, architecture: Dict[str, Any], arrays: Dict[str, np.ndarray], **context: Any
    ) -> "TfidfSvmClassifier":
        try:
            model = cls(
                lam=float(architecture["lambda"]),
                epochs=int(architecture["epochs"]),
                min_df=int(architecture["min_df"]),
                seed=int(architecture["seed"]),
                max_seq_len=architecture.get("max_seq_len"),
            )
            vocabulary = list(architecture["vocabulary"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"invalid tf-idf architecture: {exc}") from exc
        expected = {"idf": (len(vocabulary),), "w": (len(vocabulary),), "b": (1,)}
        for name, shape in expected.items():
            if name not in arrays or arrays[name].shape != shape:
                got = arrays[name].shape if name in arrays else None
                raise CheckpointError(f"block '{name}' has shape {got}, expected {shape}")
        model.vectorizer.vocabulary = {token: i for i, token in enumerate(vocabulary)}
        model.vectorizer.idf = arrays["idf"].copy()
        model.svm.w = arrays["w"].copy()
        model.svm.b = float(arrays["b"][0])
        return model
