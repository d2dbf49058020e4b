"""Shared prediction contract for all classifiers."""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from guestmix._config import CLASS_THRESHOLD
from guestmix.core.corpus import Sentence, make_sentence
from guestmix.core.dataset import LabeledSentence
from guestmix.errors import SingleClassError

SentenceLike = Union[Sentence, LabeledSentence, str]


def sigmoid(x):
    """Numerically stable logistic function (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return out if out.ndim else float(out)


def as_sentence(item: SentenceLike) -> Sentence:
    if isinstance(item, LabeledSentence):
        return item.sentence
    if isinstance(item, Sentence):
        return item
    return make_sentence(str(item))


def folded_tokens(item: SentenceLike, max_len: Optional[int] = None) -> List[str]:
    tokens = as_sentence(item).folded_tokens
    return tokens[:max_len] if max_len is not None else tokens


def require_both_classes(labels: Sequence[bool]) -> None:
    positives = sum(1 for label in labels if label)
    if positives == 0 or positives == len(labels):
        raise SingleClassError(
            f"training data needs both classes, got {positives} positive of {len(labels)}"
        )


def gold_labels(items: Sequence[LabeledSentence]) -> List[bool]:
    labels = []
    for item in items:
        if item.gold is None:
            raise ValueError(f"sentence {item.sentence_id} has no gold label")
        labels.append(bool(item.gold))
    return labels


@dataclass(frozen=True)
class Prediction:
    probability: float
    label: bool

    @classmethod
    def from_probability(cls, probability: float) -> "Prediction":
        probability = float(probability)
        return cls(probability=probability, label=probability >= CLASS_THRESHOLD)


@dataclass(frozen=True)
class ParameterCount:
    total: int
    per_layer: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_layers(cls, layers: Iterable[Tuple[str, int]]) -> "ParameterCount":
        per_layer = {name: int(count) for name, count in layers}
        return cls(total=sum(per_layer.values()), per_layer=per_layer)

    def to_dict(self) -> dict:
        return {"total": self.total, "per_layer": dict(self.per_layer)}


class Classifier(abc.ABC):
    """Binary guest-nationality classifier.

    Subclasses implement ``fit``, ``predict_proba``, ``count_parameters`` and
    the checkpoint hooks ``architecture``/``state_arrays``/``from_state``.
    """

    kind: str = ""

    @abc.abstractmethod
    def fit(self, train: Sequence[LabeledSentence], validation: Optional[Sequence[LabeledSentence]] = None):
        ...

    @abc.abstractmethod
    def predict_proba(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        ...

    @abc.abstractmethod
    def count_parameters(self) -> ParameterCount:
        ...

    @abc.abstractmethod
    def architecture(self) -> Dict[str, Any]:
        """JSON-serializable description stored in the checkpoint header."""

    @abc.abstractmethod
    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Named parameter blocks in checkpoint order."""

    @classmethod
    @abc.abstractmethod
    def from_state(cls, architecture: Dict[str, Any], arrays: Dict[str, np.ndarray], **context: Any) -> "Classifier":
        ...

    def predict(self, sentence: SentenceLike) -> Prediction:
        return self.predict_many([sentence])[0]

    def predict_many(self, sentences: Sequence[SentenceLike]) -> List[Prediction]:
        if not sentences:
            return []
        return [Prediction.from_probability(p) for p in self.predict_proba(list(sentences))]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r})"
