"""Keyword baseline: positive iff any gazetteer term matches."""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from guestmix.core.dataset import LabeledSentence
from guestmix.core.gazetteer import Gazetteer, NationalityTerm, match
from guestmix.core.models.base import Classifier, ParameterCount, SentenceLike, as_sentence
from guestmix.errors import CheckpointError


class DictionaryClassifier(Classifier):
    kind = "dict"

    def __init__(self, gazetteer: Gazetteer) -> None:
        self.gazetteer = gazetteer

    def fit(self, train: Sequence[LabeledSentence], validation: Optional[Sequence[LabeledSentence]] = None):
        return self

    def predict_dictionary(self, sentence: SentenceLike) -> bool:
        return bool(match(self.gazetteer, as_sentence(sentence)))

    def predict_proba(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        return np.array([1.0 if self.predict_dictionary(s) else 0.0 for s in sentences], dtype=np.float64)

    def count_parameters(self) -> ParameterCount:
        return ParameterCount(total=0, per_layer={})

    def architecture(self) -> Dict[str, Any]:
        return {
            "terms": [[t.surface, t.country, t.kind, t.source] for t in self.gazetteer.terms],
            "veto": sorted(self.gazetteer.veto),
        }

    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return []

    @classmethod
    def from_state(
        cls, architecture: Dict[str, Any], arrays: Dict[str, np.ndarray], **context: Any
    ) -> "DictionaryClassifier":
        if arrays:
            raise CheckpointError(f"dictionary checkpoint carries unexpected blocks: {sorted(arrays)}")
        try:
            terms = [NationalityTerm(*row) for row in architecture["terms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"invalid dictionary terms: {exc}") from exc
        return cls(Gazetteer(terms, architecture.get("veto") or ()))
