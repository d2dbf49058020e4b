"""Central finite-difference check of the recurrent model's analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from guestmix._config import (
    EMBEDDING_MODE_LEARNED,
    EMBEDDING_MODE_PRETRAINED,
    GRADCHECK_SEEDS,
    GRADCHECK_STEP,
    GRADCHECK_TOLERANCE,
)
from guestmix.core.config_manager import TrainConfig
from guestmix.core.corpus import make_sentence
from guestmix.core.dataset import LabeledSentence
from guestmix.core.embeddings import EmbeddingTable, SubwordHasher
from guestmix.core.models.recurrent import RecurrentClassifier
from guestmix.utils import get_logger

logger = get_logger(__name__)

_WORDS = ("hotel", "gäste", "amis", "essen", "laut", "zimmer", "italiener", "nett")
_REL_FLOOR = 1e-6
_IN_TABLE = _WORDS[:4]
_SUBWORD_BUCKETS = 64


@dataclass(frozen=True)
class GradcheckResult:
    seed: int
    checked: int
    max_rel_error: float
    worst_param: str
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "checked": self.checked,
            "max_rel_error": self.max_rel_error,
            "worst_param": self.worst_param,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _REL_FLOOR)


def random_batch(rng: np.random.Generator, lengths: Sequence[int]) -> Tuple[List[LabeledSentence], np.ndarray]:
    items = []
    for i, length in enumerate(lengths):
        text = " ".join(rng.choice(_WORDS, size=length))
        items.append(LabeledSentence(make_sentence(text, review_id=f"g{i}", index=i), has_term=False, gold=i % 2 == 0))
    labels = np.array([1.0 if item.gold else 0.0 for item in items])
    return items, labels


def check_model(
    model: RecurrentClassifier,
    items: Sequence[LabeledSentence],
    labels: np.ndarray,
    *,
    step: float = GRADCHECK_STEP,
) -> Tuple[int, float, str]:
    """Compare every analytic partial with a central difference.

    Returns ``(entries checked, max relative error, worst entry)``.
    """
    _, grads, row_grads = model.loss_and_grads(items, labels)
    blocks = [(name, model.params[name], grads[name]) for name in sorted(model.params)]
    if model.pretrained:
        for bucket in sorted(model.hasher.rows):
            analytic = row_grads.get(bucket, np.zeros(model.hasher.dim))
            blocks.append((f"subword{bucket}", model.hasher.rows[bucket], analytic))

    checked, worst, worst_name = 0, 0.0, ""
    for name, param, analytic in blocks:
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + step
            plus = model.loss(items, labels)
            param[index] = original - step
            minus = model.loss(items, labels)
            param[index] = original
            numeric = (plus - minus) / (2.0 * step)
            error = relative_error(float(analytic[index]), numeric)
            checked += 1
            if error > worst:
                worst, worst_name = error, f"{name}{list(index)}"
    return checked, worst, worst_name


def pretrained_inputs(rng: np.random.Generator, dim: int) -> Tuple[EmbeddingTable, SubwordHasher]:
    """A table over half the gradcheck words; the rest get nonzero subword rows."""
    table = EmbeddingTable(list(_IN_TABLE), rng.normal(size=(len(_IN_TABLE), dim)))
    hasher = SubwordHasher(dim, _SUBWORD_BUCKETS)
    for word in _WORDS:
        if word in table:
            continue
        for bucket in hasher.bucket_ids(word):
            hasher.writable_row(bucket)[...] = rng.normal(scale=0.5, size=dim)
    return table, hasher


def gradient_check(
    seed: int,
    *,
    dim: int = 4,
    hidden: int = 3,
    layers: int = 2,
    bidirectional: bool = True,
    pooling: str = "final",
    lengths: Sequence[int] = (5, 5, 3),
    step: float = GRADCHECK_STEP,
    tolerance: float = GRADCHECK_TOLERANCE,
    pretrained: bool = False,
) -> GradcheckResult:
    """Gradient check of a freshly initialized model.

    With ``pretrained=True`` the word table is frozen and the subword bucket
    rows of the out-of-table words are checked along with the LSTM.
    """
    rng = np.random.default_rng(seed)
    items, labels = random_batch(rng, lengths)
    table, hasher = pretrained_inputs(rng, dim) if pretrained else (None, None)
    model = RecurrentClassifier(
        kind="gradcheck",
        embedding_mode=EMBEDDING_MODE_PRETRAINED if pretrained else EMBEDDING_MODE_LEARNED,
        bidirectional=bidirectional,
        layers=layers,
        hidden=hidden,
        learned_dim=dim,
        pooling=pooling,
        train_config=TrainConfig(seed=seed),
        table=table,
        hasher=hasher,
    )
    model.initialize(None if pretrained else RecurrentClassifier.build_vocabulary(items))
    checked, worst, worst_name = check_model(model, items, labels, step=step)
    result = GradcheckResult(seed, checked, worst, worst_name, tolerance)
    log = logger.info if result.passed else logger.error
    log("gradcheck seed %d: %d entries, max relative error %.3e (%s)", seed, checked, worst, worst_name)
    return result


def run_gradcheck(seeds: Iterable[int] = range(GRADCHECK_SEEDS), **kwargs) -> List[GradcheckResult]:
    return [gradient_check(seed, **kwargs) for seed in seeds]
