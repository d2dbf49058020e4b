"""
Classification metrics and annotator agreement.

Reports never contain NaN: an undefined ratio is reported as 0.0 and named in
``flags``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from guestmix.errors import MetricsError
from guestmix.utils import get_logger

logger = get_logger(__name__)

METRICS_SCHEMA_VERSION = 1
AGREEMENT_SCHEMA_VERSION = 1

Labels = Union[Mapping[str, bool], Sequence[bool]]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    accuracy: float
    f1_binary: float
    f1_macro: float
    f1_weighted: float
    support_positive: int
    support_negative: int
    confusion: ConfusionMatrix
    flags: Tuple[str, ...] = ()

    SCORE_FIELDS = ("precision", "recall", "accuracy", "f1_binary", "f1_macro", "f1_weighted")

    def percentages(self) -> Dict[str, float]:
        return {name: round(100.0 * getattr(self, name), 1) for name in self.SCORE_FIELDS}

    def to_dict(self) -> dict:
        return {
            "schema_version": METRICS_SCHEMA_VERSION,
            **{name: getattr(self, name) for name in self.SCORE_FIELDS},
            "support_positive": self.support_positive,
            "support_negative": self.support_negative,
            "confusion": self.confusion.to_dict(),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        try:
            return cls(
                **{name: float(data[name]) for name in cls.SCORE_FIELDS},
                support_positive=int(data["support_positive"]),
                support_negative=int(data["support_negative"]),
                confusion=ConfusionMatrix(**data["confusion"]),
                flags=tuple(data.get("flags") or ()),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MetricsError(f"invalid metrics payload: {exc}") from exc


@dataclass(frozen=True)
class AgreementReport:
    fleiss_kappa: Optional[float]
    observed_agreement: float
    expected_agreement: float
    items: int
    raters: int
    category_proportions: Dict[str, float] = field(default_factory=dict)
    category_kappa: Dict[str, Optional[float]] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()

    @property
    def defined(self) -> bool:
        return self.fleiss_kappa is not None

    def to_dict(self) -> dict:
        return {
            "schema_version": AGREEMENT_SCHEMA_VERSION,
            "fleiss_kappa": self.fleiss_kappa,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
            "items": self.items,
            "raters": self.raters,
            "category_proportions": dict(self.category_proportions),
            "category_kappa": dict(self.category_kappa),
            "flags": list(self.flags),
        }


# ═══════════════════════════════════════════════════════════════
#  Confusion matrix and metrics
# ═══════════════════════════════════════════════════════════════

def _aligned(predictions: Labels, gold: Labels) -> List[Tuple[bool, bool]]:
    if isinstance(predictions, Mapping) != isinstance(gold, Mapping):
        raise MetricsError("predictions and gold must both be keyed by sentence_id or both be sequences")
    if isinstance(predictions, Mapping):
        missing = sorted(set(gold) - set(predictions))
        extra = sorted(set(predictions) - set(gold))
        if missing or extra:
            raise MetricsError(
                f"sentence ids differ: {len(missing)} without prediction (e.g. {missing[:3]}), "
                f"{len(extra)} without gold (e.g. {extra[:3]})"
            )
        return [(bool(predictions[key]), bool(gold[key])) for key in sorted(gold)]
    if len(predictions) != len(gold):
        raise MetricsError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold labels")
    return [(bool(p), bool(g)) for p, g in zip(predictions, gold)]


def confusion(predictions: Labels, gold: Labels) -> ConfusionMatrix:
    pairs = np.array(_aligned(predictions, gold), dtype=bool).reshape(-1, 2)
    pred, true = pairs[:, 0], pairs[:, 1]
    return ConfusionMatrix(
        tp=int(np.sum(pred & true)),
        fp=int(np.sum(pred & ~true)),
        tn=int(np.sum(~pred & ~true)),
        fn=int(np.sum(~pred & true)),
    )


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def _f1(precision: float, recall: float) -> Optional[float]:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else None


def metrics(m: ConfusionMatrix) -> MetricsReport:
    if m.total == 0:
        raise MetricsError("cannot compute metrics on an empty confusion matrix")
    flags: List[str] = []

    def defined(value: Optional[float], flag: str) -> float:
        if value is None:
            flags.append(flag)
            return 0.0
        return value

    precision = defined(_ratio(m.tp, m.tp + m.fp), "precision_undefined")
    recall = defined(_ratio(m.tp, m.tp + m.fn), "recall_undefined")
    f1_pos = defined(_f1(precision, recall), "f1_undefined")

    # negative class treated as the positive one
    precision_neg = _ratio(m.tn, m.tn + m.fn) or 0.0
    recall_neg = _ratio(m.tn, m.tn + m.fp) or 0.0
    f1_neg = _f1(precision_neg, recall_neg) or 0.0

    support_pos = m.tp + m.fn
    support_neg = m.tn + m.fp
    return MetricsReport(
        precision=precision,
        recall=recall,
        accuracy=(m.tp + m.tn) / m.total,
        f1_binary=f1_pos,
        f1_macro=(f1_pos + f1_neg) / 2,
        f1_weighted=(f1_pos * support_pos + f1_neg * support_neg) / m.total,
        support_positive=support_pos,
        support_negative=support_neg,
        confusion=m,
        flags=tuple(flags),
    )


def evaluate(predictions: Labels, gold: Labels) -> MetricsReport:
    return metrics(confusion(predictions, gold))


# ═══════════════════════════════════════════════════════════════
#  Fleiss kappa
# ═══════════════════════════════════════════════════════════════

def category_counts(labels: Sequence[Sequence[int]], categories: int = 2) -> np.ndarray:
    """Items x categories count table from an items x raters label matrix."""
    if len(labels) == 0:
        raise MetricsError("no items to compute agreement on")
    raters = {len(row) for row in labels}
    if len(raters) != 1:
        raise MetricsError(f"every item needs the same number of raters, got {sorted(raters)}")
    table = np.zeros((len(labels), categories), dtype=np.int64)
    for i, row in enumerate(labels):
        for value in row:
            category = int(value)
            if not 0 <= category < categories:
                raise MetricsError(f"label {value!r} outside categories 0..{categories - 1}")
            table[i, category] += 1
    return table


def fleiss_kappa_counts(table: np.ndarray, category_names: Optional[Sequence[str]] = None) -> AgreementReport:
    counts = np.asarray(table, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] == 0:
        raise MetricsError("count table must be a non-empty items x categories matrix")
    per_item = counts.sum(axis=1)
    if not np.all(per_item == per_item[0]):
        raise MetricsError("every item needs the same number of ratings")
    n = float(per_item[0])
    if n < 2:
        raise MetricsError("Fleiss kappa needs at least 2 raters per item")
    items = counts.shape[0]
    names = list(category_names) if category_names is not None else [str(j) for j in range(counts.shape[1])]

    p_items = (np.sum(counts * counts, axis=1) - n) / (n * (n - 1))
    observed = float(np.mean(p_items))
    proportions = counts.sum(axis=0) / (items * n)
    expected = float(np.sum(proportions ** 2))

    flags: List[str] = []
    if np.isclose(expected, 1.0, rtol=0.0, atol=1e-15):
        if np.isclose(observed, 1.0, rtol=0.0, atol=1e-15):
            kappa: Optional[float] = 1.0
        else:
            kappa = None
            flags.append("kappa_undefined")
    else:
        kappa = (observed - expected) / (1.0 - expected)

    category_kappa: Dict[str, Optional[float]] = {}
    for j, name in enumerate(names):
        p = float(proportions[j])
        if 0.0 < p < 1.0:
            disagreement = float(np.sum(counts[:, j] * (n - counts[:, j])))
            category_kappa[name] = 1.0 - disagreement / (items * n * (n - 1) * p * (1.0 - p))
        else:
            category_kappa[name] = None

    return AgreementReport(
        fleiss_kappa=kappa,
        observed_agreement=observed,
        expected_agreement=expected,
        items=items,
        raters=int(n),
        category_proportions={name: float(proportions[j]) for j, name in enumerate(names)},
        category_kappa=category_kappa,
        flags=tuple(flags),
    )


def fleiss_kappa(labels: Sequence[Sequence[int]], categories: int = 2) -> AgreementReport:
    """Fleiss kappa for an items x raters matrix of category indices.

    Binary labels may be given as booleans (False=0, True=1).
    """
    names = ["negative", "positive"] if categories == 2 else None
    report = fleiss_kappa_counts(category_counts(labels, categories), names)
    if report.fleiss_kappa is None:
        logger.warning("Fleiss kappa undefined: expected agreement is 1 but agreement is imperfect")
    return report


__all__ = [
    "ConfusionMatrix",
    "MetricsReport",
    "AgreementReport",
    "confusion",
    "metrics",
    "evaluate",
    "category_counts",
    "fleiss_kappa_counts",
    "fleiss_kappa",
]
