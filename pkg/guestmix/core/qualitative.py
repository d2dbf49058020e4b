"""Fixed qualitative suite: six hand-picked sentences with known gold labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from guestmix.core.corpus import make_sentence
from guestmix.core.models.base import Classifier
from guestmix.utils import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class QualitativeCase:
    text: str
    gold: bool
    reference_prediction: bool
    required: bool = True
    note: str = ""


QUALITATIVE_SUITE: Tuple[QualitativeCase, ...] = (
    QualitativeCase("Das Hotel war komplett voll mit Andoranern.", True, True, note="misspelled demonym"),
    QualitativeCase("Beim Afgahnen war das Essen vorzüglich.", False, False, note="restaurant, misspelled"),
    QualitativeCase("Die Amis sind wieder negativ aufgefallen.", True, True, note="slang"),
    QualitativeCase("Im Zentrum gibt es auch Pubs, Pizza, Chinesen etc.", False, False, note="cuisine list"),
    QualitativeCase("Beim Italiener war das Essen fantastisch.", False, False, note="restaurant"),
    QualitativeCase(
        "Richtung inland gibt es viele Italiener die preiswert sind.",
        False,
        True,
        required=False,
        note="restaurants, recorded only",
    ),
)


@dataclass(frozen=True)
class QualitativeRow:
    text: str
    gold: bool
    probability: float
    label: bool
    required: bool
    oov_tokens: Tuple[str, ...] = ()

    @property
    def correct(self) -> bool:
        return self.label == self.gold

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "gold": self.gold,
            "probability": self.probability,
            "label": self.label,
            "correct": self.correct,
            "required": self.required,
            "oov_tokens": list(self.oov_tokens),
        }


@dataclass
class QualitativeReport:
    model: str
    rows: List[QualitativeRow] = field(default_factory=list)

    @property
    def required_correct(self) -> int:
        return sum(1 for row in self.rows if row.required and row.correct)

    @property
    def required_total(self) -> int:
        return sum(1 for row in self.rows if row.required)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "required_correct": self.required_correct,
            "required_total": self.required_total,
            "rows": [row.to_dict() for row in self.rows],
        }


def run_qualitative(model: Classifier, cases: Optional[Tuple[QualitativeCase, ...]] = None) -> QualitativeReport:
    """Predict every case; the score counts required rows only and never gates."""
    cases = cases or QUALITATIVE_SUITE
    sentences = [make_sentence(case.text, review_id="qualitative", index=i) for i, case in enumerate(cases)]
    predictions = model.predict_many(sentences)
    oov = getattr(model, "oov_tokens", None)
    report = QualitativeReport(model=model.kind)
    for case, sentence, prediction in zip(cases, sentences, predictions):
        report.rows.append(QualitativeRow(
            text=case.text,
            gold=case.gold,
            probability=prediction.probability,
            label=prediction.label,
            required=case.required,
            oov_tokens=tuple(oov(sentence)) if oov is not None else (),
        ))
    logger.info(
        "Qualitative suite (%s): %d/%d required rows correct",
        model.kind, report.required_correct, report.required_total,
    )
    return report
