"""
Annotation sampling, multi-annotator label merging, and train/validation splits.

All randomness goes through ``numpy.random.default_rng(seed)``; pools are
sorted by ``sentence_id`` before drawing so results do not depend on the order
sentences arrived in.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import (
    DEFAULT_SAMPLE_RATIO,
    DEFAULT_SEED,
    DEFAULT_TRAIN_FRACTION,
    FOLD_TRAIN,
    FOLD_VALIDATION,
)
from guestmix.core.corpus import Sentence
from guestmix.errors import AnnotationError, DataError, PoolExhaustedError, RecordParseError
from guestmix.utils import get_logger
from guestmix.utils.io_utils import iter_jsonl, iter_tsv, write_jsonl, write_tsv

logger = get_logger(__name__)


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    has_term: bool
    gold: Optional[bool] = None
    annotator_labels: Tuple[Tuple[str, bool], ...] = ()
    needs_adjudication: bool = False

    @property
    def sentence_id(self) -> str:
        return self.sentence.sentence_id

    def to_record(self) -> dict:
        record = self.sentence.to_record()
        record.update({
            "has_term": self.has_term,
            "gold": self.gold,
            "annotator_labels": [[annotator, label] for annotator, label in self.annotator_labels],
        })
        if self.needs_adjudication:
            record["needs_adjudication"] = True
        return record

    @classmethod
    def from_record(cls, record: dict) -> "LabeledSentence":
        gold = record.get("gold")
        return cls(
            sentence=Sentence.from_record(record),
            has_term=bool(record.get("has_term", False)),
            gold=None if gold is None else bool(gold),
            annotator_labels=tuple((str(a), bool(l)) for a, l in record.get("annotator_labels") or ()),
            needs_adjudication=bool(record.get("needs_adjudication", False)),
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    seed: int = DEFAULT_SEED
    stratify_by: str = "has_term"

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.stratify_by != "has_term":
            raise ValueError("only has_term stratification is supported")


def _count(fraction: float, n: int, rounding) -> int:
    # round() first so 0.7 * 10 does not become 7.000000000000001 -> ceil 8
    return int(rounding(round(fraction * n, 9)))


# ═══════════════════════════════════════════════════════════════
#  Sampling
# ═══════════════════════════════════════════════════════════════

def sample_balanced(
    with_terms: Sequence[Sentence],
    without_terms: Sequence[Sentence],
    n: int,
    ratio: float = DEFAULT_SAMPLE_RATIO,
    seed: int = DEFAULT_SEED,
) -> List[LabeledSentence]:
    """Draw ``ceil(ratio*n)`` sentences with terms and the rest without, unlabeled."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    n_with = _count(ratio, n, math.ceil)
    n_without = n - n_with

    pools = (
        ("with_terms", sorted(with_terms, key=lambda s: s.sentence_id), n_with, True),
        ("without_terms", sorted(without_terms, key=lambda s: s.sentence_id), n_without, False),
    )
    rng = np.random.default_rng(seed)
    picked: List[LabeledSentence] = []
    for name, pool, wanted, has_term in pools:
        if wanted > len(pool):
            raise PoolExhaustedError(f"{name} pool has {len(pool)} sentences, {wanted} requested")
        for index in rng.choice(len(pool), size=wanted, replace=False) if wanted else ():
            picked.append(LabeledSentence(sentence=pool[int(index)], has_term=has_term))
    order = rng.permutation(len(picked))
    sample = [picked[int(i)] for i in order]
    logger.info("Sampled %d sentences (%d with terms, %d without)", len(sample), n_with, n_without)
    return sample


def write_sample_tsv(path: str, sample: Iterable[LabeledSentence]) -> None:
    """Annotator export: ``sentence_id<TAB>text``, labels withheld."""
    rows = [(item.sentence_id, " ".join(item.sentence.text.split())) for item in sample]
    write_tsv(path, rows, header=("sentence_id", "text"))


def write_labeled(path: str, items: Iterable[LabeledSentence]) -> int:
    return write_jsonl(path, (item.to_record() for item in items))


def read_labeled(path: str) -> List[LabeledSentence]:
    items = []
    for line_number, record in iter_jsonl(path):
        try:
            items.append(LabeledSentence.from_record(record))
        except (KeyError, ValueError, TypeError) as exc:
            raise RecordParseError(f"invalid labeled record: {exc}", path=path, line=line_number) from exc
    return items


# ═══════════════════════════════════════════════════════════════
#  Annotation merge
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AnnotationRow:
    sentence_id: str
    annotator_id: str
    label: bool
    path: str = ""
    line: int = 0


def read_annotations(path: str) -> List[AnnotationRow]:
    """Parse ``sentence_id<TAB>annotator_id<TAB>label`` with labels 0/1."""
    rows: List[AnnotationRow] = []
    for line_number, fields in iter_tsv(path, min_columns=3):
        if fields[0] == "sentence_id":
            continue
        label = fields[2]
        if label not in ("0", "1"):
            raise AnnotationError(f"label must be 0 or 1, got '{label}'", path=path, line=line_number)
        if not fields[0] or not fields[1]:
            raise AnnotationError("empty sentence_id or annotator_id", path=path, line=line_number)
        rows.append(AnnotationRow(fields[0], fields[1], label == "1", path, line_number))
    return rows


@dataclass
class MergeResult:
    labeled: List[LabeledSentence] = field(default_factory=list)
    adjudication: List[LabeledSentence] = field(default_factory=list)
    unannotated: int = 0

    @property
    def votes(self) -> List[Tuple[bool, ...]]:
        """Per-item label tuples (annotator order) for every merged item."""
        return [tuple(label for _, label in item.annotator_labels) for item in [*self.labeled, *self.adjudication]]


def merge_annotations(
    files: Iterable[str],
    pool: Iterable[LabeledSentence],
) -> MergeResult:
    """Majority-vote gold labels over every annotation file.

    Even splits are flagged ``needs_adjudication`` and kept out of
    ``labeled``. Identical repeated labels are ignored; a repeated label that
    disagrees raises ``AnnotationError``.
    """
    by_id: Dict[str, LabeledSentence] = {item.sentence_id: item for item in pool}
    votes: Dict[str, Dict[str, AnnotationRow]] = defaultdict(dict)
    for path in files:
        for row in read_annotations(path):
            if row.sentence_id not in by_id:
                raise AnnotationError(f"unknown sentence_id '{row.sentence_id}'", path=row.path, line=row.line)
            previous = votes[row.sentence_id].get(row.annotator_id)
            if previous is not None:
                if previous.label != row.label:
                    raise AnnotationError(
                        f"annotator '{row.annotator_id}' labels '{row.sentence_id}' both ways "
                        f"(first at {previous.path}:{previous.line})",
                        path=row.path,
                        line=row.line,
                    )
                continue
            votes[row.sentence_id][row.annotator_id] = row

    result = MergeResult()
    for sentence_id in sorted(by_id):
        cast = votes.get(sentence_id)
        if not cast:
            result.unannotated += 1
            continue
        labels = tuple(sorted((annotator, row.label) for annotator, row in cast.items()))
        positives = sum(1 for _, label in labels if label)
        negatives = len(labels) - positives
        item = replace(by_id[sentence_id], annotator_labels=labels)
        if positives == negatives:
            result.adjudication.append(replace(item, gold=None, needs_adjudication=True))
        else:
            result.labeled.append(replace(item, gold=positives > negatives, needs_adjudication=False))

    if result.adjudication:
        logger.warning("%d sentence(s) need adjudication (tied votes)", len(result.adjudication))
    if result.unannotated:
        logger.warning("%d sampled sentence(s) have no annotations", result.unannotated)
    logger.info("Merged annotations: %d labeled", len(result.labeled))
    return result


def write_adjudication_tsv(path: str, items: Iterable[LabeledSentence]) -> None:
    rows = []
    for item in items:
        votes = ",".join(f"{annotator}={int(label)}" for annotator, label in item.annotator_labels)
        rows.append((item.sentence_id, votes, " ".join(item.sentence.text.split())))
    write_tsv(path, rows, header=("sentence_id", "votes", "text"))


# ═══════════════════════════════════════════════════════════════
#  Splitting
# ═══════════════════════════════════════════════════════════════

def split(
    data: Sequence[LabeledSentence],
    spec: SplitSpec = SplitSpec(),
) -> Tuple[List[LabeledSentence], List[LabeledSentence]]:
    """Stratified (by ``has_term``) deterministic train/validation split.

    Each stratum sends ``floor(train_fraction * size)`` items to train and the
    remainder to validation. Both folds come back sorted by ``sentence_id``.
    """
    usable = [item for item in data if item.gold is not None]
    if len(usable) < len(data):
        logger.warning("Dropping %d unlabeled item(s) before splitting", len(data) - len(usable))
    if len(usable) < 2:
        raise DataError(f"need at least 2 labeled items to split, got {len(usable)}")

    rng = np.random.default_rng(spec.seed)
    train: List[LabeledSentence] = []
    validation: List[LabeledSentence] = []
    for has_term in (True, False):
        stratum = sorted((item for item in usable if item.has_term == has_term), key=lambda i: i.sentence_id)
        if not stratum:
            logger.warning("Stratum has_term=%s is empty", has_term)
            continue
        n_train = _count(spec.train_fraction, len(stratum), math.floor)
        order = rng.permutation(len(stratum))
        train.extend(stratum[int(i)] for i in order[:n_train])
        validation.extend(stratum[int(i)] for i in order[n_train:])

    train.sort(key=lambda i: i.sentence_id)
    validation.sort(key=lambda i: i.sentence_id)
    logger.info("Split %d items into %d train / %d validation", len(usable), len(train), len(validation))
    return train, validation


def write_split(path: str, train: Iterable[LabeledSentence], validation: Iterable[LabeledSentence]) -> int:
    rows = [{"sentence_id": item.sentence_id, "fold": FOLD_TRAIN} for item in train]
    rows.extend({"sentence_id": item.sentence_id, "fold": FOLD_VALIDATION} for item in validation)
    rows.sort(key=lambda row: row["sentence_id"])
    return write_jsonl(path, rows)


def load_split(path: str) -> Dict[str, str]:
    folds: Dict[str, str] = {}
    for line_number, record in iter_jsonl(path):
        fold = record.get("fold")
        if fold not in (FOLD_TRAIN, FOLD_VALIDATION) or "sentence_id" not in record:
            raise RecordParseError("expected {sentence_id, fold}", path=path, line=line_number)
        folds[str(record["sentence_id"])] = fold
    return folds


def apply_split(
    data: Iterable[LabeledSentence],
    folds: Dict[str, str],
) -> Tuple[List[LabeledSentence], List[LabeledSentence]]:
    """Re-apply a stored split by ``sentence_id``; unknown ids are skipped."""
    train: List[LabeledSentence] = []
    validation: List[LabeledSentence] = []
    skipped = 0
    for item in data:
        fold = folds.get(item.sentence_id)
        if fold == FOLD_TRAIN:
            train.append(item)
        elif fold == FOLD_VALIDATION:
            validation.append(item)
        else:
            skipped += 1
    if skipped:
        logger.warning("%d labeled item(s) are not in the split manifest", skipped)
    return train, validation


__all__ = [
    "LabeledSentence",
    "SplitSpec",
    "AnnotationRow",
    "MergeResult",
    "sample_balanced",
    "write_sample_tsv",
    "write_labeled",
    "read_labeled",
    "read_annotations",
    "merge_annotations",
    "write_adjudication_tsv",
    "split",
    "write_split",
    "load_split",
    "apply_split",
]
