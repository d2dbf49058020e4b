"""
Mini-batch training loop shared by the recurrent classifiers.

The loop is single-threaded and seeded: the batch order of every epoch comes
from one ``default_rng(seed)`` stream, so identical inputs give identical
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from guestmix._config import CLASS_THRESHOLD
from guestmix.core.config_manager import TrainConfig
from guestmix.core.dataset import LabeledSentence
from guestmix.core.evaluation import evaluate
from guestmix.core.models.base import gold_labels
from guestmix.core.models.optim import Adam, clip_global_norm
from guestmix.errors import TrainingDivergedError
from guestmix.utils import get_logger

logger = get_logger(__name__)


class Trainable(Protocol):
    params: Dict[str, np.ndarray]

    def sparse_rows(self) -> Optional[Dict[int, np.ndarray]]: ...

    def loss_and_grads(
        self, items: Sequence[LabeledSentence], labels: np.ndarray
    ) -> Tuple[float, Dict[str, np.ndarray], Dict[int, np.ndarray]]: ...

    def loss(self, items: Sequence[LabeledSentence], labels: np.ndarray) -> float: ...

    def predict_proba(self, sentences: Sequence[Any]) -> np.ndarray: ...

    def snapshot(self) -> Any: ...

    def restore(self, snapshot: Any) -> None: ...


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_f1: Optional[float]
    clipped_batches: int

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_f1": self.val_f1,
            "clipped_batches": self.clipped_batches,
        }


@dataclass
class TrainHistory:
    initial_loss: float
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def losses(self) -> List[float]:
        return [record.train_loss for record in self.epochs]

    def to_dict(self) -> dict:
        return {
            "initial_loss": self.initial_loss,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "epochs": [record.to_dict() for record in self.epochs],
        }


def _validation_f1(model: Trainable, validation: Sequence[LabeledSentence]) -> float:
    probabilities = model.predict_proba(list(validation))
    predictions = [bool(p >= CLASS_THRESHOLD) for p in probabilities]
    return evaluate(predictions, gold_labels(validation)).f1_binary


def train(
    model: Trainable,
    train_set: Sequence[LabeledSentence],
    validation: Optional[Sequence[LabeledSentence]],
    config: TrainConfig,
) -> TrainHistory:
    """Fit ``model`` in place with Adam and global-norm clipping.

    With a validation set the parameters of the best validation-F1 epoch are
    restored at the end, and training stops after ``patience`` epochs without
    improvement (``patience=None`` never stops early). Without one, the final
    parameters are kept.
    """
    if not train_set:
        raise ValueError("training set is empty")
    labels = np.asarray(gold_labels(train_set), dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(config.lr, config.beta1, config.beta2, config.eps)

    history = TrainHistory(initial_loss=model.loss(train_set, labels))
    logger.info("Initial training loss %.6f on %d sentences", history.initial_loss, len(train_set))

    best_f1 = -math.inf
    best_snapshot = None
    waited = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_set))
        clipped = 0
        for batch_no, start in enumerate(range(0, len(order), config.batch_size), start=1):
            index = order[start:start + config.batch_size]
            batch = [train_set[i] for i in index]
            loss, grads, row_grads = model.loss_and_grads(batch, labels[index])
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"training loss became {loss} at epoch {epoch}, batch {batch_no}")
            before, _ = clip_global_norm(grads, row_grads, config.clip_norm)
            if before > config.clip_norm:
                clipped += 1
            optimizer.step(model.params, grads, model.sparse_rows(), row_grads)

        train_loss = model.loss(train_set, labels)
        if not math.isfinite(train_loss):
            raise TrainingDivergedError(f"training loss became {train_loss} after epoch {epoch}")
        val_f1 = _validation_f1(model, validation) if validation else None
        history.epochs.append(EpochRecord(epoch, train_loss, val_f1, clipped))
        logger.info(
            "epoch %d/%d  loss %.6f  val_f1 %s  clipped %d",
            epoch, config.max_epochs, train_loss,
            "-" if val_f1 is None else f"{val_f1:.4f}", clipped,
        )

        if val_f1 is None:
            continue
        if val_f1 > best_f1:
            best_f1, best_snapshot, waited = val_f1, model.snapshot(), 0
            history.best_epoch = epoch
        else:
            waited += 1
            if config.patience is not None and waited >= config.patience:
                history.stopped_early = True
                logger.info("Early stop after epoch %d (best epoch %d)", epoch, history.best_epoch)
                break

    if best_snapshot is not None:
        model.restore(best_snapshot)
    return history
