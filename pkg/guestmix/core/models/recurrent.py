"""
Embedding + stacked (Bi)LSTM sentence classifier.

Two embedding modes:

* ``learned`` -- a table over the training vocabulary (index 0 is ``<unk>``),
  randomly initialized and trained with the network.
* ``pretrained`` -- a frozen word-vector table; tokens missing from it are
  embedded as the mean of their hashed character n-gram rows, which stay
  trainable.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import (
    DEFAULT_HIDDEN,
    DEFAULT_LAYERS,
    DEFAULT_LEARNED_DIM,
    EMBEDDING_MODE_LEARNED,
    EMBEDDING_MODE_PRETRAINED,
    SUBWORD_FIT_EPOCHS,
    SUBWORD_FIT_LR,
    SUBWORD_FIT_MAX_WORDS,
    UNK_TOKEN,
)
from guestmix.core.config_manager import TrainConfig
from guestmix.core.dataset import LabeledSentence
from guestmix.core.embeddings import EmbeddingTable, SubwordHasher
from guestmix.core.models import lstm
from guestmix.core.models.base import (
    Classifier,
    ParameterCount,
    SentenceLike,
    folded_tokens,
    gold_labels,
    require_both_classes,
    sigmoid,
)
from guestmix.core.models.training import TrainHistory, train
from guestmix.errors import CheckpointError, NotFittedError
from guestmix.utils import get_logger

logger = get_logger(__name__)

_PREDICT_CHUNK = 256
_EMBEDDING_INIT_SCALE = 0.1


class RecurrentClassifier(Classifier):
    def __init__(
        self,
        *,
        kind: str = "emb-bilstm",
        embedding_mode: str = EMBEDDING_MODE_LEARNED,
        bidirectional: bool = True,
        layers: int = DEFAULT_LAYERS,
        hidden: int = DEFAULT_HIDDEN,
        learned_dim: int = DEFAULT_LEARNED_DIM,
        pooling: str = "final",
        train_config: Optional[TrainConfig] = None,
        table: Optional[EmbeddingTable] = None,
        hasher: Optional[SubwordHasher] = None,
        embeddings_source: Optional[Dict[str, str]] = None,
        subword_fit_epochs: int = SUBWORD_FIT_EPOCHS,
        subword_fit_lr: float = SUBWORD_FIT_LR,
        subword_fit_max_words: int = SUBWORD_FIT_MAX_WORDS,
    ) -> None:
        if embedding_mode not in (EMBEDDING_MODE_LEARNED, EMBEDDING_MODE_PRETRAINED):
            raise ValueError(f"unknown embedding mode '{embedding_mode}'")
        if layers < 1 or hidden < 1:
            raise ValueError("layers and hidden must be >= 1")
        if embedding_mode == EMBEDDING_MODE_PRETRAINED:
            if table is None:
                raise ValueError("pretrained mode needs an embedding table")
            if hasher is None:
                hasher = SubwordHasher(table.dim)
            if hasher.dim != table.dim:
                raise ValueError(f"hasher dim {hasher.dim} != table dim {table.dim}")
        self.kind = kind
        self.embedding_mode = embedding_mode
        self.bidirectional = bidirectional
        self.layers = layers
        self.hidden = hidden
        self.learned_dim = learned_dim
        self.pooling = pooling
        self.train_config = train_config or TrainConfig()
        self.table = table
        self.hasher = hasher
        self.embeddings_source = embeddings_source
        self.subword_fit_epochs = subword_fit_epochs
        self.subword_fit_lr = subword_fit_lr
        self.subword_fit_max_words = subword_fit_max_words

        self.vocabulary: Optional[List[str]] = None
        self._vocab_index: Dict[str, int] = {}
        self.params: Dict[str, np.ndarray] = {}
        self.history: Optional[TrainHistory] = None

    # ── shape helpers ─────────────────────────────────────────

    @property
    def pretrained(self) -> bool:
        return self.embedding_mode == EMBEDDING_MODE_PRETRAINED

    @property
    def input_dim(self) -> int:
        return self.table.dim if self.pretrained else self.learned_dim

    @property
    def max_seq_len(self) -> int:
        return self.train_config.max_seq_len

    @property
    def seed(self) -> int:
        return self.train_config.seed

    @property
    def fitted(self) -> bool:
        return bool(self.params)

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise NotFittedError(f"{self.kind} model is not fitted")

    # ── initialization ────────────────────────────────────────

    @staticmethod
    def build_vocabulary(items: Sequence[SentenceLike], max_len: Optional[int] = None) -> List[str]:
        words = {token for item in items for token in folded_tokens(item, max_len)}
        words.discard(UNK_TOKEN)
        return [UNK_TOKEN] + sorted(words)

    def initialize(self, vocabulary: Optional[Sequence[str]] = None) -> "RecurrentClassifier":
        """Draw fresh parameters from ``default_rng(seed)``."""
        rng = np.random.default_rng(self.seed)
        params: Dict[str, np.ndarray] = {}
        if not self.pretrained:
            if not vocabulary:
                raise ValueError("learned mode needs a vocabulary")
            self.vocabulary = list(vocabulary)
            self._vocab_index = {word: i for i, word in enumerate(self.vocabulary)}
            params["embedding"] = rng.uniform(
                -_EMBEDDING_INIT_SCALE, _EMBEDDING_INIT_SCALE, (len(self.vocabulary), self.learned_dim)
            )
        params.update(lstm.init_lstm_params(
            rng,
            layers=self.layers,
            hidden=self.hidden,
            input_dim=self.input_dim,
            bidirectional=self.bidirectional,
        ))
        params.update(lstm.init_output_params(rng, lstm.representation_dim(self.hidden, self.bidirectional)))
        self.params = params
        return self

    # ── encoding ──────────────────────────────────────────────

    def oov_tokens(self, sentence: SentenceLike) -> List[str]:
        """Tokens the embedding vocabulary does not cover."""
        tokens = folded_tokens(sentence, self.max_seq_len)
        if self.pretrained:
            return [t for t in tokens if self.table.index_of(t) is None]
        return [t for t in tokens if t not in self._vocab_index]

    def _encode(self, items: Sequence[SentenceLike]):
        token_lists = [folded_tokens(item, self.max_seq_len) for item in items]
        steps_total = max(1, max((len(tokens) for tokens in token_lists), default=0))
        batch = len(token_lists)
        mask = np.zeros((batch, steps_total))
        for row, tokens in enumerate(token_lists):
            mask[row, :len(tokens)] = 1.0

        if not self.pretrained:
            ids = np.zeros((batch, steps_total), dtype=np.int64)
            for row, tokens in enumerate(token_lists):
                ids[row, :len(tokens)] = [self._vocab_index.get(t, 0) for t in tokens]
            X = self.params["embedding"][ids] * mask[:, :, None]
            return X, mask, ids

        X = np.zeros((batch, steps_total, self.input_dim))
        subword_slots: List[Tuple[int, int, str]] = []
        for row, tokens in enumerate(token_lists):
            for t, token in enumerate(tokens):
                index = self.table.index_of(token)
                if index is not None:
                    X[row, t] = self.table.matrix[index]
                elif self.hasher.bucket_ids(token):
                    X[row, t] = self.hasher.vector(token)
                    subword_slots.append((row, t, token))
        return X, mask, subword_slots

    # ── forward / backward ────────────────────────────────────

    def _stack_kwargs(self) -> Dict[str, Any]:
        return {
            "layers": self.layers,
            "hidden": self.hidden,
            "bidirectional": self.bidirectional,
            "pooling": self.pooling,
        }

    def _scores(self, items: Sequence[SentenceLike]) -> np.ndarray:
        X, mask, _ = self._encode(items)
        rep, _ = lstm.stack_forward(self.params, X, mask, **self._stack_kwargs())
        return lstm.output_scores(self.params, rep)

    def decision_function(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        self._require_fitted()
        chunks = [
            self._scores(sentences[start:start + _PREDICT_CHUNK])
            for start in range(0, len(sentences), _PREDICT_CHUNK)
        ]
        return np.concatenate(chunks) if chunks else np.zeros(0)

    def predict_proba(self, sentences: Sequence[SentenceLike]) -> np.ndarray:
        return np.atleast_1d(sigmoid(self.decision_function(list(sentences))))

    def loss(self, items: Sequence[SentenceLike], labels: np.ndarray) -> float:
        scores = self.decision_function(list(items))
        loss, _ = lstm.bce_with_logits(scores, labels)
        return loss

    def loss_and_grads(
        self, items: Sequence[SentenceLike], labels: np.ndarray
    ) -> Tuple[float, Dict[str, np.ndarray], Dict[int, np.ndarray]]:
        """Mean BCE over ``items`` with gradients for every trainable block."""
        self._require_fitted()
        X, mask, lookup = self._encode(items)
        kwargs = self._stack_kwargs()
        rep, cache = lstm.stack_forward(self.params, X, mask, **kwargs)
        scores = lstm.output_scores(self.params, rep)
        loss, dscores = lstm.bce_with_logits(scores, labels)

        grads, drep = lstm.output_backward(self.params, rep, dscores)
        stack_grads, dX = lstm.stack_backward(self.params, cache, drep, **kwargs)
        grads.update(stack_grads)

        row_grads: Dict[int, np.ndarray] = {}
        if self.pretrained:
            for row, t, token in lookup:
                self.hasher.accumulate_grad(token, dX[row, t], row_grads)
        else:
            dE = np.zeros_like(self.params["embedding"])
            np.add.at(dE, lookup, dX * mask[:, :, None])
            grads["embedding"] = dE
        return loss, grads, row_grads

    def sparse_rows(self) -> Optional[Dict[int, np.ndarray]]:
        return self.hasher.rows if self.pretrained else None

    def snapshot(self):
        rows = {k: v.copy() for k, v in self.hasher.rows.items()} if self.pretrained else None
        return {name: value.copy() for name, value in self.params.items()}, rows

    def restore(self, snapshot) -> None:
        params, rows = snapshot
        for name, value in params.items():
            self.params[name][...] = value
        if rows is not None:
            self.hasher.rows = {k: v.copy() for k, v in rows.items()}

    # ── training ──────────────────────────────────────────────

    def fit(self, train_set: Sequence[LabeledSentence], validation: Optional[Sequence[LabeledSentence]] = None):
        require_both_classes(gold_labels(train_set))
        if self.pretrained:
            if not self.hasher.rows and self.subword_fit_epochs > 0:
                self.hasher.fit_to_table(
                    self.table,
                    epochs=self.subword_fit_epochs,
                    lr=self.subword_fit_lr,
                    seed=self.seed,
                    words=self.table.words[:self.subword_fit_max_words],
                )
            self.initialize()
        else:
            self.initialize(self.build_vocabulary(train_set, self.max_seq_len))
        logger.info(
            "Training %s: %d layer(s), hidden %d, %s embeddings (dim %d), %d parameters",
            self.kind, self.layers, self.hidden, self.embedding_mode, self.input_dim,
            self.count_parameters().total,
        )
        self.history = train(self, list(train_set), list(validation) if validation else None, self.train_config)
        return self

    # ── accounting / persistence ──────────────────────────────

    def count_parameters(self) -> ParameterCount:
        """Trainable scalars. The frozen pretrained table is excluded; the
        subword table counts at its full logical size."""
        layers: List[Tuple[str, int]] = []
        if self.pretrained:
            layers.append(("subword", self.hasher.buckets * self.hasher.dim))
        else:
            self._require_fitted()
            layers.append(("embedding", len(self.vocabulary) * self.learned_dim))
        for layer in range(self.layers):
            in_dim = lstm.layer_input_dim(layer, self.input_dim, self.hidden, self.bidirectional)
            for direction in lstm.directions(self.bidirectional):
                layers.append((f"lstm{layer}.{direction}", lstm.lstm_parameter_count(in_dim, self.hidden)))
        layers.append(("out", lstm.representation_dim(self.hidden, self.bidirectional) + 1))
        return ParameterCount.from_layers(layers)

    def architecture(self) -> Dict[str, Any]:
        self._require_fitted()
        arch: Dict[str, Any] = {
            "kind": self.kind,
            "embedding_mode": self.embedding_mode,
            "bidirectional": self.bidirectional,
            "layers": self.layers,
            "hidden": self.hidden,
            "input_dim": self.input_dim,
            "pooling": self.pooling,
            "train": self.train_config.model_dump(mode="json"),
        }
        if self.pretrained:
            arch["subword"] = {
                "buckets": self.hasher.buckets,
                "min_n": self.hasher.min_n,
                "max_n": self.hasher.max_n,
            }
            arch["embeddings"] = dict(self.embeddings_source or {})
        else:
            arch["vocabulary"] = list(self.vocabulary)
        return arch

    def _param_order(self) -> List[str]:
        names = [] if self.pretrained else ["embedding"]
        for layer in range(self.layers):
            for direction in lstm.directions(self.bidirectional):
                names += [lstm.param_name(layer, direction, block) for block in ("W", "U", "b")]
        return names + ["out.w", "out.b"]

    def _expected_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes: Dict[str, Tuple[int, ...]] = {}
        if not self.pretrained:
            shapes["embedding"] = (len(self.vocabulary), self.learned_dim)
        for layer in range(self.layers):
            in_dim = lstm.layer_input_dim(layer, self.input_dim, self.hidden, self.bidirectional)
            for direction in lstm.directions(self.bidirectional):
                shapes[lstm.param_name(layer, direction, "W")] = (4 * self.hidden, in_dim)
                shapes[lstm.param_name(layer, direction, "U")] = (4 * self.hidden, self.hidden)
                shapes[lstm.param_name(layer, direction, "b")] = (4 * self.hidden,)
        shapes["out.w"] = (lstm.representation_dim(self.hidden, self.bidirectional),)
        shapes["out.b"] = (1,)
        return shapes

    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        self._require_fitted()
        blocks = [(name, self.params[name]) for name in self._param_order()]
        if self.pretrained:
            ids, rows = self.hasher.state()
            blocks += [("subword_ids", ids.astype(np.float64)), ("subword_rows", rows)]
        return blocks

    @classmethod
    def from_state(
        cls,
        architecture: Dict[str, Any],
        arrays: Dict[str, np.ndarray],
        *,
        table: Optional[EmbeddingTable] = None,
        **context: Any,
    ) -> "RecurrentClassifier":
        try:
            mode = architecture["embedding_mode"]
            hasher = None
            if mode == EMBEDDING_MODE_PRETRAINED:
                if table is None:
                    raise CheckpointError("pretrained checkpoint needs its embedding table")
                sub = architecture["subword"]
                hasher = SubwordHasher(table.dim, int(sub["buckets"]), int(sub["min_n"]), int(sub["max_n"]))
            model = cls(
                kind=architecture["kind"],
                embedding_mode=mode,
                bidirectional=bool(architecture["bidirectional"]),
                layers=int(architecture["layers"]),
                hidden=int(architecture["hidden"]),
                learned_dim=int(architecture["input_dim"]),
                pooling=architecture.get("pooling", "final"),
                train_config=TrainConfig(**architecture.get("train", {})),
                table=table,
                hasher=hasher,
                embeddings_source=architecture.get("embeddings"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"invalid recurrent architecture: {exc}") from exc
        if model.input_dim != int(architecture["input_dim"]):
            raise CheckpointError(
                f"embedding table has dim {model.input_dim}, checkpoint expects {architecture['input_dim']}"
            )
        if not model.pretrained:
            model.vocabulary = list(architecture.get("vocabulary") or [])
            model._vocab_index = {word: i for i, word in enumerate(model.vocabulary)}

        expected = model._expected_shapes()
        for name, shape in expected.items():
            got = arrays[name].shape if name in arrays else None
            if got != shape:
                raise CheckpointError(f"block '{name}' has shape {got}, expected {shape}")
        model.params = {name: np.array(arrays[name], dtype=np.float64) for name in expected}

        if model.pretrained:
            ids = arrays.get("subword_ids")
            rows = arrays.get("subword_rows")
            if ids is None or rows is None or rows.shape != (len(ids), table.dim):
                raise CheckpointError("subword blocks are missing or malformed")
            model.hasher.load_state(ids.astype(np.int64), rows)
        return model

    def __repr__(self) -> str:
        direction = "bi" if self.bidirectional else "uni"
        return (
            f"RecurrentClassifier(kind={self.kind!r}, {self.embedding_mode}, {direction}, "
            f"layers={self.layers}, hidden={self.hidden})"
        )


