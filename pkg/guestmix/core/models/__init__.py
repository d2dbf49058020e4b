"""
Classifier registry: every comparison model kind behind one contract.

``build_model`` turns a kind plus config sections into an unfitted
classifier; ``save_model`` / ``load_model`` go through the checkpoint
container.
"""

from __future__ import annotations

import os
from typing import Any, Dict, Optional, Tuple, Type

from guestmix._config import EMBEDDING_MODE_LEARNED, EMBEDDING_MODE_PRETRAINED, MODEL_KINDS
from guestmix.core.config_manager import ModelConfig, TrainConfig
from guestmix.core.embeddings import EmbeddingTable, SubwordHasher, load_vec
from guestmix.core.gazetteer import Gazetteer
from guestmix.core.models.base import Classifier, ParameterCount, Prediction
from guestmix.core.models.checkpoint import read_checkpoint, write_checkpoint
from guestmix.core.models.dictionary import DictionaryClassifier
from guestmix.core.models.recurrent import RecurrentClassifier
from guestmix.core.models.tfidf_svm import TfidfSvmClassifier
from guestmix.errors import CheckpointError, UsageError
from guestmix.utils import get_logger
from guestmix.utils.hashing import sha256_file

logger = get_logger(__name__)

# kind -> (embedding mode, bidirectional)
RECURRENT_VARIANTS: Dict[str, Tuple[str, bool]] = {
    "emb-lstm": (EMBEDDING_MODE_LEARNED, False),
    "emb-bilstm": (EMBEDDING_MODE_LEARNED, True),
    "ft-lstm": (EMBEDDING_MODE_PRETRAINED, False),
    "ft-bilstm": (EMBEDDING_MODE_PRETRAINED, True),
}

MODEL_CLASSES: Dict[str, Type[Classifier]] = {
    "dict": DictionaryClassifier,
    "tfidf-svm": TfidfSvmClassifier,
    **{kind: RecurrentClassifier for kind in RECURRENT_VARIANTS},
}

DISPLAY_NAMES: Dict[str, str] = {
    "dict": "Dictionary",
    "tfidf-svm": "TF-IDF + SVM",
    "emb-lstm": "Embedding + LSTM",
    "emb-bilstm": "Embedding + BiLSTM",
    "ft-lstm": "Subword + LSTM",
    "ft-bilstm": "Subword + BiLSTM",
}


def needs_embeddings(kind: str) -> bool:
    return RECURRENT_VARIANTS.get(kind, ("", False))[0] == EMBEDDING_MODE_PRETRAINED


def embeddings_source(path: str) -> Dict[str, str]:
    return {"path": os.path.abspath(path), "sha256": sha256_file(path)}


def build_model(
    kind: str,
    model_config: Optional[ModelConfig] = None,
    train_config: Optional[TrainConfig] = None,
    *,
    gazetteer: Optional[Gazetteer] = None,
    table: Optional[EmbeddingTable] = None,
    embeddings_path: Optional[str] = None,
) -> Classifier:
    if kind not in MODEL_KINDS:
        raise UsageError(f"unknown model kind '{kind}' (expected one of {', '.join(MODEL_KINDS)})")
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()

    if kind == "dict":
        if gazetteer is None:
            raise UsageError("the dictionary model needs a lexicon")
        return DictionaryClassifier(gazetteer)
    if kind == "tfidf-svm":
        return TfidfSvmClassifier(
            lam=model_config.svm_lambda,
            epochs=model_config.svm_epochs,
            min_df=model_config.min_df,
            seed=train_config.seed,
            max_seq_len=train_config.max_seq_len,
        )

    mode, bidirectional = RECURRENT_VARIANTS[kind]
    hasher = None
    source = None
    if mode == EMBEDDING_MODE_PRETRAINED:
        if table is None:
            if not embeddings_path:
                raise UsageError(f"model '{kind}' needs pretrained embeddings (set paths.embeddings)")
            table = load_vec(embeddings_path)
        hasher = SubwordHasher(
            table.dim,
            model_config.subword_buckets,
            model_config.subword_min_n,
            model_config.subword_max_n,
        )
        source = embeddings_source(embeddings_path) if embeddings_path else None
    return RecurrentClassifier(
        kind=kind,
        embedding_mode=mode,
        bidirectional=bidirectional,
        layers=model_config.layers,
        hidden=model_config.hidden,
        learned_dim=model_config.learned_dim,
        pooling=model_config.pooling,
        train_config=train_config,
        table=table,
        hasher=hasher,
        embeddings_source=source,
        subword_fit_epochs=model_config.subword_fit_epochs,
        subword_fit_lr=model_config.subword_fit_lr,
        subword_fit_max_words=model_config.subword_fit_max_words,
    )


def save_model(model: Classifier, path: str, *, config: Optional[Dict[str, Any]] = None, seed: int = 0) -> None:
    write_checkpoint(path, model.kind, model.architecture(), model.state_arrays(), config=config, seed=seed)


def _table_for(architecture: Dict[str, Any], path: str) -> EmbeddingTable:
    source = architecture.get("embeddings") or {}
    vec_path = source.get("path")
    if not vec_path:
        raise CheckpointError("checkpoint does not record its embedding table; pass one explicitly", path=path)
    if not os.path.exists(vec_path):
        raise CheckpointError(f"embedding table {vec_path} recorded in checkpoint is missing", path=path)
    digest = sha256_file(vec_path)
    if source.get("sha256") and digest != source["sha256"]:
        raise CheckpointError(f"embedding table {vec_path} changed since training (sha256 mismatch)", path=path)
    return load_vec(vec_path)


def load_model(path: str, *, table: Optional[EmbeddingTable] = None) -> Classifier:
    header, arrays = read_checkpoint(path)
    cls = MODEL_CLASSES.get(header.kind)
    if cls is None:
        raise CheckpointError(f"unknown model kind '{header.kind}' in checkpoint", path=path)
    context: Dict[str, Any] = {}
    if needs_embeddings(header.kind):
        context["table"] = table if table is not None else _table_for(header.architecture, path)
    model = cls.from_state(header.architecture, arrays, **context)
    logger.debug("Loaded %r from %s", model, path)
    return model


__all__ = [
    "Classifier",
    "Prediction",
    "ParameterCount",
    "DictionaryClassifier",
    "TfidfSvmClassifier",
    "RecurrentClassifier",
    "MODEL_CLASSES",
    "RECURRENT_VARIANTS",
    "DISPLAY_NAMES",
    "build_model",
    "save_model",
    "load_model",
    "needs_embeddings",
]
