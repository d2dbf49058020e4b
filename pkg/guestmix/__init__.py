"""Guestmix - guest-nationality detection in German hotel reviews."""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from .core.composition import aggregate, export_geojson, extract_mentions
from .core.corpus import Sentence, ingest_reviews, split_sentences, tokenize
from .core.embeddings import EmbeddingTable, knn, load_vec
from .core.evaluation import evaluate, fleiss_kappa
from .core.gazetteer import Gazetteer, build_gazetteer, match
from .core.models import build_model, load_model, save_model
from .errors import GuestmixError

try:
    __version__ = version("guestmix")
except PackageNotFoundError:
    __version__ = "0.0.0-dev"


__all__ = [
    "__version__",
    "GuestmixError",
    "Sentence",
    "ingest_reviews",
    "split_sentences",
    "tokenize",
    "EmbeddingTable",
    "load_vec",
    "knn",
    "Gazetteer",
    "build_gazetteer",
    "match",
    "build_model",
    "save_model",
    "load_model",
    "evaluate",
    "fleiss_kappa",
    "extract_mentions",
    "aggregate",
    "export_geojson",
]
