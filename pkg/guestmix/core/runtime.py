"""Throughput and latency probes for the matcher and the classifiers."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import psutil

from guestmix.core.corpus import Sentence
from guestmix.core.gazetteer import Gazetteer
from guestmix.core.models.base import Classifier
from guestmix.utils import get_logger

logger = get_logger(__name__)


class ProcessMonitor:
    """Resident memory and CPU of the current process."""

    def __init__(self) -> None:
        self._process = psutil.Process()

    def sample(self) -> Dict[str, Any]:
        return {
            "rss_mb": round(self._process.memory_info().rss / (1024 * 1024), 1),
            "cpu_percent": psutil.cpu_percent(),
        }


@dataclass(frozen=True)
class MatcherBenchmark:
    sentences: int
    repeat: int
    seconds: float
    terms: int

    @property
    def sentences_per_second(self) -> float:
        return self.sentences * self.repeat / self.seconds if self.seconds > 0 else float("inf")

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentences,
            "repeat": self.repeat,
            "seconds": self.seconds,
            "terms": self.terms,
            "sentences_per_second": self.sentences_per_second,
        }


@dataclass(frozen=True)
class ModelBenchmark:
    kind: str
    sentences: int
    seconds: float
    parameters: int
    rss_mb: float

    @property
    def latency_ms(self) -> float:
        return 1000.0 * self.seconds / self.sentences if self.sentences else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sentences": self.sentences,
            "seconds": self.seconds,
            "latency_ms": self.latency_ms,
            "parameters": self.parameters,
            "rss_mb": self.rss_mb,
        }


def benchmark_matcher(g: Gazetteer, sentences: Sequence[Sentence], repeat: int = 1) -> MatcherBenchmark:
    """Time the automaton alone on pre-tokenized, pre-folded input."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    folded: List[List[str]] = [[token.folded for token in s.tokens] for s in sentences]
    matcher = g.matcher
    started = time.perf_counter()
    for _ in range(repeat):
        for tokens in folded:
            matcher.find_all(tokens)
    elapsed = time.perf_counter() - started
    result = MatcherBenchmark(len(folded), repeat, elapsed, len(g.active_terms))
    logger.info("Matcher: %.0f sentences/s over %d terms", result.sentences_per_second, result.terms)
    return result


def benchmark_model(model: Classifier, sentences: Sequence[Sentence]) -> ModelBenchmark:
    monitor = ProcessMonitor()
    started = time.perf_counter()
    model.predict_many(list(sentences))
    elapsed = time.perf_counter() - started
    result = ModelBenchmark(
        kind=model.kind,
        sentences=len(sentences),
        seconds=elapsed,
        parameters=model.count_parameters().total,
        rss_mb=monitor.sample()["rss_mb"],
    )
    logger.info("%s: %.3f ms/sentence, %d parameters", model.kind, result.latency_ms, result.parameters)
    return result


__all__ = ["ProcessMonitor", "MatcherBenchmark", "ModelBenchmark", "benchmark_matcher", "benchmark_model"]
