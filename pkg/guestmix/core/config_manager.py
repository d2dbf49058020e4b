"""
Run configuration: typed sections validated with pydantic.

Resolution order is defaults < config file (YAML or JSON) < ``--set`` overrides
< dedicated flags (``--seed``, ``--strict``, ``--workdir``).
"""

from __future__ import annotations

import json
import os
from typing import Any, Dict, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from guestmix._config import (
    DEFAULT_ABBREVIATIONS_PATH,
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_CLIP_NORM,
    DEFAULT_EPS,
    DEFAULT_HIDDEN,
    DEFAULT_KNN_K,
    DEFAULT_LAYERS,
    DEFAULT_LEARNED_DIM,
    DEFAULT_LEXICON_PATH,
    DEFAULT_LR,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_MAX_SEQ_LEN,
    DEFAULT_MIN_DF,
    DEFAULT_MIN_SIM,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_PATIENCE,
    DEFAULT_SAMPLE_RATIO,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_SEED,
    DEFAULT_SVM_EPOCHS,
    DEFAULT_SVM_LAMBDA,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_VETO_PATH,
    DEFAULT_WINDOW,
    MODEL_KINDS,
    POOLING_MODES,
    SUBWORD_BUCKETS,
    SUBWORD_FIT_EPOCHS,
    SUBWORD_FIT_LR,
    SUBWORD_FIT_MAX_WORDS,
    SUBWORD_MAX_N,
    SUBWORD_MIN_N,
    WORKDIR,
)
from guestmix.errors import MissingArtifactError, UsageError
from guestmix.utils import get_logger
from guestmix.utils.config_utils import deep_merge, dump_yaml, unflatten_dict

logger = get_logger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class PathsConfig(_Section):
    corpus: Optional[str] = None
    lexicon: str = DEFAULT_LEXICON_PATH
    veto: Optional[str] = DEFAULT_VETO_PATH
    abbreviations: str = DEFAULT_ABBREVIATIONS_PATH
    embeddings: Optional[str] = None
    locations: Optional[str] = None
    workdir: str = WORKDIR


class SamplingConfig(_Section):
    n: int = Field(DEFAULT_SAMPLE_SIZE, ge=0)
    ratio: float = Field(DEFAULT_SAMPLE_RATIO, ge=0.0, le=1.0)


class SplitConfig(_Section):
    train_fraction: float = Field(DEFAULT_TRAIN_FRACTION, gt=0.0, lt=1.0)


class ExpansionConfig(_Section):
    k: int = Field(DEFAULT_KNN_K, ge=0)
    min_sim: float = Field(DEFAULT_MIN_SIM, ge=-1.0, le=1.0)


class ModelConfig(_Section):
    kind: str = "ft-bilstm"
    layers: int = Field(DEFAULT_LAYERS, ge=1)
    hidden: int = Field(DEFAULT_HIDDEN, ge=1)
    learned_dim: int = Field(DEFAULT_LEARNED_DIM, ge=1)
    pooling: str = "final"
    svm_lambda: float = Field(DEFAULT_SVM_LAMBDA, gt=0.0)
    svm_epochs: int = Field(DEFAULT_SVM_EPOCHS, ge=1)
    min_df: int = Field(DEFAULT_MIN_DF, ge=1)
    subword_buckets: int = Field(SUBWORD_BUCKETS, ge=1)
    subword_min_n: int = Field(SUBWORD_MIN_N, ge=1)
    subword_max_n: int = Field(SUBWORD_MAX_N, ge=1)
    subword_fit_epochs: int = Field(SUBWORD_FIT_EPOCHS, ge=0)
    subword_fit_lr: float = Field(SUBWORD_FIT_LR, gt=0.0)
    subword_fit_max_words: int = Field(SUBWORD_FIT_MAX_WORDS, ge=1)

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in MODEL_KINDS:
            raise ValueError(f"unknown model kind '{value}' (expected one of {', '.join(MODEL_KINDS)})")
        return value

    @field_validator("pooling")
    @classmethod
    def _known_pooling(cls, value: str) -> str:
        if value not in POOLING_MODES:
            raise ValueError(f"unknown pooling '{value}' (expected one of {', '.join(POOLING_MODES)})")
        return value

    @field_validator("subword_buckets")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("subword_buckets must be a power of two")
        return value


class TrainConfig(_Section):
    lr: float = Field(DEFAULT_LR, gt=0.0)
    beta1: float = Field(DEFAULT_BETA1, ge=0.0, lt=1.0)
    beta2: float = Field(DEFAULT_BETA2, ge=0.0, lt=1.0)
    eps: float = Field(DEFAULT_EPS, gt=0.0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    max_epochs: int = Field(DEFAULT_MAX_EPOCHS, ge=1)
    patience: Optional[int] = Field(DEFAULT_PATIENCE, ge=1)
    clip_norm: float = Field(DEFAULT_CLIP_NORM, gt=0.0)
    max_seq_len: int = Field(DEFAULT_MAX_SEQ_LEN, ge=1)
    seed: int = DEFAULT_SEED


class AggregationConfig(_Section):
    window: Literal["month", "quarter", "all"] = DEFAULT_WINDOW
    min_support: int = Field(DEFAULT_MIN_SUPPORT, ge=1)


class RunConfig(_Section):
    seed: int = DEFAULT_SEED
    strict: bool = False
    paths: PathsConfig = Field(default_factory=PathsConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    expansion: ExpansionConfig = Field(default_factory=ExpansionConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    aggregation: AggregationConfig = Field(default_factory=AggregationConfig)

    def effective_train(self) -> TrainConfig:
        """Training config with the run seed applied."""
        return self.train.model_copy(update={"seed": self.seed})

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class ConfigManager:
    def __init__(self) -> None:
        self._root: Optional[RunConfig] = None

    @staticmethod
    def read(file_path: str) -> Dict[str, Any]:
        """Raw mapping from a YAML or JSON config file."""
        if not os.path.exists(file_path):
            raise MissingArtifactError("config file not found", path=file_path)
        ext = os.path.splitext(file_path)[1].lower()
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                if ext in (".yaml", ".yml"):
                    data = yaml.safe_load(f)
                elif ext == ".json":
                    data = json.load(f)
                else:
                    raise UsageError(f"unsupported config format '{ext}' (use .yaml, .yml or .json)", path=file_path)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            logger.error("Failed to parse config %s: %s", file_path, e)
            raise UsageError(f"failed to parse config: {e}", path=file_path) from e
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise UsageError("config root must be a mapping", path=file_path)
        logger.debug("Config loaded: %s", file_path)
        return data

    def resolve(
        self,
        file_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
        **flags: Any,
    ) -> RunConfig:
        """Build the effective ``RunConfig``.

        ``overrides`` uses dotted keys (``train.lr``); ``flags`` are top-level
        or ``paths`` keys given by dedicated CLI options, ``None`` meaning unset.
        """
        data: Dict[str, Any] = self.read(file_path) if file_path else {}
        if overrides:
            data = deep_merge(data, unflatten_dict(overrides))
        for key, value in flags.items():
            if value is None:
                continue
            if key in PathsConfig.model_fields:
                data = deep_merge(data, {"paths": {key: value}})
            else:
                data = deep_merge(data, {key: value})
        try:
            self._root = RunConfig.model_validate(data)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise UsageError(f"invalid configuration: {problems}", path=file_path) from e
        return self._root

    def load(self) -> RunConfig:
        if self._root is None:
            self._root = RunConfig()
        return self._root


CONFIG_TEMPLATE_HEADER = """\
# guestmix run configuration
# Every key is optional; omitted keys take the defaults shown here.
# Override single values on the command line with --set section.key=value.
"""


def config_template() -> str:
    return CONFIG_TEMPLATE_HEADER + "\n" + dump_yaml(RunConfig().to_dict())


__all__ = [
    "PathsConfig",
    "SamplingConfig",
    "SplitConfig",
    "ExpansionConfig",
    "ModelConfig",
    "TrainConfig",
    "AggregationConfig",
    "RunConfig",
    "ConfigManager",
    "config_template",
]
