"""
Tests for guestmix.core.config_manager.
"""
import json

import pytest

from guestmix.core.config_manager import ConfigManager, RunConfig, TrainConfig, config_template
from guestmix.errors import MissingArtifactError, UsageError


def test_defaults():
    config = ConfigManager().resolve()
    assert config == RunConfig()
    assert config.model.kind == "ft-bilstm"
    assert config.model.layers == 2
    assert config.train.patience == 5
    assert config.aggregation.window == "all"


def test_resolution_order(tmp_path):
    path = tmp_path / "guestmix.yaml"
    path.write_text("seed: 1\ntrain:\n  lr: 5e-3\n  batch_size: 8\nmodel:\n  kind: dict\n", encoding="utf-8")
    config = ConfigManager().resolve(
        str(path),
        overrides={"train.batch_size": 16, "sampling.n": 100},
        seed=9,
        workdir=str(tmp_path / "work"),
        strict=None,
    )
    assert config.train.lr == pytest.approx(0.005)
    assert config.train.batch_size == 16
    assert config.sampling.n == 100
    assert config.model.kind == "dict"
    assert config.seed == 9
    assert config.strict is False
    assert config.paths.workdir == str(tmp_path / "work")


def test_effective_train_uses_run_seed():
    config = ConfigManager().resolve(seed=11)
    assert config.effective_train().seed == 11


def test_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"kind": "tfidf-svm", "svm_lambda": 0.01}}), encoding="utf-8")
    config = ConfigManager().resolve(str(path))
    assert config.model.kind == "tfidf-svm"
    assert config.model.svm_lambda == 0.01


@pytest.mark.parametrize(
    "overrides",
    [
        {"model.kind": "cnn"},
        {"model.pooling": "max"},
        {"model.subword_buckets": 1000},
        {"train.lr": 0},
        {"split.train_fraction": 1.0},
        {"aggregation.window": "week"},
        {"train.unknown": 1},
    ],
)
def test_invalid_values_are_usage_errors(overrides):
    with pytest.raises(UsageError) as excinfo:
        ConfigManager().resolve(overrides=overrides)
    assert excinfo.value.exit_code == 1
    assert "invalid configuration" in str(excinfo.value)


def test_bad_config_files(tmp_path):
    with pytest.raises(MissingArtifactError):
        ConfigManager().resolve(str(tmp_path / "absent.yaml"))

    bad = tmp_path / "bad.yaml"
    bad.write_text("train: [\n", encoding="utf-8")
    with pytest.raises(UsageError):
        ConfigManager().resolve(str(bad))

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n", encoding="utf-8")
    with pytest.raises(UsageError):
        ConfigManager().resolve(str(listing))

    toml = tmp_path / "c.toml"
    toml.write_text("seed = 1\n", encoding="utf-8")
    with pytest.raises(UsageError):
        ConfigManager().resolve(str(toml))


def test_template_resolves_to_defaults(tmp_path):
    text = config_template()
    assert text.startswith("# guestmix run configuration")
    path = tmp_path / "guestmix.yaml"
    path.write_text(text, encoding="utf-8")
    assert ConfigManager().resolve(str(path)) == RunConfig()


def test_train_config_patience_may_be_disabled():
    assert TrainConfig(patience=None).patience is None
    manager = ConfigManager()
    assert manager.load() == RunConfig()
