"""
Tests for guestmix.cli: the command pipeline end to end, exit codes and output.
"""
import json
import logging
import os

import pytest

from guestmix import __version__
from guestmix.cli import main
from guestmix.cli.commands import _consume_option, _consume_repeated_option
from guestmix.cli.console import write_console_text
from guestmix.errors import UsageError


@pytest.fixture
def cwd(tmp_path, monkeypatch):
    """Run each test from an empty directory so no stray run config is picked up."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ═══════════════════════════════════════════════════════════════
#  Console helpers and argument parsing
# ═══════════════════════════════════════════════════════════════


def test_write_console_text_replaces_unencodable_characters():
    class StrictAsciiStream:
        encoding = "ascii"

        def __init__(self):
            self.value = ""

        def write(self, text):
            text.encode(self.encoding)
            self.value += text
            return len(text)

    stream = StrictAsciiStream()
    write_console_text("Gäste\n", stream=stream)
    assert stream.value == "G?ste\n"


def test_consume_option_forms():
    assert _consume_option(["--k", "3", "x"], "--k") == ("3", ["x"])
    assert _consume_option(["--k=3"], "--k") == ("3", [])
    with pytest.raises(UsageError):
        _consume_option(["--k"], "--k")
    values, rest = _consume_repeated_option(["-t", "a, b", "--text=c", "y"], "--text", "-t")
    assert values == ["a, b", "c"]
    assert rest == ["y"]


# ═══════════════════════════════════════════════════════════════
#  Help, version, config
# ═══════════════════════════════════════════════════════════════


def test_help_and_version(capsys):
    code, out, _ = _run(capsys)
    assert code == 0 and "USAGE" in out
    code, out, _ = _run(capsys, "--version")
    assert code == 0 and out.strip() == f"guestmix {__version__}"
    code, out, _ = _run(capsys, "train", "--help")
    assert code == 0 and out.startswith("usage: guestmix train")


def test_unknown_command(capsys):
    code, _, err = _run(capsys, "crawl")
    assert code == 1
    assert "Unknown command" in err


def test_config_prints_effective_values(cwd, capsys):
    code, out, _ = _run(capsys, "config", "--json", "--seed", "5", "--set", "train.lr=0.02")
    assert code == 0
    payload = json.loads(out)
    assert payload["seed"] == 5
    assert payload["train"]["lr"] == 0.02


def test_init_writes_template_once(cwd, capsys):
    assert _run(capsys, "init")[0] == 0
    assert (cwd / "guestmix.yaml").read_text(encoding="utf-8").startswith("# guestmix run configuration")
    code, _, err = _run(capsys, "init")
    assert code == 1 and "already exists" in err
    assert _run(capsys, "init", "--force")[0] == 0

    # the template in the current directory is picked up by default
    code, out, _ = _run(capsys, "config", "--json")
    assert code == 0 and json.loads(out)["model"]["kind"] == "ft-bilstm"


# ═══════════════════════════════════════════════════════════════
#  Exit codes
# ═══════════════════════════════════════════════════════════════


@pytest.mark.parametrize(
    "argv",
    [
        ["config", "--set", "train.lr=-1"],
        ["config", "--set", "novalue"],
        ["config", "--seed", "abc"],
        ["config", "--verbose", "--quiet"],
        ["config", "extra"],
        ["ingest"],
        ["train", "--model", "cnn"],
        ["predict", "--model", "dict", "--input", "x.jsonl", "--text", "Hallo"],
        ["gradcheck", "--seeds", "0"],
    ],
)
def test_usage_errors_exit_1(cwd, capsys, argv):
    code, _, err = _run(capsys, *argv, "--workdir", str(cwd / "work"))
    assert code == 1
    assert err.startswith("error: ")


def test_missing_inputs_exit_2(cwd, capsys):
    work = str(cwd / "work")
    code, _, err = _run(capsys, "filter", "--workdir", work)
    assert code == 2 and "sentences.jsonl" in err
    code, _, err = _run(capsys, "evaluate", "--model", "dict", "--workdir", work)
    assert code == 2 and "guestmix train --model dict" in err
    code, _, _ = _run(capsys, "ingest", str(cwd / "absent.jsonl"), "--workdir", work)
    assert code == 2


def test_strict_ingest_stops_on_bad_record(cwd, capsys):
    corpus = cwd / "reviews.jsonl"
    corpus.write_text(
        '{"review_id": "r1", "business_id": "b1", "text": "Viele Russen hier."}\n'
        "{broken\n",
        encoding="utf-8",
    )
    work = str(cwd / "work")
    code, _, err = _run(capsys, "ingest", str(corpus), "--workdir", work, "--strict")
    assert code == 2 and ":2: " in err
    assert _run(capsys, "ingest", str(corpus), "--workdir", work)[0] == 0
    stats = json.loads((cwd / "work" / "ingest_stats.json").read_text(encoding="utf-8"))
    assert stats["skipped"] == 1
    assert stats["sentences"] == 1


def test_lenient_ingest_skips_bad_coordinates(cwd, capsys):
    corpus = cwd / "reviews.jsonl"
    corpus.write_text(
        '{"review_id": "r1", "business_id": "b1", "text": "Viele Russen hier.", "lat": 47.2, "lon": 11.3}\n'
        '{"review_id": "r2", "business_id": "b2", "text": "Viele Briten hier.", "lat": 200.0, "lon": 11.3}\n',
        encoding="utf-8",
    )
    work = cwd / "work"
    assert _run(capsys, "ingest", str(corpus), "--workdir", str(work))[0] == 0
    stats = json.loads((work / "ingest_stats.json").read_text(encoding="utf-8"))
    assert stats["records_in"] == 2 and stats["skipped"] == 1
    assert (work / "locations.csv").read_text(encoding="utf-8").splitlines()[1:] == ["b1,47.2,11.3"]
    assert (work / "manifests" / "ingest.json").exists()


# ═══════════════════════════════════════════════════════════════
#  Pipeline
# ═══════════════════════════════════════════════════════════════


def test_synthetic_pipeline(cwd, capsys):
    demo = str(cwd / "demo")
    work = str(cwd / "work")
    common = ["--workdir", work, "--seed", "3"]

    assert _run(capsys, "synth", "--out", demo, "--reviews", "30", "--labeled", "60", "--dim", "8", *common)[0] == 0
    for name in ("reviews.jsonl", "labeled.jsonl", "vectors.vec", "locations.csv"):
        assert os.path.isfile(os.path.join(demo, name))
    annotations = sorted(os.listdir(os.path.join(demo, "annotations")))
    assert annotations == ["annotator1.tsv", "annotator2.tsv", "annotator3.tsv"]

    assert _run(capsys, "ingest", os.path.join(demo, "reviews.jsonl"), *common)[0] == 0
    assert _run(capsys, "filter", *common)[0] == 0
    filter_stats = json.loads(open(os.path.join(work, "filter_stats.json"), encoding="utf-8").read())
    assert filter_stats["with_terms"] + filter_stats["without_terms"] == filter_stats["total"]

    pattern = os.path.join(demo, "annotations", "annotator*.tsv")
    pool = ["--pool", os.path.join(demo, "labeled.jsonl")]
    assert _run(capsys, "merge-annotations", pattern, *pool, *common)[0] == 0
    code, out, _ = _run(capsys, "kappa", pattern, *pool, "--json", *common)
    assert code == 0
    agreement = json.loads(out)
    assert agreement["raters"] == 3 and agreement["items"] == 60
    assert -1.0 <= agreement["fleiss_kappa"] <= 1.0

    assert _run(capsys, "split", *common)[0] == 0
    assert _run(capsys, "train", "--model", "dict", *common)[0] == 0
    assert os.path.isfile(os.path.join(work, "models", "dict.ckpt"))

    code, out, _ = _run(capsys, "evaluate", "--model", "dict", "--json", *common)
    assert code == 0
    metrics = json.loads(out)
    assert metrics["model"] == "dict" and metrics["evaluated_on"] == "validation"
    assert 0.0 <= metrics["f1_binary"] <= 1.0
    assert os.path.isfile(os.path.join(work, "metrics", "dict.json"))

    code, out, _ = _run(
        capsys, "predict", "--model", "dict", "--json",
        "--text", "Viele Russen im Hotel.", "--text", "Das Zimmer war sauber.", *common,
    )
    assert code == 0
    assert [row["label"] for row in json.loads(out)] == [True, False]

    assert _run(capsys, "predict", "--model", "dict", *common)[0] == 0
    code, out, _ = _run(capsys, "aggregate", "--min-support", "1", "--json", *common)
    assert code == 0
    composition = json.loads(out)
    for estimate in composition["estimates"]:
        assert sum(estimate["shares"].values()) == pytest.approx(1.0)

    locations = os.path.join(demo, "locations.csv")
    assert _run(capsys, "export-geojson", "--locations", locations, *common)[0] == 0
    geojson = json.loads(open(os.path.join(work, "composition.geojson"), encoding="utf-8").read())
    assert geojson["type"] == "FeatureCollection"
    assert len(geojson["features"]) == len(composition["estimates"])

    manifest = json.loads(open(os.path.join(work, "manifests", "train.json"), encoding="utf-8").read())
    assert manifest["seed"] == 3
    assert "models/dict.ckpt" in manifest["outputs"]
    assert os.listdir(os.path.join(work, "logs"))


def test_rerun_gives_identical_manifest(cwd, capsys):
    demo = str(cwd / "demo")
    common = ["--workdir", str(cwd / "work"), "--seed", "1"]
    assert _run(capsys, "synth", "--out", demo, "--reviews", "10", "--labeled", "20", *common)[0] == 0
    path = cwd / "work" / "manifests" / "synth.json"
    first = path.read_bytes()
    assert _run(capsys, "synth", "--out", demo, "--reviews", "10", "--labeled", "20", *common)[0] == 0
    assert path.read_bytes() == first


def test_training_rerun_is_bit_identical(cwd, capsys):
    demo = str(cwd / "demo")
    work = cwd / "work"
    common = ["--workdir", str(work), "--seed", "5"]
    small = ["--set", "model.layers=1", "--set", "model.hidden=8", "--set", "model.learned_dim=8",
             "--set", "train.max_epochs=3"]
    assert _run(capsys, "synth", "--out", demo, "--reviews", "10", "--labeled", "60", "--dim", "8", *common)[0] == 0
    pattern = os.path.join(demo, "annotations", "annotator*.tsv")
    assert _run(capsys, "merge-annotations", pattern, "--pool", os.path.join(demo, "labeled.jsonl"), *common)[0] == 0
    assert _run(capsys, "split", *common)[0] == 0

    def train_and_evaluate(kind):
        assert _run(capsys, "train", "--model", kind, *small, *common)[0] == 0
        assert _run(capsys, "evaluate", "--model", kind, *small, *common)[0] == 0
        return (
            (work / "models" / f"{kind}.ckpt").read_bytes(),
            (work / "metrics" / f"{kind}.json").read_bytes(),
            (work / "manifests" / "train.json").read_bytes(),
        )

    for kind in ("tfidf-svm", "emb-bilstm"):
        assert train_and_evaluate(kind) == train_and_evaluate(kind)


def test_gradcheck_command(cwd, capsys):
    code, out, _ = _run(capsys, "gradcheck", "--seeds", "1", "--json", "--workdir", str(cwd / "work"))
    assert code == 0
    payload = json.loads(out)
    assert len(payload) == 1 and payload[0]["passed"] is True
    code, out, _ = _run(capsys, "gradcheck", "--seeds", "1", "--pretrained", "--json", "--workdir", str(cwd / "w2"))
    assert code == 0 and json.loads(out)[0]["passed"] is True


# ═══════════════════════════════════════════════════════════════
#  Logging and stale inputs
# ═══════════════════════════════════════════════════════════════


def _prepared_workdir(cwd, capsys):
    demo = str(cwd / "demo")
    common = ["--workdir", str(cwd / "work"), "--seed", "2"]
    assert _run(capsys, "synth", "--out", demo, "--reviews", "10", "--labeled", "30", *common)[0] == 0
    pattern = os.path.join(demo, "annotations", "annotator*.tsv")
    assert _run(capsys, "merge-annotations", pattern, "--pool", os.path.join(demo, "labeled.jsonl"), *common)[0] == 0
    assert _run(capsys, "split", *common)[0] == 0
    assert _run(capsys, "train", "--model", "dict", *common)[0] == 0
    return common


def _log_text(work, command):
    logs = sorted((work / "logs").glob(f"{command}_*.log"))
    return "".join(path.read_text(encoding="utf-8") for path in logs)


def test_evaluate_warns_when_training_inputs_changed(cwd, capsys):
    common = _prepared_workdir(cwd, capsys)
    work = cwd / "work"
    assert _run(capsys, "evaluate", "--model", "dict", *common)[0] == 0
    assert "since `guestmix train` wrote it" not in _log_text(work, "evaluate")

    with open(work / "labeled.jsonl", "a", encoding="utf-8") as handle:
        handle.write("\n")
    for path in (work / "logs").glob("evaluate_*.log"):
        path.unlink()
    assert _run(capsys, "evaluate", "--model", "dict", *common)[0] == 0
    log = _log_text(work, "evaluate")
    assert "labeled.jsonl is changed since `guestmix train` wrote it" in log


def test_log_enabled_false_silences_console_and_files(cwd, capsys):
    from guestmix.utils.log_utils import CONSOLE_DISABLED, console_level

    corpus = cwd / "reviews.jsonl"
    corpus.write_text('{"review_id": "r1", "business_id": "b1", "text": "Viele Russen hier."}\n', encoding="utf-8")
    quiet = cwd / "quiet"
    quiet.mkdir()
    (quiet / "guestmix_settings.yaml").write_text("log_enabled: false\n", encoding="utf-8")
    assert _run(capsys, "ingest", str(corpus), "--workdir", str(quiet))[0] == 0
    assert console_level() == CONSOLE_DISABLED
    assert not (quiet / "logs").exists()

    assert _run(capsys, "ingest", str(corpus), "--workdir", str(cwd / "loud"))[0] == 0
    assert console_level() == logging.INFO
    assert list((cwd / "loud" / "logs").glob("ingest_*.log"))
