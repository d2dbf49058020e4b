"""
Tests for the qualitative suite, the comparison table and the runtime probes.
"""
import csv
import io

import pytest

from guestmix.core.corpus import sentences_from_texts
from guestmix.core.evaluation import ConfusionMatrix, metrics
from guestmix.core.models import DictionaryClassifier, TfidfSvmClassifier
from guestmix.core.qualitative import QUALITATIVE_SUITE, run_qualitative
from guestmix.core.report import BEST_MARK, Comparison, ComparisonRow, compare_models
from guestmix.core.runtime import ProcessMonitor, benchmark_matcher, benchmark_model
from guestmix.errors import MetricsError


# ═══════════════════════════════════════════════════════════════
#  Qualitative suite
# ═══════════════════════════════════════════════════════════════


def test_suite_has_five_required_rows():
    assert len(QUALITATIVE_SUITE) == 6
    assert sum(case.required for case in QUALITATIVE_SUITE) == 5
    optional = [case for case in QUALITATIVE_SUITE if not case.required]
    assert optional[0].text.startswith("Richtung inland")
    assert optional[0].gold is False and optional[0].reference_prediction is True


def test_dictionary_on_suite(gazetteer):
    report = run_qualitative(DictionaryClassifier(gazetteer))
    labels = [row.label for row in report.rows]
    # misspelled and slang demonyms are missed; restaurants and cuisine fire
    assert labels == [False, False, False, True, True, True]
    assert report.required_total == 5
    assert report.required_correct == 1
    payload = report.to_dict()
    assert payload["model"] == "dict"
    assert payload["rows"][1]["correct"] is True


def test_suite_reports_oov_tokens(tiny_labeled):
    from guestmix.core.config_manager import ModelConfig, TrainConfig
    from guestmix.core.models import build_model

    model = build_model(
        "emb-lstm",
        ModelConfig(layers=1, hidden=4, learned_dim=4),
        TrainConfig(max_epochs=1, seed=0),
    ).fit(tiny_labeled)
    report = run_qualitative(model)
    assert "andoranern" in report.rows[0].oov_tokens
    assert all(0.0 <= row.probability <= 1.0 for row in report.rows)


# ═══════════════════════════════════════════════════════════════
#  Comparison table
# ═══════════════════════════════════════════════════════════════


def _comparison():
    return compare_models([
        ComparisonRow("Dictionary", metrics(ConfusionMatrix(tp=8, fp=6, tn=4, fn=2)), parameters=0),
        ComparisonRow("TF-IDF + SVM", metrics(ConfusionMatrix(tp=8, fp=2, tn=8, fn=2)), parameters=1201),
        ("Embedding + BiLSTM", metrics(ConfusionMatrix(tp=9, fp=1, tn=9, fn=1))),
    ])


def test_best_marks_ties():
    comparison = _comparison()
    best = comparison.best()
    assert best["accuracy"] == [2]
    assert best["recall"] == [2]
    tied = compare_models([("a", metrics(ConfusionMatrix(1, 0, 1, 0))), ("b", metrics(ConfusionMatrix(1, 0, 1, 0)))])
    assert tied.best()["f1_binary"] == [0, 1]


def test_render_table_percentages_and_marks():
    table = _comparison().render_table()
    lines = table.splitlines()
    assert lines[0].split() == ["Model", "Pr", "Re", "Acc", "F1", "F1-macro", "F1-w", "Params"]
    assert "90.0" + BEST_MARK in lines[-1]
    assert "1,201" in lines[3]
    assert lines[-1].rstrip().endswith("-")


def test_csv_and_json_round_trip():
    comparison = _comparison()
    rows = list(csv.DictReader(io.StringIO(comparison.to_csv())))
    assert [row["name"] for row in rows] == ["Dictionary", "TF-IDF + SVM", "Embedding + BiLSTM"]
    assert rows[0]["accuracy"] == "60.0"
    assert rows[2]["parameters"] == ""

    payload = comparison.to_dict()
    assert payload["schema_version"] == 1
    rebuilt = Comparison.from_dict(payload)
    assert rebuilt.render_table() == comparison.render_table()


def test_compare_requires_rows():
    with pytest.raises(MetricsError):
        compare_models([])
    with pytest.raises(MetricsError):
        Comparison.from_dict({"rows": [{"name": "x"}]})


# ═══════════════════════════════════════════════════════════════
#  Runtime
# ═══════════════════════════════════════════════════════════════


def test_process_monitor_sample():
    sample = ProcessMonitor().sample()
    assert sample["rss_mb"] > 0
    assert "cpu_percent" in sample


def test_benchmark_matcher_counts(gazetteer):
    sentences = sentences_from_texts(["Viele Russen hier.", "Das Zimmer war sauber."])
    result = benchmark_matcher(gazetteer, sentences, repeat=3)
    assert result.sentences == 2 and result.repeat == 3
    assert result.terms == len(gazetteer.active_terms)
    assert result.to_dict()["sentences_per_second"] > 0
    with pytest.raises(ValueError):
        benchmark_matcher(gazetteer, sentences, repeat=0)


def test_benchmark_model(tiny_labeled):
    model = TfidfSvmClassifier(epochs=2).fit(tiny_labeled)
    result = benchmark_model(model, [item.sentence for item in tiny_labeled])
    assert result.kind == "tfidf-svm"
    assert result.sentences == 12
    assert result.parameters == model.count_parameters().total
    assert result.latency_ms >= 0.0


@pytest.mark.slow
def test_matcher_throughput(gazetteer):
    from guestmix.core.synth import generate_labeled

    sentences = [item.sentence for item in generate_labeled(400, seed=0, g=gazetteer)]
    result = benchmark_matcher(gazetteer, sentences, repeat=100)
    assert result.sentences_per_second >= 50_000
