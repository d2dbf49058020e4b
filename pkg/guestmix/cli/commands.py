"""
CLI commands: one handler per pipeline stage plus the supporting tools.

Every handler has the signature ``cmd_x(ctx, args)``; it raises
``UsageError`` for bad flags and ``DataError`` for bad inputs, writes its
artifacts under the work directory and finishes with a manifest.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from guestmix import __version__
from guestmix._config import (
    ADJUDICATION_FILENAME,
    AGREEMENT_FILENAME,
    ANNOTATIONS_DIR,
    CHECKPOINT_SUFFIX,
    COMPARISON_CSV_FILENAME,
    COMPARISON_JSON_FILENAME,
    COMPARISON_TEXT_FILENAME,
    COMPOSITION_FILENAME,
    DEFAULT_SAMPLE_RATIO,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_SYNTH_ANNOTATORS,
    DEFAULT_SYNTH_DIM,
    DEFAULT_SYNTH_FLIP_RATE,
    DEFAULT_SYNTH_REVIEWS,
    EXPANDED_LEXICON_FILENAME,
    EXPANSION_REPORT_FILENAME,
    FILTER_STATS_FILENAME,
    GEOJSON_FILENAME,
    GRADCHECK_FILENAME,
    GRADCHECK_SEEDS,
    HISTORY_SUFFIX,
    INGEST_STATS_FILENAME,
    LABELED_FILENAME,
    LOCATIONS_FILENAME,
    METRICS_DIR,
    MISSING_LOCATIONS_FILENAME,
    MODEL_KINDS,
    MODELS_DIR,
    PREDICTIONS_FILENAME,
    QUALITATIVE_FILENAME,
    REVIEWS_FILENAME,
    RUN_CONFIG_FILENAME,
    RUNTIME_FILENAME,
    SAMPLE_FILENAME,
    SAMPLE_POOL_FILENAME,
    SENTENCES_FILENAME,
    SPLIT_FILENAME,
    SYNTH_DIR,
    TEXT_PREDICTIONS_FILENAME,
    VECTORS_FILENAME,
    WITH_TERMS_FILENAME,
    WITHOUT_TERMS_FILENAME,
)
from guestmix.cli.console import write_console_json, write_console_text
from guestmix.cli.display import (
    print_agreement,
    print_composition,
    print_gradcheck,
    print_metrics,
    print_predictions,
    print_qualitative,
    print_summary,
    print_table_text,
)
from guestmix.core.composition import (
    CompositionEstimate,
    MentionStats,
    aggregate,
    export_geojson,
    extract_mentions,
    load_locations,
    write_geojson,
    write_locations,
    write_missing_locations,
)
from guestmix.core.config_manager import RunConfig, config_template
from guestmix.core.corpus import (
    Deduplicator,
    IngestStats,
    Sentence,
    ingest_reviews,
    load_abbreviations,
    review_sentences,
    sentences_from_texts,
)
from guestmix.core.dataset import (
    LabeledSentence,
    SplitSpec,
    apply_split,
    load_split,
    merge_annotations,
    read_labeled,
    sample_balanced,
    split,
    write_adjudication_tsv,
    write_labeled,
    write_sample_tsv,
    write_split,
)
from guestmix.core.embeddings import EmbeddingTable, load_vec, write_vec
from guestmix.core.evaluation import evaluate, fleiss_kappa
from guestmix.core.gazetteer import (
    EXPANSION_REPORT_HEADER,
    Gazetteer,
    build_gazetteer,
    expand_with_knn,
    filter_corpus,
    write_lexicon,
)
from guestmix.core.models import DISPLAY_NAMES, build_model, load_model, needs_embeddings, save_model
from guestmix.core.models.base import Classifier, gold_labels
from guestmix.core.models.gradcheck import run_gradcheck
from guestmix.core.qualitative import run_qualitative
from guestmix.core.report import ComparisonRow, compare_models
from guestmix.core.runtime import benchmark_matcher, benchmark_model
from guestmix.core.synth import (
    generate_annotations,
    generate_corpus,
    generate_embeddings,
    generate_labeled,
    generate_locations,
    write_annotation_files,
)
from guestmix.errors import DataError, GradientCheckError, MissingArtifactError, RecordParseError, UsageError
from guestmix.utils import get_logger
from guestmix.utils.config_utils import dump_yaml
from guestmix.utils.hashing import sha256_file
from guestmix.utils.io_utils import (
    atomic_write_text,
    iter_jsonl,
    read_json,
    write_json,
    write_jsonl,
    write_tsv,
)
from guestmix.utils.manifest import load_manifest, stale_inputs, write_manifest
from guestmix.utils.time_utils import format_date

logger = get_logger(__name__)


@dataclass
class RunContext:
    """Resolved configuration shared by every command of one invocation."""

    config: RunConfig
    config_path: Optional[str] = None
    json_output: bool = False

    @property
    def workdir(self) -> str:
        return self.config.paths.workdir

    @property
    def seed(self) -> int:
        return self.config.seed

    def path(self, *parts: str) -> str:
        return os.path.join(self.workdir, *parts)


# ═══════════════════════════════════════════════════════════════
#  Argument helpers
# ═══════════════════════════════════════════════════════════════

def _consume_flag(args: list[str], *names: str) -> tuple[bool, list[str]]:
    found = False
    remaining: list[str] = []
    for arg in args:
        if arg in names:
            found = True
            continue
        remaining.append(arg)
    return found, remaining


def _consume_option(args: list[str], *names: str) -> tuple[str | None, list[str]]:
    remaining: list[str] = []
    index = 0
    value: str | None = None

    while index < len(args):
        arg = args[index]
        matched = next((name for name in names if arg == name or arg.startswith(f"{name}=")), None)
        if matched is None:
            remaining.append(arg)
            index += 1
            continue

        if "=" in arg:
            value = arg.split("=", 1)[1]
            index += 1
            continue

        if index + 1 >= len(args):
            raise UsageError(f"missing value for {matched}")

        value = args[index + 1]
        index += 2

    return value, remaining


def _consume_repeated_option(args: list[str], *names: str) -> tuple[list[str], list[str]]:
    """Every value of a repeatable option, in order (no comma splitting)."""
    remaining: list[str] = []
    values: list[str] = []
    index = 0

    while index < len(args):
        arg = args[index]
        matched = next((name for name in names if arg == name or arg.startswith(f"{name}=")), None)
        if matched is None:
            remaining.append(arg)
            index += 1
            continue

        if "=" in arg:
            values.append(arg.split("=", 1)[1])
            index += 1
            continue

        if index + 1 >= len(args):
            raise UsageError(f"missing value for {matched}")

        values.append(args[index + 1])
        index += 2

    return values, remaining


def _consume_multi_option(args: list[str], *names: str) -> tuple[list[str], list[str]]:
    raw, remaining = _consume_repeated_option(args, *names)
    values = [part.strip() for value in raw for part in value.split(",") if part.strip()]
    return values, remaining


def _parse_int(raw: str | None, name: str, minimum: int | None = None) -> int | None:
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"invalid {name}: {raw}") from None
    if minimum is not None and value < minimum:
        raise UsageError(f"{name} must be >= {minimum}")
    return value


def _parse_float(raw: str | None, name: str) -> float | None:
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"invalid {name}: {raw}") from None


def _no_extra(command: str, args: list[str]) -> None:
    if args:
        raise UsageError(f"unexpected argument(s) for '{command}': {' '.join(args)}")


def _override(section: Any, field_name: str, value: Any) -> None:
    """Assign a flag value to a config section, validating it."""
    if value is None:
        return
    try:
        setattr(section, field_name, value)
    except ValidationError as exc:
        problems = "; ".join(err["msg"] for err in exc.errors())
        raise UsageError(f"invalid value for {field_name}: {problems}") from exc


def _model_kind(ctx: RunContext, args: list[str]) -> tuple[str, list[str]]:
    kind, args = _consume_option(args, "--model", "-m")
    _override(ctx.config.model, "kind", kind)
    return ctx.config.model.kind, args


# ═══════════════════════════════════════════════════════════════
#  Artifact helpers
# ═══════════════════════════════════════════════════════════════

def _finish(ctx: RunContext, command: str, inputs: Iterable[str], outputs: Iterable[str]) -> str:
    path = write_manifest(
        ctx.workdir,
        command,
        version=__version__,
        seed=ctx.seed,
        config=ctx.config.to_dict(),
        inputs=list(inputs),
        outputs=list(outputs),
    )
    logger.debug("Manifest written: %s", path)
    return path


def _read_sentences(path: str) -> List[Sentence]:
    sentences: List[Sentence] = []
    for line_number, record in iter_jsonl(path):
        try:
            sentences.append(Sentence.from_record(record))
        except RecordParseError as exc:
            raise RecordParseError(str(exc), path=path, line=line_number) from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordParseError(f"invalid sentence record: {exc}", path=path, line=line_number) from exc
    return sentences


def _write_sentences(path: str, sentences: Iterable[Sentence]) -> int:
    return write_jsonl(path, (sentence.to_record() for sentence in sentences))


def _lexicon_path(ctx: RunContext, args: list[str]) -> tuple[str, list[str]]:
    lexicon, args = _consume_option(args, "--lexicon")
    _override(ctx.config.paths, "lexicon", lexicon)
    return ctx.config.paths.lexicon, args


def _gazetteer(ctx: RunContext) -> Gazetteer:
    return build_gazetteer(ctx.config.paths.lexicon, ctx.config.paths.veto)


def _lexicon_inputs(ctx: RunContext) -> List[str]:
    return [p for p in (ctx.config.paths.lexicon, ctx.config.paths.veto) if p]


def _checkpoint_path(ctx: RunContext, kind: str) -> str:
    return ctx.path(MODELS_DIR, f"{kind}{CHECKPOINT_SUFFIX}")


def _load_checkpoint(ctx: RunContext, kind: str) -> Tuple[Classifier, str]:
    path = _checkpoint_path(ctx, kind)
    if not os.path.isfile(path):
        raise MissingArtifactError(f"no trained '{kind}' model; run `guestmix train --model {kind}` first", path=path)
    _warn_if_stale(ctx, "train", path)
    return load_model(path), path


def _warn_if_stale(ctx: RunContext, producer: str, artifact: str) -> None:
    """Log inputs that changed since the recorded run that wrote ``artifact``."""
    try:
        manifest = load_manifest(ctx.workdir, producer)
    except DataError:
        return
    key = os.path.relpath(artifact, ctx.workdir).replace(os.sep, "/")
    if manifest.get("outputs", {}).get(key) != sha256_file(artifact):
        return
    for path, state in stale_inputs(manifest).items():
        logger.warning("%s: input %s is %s since `guestmix %s` wrote it", key, path, state, producer)


def _labeled_folds(ctx: RunContext, data: str | None) -> Tuple[List[LabeledSentence], List[LabeledSentence], List[str]]:
    labeled_path = data or ctx.path(LABELED_FILENAME)
    split_path = ctx.path(SPLIT_FILENAME)
    labeled = [item for item in read_labeled(labeled_path) if item.gold is not None]
    train_set, validation = apply_split(labeled, load_split(split_path))
    if not train_set:
        raise DataError("the split leaves no labeled training items", path=split_path)
    return train_set, validation, [labeled_path, split_path]


def _embeddings_path(ctx: RunContext, args: list[str]) -> list[str]:
    embeddings, args = _consume_option(args, "--embeddings")
    _override(ctx.config.paths, "embeddings", embeddings)
    return args


def _prediction_rows(sentences: Sequence[Sentence], model: Classifier) -> List[Dict[str, Any]]:
    predictions = model.predict_many(list(sentences))
    return [
        {"sentence_id": s.sentence_id, "probability": p.probability, "label": p.label}
        for s, p in zip(sentences, predictions)
    ]


# ═══════════════════════════════════════════════════════════════
#  Corpus stages
# ═══════════════════════════════════════════════════════════════

def cmd_ingest(ctx: RunContext, args: list[str]) -> None:
    """ingest [CORPUS] [--format jsonl|csv]"""
    fmt, args = _consume_option(args, "--format")
    if len(args) > 1:
        _no_extra("ingest", args[1:])
    _override(ctx.config.paths, "corpus", args[0] if args else None)
    corpus = ctx.config.paths.corpus
    if not corpus:
        raise UsageError("no corpus given (pass a path or set paths.corpus)")

    abbreviations = load_abbreviations(ctx.config.paths.abbreviations)
    stats = IngestStats()
    dedup = Deduplicator()
    sentences: List[Sentence] = []
    locations: Dict[str, Tuple[float, float]] = {}
    for review in ingest_reviews(corpus, fmt, strict=ctx.config.strict, stats=stats):
        if review.lat is not None and review.lon is not None:
            previous = locations.setdefault(review.business_id, (review.lat, review.lon))
            if previous != (review.lat, review.lon):
                logger.warning("Business %s has conflicting coordinates; keeping the first", review.business_id)
        sentences.extend(dedup(review_sentences(review, abbreviations)))

    sentences_path = ctx.path(SENTENCES_FILENAME)
    stats_path = ctx.path(INGEST_STATS_FILENAME)
    _write_sentences(sentences_path, sentences)
    write_json(stats_path, {**stats.to_dict(), "sentences": len(sentences), "duplicates": dedup.duplicates})
    outputs = [sentences_path, stats_path]
    if locations:
        locations_path = ctx.path(LOCATIONS_FILENAME)
        write_locations(locations_path, locations)
        outputs.append(locations_path)

    _finish(ctx, "ingest", [corpus, ctx.config.paths.abbreviations], outputs)
    print_summary("Ingest", [
        ("Reviews read", stats.records_in),
        ("Reviews kept", stats.records_out),
        ("Skipped", stats.skipped),
        ("Sentences", len(sentences)),
        ("Duplicates", dedup.duplicates),
    ], outputs)


def cmd_filter(ctx: RunContext, args: list[str]) -> None:
    """filter [--input FILE] [--lexicon FILE]"""
    source, args = _consume_option(args, "--input")
    _, args = _lexicon_path(ctx, args)
    _no_extra("filter", args)
    source = source or ctx.path(SENTENCES_FILENAME)

    with_terms, without_terms, stats = filter_corpus(_gazetteer(ctx), _read_sentences(source))
    outputs = [ctx.path(WITH_TERMS_FILENAME), ctx.path(WITHOUT_TERMS_FILENAME), ctx.path(FILTER_STATS_FILENAME)]
    _write_sentences(outputs[0], with_terms)
    _write_sentences(outputs[1], without_terms)
    write_json(outputs[2], stats.to_dict())

    _finish(ctx, "filter", [source, *_lexicon_inputs(ctx)], outputs)
    top = sorted(stats.country_counts.items(), key=lambda item: (-item[1], item[0]))[:5]
    print_summary("Filter", [
        ("Sentences", stats.total),
        ("With terms", stats.with_terms),
        ("Without terms", stats.without_terms),
        ("Term occurrences", stats.occurrences),
        ("Top countries", ", ".join(f"{c} {n}" for c, n in top) or "-"),
    ], outputs)


def cmd_expand_vocab(ctx: RunContext, args: list[str]) -> None:
    """expand-vocab [--embeddings FILE] [--k N] [--min-sim X] [--lexicon FILE]"""
    args = _embeddings_path(ctx, args)
    k, args = _consume_option(args, "--k", "-k")
    min_sim, args = _consume_option(args, "--min-sim")
    _, args = _lexicon_path(ctx, args)
    _no_extra("expand-vocab", args)
    _override(ctx.config.expansion, "k", _parse_int(k, "k", 0))
    _override(ctx.config.expansion, "min_sim", _parse_float(min_sim, "min-sim"))
    embeddings = ctx.config.paths.embeddings
    if not embeddings:
        raise UsageError("no embeddings given (pass --embeddings or set paths.embeddings)")

    g = _gazetteer(ctx)
    expanded, report = expand_with_knn(g, load_vec(embeddings), ctx.config.expansion.k, ctx.config.expansion.min_sim)
    outputs = [ctx.path(EXPANDED_LEXICON_FILENAME), ctx.path(EXPANSION_REPORT_FILENAME)]
    write_lexicon(expanded, outputs[0])
    write_tsv(outputs[1], (row.to_fields() for row in report), header=EXPANSION_REPORT_HEADER)

    _finish(ctx, "expand-vocab", [embeddings, *_lexicon_inputs(ctx)], outputs)
    print_summary("Vocabulary expansion", [
        ("Terms before", len(g)),
        ("Terms after", len(expanded)),
        ("Neighbours accepted", sum(1 for row in report if row.accepted)),
        ("Neighbours rejected", sum(1 for row in report if not row.accepted)),
    ], outputs)


# ═══════════════════════════════════════════════════════════════
#  Labeled data
# ═══════════════════════════════════════════════════════════════

def cmd_sample(ctx: RunContext, args: list[str]) -> None:
    """sample [--n N] [--ratio X]"""
    n, args = _consume_option(args, "--n", "-n")
    ratio, args = _consume_option(args, "--ratio")
    _no_extra("sample", args)
    _override(ctx.config.sampling, "n", _parse_int(n, "n", 0))
    _override(ctx.config.sampling, "ratio", _parse_float(ratio, "ratio"))

    inputs = [ctx.path(WITH_TERMS_FILENAME), ctx.path(WITHOUT_TERMS_FILENAME)]
    sample = sample_balanced(
        _read_sentences(inputs[0]),
        _read_sentences(inputs[1]),
        ctx.config.sampling.n,
        ctx.config.sampling.ratio,
        ctx.seed,
    )
    outputs = [ctx.path(SAMPLE_FILENAME), ctx.path(SAMPLE_POOL_FILENAME)]
    write_sample_tsv(outputs[0], sample)
    write_labeled(outputs[1], sample)

    _finish(ctx, "sample", inputs, outputs)
    print_summary("Sample", [
        ("Sentences", len(sample)),
        ("With terms", sum(1 for item in sample if item.has_term)),
        ("Without terms", sum(1 for item in sample if not item.has_term)),
        ("Seed", ctx.seed),
    ], outputs)


def _annotation_files(args: list[str]) -> List[str]:
    files: List[str] = []
    for pattern in args:
        matched = sorted(glob.glob(pattern))
        files.extend(matched or [pattern])
    if not files:
        raise UsageError("no annotation files given")
    return files


def cmd_merge_annotations(ctx: RunContext, args: list[str]) -> None:
    """merge-annotations FILE... [--pool FILE]"""
    pool, args = _consume_option(args, "--pool")
    pool = pool or ctx.path(SAMPLE_POOL_FILENAME)
    files = _annotation_files(args)

    result = merge_annotations(files, read_labeled(pool))
    outputs = [ctx.path(LABELED_FILENAME), ctx.path(ADJUDICATION_FILENAME)]
    write_labeled(outputs[0], result.labeled)
    write_adjudication_tsv(outputs[1], result.adjudication)

    _finish(ctx, "merge-annotations", [pool, *files], outputs)
    print_summary("Annotation merge", [
        ("Annotation files", len(files)),
        ("Labeled", len(result.labeled)),
        ("Positive", sum(1 for item in result.labeled if item.gold)),
        ("Needs adjudication", len(result.adjudication)),
        ("Unannotated", result.unannotated),
    ], outputs)


def cmd_kappa(ctx: RunContext, args: list[str]) -> None:
    """kappa FILE... [--pool FILE]"""
    pool, args = _consume_option(args, "--pool")
    pool = pool or ctx.path(SAMPLE_POOL_FILENAME)
    files = _annotation_files(args)

    votes = merge_annotations(files, read_labeled(pool)).votes
    if not votes:
        raise DataError("no annotated items to compute agreement on")
    raters = max(len(v) for v in votes)
    complete = [v for v in votes if len(v) == raters]
    if len(complete) < len(votes):
        logger.warning("%d item(s) lack a label from every annotator and were left out", len(votes) - len(complete))
    report = fleiss_kappa(complete).to_dict()

    output = ctx.path(AGREEMENT_FILENAME)
    write_json(output, report)
    _finish(ctx, "kappa", [pool, *files], [output])
    if ctx.json_output:
        write_console_json(report)
    else:
        print_agreement(report)


def cmd_split(ctx: RunContext, args: list[str]) -> None:
    """split [--data FILE] [--train-fraction X]"""
    data, args = _consume_option(args, "--data")
    fraction, args = _consume_option(args, "--train-fraction")
    _no_extra("split", args)
    _override(ctx.config.split, "train_fraction", _parse_float(fraction, "train-fraction"))
    data = data or ctx.path(LABELED_FILENAME)

    train_set, validation = split(read_labeled(data), SplitSpec(ctx.config.split.train_fraction, ctx.seed))
    output = ctx.path(SPLIT_FILENAME)
    write_split(output, train_set, validation)

    _finish(ctx, "split", [data], [output])
    print_summary("Split", [
        ("Train", len(train_set)),
        ("Validation", len(validation)),
        ("Train fraction", ctx.config.split.train_fraction),
        ("Seed", ctx.seed),
    ], [output])


# ═══════════════════════════════════════════════════════════════
#  Models
# ═══════════════════════════════════════════════════════════════

def _build(ctx: RunContext, kind: str, table: Optional[EmbeddingTable] = None) -> Classifier:
    return build_model(
        kind,
        ctx.config.model,
        ctx.config.effective_train(),
        gazetteer=_gazetteer(ctx) if kind == "dict" else None,
        table=table,
        embeddings_path=ctx.config.paths.embeddings,
    )


def _model_inputs(ctx: RunContext, kind: str) -> List[str]:
    if kind == "dict":
        return _lexicon_inputs(ctx)
    if needs_embeddings(kind) and ctx.config.paths.embeddings:
        return [ctx.config.paths.embeddings]
    return []


def _train_one(
    ctx: RunContext,
    kind: str,
    train_set: Sequence[LabeledSentence],
    validation: Sequence[LabeledSentence],
    table: Optional[EmbeddingTable] = None,
) -> Tuple[Classifier, List[str]]:
    model = _build(ctx, kind, table)
    model.fit(list(train_set), list(validation) or None)
    checkpoint = _checkpoint_path(ctx, kind)
    save_model(model, checkpoint, config=ctx.config.to_dict(), seed=ctx.seed)
    outputs = [checkpoint]
    history = getattr(model, "history", None)
    if history is not None:
        history_path = ctx.path(MODELS_DIR, f"{kind}{HISTORY_SUFFIX}")
        write_json(history_path, history.to_dict())
        outputs.append(history_path)
    return model, outputs


def cmd_train(ctx: RunContext, args: list[str]) -> None:
    """train [--model KIND] [--data FILE] [--embeddings FILE] [--lexicon FILE]"""
    kind, args = _model_kind(ctx, args)
    data, args = _consume_option(args, "--data")
    args = _embeddings_path(ctx, args)
    _, args = _lexicon_path(ctx, args)
    _no_extra("train", args)

    train_set, validation, inputs = _labeled_folds(ctx, data)
    model, outputs = _train_one(ctx, kind, train_set, validation)

    _finish(ctx, "train", [*inputs, *_model_inputs(ctx, kind)], outputs)
    counts = model.count_parameters()
    history = getattr(model, "history", None)
    rows: List[Tuple[str, Any]] = [
        ("Model", DISPLAY_NAMES[kind]),
        ("Train items", len(train_set)),
        ("Validation items", len(validation)),
        ("Parameters", f"{counts.total:,}"),
    ]
    if history is not None and history.epochs:
        rows.append(("Epochs", len(history)))
        rows.append(("Best epoch", history.best_epoch if history.best_epoch is not None else "-"))
        rows.append(("Final loss", f"{history.losses[-1]:.6f}"))
    print_summary("Train", rows, outputs)


def cmd_evaluate(ctx: RunContext, args: list[str]) -> None:
    """evaluate [--model KIND] [--data FILE]"""
    kind, args = _model_kind(ctx, args)
    data, args = _consume_option(args, "--data")
    _no_extra("evaluate", args)

    model, checkpoint = _load_checkpoint(ctx, kind)
    if data:
        items = [item for item in read_labeled(data) if item.gold is not None]
        inputs = [data]
        evaluated_on = os.path.basename(data)
    else:
        _, items, inputs = _labeled_folds(ctx, None)
        evaluated_on = "validation"
    if not items:
        raise DataError("nothing to evaluate: no labeled items")

    predictions = [p.label for p in model.predict_many([item.sentence for item in items])]
    report = evaluate(predictions, gold_labels(items))
    payload = {"model": kind, "evaluated_on": evaluated_on, "items": len(items), **report.to_dict()}
    output = ctx.path(METRICS_DIR, f"{kind}.json")
    write_json(output, payload)

    _finish(ctx, "evaluate", [checkpoint, *inputs], [output])
    if ctx.json_output:
        write_console_json(payload)
    else:
        print_metrics(f"{DISPLAY_NAMES[kind]}  ({evaluated_on}, {len(items)} items)", payload)


def cmd_predict(ctx: RunContext, args: list[str]) -> None:
    """predict [--model KIND] [--input FILE | --text SENTENCE ...] [--output FILE]"""
    kind, args = _model_kind(ctx, args)
    texts, args = _consume_repeated_option(args, "--text", "-t")
    source, args = _consume_option(args, "--input")
    output, args = _consume_option(args, "--output", "-o")
    _no_extra("predict", args)
    if texts and source:
        raise UsageError("use either --input or --text, not both")

    model, checkpoint = _load_checkpoint(ctx, kind)
    if texts:
        sentences = sentences_from_texts(texts)
        inputs = [checkpoint]
        output = output or ctx.path(TEXT_PREDICTIONS_FILENAME)
    else:
        source = source or ctx.path(SENTENCES_FILENAME)
        sentences = _read_sentences(source)
        inputs = [checkpoint, source]
        output = output or ctx.path(PREDICTIONS_FILENAME)

    rows = _prediction_rows(sentences, model)
    write_jsonl(output, rows)
    _finish(ctx, "predict", inputs, [output])

    if ctx.json_output:
        write_console_json([{**row, "text": s.text} for row, s in zip(rows, sentences)])
        return
    shown = [{**row, "text": s.text} for row, s in zip(rows, sentences)]
    print_predictions(shown, limit=None if texts else 20)
    print_summary("Predict", [
        ("Model", DISPLAY_NAMES[kind]),
        ("Sentences", len(rows)),
        ("Positive", sum(1 for row in rows if row["label"])),
    ], [output])


def cmd_qualitative(ctx: RunContext, args: list[str]) -> None:
    """qualitative [--model KIND]"""
    kind, args = _model_kind(ctx, args)
    _no_extra("qualitative", args)

    model, checkpoint = _load_checkpoint(ctx, kind)
    report = run_qualitative(model).to_dict()
    output = ctx.path(QUALITATIVE_FILENAME)
    write_json(output, report)

    _finish(ctx, "qualitative", [checkpoint], [output])
    if ctx.json_output:
        write_console_json(report)
    else:
        print_qualitative(report)


def cmd_gradcheck(ctx: RunContext, args: list[str]) -> None:
    """gradcheck [--seeds N] [--pooling final|mean] [--pretrained]"""
    seeds, args = _consume_option(args, "--seeds")
    pooling, args = _consume_option(args, "--pooling")
    pretrained, args = _consume_flag(args, "--pretrained")
    _no_extra("gradcheck", args)
    count = _parse_int(seeds, "seeds", 1) or GRADCHECK_SEEDS
    _override(ctx.config.model, "pooling", pooling)

    results = run_gradcheck(
        range(ctx.seed, ctx.seed + count), pooling=ctx.config.model.pooling, pretrained=pretrained
    )
    payload = [result.to_dict() for result in results]
    output = ctx.path(GRADCHECK_FILENAME)
    write_json(output, payload)

    _finish(ctx, "gradcheck", [], [output])
    if ctx.json_output:
        write_console_json(payload)
    else:
        print_gradcheck(payload)
    failed = [result.seed for result in results if not result.passed]
    if failed:
        raise GradientCheckError(f"gradient check failed for seed(s) {failed}")


def cmd_compare(ctx: RunContext, args: list[str]) -> None:
    """compare [--models K1,K2,...] [--data FILE] [--embeddings FILE] [--timing]"""
    kinds, args = _consume_multi_option(args, "--models")
    data, args = _consume_option(args, "--data")
    timing, args = _consume_flag(args, "--timing")
    args = _embeddings_path(ctx, args)
    _, args = _lexicon_path(ctx, args)
    _no_extra("compare", args)

    unknown = [kind for kind in kinds if kind not in MODEL_KINDS]
    if unknown:
        raise UsageError(f"unknown model kind(s): {', '.join(unknown)} (expected {', '.join(MODEL_KINDS)})")
    embeddings = ctx.config.paths.embeddings
    if not kinds:
        kinds = [kind for kind in MODEL_KINDS if embeddings or not needs_embeddings(kind)]
        if not embeddings:
            logger.warning("No embeddings configured; subword models left out of the comparison")

    train_set, validation, inputs = _labeled_folds(ctx, data)
    if not validation:
        raise DataError("the split has no validation items to compare on")
    table = load_vec(embeddings) if embeddings and any(needs_embeddings(k) for k in kinds) else None

    rows: List[ComparisonRow] = []
    outputs: List[str] = []
    for kind in kinds:
        logger.info("Comparing %s", DISPLAY_NAMES[kind])
        model, written = _train_one(ctx, kind, train_set, validation, table)
        outputs.extend(written)
        sentences = [item.sentence for item in validation]
        report = evaluate([p.label for p in model.predict_many(sentences)], gold_labels(validation))
        latency = benchmark_model(model, sentences).latency_ms if timing else None
        rows.append(ComparisonRow(DISPLAY_NAMES[kind], report, model.count_parameters().total, latency))
        inputs.extend(_model_inputs(ctx, kind))

    comparison = compare_models(rows)
    payload = comparison.to_dict()
    table_text = comparison.render_table()
    files = [ctx.path(COMPARISON_JSON_FILENAME), ctx.path(COMPARISON_TEXT_FILENAME), ctx.path(COMPARISON_CSV_FILENAME)]
    write_json(files[0], payload)
    atomic_write_text(files[1], table_text)
    atomic_write_text(files[2], comparison.to_csv())
    outputs.extend(files)

    _finish(ctx, "compare", sorted(set(inputs)), [] if timing else outputs)
    if ctx.json_output:
        write_console_json(payload)
    else:
        print_table_text(table_text)


# ═══════════════════════════════════════════════════════════════
#  Composition
# ═══════════════════════════════════════════════════════════════

def _read_predictions(path: str) -> Dict[str, bool]:
    labels: Dict[str, bool] = {}
    for line_number, record in iter_jsonl(path):
        if "sentence_id" not in record or "label" not in record:
            raise RecordParseError("expected {sentence_id, probability, label}", path=path, line=line_number)
        labels[str(record["sentence_id"])] = bool(record["label"])
    return labels


def cmd_aggregate(ctx: RunContext, args: list[str]) -> None:
    """aggregate [--predictions FILE] [--input FILE] [--window month|quarter|all] [--min-support N]"""
    predictions_path, args = _consume_option(args, "--predictions")
    source, args = _consume_option(args, "--input")
    window, args = _consume_option(args, "--window")
    min_support, args = _consume_option(args, "--min-support")
    _, args = _lexicon_path(ctx, args)
    _no_extra("aggregate", args)
    _override(ctx.config.aggregation, "window", window)
    _override(ctx.config.aggregation, "min_support", _parse_int(min_support, "min-support", 1))
    predictions_path = predictions_path or ctx.path(PREDICTIONS_FILENAME)
    source = source or ctx.path(SENTENCES_FILENAME)

    stats = MentionStats()
    predictions = _read_predictions(predictions_path)
    records = extract_mentions(_read_sentences(source), predictions, _gazetteer(ctx), stats=stats)
    estimates = aggregate(records, ctx.config.aggregation.window, ctx.config.aggregation.min_support)
    payload = {
        "window": ctx.config.aggregation.window,
        "min_support": ctx.config.aggregation.min_support,
        "mentions": stats.to_dict(),
        "estimates": [estimate.to_dict() for estimate in estimates],
    }
    output = ctx.path(COMPOSITION_FILENAME)
    write_json(output, payload)

    _finish(ctx, "aggregate", [source, predictions_path, *_lexicon_inputs(ctx)], [output])
    if ctx.json_output:
        write_console_json(payload)
        return
    print_composition(payload["estimates"])
    print_summary("Aggregate", [
        ("Positive sentences", stats.positive),
        ("Unattributed", stats.unattributed),
        ("Mentions", stats.records),
        ("Estimates", len(estimates)),
    ], [output])


def cmd_export_geojson(ctx: RunContext, args: list[str]) -> None:
    """export-geojson [--locations FILE] [--input FILE]"""
    locations, args = _consume_option(args, "--locations")
    source, args = _consume_option(args, "--input")
    _no_extra("export-geojson", args)
    _override(ctx.config.paths, "locations", locations)
    locations = ctx.config.paths.locations
    if not locations:
        ingested = ctx.path(LOCATIONS_FILENAME)
        if not os.path.isfile(ingested):
            raise UsageError("no locations file (pass --locations or set paths.locations)")
        locations = ingested
    source = source or ctx.path(COMPOSITION_FILENAME)

    payload = read_json(source)
    if not isinstance(payload, dict) or not isinstance(payload.get("estimates"), list):
        raise RecordParseError("expected a composition report with an 'estimates' list", path=source)
    estimates = [CompositionEstimate.from_dict(item) for item in payload["estimates"]]
    collection, missing = export_geojson(estimates, load_locations(locations))
    outputs = [ctx.path(GEOJSON_FILENAME), ctx.path(MISSING_LOCATIONS_FILENAME)]
    write_geojson(outputs[0], collection)
    write_missing_locations(outputs[1], missing)

    _finish(ctx, "export-geojson", [source, locations], outputs)
    print_summary("GeoJSON export", [
        ("Features", len(collection["features"])),
        ("Without coordinates", len(missing)),
    ], outputs)


# ═══════════════════════════════════════════════════════════════
#  Tools
# ═══════════════════════════════════════════════════════════════

def cmd_synth(ctx: RunContext, args: list[str]) -> None:
    """synth [--out DIR] [--reviews N] [--labeled N] [--ratio X] [--dim D] [--annotators K] [--flip-rate X]"""
    out, args = _consume_option(args, "--out")
    n_reviews, args = _consume_option(args, "--reviews")
    n_labeled, args = _consume_option(args, "--labeled")
    ratio, args = _consume_option(args, "--ratio")
    dim, args = _consume_option(args, "--dim")
    annotators, args = _consume_option(args, "--annotators")
    flip_rate, args = _consume_option(args, "--flip-rate")
    _, args = _lexicon_path(ctx, args)
    _no_extra("synth", args)
    out = out or ctx.path(SYNTH_DIR)
    n_reviews = _parse_int(n_reviews, "reviews", 0)
    n_labeled = _parse_int(n_labeled, "labeled", 0)
    ratio = _parse_float(ratio, "ratio")
    dim = _parse_int(dim, "dim", 1)
    annotators = _parse_int(annotators, "annotators", 1)
    flip_rate = _parse_float(flip_rate, "flip-rate")

    g = _gazetteer(ctx)
    reviews = generate_corpus(DEFAULT_SYNTH_REVIEWS if n_reviews is None else n_reviews, ctx.seed, g)
    labeled = generate_labeled(
        DEFAULT_SAMPLE_SIZE if n_labeled is None else n_labeled,
        ctx.seed,
        g,
        DEFAULT_SAMPLE_RATIO if ratio is None else ratio,
    )
    words = sorted({token.surface for item in labeled for token in item.sentence.tokens})
    table = generate_embeddings(g, words, DEFAULT_SYNTH_DIM if dim is None else dim, ctx.seed)
    annotations = generate_annotations(
        labeled,
        DEFAULT_SYNTH_ANNOTATORS if annotators is None else annotators,
        DEFAULT_SYNTH_FLIP_RATE if flip_rate is None else flip_rate,
        ctx.seed,
    )

    names = (REVIEWS_FILENAME, LABELED_FILENAME, VECTORS_FILENAME, LOCATIONS_FILENAME)
    outputs = [os.path.join(out, name) for name in names]
    write_jsonl(outputs[0], (
        {"review_id": r.review_id, "business_id": r.business_id, "date": format_date(r.date), "text": r.text}
        for r in reviews
    ))
    write_labeled(outputs[1], labeled)
    write_vec(table, outputs[2])
    write_locations(outputs[3], generate_locations([r.business_id for r in reviews], ctx.seed))
    outputs.extend(write_annotation_files(os.path.join(out, ANNOTATIONS_DIR), annotations))

    _finish(ctx, "synth", _lexicon_inputs(ctx), outputs)
    print_summary("Synthetic corpus", [
        ("Reviews", len(reviews)),
        ("Labeled sentences", len(labeled)),
        ("Positive", sum(1 for item in labeled if item.gold)),
        ("Vectors", f"{len(table)} x {table.dim}"),
        ("Annotators", len(annotations)),
    ], outputs)


def cmd_benchmark(ctx: RunContext, args: list[str]) -> None:
    """benchmark [--input FILE] [--repeat N] [--model KIND]"""
    source, args = _consume_option(args, "--input")
    repeat, args = _consume_option(args, "--repeat")
    kind, args = _consume_option(args, "--model", "-m")
    _, args = _lexicon_path(ctx, args)
    _no_extra("benchmark", args)
    source = source or ctx.path(SENTENCES_FILENAME)
    sentences = _read_sentences(source)
    if not sentences:
        raise DataError("no sentences to benchmark on", path=source)

    payload: Dict[str, Any] = {
        "matcher": benchmark_matcher(_gazetteer(ctx), sentences, _parse_int(repeat, "repeat", 1) or 1).to_dict(),
    }
    inputs = [source, *_lexicon_inputs(ctx)]
    if kind is not None:
        _override(ctx.config.model, "kind", kind)
        model, checkpoint = _load_checkpoint(ctx, kind)
        payload["model"] = benchmark_model(model, sentences).to_dict()
        inputs.append(checkpoint)

    output = ctx.path(RUNTIME_FILENAME)
    write_json(output, payload)
    # timings are not reproducible, so the manifest lists no outputs
    _finish(ctx, "benchmark", inputs, [])
    if ctx.json_output:
        write_console_json(payload)
        return
    rows: List[Tuple[str, Any]] = [
        ("Sentences", payload["matcher"]["sentences"]),
        ("Matcher", f"{payload['matcher']['sentences_per_second']:,.0f} sentences/s"),
    ]
    if "model" in payload:
        rows.append(("Model latency", f"{payload['model']['latency_ms']:.3f} ms/sentence"))
        rows.append(("Parameters", f"{payload['model']['parameters']:,}"))
        rows.append(("Resident memory", f"{payload['model']['rss_mb']} MB"))
    print_summary("Benchmark", rows, [output])


def cmd_config(ctx: RunContext, args: list[str]) -> None:
    """config"""
    _no_extra("config", args)
    payload = ctx.config.to_dict()
    if ctx.json_output:
        write_console_json(payload)
    else:
        write_console_text(dump_yaml(payload))


def cmd_init(ctx: RunContext, args: list[str]) -> None:
    """init [PATH] [--force]"""
    force, args = _consume_flag(args, "--force", "-f")
    if len(args) > 1:
        _no_extra("init", args[1:])
    path = args[0] if args else RUN_CONFIG_FILENAME
    if os.path.exists(path) and not force:
        raise UsageError(f"{path} already exists (use --force to overwrite)")
    atomic_write_text(path, config_template())
    print(f"  Wrote config template to {path}")


# Commands that only print and never touch the work directory.
READ_ONLY_COMMANDS = frozenset({"config", "init"})

COMMANDS = {
    "ingest": cmd_ingest,
    "filter": cmd_filter,
    "expand-vocab": cmd_expand_vocab,
    "sample": cmd_sample,
    "merge-annotations": cmd_merge_annotations,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "eval": cmd_evaluate,
    "predict": cmd_predict,
    "qualitative": cmd_qualitative,
    "aggregate": cmd_aggregate,
    "export-geojson": cmd_export_geojson,
    "gradcheck": cmd_gradcheck,
    "synth": cmd_synth,
    "compare": cmd_compare,
    "kappa": cmd_kappa,
    "benchmark": cmd_benchmark,
    "config": cmd_config,
    "init": cmd_init,
}
