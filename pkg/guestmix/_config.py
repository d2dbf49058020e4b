"""
Internal configuration constants for guestmix.

Every default used by the library and the CLI lives here. Changing a constant
propagates through the corpus, gazetteer, model, and CLI layers.
"""

from __future__ import annotations

import os

# Environment variables
ENV_KEY_WORKDIR = "GUESTMIX_WORKDIR"
ENV_KEY_LOG_LEVEL = "GUESTMIX_LOG_LEVEL"

# Work directory layout
DEFAULT_WORKDIR_NAME = "guestmix_work"
WORKDIR = os.getenv(ENV_KEY_WORKDIR, os.path.join(os.getcwd(), DEFAULT_WORKDIR_NAME))

SETTINGS_FILENAME = "guestmix_settings.yaml"
RUN_CONFIG_FILENAME = "guestmix.yaml"
LOGS_DIR = "logs"
MANIFESTS_DIR = "manifests"
MODELS_DIR = "models"
METRICS_DIR = "metrics"

SENTENCES_FILENAME = "sentences.jsonl"
LOCATIONS_FILENAME = "locations.csv"
INGEST_STATS_FILENAME = "ingest_stats.json"
WITH_TERMS_FILENAME = "with_terms.jsonl"
WITHOUT_TERMS_FILENAME = "without_terms.jsonl"
FILTER_STATS_FILENAME = "filter_stats.json"
EXPANDED_LEXICON_FILENAME = "lexicon_expanded.tsv"
EXPANSION_REPORT_FILENAME = "expansion_report.tsv"
SAMPLE_FILENAME = "sample.tsv"
SAMPLE_POOL_FILENAME = "sample_pool.jsonl"
LABELED_FILENAME = "labeled.jsonl"
ADJUDICATION_FILENAME = "adjudication.tsv"
AGREEMENT_FILENAME = "agreement.json"
SPLIT_FILENAME = "split.jsonl"
PREDICTIONS_FILENAME = "predictions.jsonl"
QUALITATIVE_FILENAME = "qualitative.json"
COMPOSITION_FILENAME = "composition.json"
GEOJSON_FILENAME = "composition.geojson"
MISSING_LOCATIONS_FILENAME = "missing_locations.tsv"
COMPARISON_JSON_FILENAME = "comparison.json"
COMPARISON_TEXT_FILENAME = "comparison.txt"
COMPARISON_CSV_FILENAME = "comparison.csv"
TEXT_PREDICTIONS_FILENAME = "predictions_text.jsonl"
GRADCHECK_FILENAME = "gradcheck.json"
RUNTIME_FILENAME = "runtime.json"
CHECKPOINT_SUFFIX = ".ckpt"
HISTORY_SUFFIX = ".history.json"

# Synthetic corpus layout
SYNTH_DIR = "synth"
REVIEWS_FILENAME = "reviews.jsonl"
VECTORS_FILENAME = "vectors.vec"
ANNOTATIONS_DIR = "annotations"
DEFAULT_SYNTH_REVIEWS = 400
DEFAULT_SYNTH_DIM = 16
DEFAULT_SYNTH_ANNOTATORS = 3
DEFAULT_SYNTH_FLIP_RATE = 0.05

# Bundled resources
RESOURCES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "resources")
DEFAULT_ABBREVIATIONS_PATH = os.path.join(RESOURCES_DIR, "abbreviations_de.txt")
DEFAULT_LEXICON_PATH = os.path.join(RESOURCES_DIR, "nationalities_de.tsv")
DEFAULT_VETO_PATH = os.path.join(RESOURCES_DIR, "veto_de.txt")

# Corpus
REVIEW_FORMATS = ("jsonl", "csv")
CSV_REQUIRED_COLUMNS = ("business_id", "review_id", "text")
DATE_FORMAT = "%Y-%m-%d"

# Embeddings / subwords
SUBWORD_MIN_N = 3
SUBWORD_MAX_N = 6
SUBWORD_BUCKETS = 2 ** 20
SUBWORD_FIT_EPOCHS = 5
SUBWORD_FIT_LR = 0.5
SUBWORD_FIT_MAX_WORDS = 50000
SUBWORD_CACHE_SIZE = 2 ** 16
VEC_WRITE_PRECISION = 9
FIXTURE_DIM = 8

# Gazetteer
TERM_KINDS = ("demonym", "adjective", "slang")
TERM_SOURCES = ("seed", "inflected", "expanded")
DEFAULT_KNN_K = 10
DEFAULT_MIN_SIM = 0.5

# Dataset
DEFAULT_SAMPLE_SIZE = 750
DEFAULT_SAMPLE_RATIO = 0.5
DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_SEED = 42
FOLD_TRAIN = "train"
FOLD_VALIDATION = "validation"

# Models
MODEL_KINDS = ("dict", "tfidf-svm", "emb-lstm", "emb-bilstm", "ft-lstm", "ft-bilstm")
EMBEDDING_MODE_LEARNED = "learned"
EMBEDDING_MODE_PRETRAINED = "pretrained"
POOLING_MODES = ("final", "mean")
DEFAULT_LAYERS = 2
DEFAULT_HIDDEN = 64
DEFAULT_LEARNED_DIM = 32
DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_EPOCHS = 30
DEFAULT_PATIENCE = 5
DEFAULT_LR = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8
DEFAULT_CLIP_NORM = 5.0
DEFAULT_MAX_SEQ_LEN = 64
FORGET_BIAS_INIT = 1.0
CLASS_THRESHOLD = 0.5

DEFAULT_SVM_LAMBDA = 1e-4
DEFAULT_SVM_EPOCHS = 20
DEFAULT_MIN_DF = 1

UNK_TOKEN = "<unk>"

# Checkpoints
CHECKPOINT_MAGIC = b"GUESTMIX"
CHECKPOINT_FORMAT_VERSION = 1

# Composition
AGGREGATION_WINDOWS = ("month", "quarter", "all")
DEFAULT_WINDOW = "all"
DEFAULT_MIN_SUPPORT = 30
ALL_TIME_LABEL = "all-time"

# Gradient check
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_SEEDS = 10
