"""
Shared fixtures for guestmix tests.
"""
import json
import os
import shutil
import tempfile
import uuid
from pathlib import Path

import numpy as np
import pytest

from guestmix._config import DEFAULT_LEXICON_PATH, DEFAULT_VETO_PATH
from guestmix.core.corpus import make_sentence
from guestmix.core.dataset import LabeledSentence
from guestmix.core.embeddings import EmbeddingTable
from guestmix.core.gazetteer import build_gazetteer, match


_LOCAL_TMP_ROOT = Path(os.environ.get("GUESTMIX_TEST_TMP_ROOT", Path(tempfile.gettempdir()) / "guestmix-tests"))


@pytest.fixture()
def tmp_path():
    """Workspace-local replacement for pytest's default tmp_path fixture."""
    root = _LOCAL_TMP_ROOT
    path = root / uuid.uuid4().hex
    try:
        root.mkdir(parents=True, exist_ok=True)
        path.mkdir(parents=True, exist_ok=True)
    except PermissionError:
        root = Path(tempfile.mkdtemp(prefix="guestmix-tests-"))
        path = root / uuid.uuid4().hex
        path.mkdir(parents=True, exist_ok=True)
    try:
        yield path
    finally:
        shutil.rmtree(path, ignore_errors=True)
        if root != _LOCAL_TMP_ROOT:
            shutil.rmtree(root, ignore_errors=True)


@pytest.fixture()
def tmp_dir(tmp_path):
    """Return a fresh temporary directory (pathlib.Path)."""
    return tmp_path


@pytest.fixture(scope="session")
def gazetteer():
    """Bundled German lexicon with inflections and the bundled veto list."""
    return build_gazetteer(DEFAULT_LEXICON_PATH, DEFAULT_VETO_PATH)


@pytest.fixture()
def small_lexicon(tmp_path):
    """A four-country lexicon file (path as str)."""
    path = tmp_path / "lexicon.tsv"
    path.write_text(
        "# surface\tcountry\tkind\n"
        "Russe\tRU\tdemonym\n"
        "russisch\tRU\tadjective\n"
        "Italiener\tIT\tdemonym\n"
        "italienisch\tIT\tadjective\n"
        "Amerikaner\tUS\tdemonym\n"
        "Holländer\tNL\tdemonym\n",
        encoding="utf-8",
    )
    return str(path)


@pytest.fixture()
def toy_table():
    """Dimension-8 table: nationality words share a direction, food words another."""
    rng = np.random.default_rng(0)
    nationality = np.eye(8)[0]
    food = np.eye(8)[1]
    rows = {
        "Russen": nationality + 0.05 * rng.normal(size=8),
        "Russe": nationality + 0.05 * rng.normal(size=8),
        "Italiener": nationality + 0.05 * rng.normal(size=8),
        "Amis": nationality + 0.05 * rng.normal(size=8),
        "Touristen": nationality + 0.05 * rng.normal(size=8),
        "Pizza": food + 0.05 * rng.normal(size=8),
        "Essen": food + 0.05 * rng.normal(size=8),
        "Hotel": np.eye(8)[2],
    }
    words = sorted(rows)
    return EmbeddingTable(words, np.vstack([rows[w] for w in words]))


def labeled(texts_and_gold, g=None):
    """LabeledSentence list from ``(text, gold)`` pairs."""
    items = []
    for index, (text, gold) in enumerate(texts_and_gold):
        sentence = make_sentence(text, review_id=f"t{index}", index=0, business_id="b1")
        has_term = bool(match(g, sentence)) if g is not None else False
        items.append(LabeledSentence(sentence, has_term=has_term, gold=gold))
    return items


@pytest.fixture()
def tiny_labeled(gazetteer):
    """Twelve sentences, half positive, that every model can fit."""
    return labeled([
        ("Im Hotel waren viele Russen.", True),
        ("Die Italiener am Nachbartisch waren laut.", True),
        ("Am Pool lagen fast nur Holländer.", True),
        ("Die meisten Gäste waren Amerikaner.", True),
        ("Das Hotel war voll mit Russen.", True),
        ("Beim Frühstück saßen viele Italiener neben uns.", True),
        ("Beim Italiener war das Essen fantastisch.", False),
        ("Das Zimmer war sauber und ruhig.", False),
        ("Die Küche ist typisch russisch.", False),
        ("Das Personal war sehr freundlich.", False),
        ("Der Pool war leider kalt.", False),
        ("Wir kommen gerne wieder.", False),
    ], gazetteer)


@pytest.fixture()
def reviews_file(tmp_path):
    """Three JSONL reviews with dates and coordinates (path as str)."""
    rows = [
        {
            "review_id": "r1", "business_id": "b1", "date": "2019-03-02", "lat": 47.26, "lon": 11.39,
            "text": "Das Hotel war voll mit Russen. Das Zimmer war sauber. Beim Italiener war das Essen gut.",
        },
        {
            "review_id": "r2", "business_id": "b1", "date": "2019-03-20", "lat": 47.26, "lon": 11.39,
            "text": "Die Italiener am Nachbartisch waren laut. Das Zimmer war sauber.",
        },
        {
            "review_id": "r3", "business_id": "b2", "date": "2019-07-11",
            "text": "Z.B. der Pool war kalt. Wir kommen gerne wieder!",
        },
    ]
    path = tmp_path / "reviews.jsonl"
    path.write_text("".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows), encoding="utf-8")
    return str(path)
