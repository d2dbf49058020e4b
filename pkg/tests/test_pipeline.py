"""
End-to-end model ordering on synthetic data (slow).
"""
import pytest

from guestmix._config import DEFAULT_SYNTH_DIM
from guestmix.core.config_manager import ModelConfig, TrainConfig
from guestmix.core.dataset import SplitSpec, split
from guestmix.core.evaluation import evaluate
from guestmix.core.models import build_model
from guestmix.core.synth import generate_embeddings, generate_labeled

pytestmark = pytest.mark.slow

LABELED = 750
RECURRENT_MODEL = ModelConfig(layers=1, hidden=16, learned_dim=16)


def _recurrent_train(seed):
    return TrainConfig(lr=0.01, batch_size=16, max_epochs=40, patience=None, seed=seed)


@pytest.fixture(scope="module", params=[1, 2, 3])
def synthetic_run(request, gazetteer):
    seed = request.param
    data = generate_labeled(LABELED, seed=seed, g=gazetteer)
    train, validation = split(data, SplitSpec(train_fraction=0.7, seed=seed))
    words = sorted({token.surface for item in data for token in item.sentence.tokens})
    table = generate_embeddings(gazetteer, words, DEFAULT_SYNTH_DIM, seed)
    return seed, train, validation, table


def _f1(kind, run, gazetteer, model_config=None, train_config=None, table=None):
    _, train, validation, _ = run
    model = build_model(kind, model_config, train_config, gazetteer=gazetteer, table=table).fit(train)
    predictions = [p.label for p in model.predict_many(validation)]
    return evaluate(predictions, [item.gold for item in validation]).f1_binary


def test_split_is_seventy_thirty(synthetic_run):
    _, train, validation, _ = synthetic_run
    assert len(train) + len(validation) == LABELED
    assert len(train) == pytest.approx(0.7 * LABELED, abs=2)


def test_recurrent_beats_tfidf_beats_dictionary(synthetic_run, gazetteer):
    seed = synthetic_run[0]
    dictionary = _f1("dict", synthetic_run, gazetteer)
    tfidf = _f1("tfidf-svm", synthetic_run, gazetteer, ModelConfig(svm_lambda=1e-3, svm_epochs=30))
    recurrent = _f1("emb-bilstm", synthetic_run, gazetteer, RECURRENT_MODEL, _recurrent_train(seed))
    assert dictionary < tfidf < recurrent
    assert recurrent >= 0.90


def test_pretrained_subword_bilstm_beats_dictionary(synthetic_run, gazetteer):
    seed, _, _, table = synthetic_run
    dictionary = _f1("dict", synthetic_run, gazetteer)
    pretrained = _f1(
        "ft-bilstm", synthetic_run, gazetteer, RECURRENT_MODEL, _recurrent_train(seed), table=table
    )
    assert pretrained > dictionary
    assert pretrained >= 0.90
