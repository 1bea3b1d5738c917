import math
import re

import numpy as np
import pytest

from morphner.numcore import TrainingError, sgd_step
from morphner.tagger import TaggerConfig, TaggerModel
from morphner.training import BEST_NAME, CHECKPOINT_NAME, TrainConfig, evaluate, train


def build(sentences, **overrides):
    kw = dict(d_w=8, d_c=4, d_m=4, p=8, char_input_dim=4, morph_input_dim=4, morph_scheme="wor", seed=0)
    kw.update(overrides)
    return TaggerModel.build(TaggerConfig(**kw), sentences)


def test_zero_lr_leaves_parameters(synthetic_train):
    m = build(synthetic_train[:5])
    before = m.state()
    _, report = train(m, synthetic_train[:5], cfg=TrainConfig(lr=0.0, epochs=1))
    assert len(report.nll) == 1
    for k, v in m.state().items():
        np.testing.assert_array_equal(v, before[k])


def test_nll_decreases_over_first_epochs(synthetic_train):
    m = build(synthetic_train)
    _, report = train(m, synthetic_train, cfg=TrainConfig(epochs=5, seed=0))
    assert all(b < a for a, b in zip(report.nll, report.nll[1:])), report.nll


def test_same_seed_same_report(synthetic_train):
    reports = []
    for _ in range(2):
        m = build(synthetic_train[:10])
        reports.append(train(m, synthetic_train[:10], synthetic_train[:10], TrainConfig(epochs=3, seed=4))[1])
    assert reports[0].nll == reports[1].nll
    assert reports[0].dev_f1 == reports[1].dev_f1
    assert reports[0].best_epoch == reports[1].best_epoch


def test_loss_nonnegative_around_updates(synthetic_train):
    m = build(synthetic_train[:10])
    params = m.trainable()
    for s in synthetic_train[:10]:
        loss = m.loss(s)
        assert float(loss.value) >= 0.0
        loss.backward()
        sgd_step(params, 0.01, 5.0)
        assert float(m.loss(s).value) >= 0.0


def test_local_descent(synthetic_train):
    m = build(synthetic_train)
    params = m.trainable()
    ok = 0
    for s in synthetic_train:
        state = m.state()
        loss = m.loss(s)
        before = float(loss.value)
        loss.backward()
        sgd_step(params, 1e-4, math.inf)
        ok += float(m.loss(s).value) <= before
        m.load_state(state)
    assert ok >= 0.95 * len(synthetic_train)


def test_overfit_five_sentences(synthetic_train):
    sents = synthetic_train[:5]
    m = build(sents, d_w=10, p=10)
    train(m, sents, sents, TrainConfig(epochs=100, lr=0.05, dropout=0.0, seed=0, target_f1=1.0))
    for s in sents:
        assert m.tag(s) == s.labels


def test_checkpoint_resume_bit_identical(synthetic_train, tmp_path):
    sents, dev = synthetic_train[:8], synthetic_train[8:12]
    full = build(sents)
    train(full, sents, dev, TrainConfig(epochs=4, seed=1, checkpoint_dir=str(tmp_path / "a")))

    part = build(sents)
    train(part, sents, dev, TrainConfig(epochs=2, seed=1, checkpoint_dir=str(tmp_path / "b")))
    resumed = build(sents)
    _, report = train(resumed, sents, dev, TrainConfig(epochs=4, seed=1, checkpoint_dir=str(tmp_path / "b")),
                      resume=tmp_path / "b" / CHECKPOINT_NAME)
    assert len(report.nll) == 4
    for k, v in full.state().items():
        np.testing.assert_array_equal(resumed.state()[k], v)
    assert (tmp_path / "b" / BEST_NAME).exists()


def test_dev_selection_restores_best(synthetic_train):
    sents = synthetic_train[:10]
    m = build(sents)
    _, report = train(m, sents, sents, TrainConfig(epochs=6, seed=2))
    assert len(report.dev_f1) == 6
    assert evaluate(m, sents) == max(report.dev_f1)
    assert report.dev_f1[report.best_epoch] == max(report.dev_f1)


def test_patience_stops_early(synthetic_train):
    sents = synthetic_train[:6]
    m = build(sents)
    _, report = train(m, sents, sents, TrainConfig(epochs=50, lr=0.0, seed=0, patience=2))
    assert len(report.nll) == 3


def test_log_lines(synthetic_train, tmp_path):
    log = tmp_path / "train.log"
    m = build(synthetic_train[:4])
    train(m, synthetic_train[:4], synthetic_train[:4], TrainConfig(epochs=2, log_path=str(log)))
    lines = log.read_text().splitlines()
    assert len(lines) == 2
    assert all(re.fullmatch(r"epoch=\d+ nll=[0-9.]+ devF1=[0-9.]+", line) for line in lines)


def test_non_finite_loss_aborts(synthetic_train):
    m = build(synthetic_train[:3])
    m.params["out.b"].value[:] = np.nan
    with pytest.raises(TrainingError, match="epoch 1"):
        train(m, synthetic_train[:3], cfg=TrainConfig(epochs=1))


def test_empty_training_set(synthetic_train):
    with pytest.raises(ValueError):
        train(build(synthetic_train[:3]), [], cfg=TrainConfig(epochs=1))


def test_frozen_word_embeddings(synthetic_train):
    m = build(synthetic_train[:5], fine_tune_words=False)
    before = m.params["word_emb"].value.copy()
    train(m, synthetic_train[:5], cfg=TrainConfig(epochs=1))
    np.testing.assert_array_equal(m.params["word_emb"].value, before)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(lr=-1.0)
