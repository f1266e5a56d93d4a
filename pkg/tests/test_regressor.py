import math

import numpy as np
import pytest
import torch

from empdist.encoders import (
    EncoderSpec,
    TrainConfig,
    load_model,
    load_report,
    predict,
    save_model,
    train_regressor,
)
from empdist.errors import DegenerateLabels, MissingArtifact, NonFiniteLoss
from empdist.metrics import pearson
from empdist.synthetic import make_records

TOY = EncoderSpec(name="toy", pooling="mean_tokens")
FAST = TrainConfig(learning_rate=0.1, epochs=40, batch_size=16, seed=42)


def examples(records, target="empathy"):
    return [(r["essay"], r[target]) for r in records]


@pytest.fixture(scope="module")
def oracle():
    return {
        "train": make_records(200, seed=100),
        "dev": make_records(50, seed=101),
        "test": make_records(50, seed=102),
    }


@pytest.fixture(scope="module")
def trained(oracle):
    return train_regressor(examples(oracle["train"]), examples(oracle["dev"]), TOY, FAST, target="empathy")


def test_oracle_labels_follow_token_share(oracle):
    for r in oracle["train"][:20]:
        tokens = r["essay"].split()
        assert r["empathy"] == 1 + 6 * tokens.count("sad") / len(tokens)


def test_dev_pearson_on_oracle_corpus(trained):
    model, report = trained
    assert report.best_dev_pearson >= 0.95
    assert len(report.epochs) == FAST.epochs


def test_checkpoint_is_best_dev_epoch(trained, oracle):
    model, report = trained
    finite = [e.dev_pearson for e in report.epochs if not math.isnan(e.dev_pearson)]
    assert report.best_dev_pearson == max(finite)
    dev = examples(oracle["dev"])
    pred = predict(model, [t for t, _ in dev])
    assert pearson(pred.values, [y for _, y in dev]) == report.best_dev_pearson


def test_checkpoint_selection_with_early_peak(oracle):
    # a huge learning rate peaks early and then degrades; the returned state is the peak
    cfg = TrainConfig(learning_rate=5.0, epochs=8, batch_size=16, seed=1)
    model, report = train_regressor(examples(oracle["train"]), examples(oracle["dev"]), TOY, cfg)
    dev = examples(oracle["dev"])
    r = pearson(predict(model, [t for t, _ in dev]).values, [y for _, y in dev])
    assert r == report.best_dev_pearson
    assert report.best_dev_pearson == max(e.dev_pearson for e in report.epochs if not math.isnan(e.dev_pearson))


def test_test_split_predictions(trained, oracle):
    model, _ = trained
    test = examples(oracle["test"])
    pred = predict(model, [t for t, _ in test])
    assert len(pred) == 50
    assert pearson(pred.values, [y for _, y in test]) >= 0.95


def test_distress_target_trains_too(oracle):
    model, report = train_regressor(
        examples(oracle["train"], "distress"), examples(oracle["dev"], "distress"), TOY, FAST, target="distress"
    )
    assert model.target == "distress"
    assert report.best_dev_pearson >= 0.95


def test_identical_seed_identical_runs(oracle):
    tr, dv = examples(oracle["train"][:80]), examples(oracle["dev"][:30])
    cfg = TrainConfig(learning_rate=0.1, epochs=5, seed=3)
    m1, r1 = train_regressor(tr, dv, TOY, cfg)
    m2, r2 = train_regressor(tr, dv, TOY, cfg)
    assert r1 == r2
    texts = [t for t, _ in dv]
    assert predict(m1, texts).values == predict(m2, texts).values
    assert m1.train_fingerprint == m2.train_fingerprint


def test_different_seed_changes_fingerprint(oracle):
    tr, dv = examples(oracle["train"][:40]), examples(oracle["dev"][:20])
    m1, _ = train_regressor(tr, dv, TOY, TrainConfig(epochs=1, seed=1))
    m2, _ = train_regressor(tr, dv, TOY, TrainConfig(epochs=1, seed=2))
    assert m1.train_fingerprint != m2.train_fingerprint


def test_degenerate_labels():
    tr = [("some essay text", 4.0), ("another essay", 4.0)]
    dv = [("dev text", 3.0), ("more dev", 5.0)]
    with pytest.raises(DegenerateLabels):
        train_regressor(tr, dv, TOY, TrainConfig(epochs=1))
    with pytest.raises(DegenerateLabels):
        train_regressor(dv, tr, TOY, TrainConfig(epochs=1))


def test_non_finite_loss_reports_epoch(oracle):
    cfg = TrainConfig(learning_rate=1e30, epochs=5, seed=0)
    with pytest.raises(NonFiniteLoss) as info:
        train_regressor(examples(oracle["train"][:64]), examples(oracle["dev"][:16]), TOY, cfg)
    assert info.value.epoch >= 1


def test_predictions_are_clamped(oracle):
    model, _ = train_regressor(examples(oracle["train"][:40]), examples(oracle["dev"][:20]), TOY,
                               TrainConfig(epochs=1))
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.fill_(9.3)
        assert predict(model, ["x"]).values == (7.0,)
        model.head.bias.fill_(-3.0)
        assert predict(model, ["x"]).values == (1.0,)


def test_single_character_text_valid(oracle):
    model, _ = train_regressor(examples(oracle["train"][:40]), examples(oracle["dev"][:20]), TOY,
                               TrainConfig(learning_rate=0.1, epochs=2))
    (v,) = predict(model, ["a"]).values
    assert math.isfinite(v) and 1.0 <= v <= 7.0


def test_save_and_load_roundtrip(tmp_path, oracle):
    model, report = train_regressor(examples(oracle["train"][:60]), examples(oracle["dev"][:20]), TOY,
                                    TrainConfig(learning_rate=0.1, epochs=3))
    save_model(model, tmp_path / "m", report)
    loaded = load_model(tmp_path / "m")
    texts = [r["essay"] for r in oracle["test"]]
    assert predict(loaded, texts).values == predict(model, texts).values
    assert loaded.train_fingerprint == model.train_fingerprint
    assert load_report(tmp_path / "m") == report
    meta = (tmp_path / "m" / "meta.txt").read_text()
    assert "encoder=toy" in meta and f"fingerprint={model.train_fingerprint}" in meta


def test_load_missing(tmp_path):
    with pytest.raises(MissingArtifact):
        load_model(tmp_path / "nothing")


def test_finetune_and_frozen_transformer(tiny_roberta_cache, monkeypatch, oracle):
    monkeypatch.setenv("EMPDIST_ENCODER_CACHE", str(tiny_roberta_cache))
    tr, dv = examples(oracle["train"][:32]), examples(oracle["dev"][:16])
    cfg = TrainConfig(learning_rate=1e-3, epochs=2, batch_size=8, seed=5)
    for frozen in (True, False):
        spec = EncoderSpec(name="roberta-base", pooling="mean_tokens", max_tokens=32, frozen=frozen)
        before = {k: v.clone() for k, v in _encoder_params(spec, monkeypatch).items()}
        m1, r1 = train_regressor(tr, dv, spec, cfg)
        m2, r2 = train_regressor(tr, dv, spec, cfg)
        assert r1 == r2
        texts = [t for t, _ in dv]
        assert predict(m1, texts).values == predict(m2, texts).values
        after = dict(m1.encoder.model.named_parameters())
        changed = any(not torch.equal(before[k], after[k]) for k in before)
        assert changed is (not frozen)


def _encoder_params(spec, monkeypatch):
    from empdist.encoders import load_encoder

    return dict(load_encoder(spec).model.named_parameters())


def test_transformer_model_persistence(tmp_path, tiny_roberta_cache, monkeypatch, oracle):
    monkeypatch.setenv("EMPDIST_ENCODER_CACHE", str(tiny_roberta_cache))
    spec = EncoderSpec(name="roberta-base", pooling="cls_token", max_tokens=32, frozen=False)
    tr, dv = examples(oracle["train"][:24]), examples(oracle["dev"][:12])
    model, report = train_regressor(tr, dv, spec, TrainConfig(learning_rate=1e-3, epochs=1, batch_size=8))
    save_model(model, tmp_path / "hf", report)
    loaded = load_model(tmp_path / "hf")
    texts = [t for t, _ in dv]
    np.testing.assert_array_equal(predict(loaded, texts).values, predict(model, texts).values)
