import csv
import random

import numpy as np
import pytest

from empdist import pipeline
from empdist.config import validate_config
from empdist.dataset_io import load_dataset
from empdist.encoders import REGISTRY, ToyEncoder, register_encoder
from empdist.encoders.regressor import read_metadata
from empdist.ensemble import load_combiner
from empdist.errors import AlignmentError, MissingArtifact
from empdist.metrics import read_results_log
from empdist.synthetic import write_corpus

COPIES = ("toy-copy-a", "toy-copy-b", "toy-copy-c")


@pytest.fixture(scope="module", autouse=True)
def copies_of_toy():
    # same loader under other names: four independent but identical base models
    for name in COPIES:
        register_encoder(name, REGISTRY["toy"].loader)
    register_encoder("toy-unigram", lambda spec: ToyEncoder(spec.pooling, spec.max_tokens, ngram_range=(1, 1)))
    yield
    for name in (*COPIES, "toy-unigram"):
        REGISTRY.pop(name)


def make_config(data_dir, run_dir, encoders=("toy",), combiners=None, epochs=40, **extra):
    raw = {
        "data": {s: str(data_dir / f"{s}.tsv") for s in ("train", "dev", "test")},
        "encoders": [{"name": n, "pooling": "mean_tokens"} for n in encoders],
        "train": {"learning_rate": 0.1, "epochs": epochs, "batch_size": 16},
        "run_dir": str(run_dir),
        **extra,
    }
    if combiners is not None:
        raw["combiners"] = combiners
    return validate_config(raw)


@pytest.fixture(scope="module")
def four_run(tmp_path_factory, synthetic_dir):
    run_dir = tmp_path_factory.mktemp("four")
    cfg = make_config(synthetic_dir, run_dir, encoders=("toy", *COPIES), epochs=10)
    results = pipeline.run_all(cfg)
    return cfg, results


def test_four_encoders_eight_artifacts(four_run):
    cfg, _ = four_run
    dirs = sorted(p for p in (cfg.run_dir / "models").glob("*/*") if (p / "model.pt").is_file())
    assert len(dirs) == 8
    fps = {read_metadata(d / "meta.txt")["fingerprint"] for d in dirs}
    assert len(fps) == 8


def test_rerun_hits_cache(four_run, monkeypatch):
    cfg, _ = four_run

    def boom(*a, **k):
        raise AssertionError("retrained despite a matching fingerprint")

    monkeypatch.setattr(pipeline, "train_regressor", boom)
    assert len(pipeline.run_train(cfg)) == 8


def test_prediction_files_align_and_rerun_is_byte_identical(four_run):
    cfg, _ = four_run
    test = pipeline.load_split(cfg, "test")
    before = {p: p.read_bytes() for p in (cfg.run_dir / "predictions").rglob("*.tsv")}
    assert len(before) == 16
    for path, data in before.items():
        ids = [line.split("\t")[0] for line in data.decode().splitlines()[1:]]
        split = path.parent.name
        assert ids == pipeline.load_split(cfg, split).ids
    pipeline.run_predict(cfg, "test")
    pipeline.run_predict(cfg, "dev")
    assert {p: p.read_bytes() for p in before} == before
    assert len(test) == 50


def test_mean_of_identical_models_equals_base(four_run):
    cfg, _ = four_run
    for target in ("empathy", "distress"):
        base = (cfg.run_dir / "predictions" / "test" / f"toy.{target}.tsv").read_bytes()
        for name in COPIES:
            assert (cfg.run_dir / "predictions" / "test" / f"{name}.{target}.tsv").read_bytes() == base
        mean_out = (cfg.run_dir / "ensembles" / "mean" / f"test.{target}.tsv").read_bytes()
        assert mean_out == base


def test_one_report_per_combiner(four_run):
    cfg, results = four_run
    assert sorted(results) == sorted(["mean", "linear_regression", "svr", "gradient_boosted_trees"])
    blocks = read_results_log(cfg.run_dir / "results.log")
    ensemble_test = [b for b in blocks if b["run_id"].startswith("ensemble:") and b["run_id"].endswith("/test")]
    assert len(ensemble_test) == 4
    for kind in results:
        assert (cfg.run_dir / "ensembles" / kind / "empathy.meta.txt").is_file()


def test_predict_without_training(tmp_path, synthetic_dir):
    cfg = make_config(synthetic_dir, tmp_path / "empty")
    with pytest.raises(MissingArtifact):
        pipeline.run_predict(cfg, "test")
    with pytest.raises(MissingArtifact):
        pipeline.run_ensemble(cfg)


# -- scoring ---------------------------------------------------------------------

def _gold_as_cache(gold, tmp_path, order=None):
    records = list(gold.records)
    if order is not None:
        records = [records[i] for i in order]
    paths = {}
    for target in ("empathy", "distress"):
        path = tmp_path / f"{target}.tsv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f, delimiter="\t", lineterminator="\n")
            w.writerow(["record_id", "prediction"])
            for r in records:
                w.writerow([r.record_id, repr(r.gold(target))])
        paths[target] = path
    return paths


def test_score_gold_against_itself(tmp_path, synthetic_dir):
    gold_path = synthetic_dir / "test.tsv"
    paths = _gold_as_cache(load_dataset(gold_path, "test"), tmp_path)
    report = pipeline.run_score(paths["empathy"], paths["distress"], gold_path, log_path=tmp_path / "r.log")
    assert report.pearson_empathy == pytest.approx(1.0, abs=1e-12)
    assert report.averaged_pearson == pytest.approx(1.0, abs=1e-12)
    assert read_results_log(tmp_path / "r.log")[0]["n"] == "50"


def test_score_is_invariant_to_row_order(tmp_path, synthetic_dir, four_run):
    cfg, _ = four_run
    gold_path = synthetic_dir / "test.tsv"
    mean_dir = cfg.run_dir / "ensembles" / "mean"
    ordered = pipeline.run_score(mean_dir / "test.empathy.tsv", mean_dir / "test.distress.tsv", gold_path)
    order = list(range(50))
    random.Random(1).shuffle(order)
    shuffled = {}
    for target in ("empathy", "distress"):
        lines = (mean_dir / f"test.{target}.tsv").read_text().splitlines()
        body = [lines[1 + i] for i in order]
        shuffled[target] = tmp_path / f"s.{target}.tsv"
        shuffled[target].write_text("\n".join([lines[0], *body]) + "\n")
    again = pipeline.run_score(shuffled["empathy"], shuffled["distress"], gold_path)
    assert again.averaged_pearson == ordered.averaged_pearson
    assert ordered.averaged_pearson >= 0.9


def test_score_mismatched_ids(tmp_path, synthetic_dir):
    gold_path = synthetic_dir / "test.tsv"
    paths = _gold_as_cache(load_dataset(gold_path, "test"), tmp_path)
    text = paths["empathy"].read_text().replace("test-0003\t", "stranger\t")
    paths["empathy"].write_text(text)
    with pytest.raises(AlignmentError, match="stranger"):
        pipeline.run_score(paths["empathy"], paths["distress"], gold_path)


def test_score_submission_file_for_both_targets(four_run, synthetic_dir):
    cfg, _ = four_run
    sub = cfg.run_dir / "submission.tsv"
    report = pipeline.run_score(sub, sub, synthetic_dir / "test.tsv")
    assert report.averaged_pearson >= 0.9


def test_score_missing_file(tmp_path, synthetic_dir):
    with pytest.raises(MissingArtifact):
        pipeline.run_score(tmp_path / "nope.tsv", tmp_path / "nope.tsv", synthetic_dir / "test.tsv")


# -- leakage and determinism -------------------------------------------------------

def test_test_labels_do_not_influence_models(tmp_path):
    with_gold = write_corpus(tmp_path / "a", sizes=(60, 20, 20), seed=3, test_labels=True)
    without = write_corpus(tmp_path / "b", sizes=(60, 20, 20), seed=3, test_labels=False)
    assert with_gold["train"].read_bytes() == without["train"].read_bytes()
    cfgs = [make_config(tmp_path / d, tmp_path / f"run-{d}", encoders=("toy", "toy-unigram"), epochs=3)
            for d in ("a", "b")]
    for cfg in cfgs:
        pipeline.run_all(cfg)
    for sub in ("models/toy/empathy", "models/toy-unigram/distress"):
        fps = [read_metadata(c.run_dir / sub / "meta.txt")["fingerprint"] for c in cfgs]
        assert fps[0] == fps[1]
    for kind in ("mean", "linear_regression", "svr", "gradient_boosted_trees"):
        fits = [load_combiner(c.run_dir / "ensembles" / kind, "empathy").fit_fingerprint for c in cfgs]
        assert fits[0] == fits[1]
    assert (cfgs[0].run_dir / "submission.tsv").read_bytes() == (cfgs[1].run_dir / "submission.tsv").read_bytes()
    # only the labelled run can report test scores
    logs = [read_results_log(c.run_dir / "results.log") for c in cfgs]
    assert any(b["run_id"].endswith("/test") for b in logs[0])
    assert not any(b["run_id"].endswith("/test") for b in logs[1])


def test_end_to_end_submission_bytes_repeat(tmp_path, synthetic_dir):
    subs = []
    for name in ("x", "y"):
        cfg = make_config(synthetic_dir, tmp_path / name, epochs=5, combiners=["mean", "svr"])
        pipeline.run_all(cfg)
        subs.append((cfg.run_dir / "submission.tsv").read_bytes())
    assert subs[0] == subs[1]
    rows = subs[0].decode().splitlines()
    assert len(rows) == 50
    vals = np.array([[float(c) for c in r.split("\t")] for r in rows])
    assert np.all((vals >= 1.0) & (vals <= 7.0))
