"""train -> predict -> ensemble -> score orchestration over a run directory.

Layout under ``run_dir``::

    models/<encoder>/<target>/        model.pt, meta.txt, train_report.json
    predictions/<split>/<encoder>.<target>.tsv
    ensembles/<kind>/                 <target>.pkl, <target>.meta.txt,
                                      dev.<target>.tsv, test.<target>.tsv
    results.log                       append-only EvalReport blocks
    submission.tsv

Nothing derived from the test split's gold scores is written anywhere except
the evaluation reports.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .dataset_io import TARGETS, Dataset, Split, Target, load_dataset, texts, to_examples
from .encoders.regressor import (
    load_model,
    predict,
    read_metadata,
    regressor_fingerprint,
    save_model,
    train_regressor,
)
from .ensemble import assemble_matrix, combine, fit_combiner, save_combiner
from .errors import MetricError, MissingArtifact
from .metrics import EvalReport, append_report, evaluate
from .predfiles import (
    align_by_id,
    read_prediction_cache,
    read_predictions,
    write_prediction_cache,
    write_submission,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleResult:
    empathy_path: Path
    distress_path: Path
    report: EvalReport | None
    dev_report: EvalReport


def load_split(config: RunConfig, split: Split) -> Dataset:
    return load_dataset(config.data.for_split(split), split, config.schema_config, config.score_range)


def model_dir(config: RunConfig, encoder_slug: str, target: Target) -> Path:
    return config.run_dir / "models" / encoder_slug / target


def prediction_path(config: RunConfig, split: Split, encoder_slug: str, target: Target) -> Path:
    return config.run_dir / "predictions" / split / f"{encoder_slug}.{target}.tsv"


def ensemble_dir(config: RunConfig, kind: str) -> Path:
    return config.run_dir / "ensembles" / kind


def results_log(config: RunConfig) -> Path:
    return config.run_dir / "results.log"


def run_train(config: RunConfig) -> list[Path]:
    """Train one regressor per (encoder, target), reusing artifacts whose fingerprint matches."""
    train = load_split(config, "train")
    dev = load_split(config, "dev")
    paths = []
    for spec in config.encoders:
        for target in TARGETS:
            train_ex = to_examples(train, target, config.use_demographics)
            dev_ex = to_examples(dev, target, config.use_demographics)
            out = model_dir(config, spec.slug, target)
            expected = regressor_fingerprint(train_ex, dev_ex, spec, config.train, target, config.score_range)
            meta_path = out / "meta.txt"
            if meta_path.is_file() and (out / "model.pt").is_file():
                if read_metadata(meta_path).get("fingerprint") == expected:
                    log.info("cache hit: %s/%s (fingerprint %s)", spec.name, target, expected)
                    paths.append(out)
                    continue
            log.info("training %s for %s", spec.name, target)
            model, report = train_regressor(
                train_ex, dev_ex, spec, config.train, target=target, score_range=config.score_range
            )
            save_model(model, out, report)
            log.info("%s/%s: best dev r=%.4f at epoch %d", spec.name, target,
                     report.best_dev_pearson, report.best_epoch)
            paths.append(out)
    return paths


def run_predict(config: RunConfig, split: Split) -> list[Path]:
    dataset = load_split(config, split)
    inputs = texts(dataset, config.use_demographics)
    paths = []
    for spec in config.encoders:
        for target in TARGETS:
            mdir = model_dir(config, spec.slug, target)
            if not (mdir / "model.pt").is_file():
                raise MissingArtifact(f"no trained model for {spec.name}/{target} under {mdir}; run `train` first")
            model = load_model(mdir)
            pred = predict(model, inputs, dataset.fingerprint(), batch_size=config.train.batch_size)
            paths.append(write_prediction_cache(prediction_path(config, split, spec.slug, target), dataset.ids, pred))
    return paths


def _load_matrix(config: RunConfig, split: Split, dataset: Dataset, target: Target):
    vectors = []
    for spec in config.encoders:
        path = prediction_path(config, split, spec.slug, target)
        if not path.is_file():
            raise MissingArtifact(f"missing prediction cache {path}; run `predict --split {split}` first")
        vectors.append(read_prediction_cache(path, dataset, spec.name, target))
    return assemble_matrix(vectors)


def _log_report(config: RunConfig, report: EvalReport) -> None:
    log.info(report.format())
    append_report(report, results_log(config))


def _log_base_report(config, name, split, mats, gold, column) -> None:
    try:
        report = evaluate(mats["empathy"].values[:, column], mats["distress"].values[:, column],
                          gold["empathy"], gold["distress"], run_id=f"{name}/{split}")
    except MetricError as exc:
        log.warning("cannot score %s on %s: %s", name, split, exc)
        return
    _log_report(config, report)


def run_ensemble(config: RunConfig) -> dict[str, EnsembleResult]:
    """Fit every configured combiner on dev predictions and apply it to test predictions."""
    dev = load_split(config, "dev")
    test = load_split(config, "test")
    test_has_gold = test.has_labels()

    dev_mats = {t: _load_matrix(config, "dev", dev, t) for t in TARGETS}
    test_mats = {t: _load_matrix(config, "test", test, t) for t in TARGETS}
    dev_gold = {t: dev.gold(t) for t in TARGETS}

    # base-model rows for the comparison table
    for j, spec in enumerate(config.encoders):
        _log_base_report(config, spec.name, "dev", dev_mats, dev_gold, j)
        if test_has_gold:
            test_gold = {t: test.gold(t) for t in TARGETS}
            _log_base_report(config, spec.name, "test", test_mats, test_gold, j)

    results = {}
    for kind in config.combiners:
        out = ensemble_dir(config, kind.kind)
        test_paths, dev_preds, test_preds = {}, {}, {}
        for target in TARGETS:
            fitted = fit_combiner(kind, dev_mats[target], dev_gold[target], config.seed, config.score_range)
            save_combiner(fitted, out)
            dev_preds[target] = combine(fitted, dev_mats[target])
            test_preds[target] = combine(fitted, test_mats[target])
            write_prediction_cache(out / f"dev.{target}.tsv", dev.ids, dev_preds[target])
            test_paths[target] = write_prediction_cache(out / f"test.{target}.tsv", test.ids, test_preds[target])

        dev_report = evaluate(dev_preds["empathy"].values, dev_preds["distress"].values,
                              dev_gold["empathy"], dev_gold["distress"], run_id=f"ensemble:{kind.kind}/dev")
        _log_report(config, dev_report)
        report = None
        if test_has_gold:
            report = evaluate(test_preds["empathy"].values, test_preds["distress"].values,
                              test.gold("empathy"), test.gold("distress"), run_id=f"ensemble:{kind.kind}/test")
            _log_report(config, report)
        results[kind.kind] = EnsembleResult(test_paths["empathy"], test_paths["distress"], report, dev_report)
    return results


def run_score(
    pred_emp_path: str | os.PathLike,
    pred_dis_path: str | os.PathLike,
    gold_path: str | os.PathLike,
    config: RunConfig | None = None,
    log_path: str | os.PathLike | None = None,
    run_id: str = "",
) -> EvalReport:
    """Score two prediction files against a gold table.

    Files carrying record ids are aligned to the gold table by id; header-less
    files are aligned by position. A submission file may be passed for both
    targets: its first column is read for empathy and its second for distress.
    """
    schema = config.schema_config if config else None
    score_range = config.score_range if config else (float("-inf"), float("inf"))
    for path in (pred_emp_path, pred_dis_path, gold_path):
        if not Path(path).is_file():
            raise MissingArtifact(f"{path} does not exist")
    gold = load_dataset(gold_path, "test", schema, score_range)
    columns = {"empathy": 0, "distress": 1 if os.path.samefile(pred_emp_path, pred_dis_path) else 0}
    aligned = {}
    for target, path in (("empathy", pred_emp_path), ("distress", pred_dis_path)):
        ids, values = read_predictions(path, column=columns[target])
        aligned[target] = values if ids is None else align_by_id(ids, values, gold.ids)
    report = evaluate(aligned["empathy"], aligned["distress"], gold.gold("empathy"), gold.gold("distress"),
                      run_id=run_id or f"score:{Path(pred_emp_path).name}")
    print(report.format())
    if log_path is None and config is not None:
        log_path = results_log(config)
    if log_path is not None:
        append_report(report, log_path)
    return report


def run_submit(config: RunConfig, combiner: str = "mean", path: str | os.PathLike | None = None) -> Path:
    test = load_split(config, "test")
    out = ensemble_dir(config, combiner)
    preds = {}
    for target in TARGETS:
        cache = out / f"test.{target}.tsv"
        if not cache.is_file():
            raise MissingArtifact(f"no {combiner} ensemble output at {cache}; run `ensemble` first")
        preds[target] = read_prediction_cache(cache, test, f"ensemble:{combiner}", target)
    return write_submission(preds["empathy"], preds["distress"], path or config.run_dir / "submission.tsv")


def run_all(config: RunConfig, combiner: str = "mean") -> dict[str, EnsembleResult]:
    run_train(config)
    for split in ("dev", "test"):
        run_predict(config, split)
    results = run_ensemble(config)
    run_submit(config, combiner)
    return results
