"""Stacking combiners over base-model predictions.

Trainable combiners are fit on dev-split predictions against dev gold and then
applied to test-split predictions. The same hyperparameters are used for both
targets, with one independently fitted combiner per target.
"""

from __future__ import annotations

import logging
import os
import pickle
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dataset_io import DEFAULT_SCORE_RANGE, Target
from .encoders.regressor import PredictionVector, read_metadata, write_metadata
from .errors import (
    ColumnMismatch,
    DegenerateGold,
    FingerprintMismatch,
    MissingArtifact,
    ShapeMismatch,
    TargetMismatch,
)
from .hashing import fingerprint

log = logging.getLogger(__name__)

Kind = Literal["mean", "linear_regression", "svr", "gradient_boosted_trees"]
KINDS: tuple[Kind, ...] = ("mean", "linear_regression", "svr", "gradient_boosted_trees")

HYPER_DEFAULTS: dict[str, dict[str, Any]] = {
    "mean": {},
    "linear_regression": {},
    "svr": {"kernel": "rbf", "C": 1.0, "epsilon": 0.1, "gamma": "scale"},
    "gradient_boosted_trees": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
}


class CombinerKind(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Kind
    hyper: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_hyper(self):
        allowed = HYPER_DEFAULTS[self.kind]
        unknown = sorted(set(self.hyper) - set(allowed))
        if unknown:
            raise ValueError(
                f"hyperparameters {unknown} not accepted by {self.kind!r}; allowed: {sorted(allowed)}"
            )
        return self

    @property
    def resolved_hyper(self) -> dict[str, Any]:
        return {**HYPER_DEFAULTS[self.kind], **self.hyper}

    @property
    def trainable(self) -> bool:
        return self.kind != "mean"


@dataclass(frozen=True)
class PredictionMatrix:
    values: np.ndarray  # (n_examples, n_models)
    model_names: tuple[str, ...]
    target: Target
    dataset_fingerprint: str

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ShapeMismatch(f"prediction matrix must be 2-d with >= 1 column, got {self.values.shape}")
        if self.values.shape[1] != len(self.model_names):
            raise ShapeMismatch("column count differs from number of model names")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("prediction matrix has non-finite entries")

    @property
    def n_examples(self) -> int:
        return self.values.shape[0]

    def select(self, names: Sequence[str]) -> "PredictionMatrix":
        idx = [self.model_names.index(n) for n in names]
        return PredictionMatrix(self.values[:, idx], tuple(names), self.target, self.dataset_fingerprint)


@dataclass
class FittedCombiner:
    kind: CombinerKind
    model_names: tuple[str, ...]
    target: Target
    fitted_state: dict = field(default_factory=dict)
    fit_fingerprint: str = ""
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE

    @property
    def name(self) -> str:
        return self.kind.kind


def assemble_matrix(predictions: Sequence[PredictionVector]) -> PredictionMatrix:
    if not predictions:
        raise ShapeMismatch("no prediction vectors to assemble")
    first = predictions[0]
    for p in predictions[1:]:
        if p.target != first.target:
            raise TargetMismatch(f"{p.source_model} predicts {p.target}, {first.source_model} predicts {first.target}")
        if len(p) != len(first):
            raise ShapeMismatch(f"{p.source_model} has {len(p)} rows, {first.source_model} has {len(first)}")
        if p.dataset_fingerprint != first.dataset_fingerprint:
            raise FingerprintMismatch(f"{p.source_model} and {first.source_model} were computed on different datasets")
    names = [p.source_model for p in predictions]
    if len(set(names)) != len(names):
        raise ShapeMismatch(f"duplicate model names: {names}")
    values = np.column_stack([np.asarray(p.values, dtype=np.float64) for p in predictions])
    return PredictionMatrix(values, tuple(names), first.target, first.dataset_fingerprint)


def row_means(values: np.ndarray) -> np.ndarray:
    """Correctly rounded row means.

    Sums are formed exactly with rationals, so the result does not depend on
    column order and a row of identical values returns that value.
    """
    n_models = values.shape[1]
    out = np.empty(values.shape[0], dtype=np.float64)
    for i, row in enumerate(values.tolist()):
        out[i] = float(sum(map(Fraction, row), Fraction(0)) / n_models)
    return out


def _fit_ols(X: np.ndarray, y: np.ndarray) -> dict:
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    # centring keeps the intercept out of the minimum-norm objective
    w, _, rank, _ = np.linalg.lstsq(X - x_mean, y - y_mean, rcond=None)
    if rank < X.shape[1]:
        log.info("linear_regression: design matrix rank %d < %d columns, using minimum-norm solution",
                 rank, X.shape[1])
    return {"weights": w, "intercept": float(y_mean - x_mean @ w), "rank": int(rank)}


def _fit_svr(X, y, hyper) -> dict:
    from sklearn.pipeline import make_pipeline
    from sklearn.preprocessing import StandardScaler
    from sklearn.svm import SVR

    est = make_pipeline(StandardScaler(), SVR(**hyper))
    est.fit(X, y)
    return {"estimator": est}


def _fit_gbt(X, y, hyper, seed) -> dict:
    from xgboost import XGBRegressor

    est = XGBRegressor(
        objective="reg:squarederror",
        tree_method="exact",
        random_state=seed,
        n_jobs=1,
        **hyper,
    )
    est.fit(X, y)
    return {"estimator": est}


def fit_combiner(
    kind: CombinerKind,
    dev_matrix: PredictionMatrix,
    dev_gold: Sequence[float],
    seed: int = 42,
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE,
) -> FittedCombiner:
    y = np.asarray(dev_gold, dtype=np.float64)
    if y.shape[0] != dev_matrix.n_examples:
        raise ShapeMismatch(f"{dev_matrix.n_examples} prediction rows but {y.shape[0]} gold values")
    if kind.trainable and np.all(y == y[0]):
        raise DegenerateGold(f"{kind.kind} cannot be fit to constant gold scores")

    hyper = kind.resolved_hyper
    X = dev_matrix.values
    if kind.kind == "mean":
        state = {}
    elif kind.kind == "linear_regression":
        state = _fit_ols(X, y)
    elif kind.kind == "svr":
        state = _fit_svr(X, y, hyper)
    else:
        state = _fit_gbt(X, y, hyper, seed)

    return FittedCombiner(
        kind=kind,
        model_names=dev_matrix.model_names,
        target=dev_matrix.target,
        fitted_state=state,
        fit_fingerprint=fingerprint(
            "combiner", kind, list(dev_matrix.model_names), dev_matrix.target, X, y, seed
        ),
        score_range=tuple(score_range),
    )


def combine(fitted: FittedCombiner, test_matrix: PredictionMatrix) -> PredictionVector:
    if tuple(test_matrix.model_names) != tuple(fitted.model_names):
        raise ColumnMismatch(
            f"columns {list(test_matrix.model_names)} differ from fit-time columns {list(fitted.model_names)}"
        )
    if test_matrix.target != fitted.target:
        raise TargetMismatch(f"combiner fit for {fitted.target}, matrix holds {test_matrix.target}")
    X = test_matrix.values
    kind = fitted.kind.kind
    if kind == "mean":
        raw = row_means(X)
    elif kind == "linear_regression":
        raw = X @ fitted.fitted_state["weights"] + fitted.fitted_state["intercept"]
    else:
        raw = np.asarray(fitted.fitted_state["estimator"].predict(X), dtype=np.float64)
    lo, hi = fitted.score_range
    values = np.clip(raw, lo, hi)
    return PredictionVector(
        values=tuple(float(v) for v in values),
        source_model=f"ensemble:{kind}",
        target=test_matrix.target,
        dataset_fingerprint=test_matrix.dataset_fingerprint,
    )


def save_combiner(fitted: FittedCombiner, directory: str | os.PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"{fitted.target}.pkl", "wb") as f:
        pickle.dump(fitted, f)
    meta = {
        "kind": fitted.kind.kind,
        "target": fitted.target,
        "columns": ",".join(fitted.model_names),
        "fit_fingerprint": fitted.fit_fingerprint,
        "score_lo": repr(fitted.score_range[0]),
        "score_hi": repr(fitted.score_range[1]),
    }
    meta.update({f"hyper.{k}": v for k, v in sorted(fitted.kind.resolved_hyper.items())})
    if fitted.kind.kind == "linear_regression":
        meta["weights"] = ",".join(repr(float(w)) for w in fitted.fitted_state["weights"])
        meta["intercept"] = repr(fitted.fitted_state["intercept"])
    write_metadata(directory / f"{fitted.target}.meta.txt", meta)
    return directory


def load_combiner(directory: str | os.PathLike, target: Target) -> FittedCombiner:
    path = Path(directory) / f"{target}.pkl"
    if not path.is_file():
        raise MissingArtifact(f"no fitted combiner at {path}")
    with open(path, "rb") as f:
        return pickle.load(f)


def combiner_fingerprint(directory: str | os.PathLike, target: Target) -> str | None:
    path = Path(directory) / f"{target}.meta.txt"
    if not path.is_file():
        return None
    return read_metadata(path).get("fit_fingerprint")

