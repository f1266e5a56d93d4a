"""Prediction cache files and the submission file.

Cache files are tab-separated with a ``record_id<TAB>prediction`` header and
one row per record in dataset order; values are written with ``repr`` so
they read back bit-for-bit.

Submission files have no header and two columns, empathy then distress, with
six decimal places. This follows the leaderboard's convention and can be
changed through ``write_submission``'s ``fmt`` argument.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

from .dataset_io import Dataset, Target
from .encoders.regressor import PredictionVector
from .errors import AlignmentError, FingerprintMismatch, LengthMismatch, MalformedRow

CACHE_HEADER = ("record_id", "prediction")


def write_prediction_cache(path: str | os.PathLike, record_ids: Sequence[str], pred: PredictionVector) -> Path:
    if len(record_ids) != len(pred):
        raise LengthMismatch(f"{len(record_ids)} record ids but {len(pred)} predictions")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(CACHE_HEADER)]
    lines += [f"{rid}\t{v!r}" for rid, v in zip(record_ids, pred.values)]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path


def read_predictions(path: str | os.PathLike, column: int = 0) -> tuple[list[str] | None, list[float]]:
    """Read a cache file (ids + values) or a header-less numeric file.

    For header-less files ``column`` picks the value column, so a submission
    file can be read once per target (0 = empathy, 1 = distress).
    """
    rows = [
        line.split("\t")
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if rows and tuple(c.strip() for c in rows[0]) == CACHE_HEADER:
        ids, values = [], []
        for i, row in enumerate(rows[1:], start=1):
            if len(row) != 2:
                raise MalformedRow(f"{path}: row {i} has {len(row)} fields, expected 2")
            ids.append(row[0].strip())
            values.append(_to_float(row[1], path, i))
        return ids, values
    values = []
    for i, row in enumerate(rows):
        if column >= len(row):
            raise MalformedRow(f"{path}: row {i} has no column {column}")
        values.append(_to_float(row[column], path, i))
    return None, values


def _to_float(cell: str, path, row: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise MalformedRow(f"{path}: row {row} value {cell!r} is not numeric") from None


def read_prediction_cache(path: str | os.PathLike, dataset: Dataset, source_model: str, target: Target) -> PredictionVector:
    """Load a cache file, checking that its ids match ``dataset`` position by position."""
    ids, values = read_predictions(path)
    if ids is None:
        raise MalformedRow(f"{path} is not a prediction cache file (missing header)")
    if ids != dataset.ids:
        raise AlignmentError(f"{path}: record ids do not match the {dataset.split_name} split in order")
    return PredictionVector(tuple(values), source_model, target, dataset.fingerprint())


def align_by_id(pred_ids: Sequence[str], pred_values: Sequence[float], gold_ids: Sequence[str]) -> list[float]:
    """Reorder predictions to follow ``gold_ids``."""
    if len(set(pred_ids)) != len(pred_ids):
        raise AlignmentError("prediction file has duplicate record ids")
    if set(pred_ids) != set(gold_ids):
        gold_set, pred_set = set(gold_ids), set(pred_ids)
        offenders = [i for i in gold_ids if i not in pred_set] + [i for i in pred_ids if i not in gold_set]
        raise AlignmentError(
            f"record ids differ between predictions and gold ({len(offenders)} offenders), "
            f"first: {offenders[:5]}"
        )
    lookup = dict(zip(pred_ids, pred_values))
    return [lookup[i] for i in gold_ids]


def write_submission(
    pred_emp: PredictionVector,
    pred_dis: PredictionVector,
    path: str | os.PathLike,
    fmt: str = "{:.6f}\t{:.6f}",
) -> Path:
    if len(pred_emp) != len(pred_dis):
        raise LengthMismatch(f"{len(pred_emp)} empathy vs {len(pred_dis)} distress predictions")
    if pred_emp.dataset_fingerprint != pred_dis.dataset_fingerprint:
        raise FingerprintMismatch("empathy and distress predictions come from different datasets")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e, d in zip(pred_emp.values, pred_dis.values):
            f.write(fmt.format(e, d) + "\n")
    return path
