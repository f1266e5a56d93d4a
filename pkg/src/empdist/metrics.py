"""Pearson correlation and the averaged empathy/distress score."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from filelock import FileLock

from .errors import LengthMismatch, OutOfRange, TooFew, ZeroVariance

# |r| may exceed 1 by rounding only
_R_SLACK = 1e-12


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson's r computed in two passes (means first, then centred moments).

    Raises:
        LengthMismatch: ``x`` and ``y`` differ in length.
        TooFew: fewer than two observations.
        ZeroVariance: either input is constant; the correlation is undefined.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise LengthMismatch("pearson expects two 1-d sequences")
    if xa.shape[0] != ya.shape[0]:
        raise LengthMismatch(f"length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    if xa.shape[0] < 2:
        raise TooFew(f"need at least 2 observations, got {xa.shape[0]}")

    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0:
        raise ZeroVariance("first input is constant")
    if syy == 0.0:
        raise ZeroVariance("second input is constant")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    # rounding can push a perfect correlation a hair past 1
    if abs(r) > 1.0 and abs(r) - 1.0 <= _R_SLACK:
        r = math.copysign(1.0, r)
    return r


def averaged_pearson(r_empathy: float, r_distress: float) -> float:
    """Official ranking score: arithmetic mean of the two per-target r values."""
    for name, r in (("empathy", r_empathy), ("distress", r_distress)):
        if not (-1.0 <= r <= 1.0):
            raise OutOfRange(f"{name} correlation {r!r} outside [-1, 1]")
    return (r_empathy + r_distress) / 2.0


@dataclass(frozen=True)
class EvalReport:
    pearson_empathy: float
    pearson_distress: float
    averaged_pearson: float
    n_examples: int
    run_id: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def format(self, digits: int = 4) -> str:
        label = f"[{self.run_id}] " if self.run_id else ""
        return (
            f"{label}n={self.n_examples}  "
            f"empathy r={self.pearson_empathy:.{digits}f}  "
            f"distress r={self.pearson_distress:.{digits}f}  "
            f"averaged={self.averaged_pearson:.{digits}f}"
        )

    def to_log_block(self) -> str:
        # repr() keeps full float precision
        lines = [
            f"run_id={self.run_id}",
            f"n={self.n_examples}",
            f"r_emp={self.pearson_empathy!r}",
            f"r_dis={self.pearson_distress!r}",
            f"avg={self.averaged_pearson!r}",
        ]
        lines += [f"{k}={v}" for k, v in sorted(self.extra.items())]
        return "\n".join(lines) + "\n\n"


def evaluate(pred_emp, pred_dis, gold_emp, gold_dis, run_id: str = "") -> EvalReport:
    n = len(gold_emp)
    for name, seq in (("pred_emp", pred_emp), ("pred_dis", pred_dis), ("gold_dis", gold_dis)):
        if len(seq) != n:
            raise LengthMismatch(f"{name} has {len(seq)} values, expected {n}")
    r_emp = pearson(pred_emp, gold_emp)
    r_dis = pearson(pred_dis, gold_dis)
    return EvalReport(
        pearson_empathy=r_emp,
        pearson_distress=r_dis,
        averaged_pearson=averaged_pearson(r_emp, r_dis),
        n_examples=n,
        run_id=run_id,
    )


def append_report(report: EvalReport, log_path: str | os.PathLike) -> None:
    """Append ``report`` to the results log under a file lock."""
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(str(log_path) + ".lock"):
        with open(log_path, "a", encoding="utf-8") as f:
            f.write(report.to_log_block())


def read_results_log(log_path: str | os.PathLike) -> list[dict]:
    blocks = []
    text = Path(log_path).read_text(encoding="utf-8")
    for chunk in text.split("\n\n"):
        chunk = chunk.strip()
        if not chunk:
            continue
        blocks.append(dict(line.split("=", 1) for line in chunk.splitlines()))
    return blocks
