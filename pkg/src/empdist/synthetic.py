"""Synthetic essay corpus with labels that are exact functions of token counts.

Empathy is ``1 + 6 * (share of tokens equal to "sad")`` and distress is
``1 + 6 * (share of tokens equal to "afraid")``. Everything else is filler
drawn from a small fixed vocabulary, so under mean-token pooling of the toy
encoder both labels are linear in the pooled embedding.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

EMPATHY_TOKEN = "sad"
DISTRESS_TOKEN = "afraid"
FILLER = (
    "the news story about family who lost their home after storm people "
    "community help needed very hard time reading article made think "
    "children water food shelter money"
).split()

COLUMNS = ("essay_id", "essay", "empathy", "distress", "age", "gender", "education", "income")


def make_records(n: int, seed: int, prefix: str = "r", n_tokens=(65, 110)) -> list[dict]:
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        length = int(rng.integers(n_tokens[0], n_tokens[1] + 1))
        n_sad = int(rng.integers(0, length // 2 + 1))
        n_afraid = int(rng.integers(0, (length - n_sad) // 2 + 1))
        tokens = [EMPATHY_TOKEN] * n_sad + [DISTRESS_TOKEN] * n_afraid
        tokens += [FILLER[j] for j in rng.integers(0, len(FILLER), length - n_sad - n_afraid)]
        tokens = [tokens[j] for j in rng.permutation(length)]
        records.append({
            "essay_id": f"{prefix}{i:04d}",
            "essay": " ".join(tokens),
            "empathy": 1.0 + 6.0 * n_sad / length,
            "distress": 1.0 + 6.0 * n_afraid / length,
            "age": int(rng.integers(18, 80)),
            "gender": int(rng.integers(1, 3)),
            "education": int(rng.integers(1, 7)),
            "income": "",
        })
    return records


def write_table(path: str | os.PathLike, records: list[dict], with_labels: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [c for c in COLUMNS if with_labels or c not in ("empathy", "distress")]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c] for c in columns])
    return path


def write_corpus(
    directory: str | os.PathLike,
    sizes=(200, 50, 50),
    seed: int = 0,
    test_labels: bool = True,
) -> dict[str, Path]:
    """Write ``train.tsv``, ``dev.tsv`` and ``test.tsv`` under ``directory``."""
    directory = Path(directory)
    paths = {}
    for k, (split, n) in enumerate(zip(("train", "dev", "test"), sizes)):
        records = make_records(n, seed * 1000 + k, prefix=f"{split}-")
        labelled = test_labels or split != "test"
        paths[split] = write_table(directory / f"{split}.tsv", records, with_labels=labelled)
    return paths
