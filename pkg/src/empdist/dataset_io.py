"""Reading, validating and splitting the tab-separated essay tables."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Literal, Mapping, Union

from pydantic import BaseModel, ConfigDict

from .errors import (
    DuplicateId,
    EmptyEssay,
    MalformedRow,
    MissingColumn,
    MissingDataFile,
    MissingLabel,
    NonNumericLabel,
    ScoreOutOfRange,
)
from .hashing import fingerprint

log = logging.getLogger(__name__)

Split = Literal["train", "dev", "test"]
Target = Literal["empathy", "distress"]
TARGETS: tuple[Target, ...] = ("empathy", "distress")
SPLITS: tuple[Split, ...] = ("train", "dev", "test")

DEFAULT_SCORE_RANGE = (1.0, 7.0)
# descriptive only, never enforced
ESSAY_CHAR_BAND = (300, 800)

Demographic = Union[str, int, float]


class SchemaConfig(BaseModel):
    """Column names for the id, essay and gold-score fields."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    id_column: str = "essay_id"
    essay_column: str = "essay"
    empathy_column: str | None = "empathy"
    distress_column: str | None = "distress"

    def label_column(self, target: Target) -> str | None:
        return self.empathy_column if target == "empathy" else self.distress_column


@dataclass(frozen=True)
class EssayRecord:
    record_id: str
    essay: str
    demographics: Mapping[str, Demographic] = field(default_factory=dict)
    gold_empathy: float | None = None
    gold_distress: float | None = None

    def gold(self, target: Target) -> float | None:
        return self.gold_empathy if target == "empathy" else self.gold_distress


@dataclass(frozen=True)
class Dataset:
    split_name: Split
    records: tuple[EssayRecord, ...]
    schema: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.record_id for r in self.records]

    def has_labels(self, target: Target | None = None) -> bool:
        targets = TARGETS if target is None else (target,)
        return bool(self.records) and all(
            r.gold(t) is not None for r in self.records for t in targets
        )

    def gold(self, target: Target) -> list[float]:
        return [label for _, label in to_examples(self, target)]

    def fingerprint(self) -> str:
        """Hash of ids and essays only, so stripping gold labels leaves it unchanged."""
        return fingerprint([(r.record_id, r.essay) for r in self.records])

    def label_fingerprint(self, target: Target) -> str:
        return fingerprint(self.fingerprint(), target, [r.gold(target) for r in self.records])


@dataclass(frozen=True)
class SplitStats:
    n_train: int
    n_dev: int
    n_test: int
    label_availability: Mapping[str, bool]


def _parse_demographic(cell: str) -> Demographic:
    text = cell.strip()
    # only convert when the text survives a round trip unchanged
    try:
        as_int = int(text)
        if str(as_int) == text:
            return as_int
    except ValueError:
        pass
    try:
        as_float = float(text)
        if math.isfinite(as_float) and repr(as_float) == text:
            return as_float
    except ValueError:
        pass
    return cell


def _parse_label(cell: str, column: str, row_index: int, score_range) -> float | None:
    text = cell.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise NonNumericLabel(
            f"row {row_index}: column {column!r} has non-numeric value {cell!r}"
        ) from None
    if not math.isfinite(value):
        raise NonNumericLabel(f"row {row_index}: column {column!r} is not finite ({cell!r})")
    lo, hi = score_range
    if not lo <= value <= hi:
        raise ScoreOutOfRange(
            f"row {row_index}: {column}={value} outside score range [{lo}, {hi}]"
        )
    return value


def parse_essay_table(
    raw_text: str,
    split_name: Split,
    schema_config: SchemaConfig | None = None,
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE,
) -> Dataset:
    """Parse a header-bearing TSV table into a :class:`Dataset`.

    Row indices in error messages are 1-based data rows (the header is row 0).
    Label columns missing from the header give records without gold scores.
    """
    schema_config = schema_config or SchemaConfig()
    if raw_text.startswith("\ufeff"):
        raw_text = raw_text[1:]
    reader = csv.reader(io.StringIO(raw_text, newline=""), delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("table is empty: no header row") from None
    header = [h.strip() for h in header]

    for required in (schema_config.id_column, schema_config.essay_column):
        if required not in header:
            raise MissingColumn(f"column {required!r} not in header {header}")
    label_cols = {}
    for target in TARGETS:
        col = schema_config.label_column(target)
        if col is not None and col in header:
            label_cols[target] = header.index(col)

    id_idx = header.index(schema_config.id_column)
    essay_idx = header.index(schema_config.essay_column)
    consumed = {id_idx, essay_idx, *label_cols.values()}
    demo_idx = [(i, name) for i, name in enumerate(header) if i not in consumed]

    records = []
    seen = set()
    off_band = []
    for row_index, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue  # blank line, typically a trailing newline
        if len(row) != len(header):
            raise MalformedRow(
                f"row {row_index}: expected {len(header)} fields, got {len(row)}"
            )
        record_id = row[id_idx].strip()
        if not record_id:
            raise MalformedRow(f"row {row_index}: empty record id")
        if record_id in seen:
            raise DuplicateId(f"row {row_index}: duplicate record id {record_id!r}")
        seen.add(record_id)

        essay = row[essay_idx]
        if not essay.strip():
            raise EmptyEssay(f"row {row_index}: essay for {record_id!r} is empty")
        if not ESSAY_CHAR_BAND[0] <= len(essay) <= ESSAY_CHAR_BAND[1]:
            off_band.append(record_id)

        gold = {
            t: _parse_label(row[i], header[i], row_index, score_range)
            for t, i in label_cols.items()
        }
        records.append(
            EssayRecord(
                record_id=record_id,
                essay=essay,
                demographics={name: _parse_demographic(row[i]) for i, name in demo_idx},
                gold_empathy=gold.get("empathy"),
                gold_distress=gold.get("distress"),
            )
        )

    if off_band:
        log.warning(
            "%s split: %d of %d essays outside %d-%d characters (first: %s)",
            split_name, len(off_band), len(records), *ESSAY_CHAR_BAND,
            ", ".join(off_band[:5]),
        )
    return Dataset(split_name=split_name, records=tuple(records), schema=tuple(header))


def load_dataset(
    path: str | os.PathLike,
    split_name: Split,
    schema_config: SchemaConfig | None = None,
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE,
) -> Dataset:
    if not os.path.isfile(path):
        raise MissingDataFile(f"{split_name} file {path} does not exist")
    # newline="" keeps CRLF inside quoted cells intact; csv handles CRLF row ends
    try:
        with open(path, encoding="utf-8", newline="") as f:
            raw = f.read()
    except UnicodeDecodeError as exc:
        raise MalformedRow(f"{path} is not valid UTF-8 ({exc})") from None
    return parse_essay_table(raw, split_name, schema_config, score_range)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_dataset(dataset: Dataset, schema_config: SchemaConfig | None = None) -> str:
    """Inverse of :func:`parse_essay_table` for the columns recorded in ``dataset.schema``."""
    schema_config = schema_config or SchemaConfig()
    out = io.StringIO()
    # "\r\n" makes the writer quote cells holding a bare "\r" as well as "\n"
    writer = csv.writer(out, delimiter="\t", lineterminator="\r\n")
    writer.writerow(dataset.schema)
    for rec in dataset.records:
        row = []
        for col in dataset.schema:
            if col == schema_config.id_column:
                row.append(rec.record_id)
            elif col == schema_config.essay_column:
                row.append(rec.essay)
            elif col == schema_config.empathy_column:
                row.append(_format_cell(rec.gold_empathy))
            elif col == schema_config.distress_column:
                row.append(_format_cell(rec.gold_distress))
            else:
                row.append(_format_cell(rec.demographics.get(col)))
        writer.writerow(row)
    return out.getvalue()


def split_summary(train: Dataset, dev: Dataset, test: Dataset) -> SplitStats:
    return SplitStats(
        n_train=len(train),
        n_dev=len(dev),
        n_test=len(test),
        label_availability={d.split_name: d.has_labels() for d in (train, dev, test)},
    )


def _with_demographics(rec: EssayRecord) -> str:
    parts = [f"{k}: {v}" for k, v in rec.demographics.items()]
    return " | ".join(parts) + "\n" + rec.essay


def to_examples(
    dataset: Dataset, target: Target, use_demographics: bool = False
) -> list[tuple[str, float]]:
    """(text, gold) pairs in record order.

    With ``use_demographics`` the demographic fields are prepended to the essay
    as ``key: value | ...`` on a first line.
    """
    examples = []
    for i, rec in enumerate(dataset.records):
        label = rec.gold(target)
        if label is None:
            raise MissingLabel(
                f"{dataset.split_name} record {i} ({rec.record_id!r}) has no {target} score"
            )
        text = _with_demographics(rec) if use_demographics else rec.essay
        examples.append((text, label))
    return examples


def texts(dataset: Dataset, use_demographics: bool = False) -> list[str]:
    if use_demographics:
        return [_with_demographics(r) for r in dataset.records]
    return [r.essay for r in dataset.records]
