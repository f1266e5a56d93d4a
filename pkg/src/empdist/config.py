"""Run configuration (YAML) and its validation."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dataset_io import DEFAULT_SCORE_RANGE, SchemaConfig
from .encoders.registry import REGISTRY, EncoderSpec
from .encoders.regressor import TrainConfig
from .ensemble import CombinerKind
from .errors import ConfigInvalid


class DataPaths(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    train: Path
    dev: Path
    test: Path | None = None

    def for_split(self, split: str) -> Path:
        path = getattr(self, split)
        if path is None:
            raise ConfigInvalid(f"data.{split}: no file configured")
        return path


def _default_combiners() -> list[CombinerKind]:
    return [CombinerKind(kind=k) for k in ("mean", "linear_regression", "svr", "gradient_boosted_trees")]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    data: DataPaths
    schema_: SchemaConfig = Field(default_factory=SchemaConfig, alias="schema")
    encoders: list[EncoderSpec] = Field(min_length=1)
    train: TrainConfig = Field(default_factory=TrainConfig)
    combiners: list[CombinerKind] = Field(default_factory=_default_combiners)
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE
    seed: int = 42
    run_dir: Path = Path("runs/default")
    use_demographics: bool = False

    @field_validator("combiners", mode="before")
    @classmethod
    def _combiner_shorthand(cls, value):
        # allow `- svr` as well as `- {kind: svr, hyper: {...}}`
        if isinstance(value, list):
            return [{"kind": v} if isinstance(v, str) else v for v in value]
        return value

    @field_validator("encoders")
    @classmethod
    def _known_encoders(cls, value: list[EncoderSpec]):
        names = [e.name for e in value]
        unknown = [n for n in names if n not in REGISTRY]
        if unknown:
            raise ValueError(f"unknown encoder(s) {unknown}; registered: {sorted(REGISTRY)}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate encoder names: {names}")
        return value

    @model_validator(mode="after")
    def _finish(self):
        lo, hi = self.score_range
        if not lo < hi:
            raise ValueError(f"score_range must satisfy lo < hi, got {self.score_range}")
        kinds = [c.kind for c in self.combiners]
        if len(set(kinds)) != len(kinds):
            raise ValueError(f"each combiner kind may appear once, got {kinds}")
        if "mean" not in kinds:
            object.__setattr__(self, "combiners", [CombinerKind(kind="mean"), *self.combiners])
        # one seed drives every stochastic component
        if "seed" in self.train.model_fields_set and self.train.seed != self.seed:
            raise ValueError(f"train.seed ({self.train.seed}) conflicts with seed ({self.seed})")
        object.__setattr__(self, "train", self.train.model_copy(update={"seed": self.seed}))
        return self

    @property
    def schema_config(self) -> SchemaConfig:
        return self.schema_

    def with_overrides(self, seed: int | None = None, run_dir: str | os.PathLike | None = None) -> "RunConfig":
        raw = self.model_dump(by_alias=True)
        if seed is not None:
            raw["seed"] = seed
            raw["train"]["seed"] = seed
        if run_dir is not None:
            raw["run_dir"] = Path(run_dir)
        return validate_config(raw)


def _format_errors(exc: ValidationError) -> list[str]:
    messages = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            messages.append(f"{loc}: unknown key")
        else:
            messages.append(f"{loc}: {err['msg']}")
    return messages


def validate_config(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping at the top level")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigInvalid(_format_errors(exc)) from None


def load_config(path: str | os.PathLike) -> RunConfig:
    """Read and validate a YAML run config.

    Relative data paths and ``run_dir`` are resolved against the directory
    holding the config file.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{path}: top level must be a mapping")

    base = path.resolve().parent
    data = raw.get("data")
    if isinstance(data, dict):
        raw["data"] = {k: _resolve(base, v) for k, v in data.items()}
    if "run_dir" in raw:
        raw["run_dir"] = _resolve(base, raw["run_dir"])
    else:
        raw["run_dir"] = base / "runs" / path.stem
    return validate_config(raw)


def _resolve(base: Path, value):
    if isinstance(value, str) and value and not os.path.isabs(value):
        return os.path.normpath(base / value)
    return value
