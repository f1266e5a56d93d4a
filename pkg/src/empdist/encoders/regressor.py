"""Encoder + affine head regressors: training, prediction and persistence."""

from __future__ import annotations

import copy
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat
from torch import nn

from ..dataset_io import DEFAULT_SCORE_RANGE, Target
from ..errors import DegenerateLabels, MissingArtifact, NonFiniteLoss, ZeroVariance
from ..hashing import fingerprint
from ..metrics import pearson
from .registry import EncoderSpec, load_encoder

log = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: PositiveFloat = 2e-5
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(16, ge=1)
    seed: int = 42
    loss: Literal["mse"] = "mse"
    weight_decay: float = Field(0.0, ge=0.0)
    grad_clip: PositiveFloat | None = None


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_pearson: float


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_pearson: float = float("nan")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        raw = json.loads(text)
        return cls(
            epochs=[EpochRecord(**e) for e in raw["epochs"]],
            best_epoch=raw["best_epoch"],
            best_dev_pearson=raw["best_dev_pearson"],
        )


@dataclass(frozen=True)
class PredictionVector:
    values: tuple[float, ...]
    source_model: str
    target: Target
    dataset_fingerprint: str

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"non-finite prediction from {self.source_model}")

    def __len__(self) -> int:
        return len(self.values)


class RegressorModel(nn.Module):
    """One encoder feeding a single affine layer, scoring one target."""

    def __init__(
        self,
        encoder_spec: EncoderSpec,
        target: Target,
        score_range: tuple[float, float] = DEFAULT_SCORE_RANGE,
        encoder: nn.Module | None = None,
    ):
        super().__init__()
        self.encoder_spec = encoder_spec
        self.target = target
        self.score_range = tuple(score_range)
        self.encoder = encoder if encoder is not None else load_encoder(encoder_spec)
        self.head = nn.Linear(self.encoder.dim, 1)
        self.train_fingerprint = ""

    @property
    def encoder_trainable(self) -> bool:
        return bool(getattr(self.encoder, "trainable", False))

    def raw_scores(self, texts) -> torch.Tensor:
        return self.head(self.encoder(texts)).squeeze(-1)

    def forward(self, texts) -> torch.Tensor:
        return self.raw_scores(texts)

    def trainable_state(self) -> dict:
        state = {f"head.{k}": v for k, v in self.head.state_dict().items()}
        if self.encoder_trainable:
            state.update({f"encoder.{k}": v for k, v in self.encoder.state_dict().items()})
        return state


def _seed_everything(seed: int) -> torch.Generator:
    torch.manual_seed(seed)
    np.random.seed(seed % (2**32))
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def _batches(n: int, batch_size: int, order: torch.Tensor | None = None):
    idx = order.tolist() if order is not None else list(range(n))
    for start in range(0, n, batch_size):
        yield idx[start:start + batch_size]


def _head_scores(model: RegressorModel, texts, cache, batch_size) -> np.ndarray:
    model.eval()
    out = []
    with torch.no_grad():
        for b in _batches(len(texts), batch_size):
            if cache is not None:
                out.append(model.head(cache[b]).squeeze(-1))
            else:
                out.append(model.raw_scores([texts[i] for i in b]))
    return torch.cat(out).double().numpy()


def regressor_fingerprint(train_examples, dev_examples, spec, config, target, score_range) -> str:
    return fingerprint(
        "regressor", list(train_examples), list(dev_examples), spec, config, target, list(score_range)
    )


def train_regressor(
    train_examples: Sequence[tuple[str, float]],
    dev_examples: Sequence[tuple[str, float]],
    spec: EncoderSpec,
    config: TrainConfig | None = None,
    target: Target = "empathy",
    score_range: tuple[float, float] = DEFAULT_SCORE_RANGE,
    encoder: nn.Module | None = None,
) -> tuple[RegressorModel, TrainReport]:
    """Fit an affine head (and the encoder, unless frozen) with MSE.

    The state returned is the one from the epoch with the highest dev Pearson;
    ties keep the earliest epoch. Epochs whose clamped dev predictions are
    constant get a NaN dev Pearson and are never selected.

    Raises:
        DegenerateLabels: train or dev gold scores are all identical.
        NonFiniteLoss: the training loss diverged.
    """
    config = config or TrainConfig()
    if not train_examples or not dev_examples:
        raise ValueError("train and dev examples must be non-empty")
    train_texts = [t for t, _ in train_examples]
    train_y = torch.tensor([y for _, y in train_examples], dtype=torch.float32)
    dev_texts = [t for t, _ in dev_examples]
    dev_y = [y for _, y in dev_examples]
    if len(set(train_y.tolist())) < 2:
        raise DegenerateLabels("all training labels are identical")
    if len(set(dev_y)) < 2:
        raise DegenerateLabels("all dev labels are identical; dev Pearson is undefined")

    gen = _seed_everything(config.seed)
    model = RegressorModel(spec, target, score_range, encoder=encoder)
    model.train_fingerprint = regressor_fingerprint(
        train_examples, dev_examples, spec, config, target, score_range
    )
    with torch.no_grad():
        model.head.bias.fill_(float(train_y.mean()))

    # a frozen encoder is evaluated once up front
    train_cache = dev_cache = None
    if not model.encoder_trainable:
        model.encoder.eval()
        with torch.no_grad():
            train_cache = torch.cat([model.encoder([train_texts[i] for i in b])
                                     for b in _batches(len(train_texts), config.batch_size)])
            dev_cache = torch.cat([model.encoder([dev_texts[i] for i in b])
                                   for b in _batches(len(dev_texts), config.batch_size)])

    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(params, lr=config.learning_rate, weight_decay=config.weight_decay)
    loss_fn = nn.MSELoss()
    lo, hi = score_range

    report = TrainReport()
    best_state = copy.deepcopy(model.trainable_state())
    best_r = -math.inf
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(train_texts), generator=gen)
        total = 0.0
        for b in _batches(len(train_texts), config.batch_size, order):
            if train_cache is not None:
                pred = model.head(train_cache[b]).squeeze(-1)
            else:
                pred = model.raw_scores([train_texts[i] for i in b])
            loss = loss_fn(pred, train_y[b])
            if not torch.isfinite(loss):
                raise NonFiniteLoss(epoch, float(loss.detach()))
            optimizer.zero_grad()
            loss.backward()
            if config.grad_clip is not None:
                nn.utils.clip_grad_norm_(params, config.grad_clip)
            optimizer.step()
            total += float(loss.detach()) * len(b)
        train_loss = total / len(train_texts)

        dev_pred = np.clip(_head_scores(model, dev_texts, dev_cache, config.batch_size), lo, hi)
        try:
            dev_r = pearson(dev_pred, dev_y)
        except ZeroVariance:
            dev_r = float("nan")
        report.epochs.append(EpochRecord(epoch, train_loss, dev_r))
        log.info("%s/%s epoch %d: train_loss=%.5f dev_r=%.4f", spec.name, target, epoch, train_loss, dev_r)
        if not math.isnan(dev_r) and dev_r > best_r:
            best_r = dev_r
            best_state = copy.deepcopy(model.trainable_state())
            report.best_epoch = epoch
            report.best_dev_pearson = dev_r

    if math.isinf(best_r):
        log.warning("%s/%s: dev Pearson undefined in every epoch; keeping the initial state", spec.name, target)
    model.load_state_dict(best_state, strict=False)
    model.eval()
    return model, report


def predict(
    model: RegressorModel,
    texts: Sequence[str],
    dataset_fingerprint: str | None = None,
    batch_size: int = 32,
) -> PredictionVector:
    lo, hi = model.score_range
    raw = _head_scores(model, list(texts), None, batch_size) if texts else np.zeros(0)
    values = np.clip(raw, lo, hi)
    return PredictionVector(
        values=tuple(float(v) for v in values),
        source_model=model.encoder_spec.name,
        target=model.target,
        dataset_fingerprint=dataset_fingerprint or fingerprint(list(texts)),
    )


# -- persistence ----------------------------------------------------------

def write_metadata(path: Path, meta: dict) -> None:
    lines = [f"{k}={v}" for k, v in meta.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metadata(path: Path) -> dict:
    meta = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, value = line.split("=", 1)
            meta[key] = value
    return meta


def save_model(model: RegressorModel, directory: str | os.PathLike, report: TrainReport | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.trainable_state(), directory / "model.pt")
    spec = model.encoder_spec
    write_metadata(directory / "meta.txt", {
        "encoder": spec.name,
        "pooling": spec.pooling,
        "max_tokens": spec.max_tokens,
        "frozen": spec.frozen,
        "target": model.target,
        "score_lo": repr(model.score_range[0]),
        "score_hi": repr(model.score_range[1]),
        "embed_dim": model.encoder.dim,
        "fingerprint": model.train_fingerprint,
        "best_dev_pearson": repr(report.best_dev_pearson) if report else "",
    })
    if report is not None:
        (directory / "train_report.json").write_text(report.to_json(), encoding="utf-8")
    return directory


def load_model(directory: str | os.PathLike, encoder: nn.Module | None = None) -> RegressorModel:
    directory = Path(directory)
    if not (directory / "model.pt").is_file() or not (directory / "meta.txt").is_file():
        raise MissingArtifact(f"no trained model in {directory}")
    meta = read_metadata(directory / "meta.txt")
    spec = EncoderSpec(
        name=meta["encoder"],
        pooling=meta["pooling"],
        max_tokens=int(meta["max_tokens"]),
        frozen=meta["frozen"] == "True",
    )
    model = RegressorModel(
        spec, meta["target"], (float(meta["score_lo"]), float(meta["score_hi"])), encoder=encoder
    )
    state = torch.load(directory / "model.pt", map_location="cpu", weights_only=True)
    model.load_state_dict(state, strict=False)
    model.train_fingerprint = meta["fingerprint"]
    model.eval()
    return model


def load_report(directory: str | os.PathLike) -> TrainReport:
    return TrainReport.from_json((Path(directory) / "train_report.json").read_text(encoding="utf-8"))
