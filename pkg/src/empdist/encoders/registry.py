"""Encoder specs and the name -> loader registry.

Transformer weights are looked up under ``$EMPDIST_ENCODER_CACHE`` first: a
directory named after the encoder (``/`` replaced by ``__``) holding a
``save_pretrained`` export is loaded directly. Otherwise the hub id is
fetched with that directory as the download cache.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator
from torch import nn

from ..errors import EncoderLoadFailure, UnknownEncoder
from .pooling import Pooling, pool_batch
from .toy import ToyEncoder

log = logging.getLogger(__name__)

CACHE_ENV = "EMPDIST_ENCODER_CACHE"


class EncoderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    pooling: Pooling = "cls_token"
    max_tokens: int = Field(256, ge=8)
    frozen: bool = False

    @model_validator(mode="after")
    def _check_pooling(self):
        entry = REGISTRY.get(self.name)
        if self.pooling == "native_sentence" and entry is not None and not entry.sentence_native:
            raise ValueError(
                f"pooling 'native_sentence' needs a sentence-embedding backbone; "
                f"{self.name!r} is not one"
            )
        return self

    @property
    def slug(self) -> str:
        return self.name.replace("/", "__")


@dataclass(frozen=True)
class RegistryEntry:
    loader: Callable[[EncoderSpec], nn.Module]
    sentence_native: bool = False
    hub_id: str | None = None


class HFEncoder(nn.Module):
    """A transformer backbone with pooling; classification heads are dropped."""

    def __init__(self, spec: EncoderSpec, source: str, cache_dir: str | None = None):
        super().__init__()
        from transformers import AutoModel, AutoTokenizer

        self.spec = spec
        self.pooling = spec.pooling
        self.max_tokens = spec.max_tokens
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(source, cache_dir=cache_dir)
            # AutoModel keeps the encoder body only
            self.model = AutoModel.from_pretrained(source, cache_dir=cache_dir)
        except Exception as exc:  # noqa: BLE001 - transformers raises many types
            raise EncoderLoadFailure(f"could not load weights for {spec.name!r} from {source!r}: {exc}") from exc
        self.dim = self.model.config.hidden_size
        self.trainable = not spec.frozen
        if spec.frozen:
            for p in self.model.parameters():
                p.requires_grad_(False)

    def train(self, mode: bool = True):
        super().train(mode)
        if not self.trainable:
            self.model.eval()
        return self

    def forward(self, texts) -> torch.Tensor:
        batch = self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.max_tokens,
            return_tensors="pt",
        )
        batch.pop("token_type_ids", None)
        out = self.model(**batch)
        sentence = getattr(out, "pooler_output", None) if self.pooling == "native_sentence" else None
        return pool_batch(out.last_hidden_state, batch["attention_mask"], self.pooling, sentence)


def _hf_loader(hub_id: str) -> Callable[[EncoderSpec], nn.Module]:
    def load(spec: EncoderSpec) -> nn.Module:
        cache = os.environ.get(CACHE_ENV)
        source = hub_id
        if cache:
            local = Path(cache) / spec.slug
            if local.is_dir():
                source = str(local)
        log.info("loading encoder %s from %s", spec.name, source)
        return HFEncoder(spec, source, cache_dir=cache)

    return load


def _toy_loader(spec: EncoderSpec) -> nn.Module:
    return ToyEncoder(pooling=spec.pooling, max_tokens=spec.max_tokens)


PRETRAINED_ENCODERS = (
    "roberta-base",
    "cardiffnlp/twitter-roberta-base-emotion",
    "cardiffnlp/twitter-roberta-base-sentiment-latest",
    "princeton-nlp/unsup-simcse-roberta-base",
)

REGISTRY: dict[str, RegistryEntry] = {
    "toy": RegistryEntry(_toy_loader),
    "roberta-base": RegistryEntry(_hf_loader("roberta-base"), hub_id="roberta-base"),
    "cardiffnlp/twitter-roberta-base-emotion": RegistryEntry(
        _hf_loader("cardiffnlp/twitter-roberta-base-emotion"),
        hub_id="cardiffnlp/twitter-roberta-base-emotion",
    ),
    "cardiffnlp/twitter-roberta-base-sentiment-latest": RegistryEntry(
        _hf_loader("cardiffnlp/twitter-roberta-base-sentiment-latest"),
        hub_id="cardiffnlp/twitter-roberta-base-sentiment-latest",
    ),
    "princeton-nlp/unsup-simcse-roberta-base": RegistryEntry(
        _hf_loader("princeton-nlp/unsup-simcse-roberta-base"),
        sentence_native=True,
        hub_id="princeton-nlp/unsup-simcse-roberta-base",
    ),
}


def register_encoder(name: str, loader, sentence_native: bool = False) -> None:
    REGISTRY[name] = RegistryEntry(loader, sentence_native=sentence_native)


def load_encoder(spec: EncoderSpec) -> nn.Module:
    entry = REGISTRY.get(spec.name)
    if entry is None:
        raise UnknownEncoder(f"no encoder registered under {spec.name!r}; known: {sorted(REGISTRY)}")
    return entry.loader(spec)


def encode(spec: EncoderSpec, texts) -> np.ndarray:
    """Pooled embeddings, one row per text, as a float numpy matrix."""
    if len(texts) == 0:
        raise ValueError("encode needs at least one text")
    encoder = load_encoder(spec)
    encoder.eval()
    with torch.no_grad():
        return encoder(list(texts)).detach().cpu().numpy()
