"""A closed-form stand-in encoder for desk-scale runs and tests.

Each whitespace token becomes a vector of hashed character n-gram counts
(n in ``ngram_range``, no boundary markers) folded into ``dim`` buckets and
L2-normalised. Texts are lower-cased before tokenising. The encoder has no
trainable parameters.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch
from torch import nn

from ..errors import EmptySequence
from .pooling import pool

TOY_DIM = 64


def _bucket(gram: str, dim: int) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def char_ngrams(token: str, ngram_range=(1, 3)) -> list[str]:
    lo, hi = ngram_range
    return [token[i:i + n] for n in range(lo, hi + 1) for i in range(len(token) - n + 1)]


def ngram_counts(token: str, dim: int = TOY_DIM, ngram_range=(1, 3)) -> np.ndarray:
    """Unnormalised hashed n-gram count vector of one token."""
    counts = np.zeros(dim, dtype=np.float64)
    for gram in char_ngrams(token, ngram_range):
        counts[_bucket(gram, dim)] += 1.0
    return counts


class ToyEncoder(nn.Module):
    trainable = False

    def __init__(self, pooling="mean_tokens", max_tokens=256, dim=TOY_DIM, ngram_range=(1, 3)):
        super().__init__()
        self.pooling = pooling
        self.max_tokens = max_tokens
        self.dim = dim
        self.ngram_range = tuple(ngram_range)
        self._cache: dict[str, np.ndarray] = {}

    def token_embedding(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            vec = ngram_counts(token, self.dim, self.ngram_range)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
            self._cache[token] = vec
        return vec

    def token_embeddings(self, text: str) -> np.ndarray:
        tokens = text.lower().split()[: self.max_tokens]
        if not tokens:
            raise EmptySequence(f"text has no tokens: {text!r}")
        return np.stack([self.token_embedding(t) for t in tokens])

    def embed_numpy(self, texts) -> np.ndarray:
        return np.stack([pool(self.token_embeddings(t), self.pooling) for t in texts])

    def forward(self, texts) -> torch.Tensor:
        return torch.from_numpy(self.embed_numpy(texts).astype(np.float32))
