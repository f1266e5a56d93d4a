"""Reduce per-token embeddings to one vector per text."""

from __future__ import annotations

from typing import Literal

import torch

from ..errors import EmptySequence

Pooling = Literal["cls_token", "mean_tokens", "native_sentence"]
POOLINGS = ("cls_token", "mean_tokens", "native_sentence")


def pool(token_embeddings, strategy: Pooling, mask=None, sentence_vector=None):
    """Pool a single ``(n_tokens, dim)`` matrix.

    Works on numpy arrays and torch tensors alike. ``mask`` marks real
    (non-padding) rows; ``sentence_vector`` is the backbone's own sentence
    embedding, returned unchanged for ``native_sentence``.
    """
    if strategy not in POOLINGS:
        raise ValueError(f"unknown pooling strategy {strategy!r}")
    if len(token_embeddings) == 0:
        raise EmptySequence("cannot pool an empty token sequence")
    if mask is not None:
        token_embeddings = token_embeddings[mask]
        if len(token_embeddings) == 0:
            raise EmptySequence("every token is masked as padding")

    if strategy == "cls_token":
        return token_embeddings[0]
    if strategy == "mean_tokens":
        # shifting by the first row makes a sequence of identical rows pool to that row exactly
        ref = token_embeddings[0]
        return ref + (token_embeddings - ref).mean(0)
    if sentence_vector is None:
        # a backbone without its own sentence vector: fall back to the first token
        return token_embeddings[0]
    return sentence_vector


def pool_batch(
    hidden: torch.Tensor,
    attention_mask: torch.Tensor,
    strategy: Pooling,
    sentence_vectors: torch.Tensor | None = None,
) -> torch.Tensor:
    """Batched :func:`pool` for ``(batch, seq, dim)`` hidden states."""
    if hidden.shape[1] == 0:
        raise EmptySequence("cannot pool an empty token sequence")
    if strategy == "cls_token":
        return hidden[:, 0]
    if strategy == "mean_tokens":
        m = attention_mask.unsqueeze(-1).to(hidden.dtype)
        counts = m.sum(1)
        if bool((counts == 0).any()):
            raise EmptySequence("a sequence in the batch has no unmasked tokens")
        ref = hidden[:, :1]
        return ref[:, 0] + ((hidden - ref) * m).sum(1) / counts
    if strategy == "native_sentence":
        return hidden[:, 0] if sentence_vectors is None else sentence_vectors
    raise ValueError(f"unknown pooling strategy {strategy!r}")
