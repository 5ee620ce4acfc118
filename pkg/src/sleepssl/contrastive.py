"""Cosine-similarity contrastive (NT-Xent style) loss over 2N view embeddings.

An embedding batch is a (2N, d) array ordered so rows i and i+N are the two
transformed views of original i. The batch loss averages the per-pair losses
l(i, i+N); a `symmetric` mode additionally averages the reversed pairs.
"""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import IndexOutOfRange, ShapeMismatch, ZeroNormVector

DEFAULT_TEMPERATURE = 0.5


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroNormVector("cosine similarity of a zero vector is undefined")
    return float(u @ v / (nu * nv))


def _check_norms(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    dead = np.flatnonzero(norms == 0.0)
    if dead.size:
        raise ZeroNormVector(f"zero-norm embedding at index {dead[0]}")
    return norms


def sim_matrix(vectors: np.ndarray) -> np.ndarray:
    """All pairwise cosine similarities of the rows of `vectors`."""
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = _check_norms(vectors)
    normed = vectors / norms[:, None]
    return normed @ normed.T


def pair_loss(i: int, j: int, matrix: np.ndarray,
              temperature: float = DEFAULT_TEMPERATURE) -> float:
    """Contrastive loss of the ordered pair (i, j), 0-based row indices.

    l(i,j) = -log( exp(M[i,j]/tau) / sum_{k != i} exp(M[i,k]/tau) ),
    stabilized by subtracting the off-diagonal row maximum.
    """
    n = matrix.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"pair ({i}, {j}) outside a {n}x{n} similarity matrix")
    if i == j:
        raise IndexOutOfRange("pair_loss requires i != j")
    row = np.asarray(matrix[i], dtype=np.float64) / temperature
    others = np.delete(row, i)
    m = others.max()
    return float(np.log(np.exp(others - m).sum()) - (row[j] - m))


def batch_loss(embeddings, temperature: float = DEFAULT_TEMPERATURE,
               mode: str = "paper"):
    """Average contrastive loss over an embedding batch.

    `embeddings` may be an ndarray (returns a float loss) or an autodiff
    Tensor (returns a Tensor differentiable end-to-end through the cosine
    similarities). Second return value is the per-pair loss array: N entries
    in `paper` mode (pairs (i, i+N)), 2N in `symmetric` mode.
    """
    is_tensor = isinstance(embeddings, Tensor)
    t = embeddings if is_tensor else Tensor(np.asarray(embeddings, dtype=np.float64))
    if t.data.ndim != 2 or t.shape[0] % 2 != 0 or t.shape[0] < 2:
        raise ShapeMismatch(f"expected a (2N, d) embedding batch, got {t.shape}")
    if mode not in ("paper", "symmetric"):
        raise ShapeMismatch(f"unknown loss mode {mode!r}")
    two_n = t.shape[0]
    half = two_n // 2
    _check_norms(t.data)

    norms = (t * t).sum(axis=1, keepdims=True).sqrt()
    normed = t / norms
    logits = (normed @ normed.transpose(1, 0)) * (1.0 / temperature)

    off_diag = 1.0 - np.eye(two_n, dtype=logits.dtype)
    row_max = np.where(off_diag, logits.data, -np.inf).max(axis=1, keepdims=True)
    shifted = logits - row_max
    denom = (shifted.exp() * off_diag).sum(axis=1)

    partner = np.zeros((two_n, two_n), dtype=logits.dtype)
    idx = np.arange(two_n)
    partner[idx, (idx + half) % two_n] = 1.0
    positives = (shifted * partner).sum(axis=1)
    losses = denom.log() - positives

    if mode == "paper":
        weights = np.concatenate([np.full(half, 1.0 / half), np.zeros(half)])
        per_pair = losses.data[:half].copy()
    else:
        weights = np.full(two_n, 1.0 / two_n)
        per_pair = losses.data.copy()
    total = (losses * weights).sum()
    return (total, per_pair) if is_tensor else (total.item(), per_pair)
