"""Attention aggregation of a variable-length intruder set into a fixed vector.

Multiplicative (bilinear) score between the ownship vector and each intruder
vector, softmax weights, weighted context sum, tanh projection, and finally
concatenation with the ownship vector. Permutation invariant by construction;
an empty intruder set yields a zero context (and so a zero attention vector).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import ShapeError, softmax


class AttentionParams:
    """Learnable score matrix w1 (s_dim, h_dim) and projection w2 (k_dim, h_dim)."""

    def __init__(self, s_dim, h_dim, k_dim=None, dtype=np.float32, rng=None):
        k_dim = h_dim if k_dim is None else k_dim
        rng = rng if rng is not None else np.random.default_rng()
        lim1 = np.sqrt(6.0 / (s_dim + h_dim))
        lim2 = np.sqrt(6.0 / (k_dim + h_dim))
        self.w1 = rng.uniform(-lim1, lim1, size=(s_dim, h_dim)).astype(dtype)
        self.w2 = rng.uniform(-lim2, lim2, size=(k_dim, h_dim)).astype(dtype)

    @property
    def s_dim(self):
        return self.w1.shape[0]

    @property
    def h_dim(self):
        return self.w1.shape[1]

    @property
    def k_dim(self):
        return self.w2.shape[0]

    def params(self):
        return [self.w1, self.w2]

    def copy(self):
        other = object.__new__(AttentionParams)
        other.w1 = self.w1.copy()
        other.w2 = self.w2.copy()
        return other

    def astype(self, dtype):
        other = object.__new__(AttentionParams)
        other.w1 = self.w1.astype(dtype)
        other.w2 = self.w2.astype(dtype)
        return other


@dataclass
class EncodedState:
    k: np.ndarray       # (k_dim,) attention vector, each component in (-1, 1)
    concat: np.ndarray  # (s_dim + k_dim,) input to the downstream trunk
    eta: np.ndarray     # (n_intruders,) attention weights (diagnostic)


def score(s, h, w1):
    """Bilinear score s^T w1 h."""
    s = np.asarray(s)
    h = np.asarray(h)
    if s.shape[-1] != w1.shape[0] or h.shape[-1] != w1.shape[1]:
        raise ShapeError("score: vector dims do not match w1")
    return float(s @ w1 @ h)


def attention_weights(scores):
    """Softmax over the per-intruder scores; requires at least one intruder."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ShapeError("attention_weights requires >= 1 intruder")
    return softmax(scores)


def context(eta, intruders):
    """Weighted sum of intruder vectors."""
    eta = np.asarray(eta)
    intruders = np.asarray(intruders)
    if len(eta) != len(intruders):
        raise ShapeError("context: |eta| != |H|")
    return eta @ intruders


def encode(s, intruders, params: AttentionParams) -> EncodedState:
    """Single-observation encoding; intruders may be an empty list."""
    s = np.asarray(s, dtype=params.w1.dtype)
    n = len(intruders)
    if n == 0:
        k = np.zeros(params.k_dim, dtype=s.dtype)
        eta = np.zeros(0, dtype=s.dtype)
    else:
        h = np.asarray(intruders, dtype=s.dtype).reshape(n, params.h_dim)
        eta = attention_weights(h @ params.w1.T @ s).astype(s.dtype)
        c = context(eta, h)
        k = np.tanh(params.w2 @ c)
    return EncodedState(k=k, concat=np.concatenate([s, k]), eta=eta)


def encode_batch(s, h, mask, params: AttentionParams):
    """Batched masked encoding.

    s: (B, s_dim); h: (B, M, h_dim) zero-padded; mask: (B, M) boolean, True at
    real intruders. Rows with an all-False mask get eta = 0 and k = 0.
    Returns (concat (B, s_dim + k_dim), cache).
    """
    s = np.asarray(s)
    h = np.asarray(h)
    mask = np.asarray(mask, dtype=bool)
    if h.ndim != 3 or h.shape[0] != s.shape[0] or mask.shape != h.shape[:2]:
        raise ShapeError("encode_batch: inconsistent batch shapes")
    sw = s @ params.w1
    scores = np.matmul(h, sw[:, :, None])[:, :, 0]
    neg = np.full_like(scores, -np.inf)
    masked = np.where(mask, scores, neg)
    has_any = mask.any(axis=1)
    # Rows with no intruders would produce NaN through softmax; substitute a
    # zero row and zero the weights afterwards.
    safe = np.where(has_any[:, None], masked, 0.0)
    eta = softmax(safe, axis=1)
    eta = np.where(mask, eta, 0.0).astype(s.dtype)
    c = np.matmul(eta[:, None, :], h)[:, 0, :]
    u = c @ params.w2.T
    k = np.tanh(u)
    concat = np.concatenate([s, k], axis=1)
    cache = {"s": s, "h": h, "mask": mask, "eta": eta, "c": c, "k": k, "sw": sw}
    return concat, cache


def encode_batch_backward(params: AttentionParams, cache, dconcat):
    """Backward through encode_batch.

    dconcat: (B, s_dim + k_dim) upstream gradient. Returns
    (dw1, dw2, ds, dh) where ds includes both the pass-through half of the
    concatenation and the score path.
    """
    s = cache["s"]
    h = cache["h"]
    eta = cache["eta"]
    c = cache["c"]
    k = cache["k"]
    s_dim = s.shape[1]
    ds = dconcat[:, :s_dim].copy()
    dk = dconcat[:, s_dim:]
    du = dk * (1.0 - k * k)
    dw2 = du.T @ c
    dc = du @ params.w2
    deta = np.matmul(h, dc[:, :, None])[:, :, 0]
    dh = eta[:, :, None] * dc[:, None, :]
    # Softmax Jacobian per row, restricted to unmasked entries (eta is zero on
    # masked ones, so the formula already sends them zero gradient).
    dscores = eta * (deta - (eta * deta).sum(axis=1, keepdims=True))
    hw = np.matmul(dscores[:, None, :], h)[:, 0, :]
    dw1 = s.T @ hw
    ds += hw @ params.w1.T
    dh += dscores[:, :, None] * cache["sw"][:, None, :]
    dh *= cache["mask"][:, :, None]
    return dw1, dw2, ds, dh
