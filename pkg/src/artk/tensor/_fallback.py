"""Pure-Python (numpy) implementations of the compiled kernels.

Each function reproduces the accumulation order of ``_kernels.pyx``: sums run
left to right in float64 and results are rounded to float32 on store.
"""

from __future__ import annotations

import numpy as np


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    acc = np.zeros((m, n), dtype=np.float64)
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    # float32*float32 is exact in float64, so only the adds round
    for p in range(k):
        acc += a64[:, p : p + 1] * b64[p : p + 1, :]
    return acc.astype(np.float32)


def softmax_rows(m: np.ndarray) -> np.ndarray:
    x = m.astype(np.float64)
    e = np.exp(x - x.max(axis=1, keepdims=True))
    s = np.cumsum(e, axis=1)[:, -1:]
    return (e / s).astype(np.float32)


def _seqsum(x: np.ndarray) -> np.ndarray:
    """Left-to-right row sums (np.sum would use pairwise summation)."""
    if x.shape[1] == 0:
        return np.zeros(x.shape[0])
    return np.cumsum(x, axis=1)[:, -1]


def cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    dot = _seqsum(a64 * b64)
    na = _seqsum(a64 * a64)
    nb = _seqsum(b64 * b64)
    degenerate = (np.sqrt(na) < 1e-12) | (np.sqrt(nb) < 1e-12)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        val = np.clip(dot / np.sqrt(na * nb), -1.0, 1.0)
    return np.where(degenerate, 0.0, val)
