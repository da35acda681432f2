"""Minimal dense linear algebra over float32 matrices.

Matrices are plain C-contiguous ``float32`` numpy arrays. Reductions inside
``matmul``/``softmax_rows`` accumulate left to right in float64 and round to
float32 on store, so results are deterministic regardless of backend.

The hot kernels come from a compiled Cython extension when it is available and
from ``_fallback`` otherwise. Set ``ARTK_FORCE_PYTHON=1`` to force the
fallback. ``BACKEND`` names the active one.
"""

from __future__ import annotations

import os

import numpy as np

from artk.errors import InputError
from artk.tensor import _fallback

if os.environ.get("ARTK_FORCE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from artk.tensor import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

# Stand-in for -inf in masked logits; exp underflows to exactly 0.
MASKED = np.float32(-1e30)

__all__ = [
    "BACKEND",
    "MASKED",
    "as_mat",
    "matmul",
    "softmax_rows",
    "cosine_sim",
    "cosine_rows",
    "kth_largest",
    "arg_top_k",
]


def as_mat(x, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite, C-contiguous float32 2-D array."""
    m = np.ascontiguousarray(x, dtype=np.float32)
    if m.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_mat(a, name="a")
    b = as_mat(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise InputError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return _impl.matmul(a, b)


def softmax_rows(m) -> np.ndarray:
    m = as_mat(m)
    if m.shape[1] == 0:
        raise InputError("softmax over an empty row")
    return _impl.softmax_rows(m)


def cosine_rows(a, b) -> np.ndarray:
    """Cosine similarity between corresponding rows of two matrices (float64)."""
    a = as_mat(a, name="a")
    b = as_mat(b, name="b")
    if a.shape != b.shape:
        raise InputError(f"shape mismatch: {a.shape} vs {b.shape}")
    return _impl.cosine_rows(a, b)


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float32).reshape(1, -1)
    v = np.asarray(v, dtype=np.float32).reshape(1, -1)
    if u.shape != v.shape:
        raise InputError(f"length mismatch: {u.shape[1]} vs {v.shape[1]}")
    return float(cosine_rows(u, v)[0])


def kth_largest(v, k: int) -> float:
    """Value at rank ``k`` (1-based) in descending order, ties counted."""
    v = np.asarray(v).ravel()
    if not 1 <= k <= v.size:
        raise InputError(f"K={k} out of range for length {v.size}")
    return float(np.sort(v, kind="stable")[v.size - k])


def arg_top_k(v, k: int) -> np.ndarray:
    """Indices of the ``k`` largest entries, ties to lower index, sorted ascending."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if not 0 <= k <= v.size:
        raise InputError(f"K={k} out of range for length {v.size}")
    order = np.argsort(-v, kind="stable")
    return np.sort(order[:k]).astype(np.int64)
