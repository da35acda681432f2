"""Capped proportional allocation and largest-remainder integer rounding."""

from __future__ import annotations

import math

import numpy as np

from artk.errors import InputError


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves up (Python's ``round`` is banker's)."""
    return int(math.floor(x + 0.5))


def water_fill(weights, total: float, cap: float, tol: float = 1e-12) -> np.ndarray:
    """Split ``total`` proportionally to ``weights`` with every share ``<= cap``.

    Shares exceeding ``cap`` are pinned to it and the excess is handed to the
    remaining entries in proportion to their weights, repeating until no share
    overflows. Entries with zero weight get a uniform split only when every
    still-free entry has zero weight.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if np.any(w < 0):
        raise InputError("weights must be non-negative")
    if total < 0 or total > cap * n * (1 + tol) + tol:
        raise InputError(f"total {total} infeasible for {n} entries capped at {cap}")
    x = np.zeros(n)
    free = np.ones(n, dtype=bool)
    remaining = float(total)
    while True:
        wf = w[free]
        ws = wf.sum()
        x[free] = remaining * (wf / ws) if ws > 0 else remaining / free.sum()
        over = free & (x > cap * (1 + tol))
        if not over.any():
            break
        x[over] = cap
        remaining -= cap * over.sum()
        free &= ~over
        if not free.any():
            break
    return np.minimum(x, cap)


def largest_remainder(targets, total: int) -> np.ndarray:
    """Integerize ``targets`` so they sum to ``total``.

    Floors every target, then hands the leftover units to the largest
    fractional parts; ties go to the lower index.
    """
    t = np.asarray(targets, dtype=np.float64)
    base = np.floor(t).astype(np.int64)
    extra = int(total) - int(base.sum())
    if extra < 0 or extra > t.size:
        raise InputError(f"targets summing to {t.sum()} cannot be rounded to {total}")
    frac = t - base
    order = np.argsort(-frac, kind="stable")
    base[order[:extra]] += 1
    return base
