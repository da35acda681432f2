"""Split a chunk's compression ratio across layers by attention significance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artk import tensor as tn
from artk.apportion import largest_remainder, round_half_up, water_fill
from artk.errors import InputError
from artk.model import AttentionRecord


@dataclass
class LayerBudget:
    weights_hat: np.ndarray
    keep_counts: np.ndarray
    alphas_layer: np.ndarray
    slot_budget: int


def accumulate_prompt_attention(A) -> np.ndarray:
    """Head-average then sum over prompt rows: ``(h, S, n) -> (n,)``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 3:
        raise InputError(f"attention must be (h, S, n), got {A.shape}")
    return A.mean(axis=0).sum(axis=0)


def significance_scores(record: AttentionRecord) -> list[np.ndarray]:
    return [accumulate_prompt_attention(A) for A in record.A]


def slot_budget(alpha: float, chunk_tokens: int, L: int) -> int:
    """Token slots a chunk may keep summed over layers, ``round(alpha * tau*N * L)``."""
    return round_half_up(alpha * chunk_tokens * L)


def count_salient(scores: list[np.ndarray], alpha: float) -> np.ndarray:
    """Per layer, how many scores sit strictly above the global K-th largest."""
    L = len(scores)
    n = scores[0].size
    K = slot_budget(alpha, n, L)
    if not 1 <= K <= L * n:
        raise InputError(f"K={K} outside [1, {L * n}]")
    threshold = tn.kth_largest(np.concatenate(scores), K)
    return np.array([int(np.count_nonzero(a > threshold)) for a in scores], dtype=np.int64)


def layer_weights(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise InputError("salient counts must be non-negative")
    total = s.sum()
    if total == 0:
        return np.full(s.size, 1.0 / s.size)
    return s / total


def stabilize_weights(w, epsilon: float) -> np.ndarray:
    """Floor every weight at ``epsilon`` while keeping the vector normalized."""
    w = np.asarray(w, dtype=np.float64)
    L = w.size
    if epsilon * L >= 1:
        raise InputError("epsilon * L must be < 1")
    if np.all(w >= epsilon):
        # the formula reduces to the identity here; skip it to avoid rounding drift
        return w.copy()
    shifted = np.maximum(w - epsilon, 0.0)
    total = shifted.sum()
    if total == 0:
        return np.full(L, 1.0 / L)
    return shifted / total * (1 - L * epsilon) + epsilon


def allocate_layer_budgets(w_hat, alpha: float, chunk_tokens: int) -> LayerBudget:
    """Integer keep counts per layer whose mean ratio matches ``alpha``.

    Real targets ``L * w_hat * alpha * chunk_tokens`` are capped at
    ``chunk_tokens`` (excess redistributed) and rounded by largest remainder
    so they sum to the chunk's slot budget exactly.
    """
    w_hat = np.asarray(w_hat, dtype=np.float64)
    L = w_hat.size
    B = slot_budget(alpha, chunk_tokens, L)
    if not 0 <= B <= L * chunk_tokens:
        raise InputError(f"slot budget {B} infeasible for {L} layers x {chunk_tokens} tokens")
    targets = water_fill(w_hat, float(B), float(chunk_tokens))
    keep = largest_remainder(targets, B)
    return LayerBudget(
        weights_hat=w_hat,
        keep_counts=keep,
        alphas_layer=keep / chunk_tokens,
        slot_budget=B,
    )
