"""Per-chunk compression ratios from adjacent-frame cosine distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artk import tensor as tn
from artk.apportion import water_fill
from artk.config import PipelineConfig
from artk.errors import InputError


@dataclass
class ChunkDistances:
    d: list[np.ndarray]  # per chunk, tau-1 adjacent-frame distances
    d_bar: np.ndarray


@dataclass
class TemporalPlan:
    alphas: np.ndarray
    budget_tokens: int

    def kept_tokens(self, chunk_tokens: int) -> np.ndarray:
        return self.alphas * chunk_tokens


def frame_distances(chunk) -> np.ndarray:
    """``1 - mean_j cos(frame t token j, frame t+1 token j)`` for each adjacent pair."""
    chunk = np.asarray(chunk, dtype=np.float32)
    if chunk.ndim != 3:
        raise InputError(f"chunk must be (tau, N, d), got {chunk.shape}")
    tau, N, d = chunk.shape
    if tau < 2:
        return np.zeros(0)
    a = chunk[:-1].reshape(-1, d)
    b = chunk[1:].reshape(-1, d)
    sims = tn.cosine_rows(a, b).reshape(tau - 1, N)
    return 1.0 - sims.mean(axis=1)


def chunk_distances(features, tau: int) -> ChunkDistances:
    features = np.asarray(features, dtype=np.float32)
    T = features.shape[0]
    if T % tau:
        raise InputError(f"tau={tau} does not divide T={T}")
    ds = [frame_distances(features[i : i + tau]) for i in range(0, T, tau)]
    d_bar = np.array([x.mean() if x.size else 0.0 for x in ds])
    return ChunkDistances(ds, d_bar)


def allocate_temporal(d_bars, config: PipelineConfig) -> TemporalPlan:
    """Spread the ``C_max - S`` token budget over chunks in proportion to ``d_bars``.

    Ratios are capped at 1 with the excess redistributed; a static input
    (all distances ~0) falls back to a uniform split.
    """
    d_bars = np.asarray(d_bars, dtype=np.float64)
    if d_bars.size != config.n_chunks:
        raise InputError(f"expected {config.n_chunks} chunk distances, got {d_bars.size}")
    if np.any(d_bars < 0) or not np.all(np.isfinite(d_bars)):
        raise InputError("chunk distances must be finite and >= 0")
    budget = config.C_max - config.S
    if budget <= 0:
        raise InputError("C_max must exceed the prompt length")
    if budget > config.video_tokens:
        raise InputError("budget exceeds the uncompressed video length")
    weights = d_bars if d_bars.sum() >= 1e-9 else np.ones_like(d_bars)
    alphas = water_fill(weights, budget / config.chunk_tokens, 1.0)
    return TemporalPlan(alphas=alphas, budget_tokens=budget)
