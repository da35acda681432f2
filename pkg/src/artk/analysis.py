"""Heavy-hitter redundancy profiling over time chunks and layers."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from artk import tensor as tn
from artk.config import PipelineConfig
from artk.errors import InputError
from artk.layer_alloc import accumulate_prompt_attention
from artk.model import ModelParams, forward_full, with_positions

__all__ = [
    "HeavyHitterReport",
    "accumulate_prompt_attention",
    "heavy_hitter_ratio",
    "redundancy_profile",
    "profile_from_attention",
]


@dataclass
class HeavyHitterReport:
    lam: np.ndarray  # (chunks, L)
    chunk_seconds: float
    p: float
    frames_per_chunk: int
    partial_last: bool

    @property
    def layer_means(self) -> np.ndarray:
        return self.lam.mean(axis=0)

    @property
    def chunk_means(self) -> np.ndarray:
        return self.lam.mean(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("chunk,layer,lambda\n")
        for t in range(self.lam.shape[0]):
            for l in range(self.lam.shape[1]):
                buf.write(f"{t},{l},{self.lam[t, l]:.6f}\n")
        return buf.getvalue()


def heavy_hitter_ratio(a, p: float) -> float:
    """Fraction of entries strictly above ``p * max(a)``."""
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise InputError("heavy-hitter ratio of an empty vector")
    if np.any(a < 0):
        raise InputError("scores must be non-negative")
    if not 0 < p < 1:
        raise InputError(f"p must lie in (0, 1), got {p}")
    return np.count_nonzero(a > p * a.max()) / a.size


def profile_from_attention(
    attn: list[np.ndarray], N: int, frames_per_chunk: int, p: float
) -> tuple[np.ndarray, bool]:
    """lambda matrix from per-layer ``(h, S, T*N)`` prompt-on-video attention."""
    n_video = attn[0].shape[2]
    T = n_video // N
    n_chunks = math.ceil(T / frames_per_chunk)
    lam = np.zeros((n_chunks, len(attn)))
    for l, A in enumerate(attn):
        a = accumulate_prompt_attention(A)
        for t in range(n_chunks):
            cols = slice(t * frames_per_chunk * N, min((t + 1) * frames_per_chunk, T) * N)
            lam[t, l] = heavy_hitter_ratio(a[cols], p)
    return lam, T % frames_per_chunk != 0


def redundancy_profile(features, prompt, params: ModelParams, config: PipelineConfig) -> HeavyHitterReport:
    """Profile the uncompressed model: lambda per (time chunk, layer).

    Time chunks span ``fps * chunk_seconds`` frames; a trailing partial chunk
    is kept and flagged via ``partial_last``. Softmax denominators cover the
    whole sequence; each chunk only restricts which columns are scored.
    """
    features = np.asarray(features, dtype=np.float32)
    if features.ndim != 3 or features.shape[1:] != (config.N, config.d):
        raise InputError(f"features must be (T, {config.N}, {config.d}), got {features.shape}")
    prompt = tn.as_mat(prompt, name="prompt")
    fpc = max(1, int(round(config.fps * config.chunk_seconds)))
    flat = features.reshape(-1, config.d)
    if config.positional:
        flat, prompt = with_positions(flat, prompt)
    _, attn = forward_full(flat, prompt, params, config.h, capture=True)
    lam, partial = profile_from_attention(attn, config.N, fpc, config.p)
    return HeavyHitterReport(lam, config.chunk_seconds, config.p, fpc, partial)
