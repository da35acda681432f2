"""TopK eviction of chunk KV entries and the end-to-end chunked pipeline."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from artk import tensor as tn
from artk.config import PipelineConfig
from artk.errors import InputError, InvariantError
from artk.layer_alloc import (
    LayerBudget,
    allocate_layer_budgets,
    count_salient,
    layer_weights,
    significance_scores,
    slot_budget,
    stabilize_weights,
)
from artk.model import LayerKVCache, ModelParams, prefill_chunk, with_positions
from artk.temporal_alloc import TemporalPlan, allocate_temporal, chunk_distances


@dataclass
class CompressionPlan:
    chunk: int
    alpha: float
    budget: LayerBudget
    salient: np.ndarray | None
    kept: list[np.ndarray] = field(default_factory=list)

    @property
    def keep_counts(self) -> np.ndarray:
        return self.budget.keep_counts


@dataclass
class PipelineResult:
    outputs: np.ndarray
    cache: LayerKVCache
    temporal: TemporalPlan
    d_bars: np.ndarray
    plans: list[CompressionPlan]
    timings: dict[str, float]

    @property
    def cache_lengths(self) -> list[int]:
        return self.cache.lengths()

    @property
    def retained_video_tokens(self) -> int:
        return int(sum(int(p.keep_counts.sum()) for p in self.plans))


def compress_chunk_cache(
    cache: LayerKVCache, scores: list[np.ndarray], budget: LayerBudget
) -> list[np.ndarray]:
    """Keep the top ``k_l`` entries of the pending chunk block in every layer.

    Everything before the block (earlier compressed chunks) and after it (the
    prompt, on the last chunk) is left in place. Returns the kept indices per
    layer, relative to the block and sorted ascending.
    """
    kept = []
    for l in range(cache.L):
        start = cache.block_start[l]
        if start is None:
            raise InvariantError(f"layer {l}: no pending chunk block to compress")
        n = scores[l].size
        k = int(budget.keep_counts[l])
        if not 0 <= k <= n:
            raise InvariantError(f"layer {l}: keep count {k} outside [0, {n}]")
        if start + n > cache.K[l].shape[1]:
            raise InvariantError(f"layer {l}: block extends past the cache")
        idx = tn.arg_top_k(scores[l], k)
        keep = np.concatenate(
            [np.arange(start), start + idx, np.arange(start + n, cache.K[l].shape[1])]
        )
        cache.K[l] = np.ascontiguousarray(cache.K[l][:, keep])
        cache.V[l] = np.ascontiguousarray(cache.V[l][:, keep])
        cache.origin[l] = cache.origin[l][keep]
        cache.block_start[l] = None
        kept.append(idx)
    cache.check()
    return kept


def drop_prompt(cache: LayerKVCache, S: int, is_last_chunk: bool) -> None:
    """Remove the ``S`` trailing prompt entries from every layer unless this is the last chunk."""
    if is_last_chunk:
        return
    for l in range(cache.L):
        n = cache.K[l].shape[1]
        if n < S:
            raise InvariantError(f"layer {l}: cache shorter ({n}) than prompt ({S})")
        cache.K[l] = cache.K[l][:, : n - S]
        cache.V[l] = cache.V[l][:, : n - S]
        cache.origin[l] = cache.origin[l][: n - S]


def plan_layers(scores: list[np.ndarray], alpha: float, epsilon: float) -> tuple[LayerBudget, np.ndarray | None]:
    """Layer budgets for one chunk; a chunk with zero slot budget keeps nothing."""
    L = len(scores)
    n = scores[0].size
    if slot_budget(alpha, n, L) == 0:
        return allocate_layer_budgets(np.full(L, 1.0 / L), alpha, n), None
    s = count_salient(scores, alpha)
    w_hat = stabilize_weights(layer_weights(s), epsilon)
    return allocate_layer_budgets(w_hat, alpha, n), s


def run_pipeline(features, prompt, params: ModelParams, config: PipelineConfig) -> PipelineResult:
    """Temporal allocation, then per chunk: prefill, score, allocate, drop prompt, evict."""
    features = np.asarray(features, dtype=np.float32)
    expected = (config.T, config.N, config.d)
    if features.shape != expected:
        raise InputError(f"features shape {features.shape} != {expected}")
    prompt = tn.as_mat(prompt, name="prompt")
    if prompt.shape != (config.S, config.d):
        raise InputError(f"prompt shape {prompt.shape} != {(config.S, config.d)}")
    if params.L != config.L or params.d != config.d:
        raise InputError("model parameters do not match config (L, d)")

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    dist = chunk_distances(features, config.tau)
    temporal = allocate_temporal(dist.d_bar, config)
    timings["temporal"] = time.perf_counter() - t0

    flat = features.reshape(config.video_tokens, config.d)
    if config.positional:
        flat, prompt = with_positions(flat, prompt)

    cache = LayerKVCache.empty(config.L, config.h, config.head_dim)
    plans = []
    outputs = None
    n = config.chunk_tokens
    t_prefill = t_alloc = t_evict = 0.0
    for i in range(config.n_chunks):
        last = i == config.n_chunks - 1
        t = time.perf_counter()
        record, outputs = prefill_chunk(cache, flat[i * n : (i + 1) * n], prompt, params, chunk_index=i)
        t_prefill += time.perf_counter() - t

        t = time.perf_counter()
        scores = significance_scores(record)
        alpha = float(temporal.alphas[i])
        budget, salient = plan_layers(scores, alpha, config.epsilon)
        t_alloc += time.perf_counter() - t

        t = time.perf_counter()
        drop_prompt(cache, config.S, last)
        kept = compress_chunk_cache(cache, scores, budget)
        t_evict += time.perf_counter() - t
        plans.append(CompressionPlan(i, alpha, budget, salient, kept))

    timings.update(prefill=t_prefill, allocate=t_alloc, evict=t_evict)
    timings["total"] = time.perf_counter() - t0
    result = PipelineResult(outputs, cache, temporal, dist.d_bar, plans, timings)
    check_result(result, config)
    return result


def check_result(result: PipelineResult, config: PipelineConfig) -> None:
    """Cross-check plans against the cache; raises ``InvariantError`` on any mismatch."""
    L, S, n = config.L, config.S, config.chunk_tokens
    per_layer = np.zeros(L, dtype=np.int64)
    for plan in result.plans:
        k = plan.keep_counts
        if int(k.sum()) != plan.budget.slot_budget:
            raise InvariantError(f"chunk {plan.chunk}: keep counts do not sum to slot budget")
        if plan.budget.slot_budget != slot_budget(plan.alpha, n, L):
            raise InvariantError(f"chunk {plan.chunk}: slot budget inconsistent with alpha")
        if np.any(k < 0) or np.any(k > n):
            raise InvariantError(f"chunk {plan.chunk}: keep count outside [0, {n}]")
        for l, idx in enumerate(plan.kept):
            if idx.size != k[l] or np.any(np.diff(idx) <= 0):
                raise InvariantError(f"chunk {plan.chunk} layer {l}: bad kept index list")
        per_layer += k
    lengths = np.array(result.cache_lengths)
    if not np.array_equal(lengths, per_layer + S):
        raise InvariantError(f"cache lengths {lengths.tolist()} != kept + prompt")
    slack = L * config.n_chunks / 2
    if abs(lengths.mean() - config.C_max) > slack:
        raise InvariantError(f"mean cache length {lengths.mean()} too far from C_max={config.C_max}")
