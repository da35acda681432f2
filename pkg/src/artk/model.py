"""Toy decoder-only attention stack with a per-layer KV cache.

Each layer is multi-head scaled dot-product attention followed by an output
projection; the output feeds the next layer's projections directly (no MLP,
no residual, no normalization). The cache may hold a different number of
entries per layer once chunks have been compressed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from artk import tensor as tn
from artk.config import PipelineConfig
from artk.errors import InputError, InvariantError
from artk.rng import SplitMix64, derive_seed

PROMPT_CHUNK = -1  # provenance chunk id for prompt entries

_WEIGHT_STREAM = 0x57454947  # "WEIG"


@dataclass(frozen=True)
class ModelParams:
    W_Q: tuple[np.ndarray, ...]
    W_K: tuple[np.ndarray, ...]
    W_V: tuple[np.ndarray, ...]
    W_O: tuple[np.ndarray, ...]

    def __post_init__(self):
        counts = {len(self.W_Q), len(self.W_K), len(self.W_V), len(self.W_O)}
        if len(counts) != 1 or not self.W_Q:
            raise InputError("W_Q, W_K, W_V, W_O must have the same positive layer count")
        d = self.W_Q[0].shape[0]
        for w in (*self.W_Q, *self.W_K, *self.W_V, *self.W_O):
            if w.shape != (d, d) or w.dtype != np.float32:
                raise InputError("all weights must be float32 d x d matrices")
            if not np.all(np.isfinite(w)):
                raise InputError("non-finite weight")

    @property
    def L(self) -> int:
        return len(self.W_Q)

    @property
    def d(self) -> int:
        return self.W_Q[0].shape[0]

    def stacked(self) -> np.ndarray:
        """Weights as one ``(L, 4, d, d)`` array, order Q, K, V, O."""
        return np.stack([np.stack(ws) for ws in zip(self.W_Q, self.W_K, self.W_V, self.W_O)])

    @classmethod
    def from_stacked(cls, arr: np.ndarray) -> ModelParams:
        arr = np.asarray(arr)
        if arr.ndim != 4 or arr.shape[1] != 4 or arr.shape[2] != arr.shape[3]:
            raise InputError(f"model tensor must have shape (L, 4, d, d), got {arr.shape}")
        arr = arr.astype(np.float32)
        layers = [[np.ascontiguousarray(arr[l, j]) for l in range(arr.shape[0])] for j in range(4)]
        return cls(*(tuple(ws) for ws in layers))


@dataclass
class LayerKVCache:
    """Keys/values per layer, each of shape ``(h, len_l, d/h)``.

    ``origin[l]`` holds one ``(chunk, token)`` row per slot; prompt slots use
    chunk id ``PROMPT_CHUNK``. ``block_start[l]`` marks where the most recent
    uncompressed chunk block begins (``None`` when nothing is pending).
    """

    h: int
    head_dim: int
    K: list[np.ndarray]
    V: list[np.ndarray]
    origin: list[np.ndarray]
    block_start: list[int | None] = field(default_factory=list)

    @classmethod
    def empty(cls, L: int, h: int, head_dim: int) -> LayerKVCache:
        return cls(
            h=h,
            head_dim=head_dim,
            K=[np.zeros((h, 0, head_dim), np.float32) for _ in range(L)],
            V=[np.zeros((h, 0, head_dim), np.float32) for _ in range(L)],
            origin=[np.zeros((0, 2), np.int64) for _ in range(L)],
            block_start=[None] * L,
        )

    @property
    def L(self) -> int:
        return len(self.K)

    def lengths(self) -> list[int]:
        return [k.shape[1] for k in self.K]

    def check(self) -> None:
        for l in range(self.L):
            n = self.K[l].shape[1]
            if self.V[l].shape[1] != n or self.origin[l].shape[0] != n:
                raise InvariantError(f"layer {l}: K/V/origin lengths disagree")

    def copy(self) -> LayerKVCache:
        return LayerKVCache(
            self.h,
            self.head_dim,
            [k.copy() for k in self.K],
            [v.copy() for v in self.V],
            [o.copy() for o in self.origin],
            list(self.block_start),
        )


@dataclass
class AttentionRecord:
    """Per layer, ``(h, S, chunk_tokens)`` weights of prompt queries on chunk keys."""

    A: list[np.ndarray]


def init_model(config: PipelineConfig) -> ModelParams:
    """Draw i.i.d. normal weights scaled by 1/sqrt(d) from the config seed."""
    d, L = config.d, config.L
    rng = SplitMix64(derive_seed(config.seed, _WEIGHT_STREAM))
    scale = 1.0 / math.sqrt(d)
    raw = (rng.normal((L, 4, d, d)) * scale).astype(np.float32)
    return ModelParams.from_stacked(raw)


def sinusoidal(positions: np.ndarray, d: int) -> np.ndarray:
    """Standard additive sinusoidal encodings, shape ``(len(positions), d)``."""
    pos = np.asarray(positions, dtype=np.float64)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle)).astype(np.float32)


def with_positions(features: np.ndarray, prompt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Add encodings to flat video tokens (positions 0..TN-1) and the trailing prompt."""
    n, d = features.shape
    f = (features + sinusoidal(np.arange(n), d)).astype(np.float32)
    p = (prompt + sinusoidal(np.arange(n, n + prompt.shape[0]), d)).astype(np.float32)
    return f, p


def _split_heads(x: np.ndarray, h: int) -> np.ndarray:
    rows, d = x.shape
    return np.ascontiguousarray(x.reshape(rows, h, d // h).transpose(1, 0, 2))


def _layer(
    x: np.ndarray,
    params: ModelParams,
    l: int,
    past_K: np.ndarray,
    past_V: np.ndarray,
    h: int,
    record_rows: slice | None = None,
    record_cols: slice | None = None,
):
    """One attention layer over a block that sees ``past_*`` fully and itself causally.

    Returns ``(y, k_heads, v_heads, rec)`` where ``rec`` is the ``(h, rows, cols)``
    slice of attention weights requested via ``record_rows``/``record_cols``
    (column indices relative to the concatenated ``[past || block]`` keys).
    """
    B, d = x.shape
    dh = d // h
    P = past_K.shape[1]
    q = _split_heads(tn.matmul(x, params.W_Q[l]), h)
    k = _split_heads(tn.matmul(x, params.W_K[l]), h)
    v = _split_heads(tn.matmul(x, params.W_V[l]), h)
    scale = np.float32(1.0 / math.sqrt(dh))
    future = np.triu(np.ones((B, B), dtype=bool), k=1)
    heads = []
    rec = []
    for j in range(h):
        keys = np.concatenate([past_K[j], k[j]], axis=0)
        vals = np.concatenate([past_V[j], v[j]], axis=0)
        logits = tn.matmul(q[j], np.ascontiguousarray(keys.T)) * scale
        logits[:, P:][future] = tn.MASKED
        probs = tn.softmax_rows(logits)
        heads.append(tn.matmul(probs, vals))
        if record_rows is not None:
            rec.append(probs[record_rows, record_cols])
    concat = np.ascontiguousarray(np.stack(heads, axis=1).reshape(B, d))
    y = tn.matmul(concat, params.W_O[l])
    return y, k, v, (np.stack(rec) if record_rows is not None else None)


def _check_width(x: np.ndarray, d: int, name: str) -> np.ndarray:
    x = tn.as_mat(x, name=name)
    if x.shape[1] != d:
        raise InputError(f"{name} width {x.shape[1]} != model width {d}")
    return x


def prefill_chunk(
    cache: LayerKVCache,
    chunk: np.ndarray,
    prompt: np.ndarray,
    params: ModelParams,
    chunk_index: int = 0,
) -> tuple[AttentionRecord, np.ndarray]:
    """Run ``chunk || prompt`` through every layer and append its K/V to ``cache``.

    Returns the attention record (prompt rows x chunk columns, softmax taken
    over every visible key) and the final-layer prompt hidden states.
    """
    d = params.d
    chunk = _check_width(chunk, d, "chunk")
    prompt = _check_width(prompt, d, "prompt")
    if cache.L != params.L:
        raise InputError(f"cache has {cache.L} layers, model has {params.L}")
    if cache.h * cache.head_dim != d:
        raise InputError("cache head layout does not match model width")
    cache.check()
    n_chunk, S = chunk.shape[0], prompt.shape[0]
    x = np.concatenate([chunk, prompt], axis=0)
    origin_block = np.concatenate(
        [
            np.column_stack([np.full(n_chunk, chunk_index), np.arange(n_chunk)]),
            np.column_stack([np.full(S, PROMPT_CHUNK), np.arange(S)]),
        ]
    ).astype(np.int64)
    records = []
    for l in range(params.L):
        P = cache.K[l].shape[1]
        x, k, v, rec = _layer(
            x, params, l, cache.K[l], cache.V[l], cache.h,
            record_rows=slice(n_chunk, n_chunk + S),
            record_cols=slice(P, P + n_chunk),
        )
        cache.K[l] = np.concatenate([cache.K[l], k], axis=1)
        cache.V[l] = np.concatenate([cache.V[l], v], axis=1)
        cache.origin[l] = np.concatenate([cache.origin[l], origin_block])
        cache.block_start[l] = P
        records.append(rec)
    return AttentionRecord(records), x[n_chunk:]


def forward_full(
    features: np.ndarray,
    prompt: np.ndarray,
    params: ModelParams,
    h: int,
    capture: bool = False,
):
    """Uncompressed causal pass over ``features || prompt``.

    Returns the final-layer prompt outputs; with ``capture=True`` also the
    per-layer ``(h, S, n_video)`` prompt-on-video attention weights.
    """
    d = params.d
    prompt = _check_width(prompt, d, "prompt")
    features = np.zeros((0, d), np.float32) if np.size(features) == 0 else _check_width(features, d, "features")
    if d % h:
        raise InputError(f"h={h} does not divide d={d}")
    n = features.shape[0]
    S = prompt.shape[0]
    x = np.concatenate([features, prompt], axis=0)
    empty = np.zeros((h, 0, d // h), np.float32)
    attn = []
    for l in range(params.L):
        x, _, _, rec = _layer(
            x, params, l, empty, empty, h,
            record_rows=slice(n, n + S) if capture else None,
            record_cols=slice(0, n),
        )
        attn.append(rec)
    out = x[n:]
    return (out, attn) if capture else out
