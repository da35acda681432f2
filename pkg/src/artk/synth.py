"""Seeded synthetic inputs standing in for encoded video frames and a prompt."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from artk.config import PipelineConfig
from artk.model import ModelParams, init_model
from artk.rng import SplitMix64, derive_seed
from artk.tensorfile import save_tensor

_FEATURE_STREAM = 0x46454154  # "FEAT"
_PROMPT_STREAM = 0x50524F4D  # "PROM"

FEATURES_FILE = "features.artk"
PROMPT_FILE = "prompt.artk"
MODEL_FILE = "model.artk"
CONFIG_FILE = "config.json"


def scene_bounds(T: int, scenes: int) -> list[tuple[int, int]]:
    """Contiguous ``[start, stop)`` frame ranges, as even as possible."""
    edges = np.linspace(0, T, scenes + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def generate_features(config: PipelineConfig) -> np.ndarray:
    """``(T, N, d)`` features.

    With ``scenes == 0`` every frame is independent noise. Otherwise frames
    inside a scene share a base tensor plus ``scene_noise``-scaled noise.
    """
    T, N, d = config.T, config.N, config.d
    rng = SplitMix64(derive_seed(config.seed, _FEATURE_STREAM))
    if config.scenes == 0:
        return rng.normal((T, N, d)).astype(np.float32)
    out = np.empty((T, N, d), dtype=np.float32)
    for a, b in scene_bounds(T, min(config.scenes, T)):
        base = rng.normal((N, d))
        noise = rng.normal((b - a, N, d))
        out[a:b] = (base[None] + config.scene_noise * noise).astype(np.float32)
    return out


def generate_prompt(config: PipelineConfig) -> np.ndarray:
    rng = SplitMix64(derive_seed(config.seed, _PROMPT_STREAM))
    return rng.normal((config.S, config.d)).astype(np.float32)


def generate_synthetic(config: PipelineConfig) -> tuple[np.ndarray, np.ndarray, ModelParams]:
    return generate_features(config), generate_prompt(config), init_model(config)


def write_synthetic(config: PipelineConfig, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    features, prompt, params = generate_synthetic(config)
    paths = {
        "features": out / FEATURES_FILE,
        "prompt": out / PROMPT_FILE,
        "model": out / MODEL_FILE,
        "config": out / CONFIG_FILE,
    }
    save_tensor(paths["features"], features)
    save_tensor(paths["prompt"], prompt)
    save_tensor(paths["model"], params.stacked())
    paths["config"].write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return paths
