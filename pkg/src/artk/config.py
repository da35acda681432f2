"""Pipeline hyperparameters."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from artk.errors import InputError


@dataclass(frozen=True)
class PipelineConfig:
    """Scalar hyperparameters for one compression run.

    ``scenes``/``scene_noise`` only affect synthetic feature generation and
    ``positional`` toggles additive sinusoidal encodings in the model.
    """

    T: int
    N: int
    tau: int
    S: int
    L: int
    h: int
    d: int
    C_max: int
    p: float = 0.01
    epsilon: float = 0.01
    fps: float = 1.0
    chunk_seconds: float = 10.0
    seed: int = 0
    positional: bool = False
    scenes: int = 0
    scene_noise: float = 0.05

    def __post_init__(self):
        self.validate()

    @property
    def n_chunks(self) -> int:
        return self.T // self.tau

    @property
    def chunk_tokens(self) -> int:
        return self.tau * self.N

    @property
    def head_dim(self) -> int:
        return self.d // self.h

    @property
    def video_tokens(self) -> int:
        return self.T * self.N

    def validate(self) -> None:
        for name in ("T", "N", "tau", "S", "L", "h", "d", "C_max"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise InputError(f"{name} must be an integer, got {v!r}")
        if min(self.T, self.N, self.tau, self.S, self.L, self.h, self.d) < 1:
            raise InputError("T, N, tau, S, L, h, d must all be >= 1")
        if self.T % self.tau:
            raise InputError(f"tau={self.tau} does not divide T={self.T}")
        if self.d % self.h:
            raise InputError(f"h={self.h} does not divide d={self.d}")
        if not self.S < self.C_max <= self.S + self.T * self.N:
            raise InputError(
                f"need S < C_max <= S + T*N, got S={self.S}, C_max={self.C_max}, T*N={self.T * self.N}"
            )
        if not 0.0 < self.p < 1.0:
            raise InputError(f"p must lie in (0, 1), got {self.p}")
        if not 0.0 <= self.epsilon < 1.0 / self.L:
            raise InputError(f"epsilon must lie in [0, 1/L), got {self.epsilon}")
        if self.fps <= 0 or self.chunk_seconds <= 0:
            raise InputError("fps and chunk_seconds must be positive")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")
        if self.scenes < 0 or self.scene_noise < 0:
            raise InputError("scenes and scene_noise must be non-negative")

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        return cls.from_dict(data)
