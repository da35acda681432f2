"""Adaptive KV-cache compression for chunked long-sequence prefill.

Token budgets are spread over time chunks by inter-frame distance and over
layers by attention significance; each chunk's cache is then cut down with
TopK eviction. :mod:`artk.oracle` checks the supporting theory numerically.
"""

from artk.compressor import run_pipeline
from artk.config import PipelineConfig
from artk.errors import InputError, InvariantError
from artk.model import init_model

__all__ = ["PipelineConfig", "run_pipeline", "init_model", "InputError", "InvariantError"]
__version__ = "0.1.0"
