"""JSON report construction and consistency checks."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from artk.compressor import PipelineResult
from artk.config import PipelineConfig
from artk.errors import InvariantError

RUN_REPORT_FIELDS = (
    "config", "temporal", "chunks", "cache_lengths", "retained_video_slots",
    "mean_cache_length", "loss_vs_full", "lambda_csv",
)
CHUNK_FIELDS = (
    "chunk", "alpha", "slot_budget", "salient", "weights_hat",
    "keep_counts", "alphas_layer", "kept_indices",
)


def run_report(
    result: PipelineResult,
    config: PipelineConfig,
    loss_vs_full: float | None = None,
    lambda_csv: str | None = None,
    timing: bool = True,
) -> dict:
    chunks = []
    for plan in result.plans:
        chunks.append(
            {
                "chunk": plan.chunk,
                "alpha": plan.alpha,
                "slot_budget": plan.budget.slot_budget,
                "salient": None if plan.salient is None else plan.salient.tolist(),
                "weights_hat": plan.budget.weights_hat.tolist(),
                "keep_counts": plan.keep_counts.tolist(),
                "alphas_layer": plan.budget.alphas_layer.tolist(),
                "kept_indices": [idx.tolist() for idx in plan.kept],
            }
        )
    lengths = result.cache_lengths
    report = {
        "config": config.to_dict(),
        "temporal": {
            "d_bars": result.d_bars.tolist(),
            "alphas": result.temporal.alphas.tolist(),
            "budget_tokens": result.temporal.budget_tokens,
        },
        "chunks": chunks,
        "cache_lengths": lengths,
        "retained_video_slots": result.retained_video_tokens,
        "mean_cache_length": float(np.mean(lengths)),
        "loss_vs_full": loss_vs_full,
        "lambda_csv": lambda_csv,
    }
    if timing:
        report["timings"] = result.timings
    validate_run_report(report)
    return report


def validate_run_report(report: dict) -> None:
    """Field presence plus count cross-checks; raises ``InvariantError``."""
    missing = [k for k in RUN_REPORT_FIELDS if k not in report]
    if missing:
        raise InvariantError(f"report missing fields {missing}")
    cfg = report["config"]
    L, S = cfg["L"], cfg["S"]
    per_layer = [0] * L
    for ch in report["chunks"]:
        absent = [k for k in CHUNK_FIELDS if k not in ch]
        if absent:
            raise InvariantError(f"chunk entry missing {absent}")
        keep = ch["keep_counts"]
        if sum(keep) != ch["slot_budget"]:
            raise InvariantError(f"chunk {ch['chunk']}: sum(keep_counts) != slot_budget")
        if [len(i) for i in ch["kept_indices"]] != keep:
            raise InvariantError(f"chunk {ch['chunk']}: kept index lists disagree with keep_counts")
        for l, k in enumerate(keep):
            per_layer[l] += k
    if report["cache_lengths"] != [k + S for k in per_layer]:
        raise InvariantError("cache_lengths disagree with kept counts")
    if report["retained_video_slots"] != sum(per_layer):
        raise InvariantError("retained_video_slots disagrees with kept counts")


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
