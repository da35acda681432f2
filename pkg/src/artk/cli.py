"""Command-line entry point.

Exit codes: 0 success, 1 invariant or verification failure, 2 bad input/file.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from artk import oracle
from artk.analysis import redundancy_profile
from artk.compressor import run_pipeline
from artk.config import PipelineConfig
from artk.errors import InputError, InvariantError
from artk.model import ModelParams, forward_full, with_positions
from artk.report import dump_json, run_report
from artk.synth import write_synthetic
from artk.tensorfile import load_tensor

SUITES = ("lemma1", "bound", "greedy")


def _load_inputs(args) -> tuple[PipelineConfig, np.ndarray, np.ndarray, ModelParams]:
    config = PipelineConfig.load(args.config)
    params = ModelParams.from_stacked(load_tensor(args.model))
    features = load_tensor(args.features)
    prompt = load_tensor(args.prompt)
    if params.L != config.L or params.d != config.d:
        raise InputError(f"model is L={params.L}, d={params.d}; config says L={config.L}, d={config.d}")
    if prompt.ndim != 2 or prompt.shape[1] != config.d:
        raise InputError(f"prompt shape {prompt.shape} does not match d={config.d}")
    return config, features, prompt, params


def cmd_gen(args) -> int:
    config = PipelineConfig.load(args.config)
    paths = write_synthetic(config, args.out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_analyze(args) -> int:
    config, features, prompt, params = _load_inputs(args)
    report = redundancy_profile(features, prompt, params, config)
    Path(args.out).write_text(report.to_csv())
    flag = " (last chunk partial)" if report.partial_last else ""
    print(f"lambda: {report.lam.shape[0]} chunks x {report.lam.shape[1]} layers{flag}")
    print("layer means:", " ".join(f"{x:.4f}" for x in report.layer_means))
    return 0


def cmd_compress(args) -> int:
    config, features, prompt, params = _load_inputs(args)
    if features.shape != (config.T, config.N, config.d):
        raise InputError(f"features shape {features.shape} != {(config.T, config.N, config.d)}")
    result = run_pipeline(features, prompt, params, config)
    flat = features.reshape(-1, config.d)
    ref_prompt = prompt
    if config.positional:
        flat, ref_prompt = with_positions(flat, prompt)
    reference = forward_full(flat, ref_prompt, params, config.h)
    loss = float(np.abs(result.outputs.astype(np.float64) - reference).sum())
    lambda_csv = None
    if args.heatmap:
        Path(args.heatmap).write_text(redundancy_profile(features, prompt, params, config).to_csv())
        lambda_csv = str(args.heatmap)
    report = run_report(result, config, loss_vs_full=loss, lambda_csv=lambda_csv, timing=not args.no_timing)
    dump_json(report, args.report)
    print(f"cache lengths {report['cache_lengths']}, L1 vs uncompressed {loss:.6g}")
    return 0


def cmd_verify(args) -> int:
    if args.trials < 0:
        raise InputError("--trials must be >= 0")
    suites = SUITES if args.suite == "all" else (args.suite,)
    workers = oracle.default_workers()
    out: dict = {"seed": args.seed, "trials": args.trials, "suites": list(suites)}
    summary = {}
    timings = {}
    for suite in suites:
        t0 = time.perf_counter()
        if suite == "lemma1":
            reports = oracle.check_renormalization(args.trials, args.seed, workers=workers)
            failures = sum(not r.ok for r in reports)
        elif suite == "bound":
            reports = oracle.verify_bound(args.trials, args.seed, workers=workers)
            failures = sum(not r.ok for r in reports)
        else:
            reports = oracle.check_near_optimality(args.trials, args.seed, workers=workers)
            failures = sum(not r.ratio_ok for r in reports)
            summary["greedy_detail"] = {
                "log_ratio_violations": sum(not r.log_ratio_ok for r in reports),
                "topk_ratio_violations": sum(not r.topk_ratio_ok for r in reports),
                "strategies_coincide": sum(r.coincide for r in reports),
            }
        timings[suite] = time.perf_counter() - t0
        out[suite] = oracle.as_dicts(reports)
        summary[suite] = {"trials": len(reports), "violations": failures}
        print(f"{suite}: {len(reports) - failures}/{len(reports)} passed")
    out["summary"] = summary
    if not args.no_timing:
        out["timings"] = timings
    if args.report:
        dump_json(out, args.report)
    return 1 if any(s["violations"] for k, s in summary.items() if k in SUITES) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write seeded synthetic features, prompt and model")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_gen)

    def inputs(p):
        p.add_argument("--config", required=True)
        p.add_argument("--model", required=True)
        p.add_argument("--features", required=True)
        p.add_argument("--prompt", required=True)

    p = sub.add_parser("analyze", help="heavy-hitter ratio per (time chunk, layer) as CSV")
    inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("compress", help="run the chunked compression pipeline")
    inputs(p)
    p.add_argument("--report", required=True)
    p.add_argument("--heatmap", help="also profile the uncompressed model into this CSV")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    p.set_defaults(fn=cmd_compress)

    p = sub.add_parser("verify", help="run oracle suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
