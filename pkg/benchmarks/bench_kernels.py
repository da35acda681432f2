"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both implementations directly in this process. The
pipeline timing runs each backend in a fresh interpreter because the backend
is chosen once at import.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from artk.tensor import _fallback

try:
    from artk.tensor import _kernels
except ImportError:
    _kernels = None

PIPELINE = """
import time
from artk import tensor
from artk.compressor import run_pipeline
from artk.config import PipelineConfig
from artk.synth import generate_synthetic
c = PipelineConfig(T=64, N=4, tau=8, S=8, L=4, h=4, d=64, C_max=8 + 64, seed=1, scenes=4)
f, p, m = generate_synthetic(c)
t = time.perf_counter()
run_pipeline(f, p, m, c)
print(tensor.BACKEND, time.perf_counter() - t)
"""


def bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    a = rng.standard_normal((256, 64), dtype=np.float32)
    b = rng.standard_normal((64, 256), dtype=np.float32)
    x = rng.standard_normal((256, 1024), dtype=np.float32)
    u = rng.standard_normal((1024, 64), dtype=np.float32)
    v = rng.standard_normal((1024, 64), dtype=np.float32)
    cases = {
        "matmul 256x64 @ 64x256": lambda m: m.matmul(a, b),
        "softmax_rows 256x1024": lambda m: m.softmax_rows(x),
        "cosine_rows 1024x64": lambda m: m.cosine_rows(u, v),
    }
    print(f"{'kernel':28s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        tp = bench(lambda: fn(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:28s} {tp * 1e3:9.2f}ms {'n/a':>10s}")
            continue
        tc = bench(lambda: fn(_kernels), args.repeat)
        same = np.array_equal(fn(_fallback), fn(_kernels))
        print(f"{name:28s} {tp * 1e3:9.2f}ms {tc * 1e3:9.2f}ms {tp / tc:7.1f}x  identical={same}")

    for force in ("1", "0"):
        env = dict(os.environ, ARTK_FORCE_PYTHON=force)
        out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"pipeline T=64 N=4 d=64 L=4 ({backend}): {float(seconds):.3f}s")


if __name__ == "__main__":
    main()
