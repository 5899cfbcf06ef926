#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-python fallback.

Micro-benchmarks swap the kernel implementations in place; the end-to-end
rows time one full system drop in a subprocess with and without
NOMASIM_PURE_PYTHON=1.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from nomasim.kernels import _python
from nomasim.linklevel import HALF_RATE_K7, conv_encode_batch, trellis_tables

try:
    from nomasim.kernels import _native
except ImportError:
    _native = None

DROP_SNIPPET = (
    "from nomasim.harness import ScenarioConfig, run_system_drop\n"
    "import time\n"
    "t0 = time.perf_counter()\n"
    "run_system_drop(ScenarioConfig(K=50, drops=1), 12345, 0)\n"
    "print(time.perf_counter() - t0)\n"
)


def timeit(fn, repeat):
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return min(samples)


def bench_waterfill(impl, rng):
    inv = rng.uniform(0.05, 5.0, (50, 50))
    inv[rng.random(inv.shape) < 0.2] = np.inf
    budgets = rng.uniform(0.1, 5.0, 50)
    return lambda: [impl.waterfill_rows(inv, budgets) for _ in range(200)]


def bench_candidates(impl, rng):
    granted = rng.uniform(0.1, 3.0, 25)
    cands = rng.uniform(0.05, 5.0, 50)
    return lambda: [impl.candidate_rates(granted, 2.0, cands)
                    for _ in range(2000)]


def bench_viterbi(impl, rng, soft):
    t = trellis_tables(HALF_RATE_K7)
    if soft:
        data = rng.standard_normal((64, 640))
        return lambda: impl.viterbi_decode_soft_batch(
            data, t.pred, t.branch_out, t.state_bit, t.tail)
    info = rng.integers(0, 2, (64, 314), dtype=np.uint8)
    coded = conv_encode_batch(info)
    noisy = coded ^ (rng.random(coded.shape) < 0.05).astype(np.uint8)
    return lambda: impl.viterbi_decode_batch(
        noisy, t.pred, t.branch_out, t.state_bit, t.tail)


def bench_drop(pure_python):
    env = dict(os.environ)
    if pure_python:
        env["NOMASIM_PURE_PYTHON"] = "1"
    else:
        env.pop("NOMASIM_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", DROP_SNIPPET],
                         capture_output=True, text=True, env=env, check=True)
    return float(out.stdout.strip())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _native is None:
        print("compiled kernels not available; showing fallback timings only")

    rng = np.random.default_rng(1)
    rows = []
    cases = [
        ("waterfill_rows 200x(50,50)", bench_waterfill),
        ("candidate_rates 2000x(25+50)", bench_candidates),
        ("viterbi hard 64x640b", lambda impl, r: bench_viterbi(impl, r, False)),
        ("viterbi soft 64x640b", lambda impl, r: bench_viterbi(impl, r, True)),
    ]
    for name, make in cases:
        py = timeit(make(_python, rng), args.repeat)
        if _native is not None:
            nat = timeit(make(_native, rng), args.repeat)
            rows.append((name, py, nat))
        else:
            rows.append((name, py, None))

    py_drop = statistics.median(bench_drop(True) for _ in range(3))
    rows.append(("system drop K=50 (all schemes)", py_drop,
                 statistics.median(bench_drop(False) for _ in range(3))
                 if _native is not None else None))

    width = max(len(r[0]) for r in rows)
    print(f"{'case'.ljust(width)}  {'python':>10}  {'native':>10}  {'speedup':>8}")
    for name, py, nat in rows:
        if nat is None:
            print(f"{name.ljust(width)}  {py*1e3:9.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{name.ljust(width)}  {py*1e3:9.2f}ms  {nat*1e3:9.2f}ms  "
                  f"{py/nat:7.1f}x")


if __name__ == "__main__":
    main()
