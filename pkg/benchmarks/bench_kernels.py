#!/usr/bin/env python3
"""Benchmark the replication hot loop: numba kernels vs the numpy fallback.

Each backend runs in a subprocess so the selection happens the same way it
does in production, through the DCVAR_FORCE_NUMPY environment flag.

    python benchmarks/bench_kernels.py [--paths 200000] [--steps 250] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import math
import sys
import time

import dcvar_portfolio as dp

n_paths, n_steps, repeat = json.loads(sys.argv[1])

params = dp.MarketParams(
    horizon=1.0, riskfree=0.02, s0=[100.0] * 4,
    mu=[0.09, 0.15, 0.21, 0.12], vol=[0.08, 0.12, 0.15, 0.08],
    corr=[[1.0, 0.2, -0.3, 0.0], [0.2, 1.0, 0.15, -0.2],
          [-0.3, 0.15, 1.0, 0.3], [0.0, -0.2, 0.3, 1.0]])
mkt = dp.build_market(params)
dist = dp.LognormalStatePrice.from_market(mkt)
sol = dp.optimize_alpha(dist, mkt, 100.0, 30.0, 0.99, 500.0)
cfg = dp.PathConfig(n_paths=n_paths, n_steps=n_steps, seed=7)

# Warm-up pass triggers JIT compilation so timings measure steady state.
dp.replicate(mkt, sol, dp.PathConfig(n_paths=1000, n_steps=8, seed=7))

best = math.inf
mean_zv = 0.0
for _ in range(repeat):
    t0 = time.perf_counter()
    res = dp.replicate(mkt, sol, cfg)
    best = min(best, time.perf_counter() - t0)
    mean_zv = float((res.z_terminal * res.v_terminal).mean())

from dcvar_portfolio import _kernels
print(json.dumps({"backend": _kernels.backend_name(), "seconds": best,
                  "mean_zv": mean_zv}))
"""


def run_backend(force_numpy: bool, n_paths: int, n_steps: int, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("DCVAR_FORCE_NUMPY", None)
    if force_numpy:
        env["DCVAR_FORCE_NUMPY"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD, json.dumps([n_paths, n_steps, repeat])],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=250)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"replication workload: {args.paths} paths x {args.steps} steps, "
          f"best of {args.repeat}")
    rows = [run_backend(True, args.paths, args.steps, args.repeat),
            run_backend(False, args.paths, args.steps, args.repeat)]
    print(f"{'backend':<10} {'seconds':>9} {'paths/s':>12} {'mean Z*V':>12}")
    for row in rows:
        rate = args.paths / row["seconds"]
        print(f"{row['backend']:<10} {row['seconds']:>9.2f} {rate:>12.0f} "
              f"{row['mean_zv']:>12.4f}")
    if rows[0]["backend"] != "numpy":
        print("warning: DCVAR_FORCE_NUMPY did not select the numpy backend")
    if rows[1]["backend"] == "numpy":
        print("note: numba unavailable, both runs used the numpy fallback")
    else:
        print(f"speedup: {rows[0]['seconds'] / rows[1]['seconds']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
