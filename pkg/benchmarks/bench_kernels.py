"""Time the compiled and numpy kernels on the workloads the package actually runs.

    python3 benchmarks/bench_kernels.py [--paths 16384] [--repeat 3] [--json]

Both backends get the same seed, so the survivor counts must match.
"""
import argparse
import json
import time

import numpy as np

from supbounds import kernels
from supbounds.bounds import build_walk
from supbounds.covariance import CorrelationModel


def workloads():
    walk = build_walk(CorrelationModel.shao(0.5), 3.0, 183, 1 / 183)
    sd = np.sqrt(walk.alphas_sq)
    thr = np.full(walk.steps, 1.0)
    steps = 1000
    h = 1.0 / steps
    bridge_sd = np.full(steps, np.sqrt(h))
    bridge_thr = 1.0 - h * np.arange(1, steps + 1)
    skeleton = np.array([[1.0, -1.0, 1e-4, 10_000]])
    return {
        "walk n=183": lambda rng, m, be: kernels.survival_count(sd, thr, m, rng, backend=be),
        "bridge line 1e3 steps": lambda rng, m, be: kernels.survival_count(
            bridge_sd, bridge_thr, m, rng, bridge=True, thr0=1.0, backend=be),
        "skeleton line 1e4 steps": lambda rng, m, be: kernels.skeleton_survival_count(skeleton, 64, m, rng, backend=be),
    }


def time_one(fn, backend, paths, repeat, seed=0):
    best = float("inf")
    count = None
    for _ in range(repeat):
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        count = fn(rng, paths, backend)
        best = min(best, time.perf_counter() - start)
    return best, int(count)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=1 << 14)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    rows = []
    for name, fn in workloads().items():
        row = {"workload": name, "paths": args.paths}
        for be in backends:
            row[f"{be}_seconds"], row[f"{be}_survivors"] = time_one(fn, be, args.paths, args.repeat)
        if "cython" in backends:
            row["speedup"] = row["python_seconds"] / row["cython_seconds"]
            row["identical"] = row["python_survivors"] == row["cython_survivors"]
        rows.append(row)

    if args.json:
        print(json.dumps({"backends": backends, "default": kernels.BACKEND, "rows": rows}, indent=2))
        return
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    for row in rows:
        parts = [f"{row['workload']:<26}"]
        for be in backends:
            parts.append(f"{be} {row[f'{be}_seconds'] * 1e3:9.1f} ms")
        if "speedup" in row:
            parts.append(f"x{row['speedup']:.1f}  same counts: {row['identical']}")
        print("  ".join(parts))


if __name__ == "__main__":
    main()
