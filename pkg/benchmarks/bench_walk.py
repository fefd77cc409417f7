"""Time the compiled and pure-Python Gram-Schmidt walk on kernel features.

Usage: python3 benchmarks/bench_walk.py [--sizes 512,1024,2048] [--repeats 3] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from kdecoreset import Dataset, Domain, KernelSpec, decompose, gram_matrix
from kdecoreset.walk import available_backends, gram_schmidt_walk

CENTERS = np.array([[2.0, 2.0], [2.0, -2.0], [-2.0, 2.0], [-2.0, -2.0]])


def features(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = CENTERS[rng.integers(0, 4, n)] + rng.normal(size=(n, 2))
    ds = Dataset(pts, Domain.euclidean(2))
    G = gram_matrix(KernelSpec("gaussian", 1.0, ds.domain), ds)
    return decompose(G, method="cholesky" if n > 256 else "eigh", exact_error=False).vectors


def best_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256,512,1024,2048")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)
    if "compiled" not in available_backends():
        print("compiled backend not built; reinstall without KDECORESET_NO_EXT", file=sys.stderr)
        return 1
    rows = []
    print(f"{'n':>6} {'rank':>5} {'python s':>10} {'compiled s':>11} {'speedup':>8} {'same':>5}")
    for n in (int(s) for s in args.sizes.split(",")):
        V = features(n, args.seed)
        out = {}
        secs = {}
        for backend in ("python", "compiled"):
            secs[backend] = best_time(
                lambda b=backend: out.__setitem__(b, gram_schmidt_walk(V, args.seed, backend=b)), args.repeats
            )
        same = bool(np.array_equal(out["python"], out["compiled"]))
        speedup = secs["python"] / secs["compiled"]
        rows.append((n, V.shape[1], secs["python"], secs["compiled"], speedup, same))
        print(f"{n:>6} {V.shape[1]:>5} {secs['python']:>10.3f} {secs['compiled']:>11.3f} {speedup:>8.1f} {same!s:>5}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "rank", "python_s", "compiled_s", "speedup", "identical"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
