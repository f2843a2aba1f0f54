"""Benchmark: compiled sampling kernel vs. the pure-numpy fallback.

Run from the repo root after installing:

    python3 bench/bench_sampling.py [--M 200000] [--repeats 5]

Both backends draw bit-identical paths; the benchmark verifies that while
timing them across a few network shapes.
"""

import argparse
import time

import numpy as np

from pathcap.network import Dataset, Network
from pathcap.sampling import HAVE_COMPILED, build_sampler, sample_paths, set_backend


def make_case(name, dims, seed):
    rng = np.random.default_rng(seed)
    layers = tuple(rng.standard_normal((dims[i + 1], dims[i])) for i in range(len(dims) - 1))
    net = Network(layers)
    S = Dataset(rng.standard_normal((8, dims[0])))
    return name, net, S


def run_case(name, net, S, M, repeats):
    results = {}
    for backend in ("python", "compiled") if HAVE_COMPILED else ("python",):
        set_backend(backend)
        try:
            cs = build_sampler(net, S, 1)
            sample_paths(cs, min(M, 1000), seed=0)  # warm the row cache
            best = float("inf")
            for r in range(repeats):
                t0 = time.perf_counter()
                counts = sample_paths(cs, M, seed=1)
                best = min(best, time.perf_counter() - t0)
            results[backend] = (best, counts)
        finally:
            set_backend(None)
    draws = M * (net.depth + 1)
    line = f"{name:28s} M={M:>8d}"
    for backend, (secs, _) in results.items():
        line += f"  {backend}: {secs * 1e3:8.1f} ms ({draws / secs / 1e6:6.1f} Mdraws/s)"
    if len(results) == 2:
        line += f"  speedup x{results['python'][0] / results['compiled'][0]:.2f}"
        same = all(
            np.array_equal(a, b)
            for a, b in zip(results["python"][1].pairs, results["compiled"][1].pairs)
        )
        line += "  [counts identical]" if same else "  [COUNTS DIFFER!]"
    print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_COMPILED:
        print("note: compiled kernel unavailable; timing the numpy fallback only")
    cases = [
        make_case("narrow deep (8x8, L=6)", [8] * 6 + [4], 0),
        make_case("desk scale (16 wide, L=3)", [16, 16, 16, 4], 1),
        make_case("wide shallow (256, L=2)", [64, 256, 10], 2),
        make_case("mlp-like (784-200-100-10)", [784, 200, 100, 10], 3),
    ]
    for name, net, S in cases:
        run_case(name, net, S, args.M, args.repeats)


if __name__ == "__main__":
    main()
