#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Shapes mimic a real training step: a 512-triple batch with 100 negatives
against k=100 embeddings, plus 4096-d image dot products. Usage:

    python benchmarks/bench_kernels.py [--repeat 5] [--candidates 101]
"""

import argparse
import time

import numpy as np

from kgalign import kernels


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--batch", type=int, default=512)
    parser.add_argument("--candidates", type=int, default=101)
    parser.add_argument("--entities", type=int, default=30_000)
    parser.add_argument("--k", type=int, default=100)
    parser.add_argument("--image-dim", type=int, default=4096)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.PCG64(0))
    n = args.batch * args.candidates
    ent = rng.normal(size=(args.entities, args.k))
    rel = rng.normal(size=(1400, args.k))
    img = rng.normal(size=(args.entities, args.image_dim))
    h = rng.integers(0, args.entities, size=n)
    r = rng.integers(0, 1400, size=n)
    t = rng.integers(0, args.entities, size=n)
    coeff = rng.normal(size=n)

    cases = {
        "trilinear_forward": lambda: kernels.trilinear_forward(ent, rel, h, r, t),
        "trilinear_backward": lambda: kernels.trilinear_backward(
            ent, rel, h, r, t, coeff, np.zeros_like(ent), np.zeros_like(rel)),
        "rows_dot (4096-d)": lambda: kernels.rows_dot(img, h, img, t),
    }

    backends = kernels.available_backends()
    print(f"candidate rows: {n:,}   backends: {', '.join(backends)}")
    header = f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, fn in cases.items():
        times = {}
        for backend in backends:
            kernels.use_backend(backend)
            times[backend] = timeit(fn, args.repeat)
        kernels.use_backend("auto")
        row = f"{name:<22}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if "cython" in times and "numpy" in times:
            row += f"{times['numpy'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
