"""Compare the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 10] [--batch 16] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` wall time for each
backend, the speedup, and the max absolute difference between the outputs.
The first numba call (JIT compilation) is excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qlt._kernels import numba_kernels, numpy_kernels
from qlt.clifford import haar_random_unitary


def best_time(fn, repeat: int) -> float:
    fn()  # warm-up, also triggers JIT compilation
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n: int, batch: int, rng: np.random.Generator) -> dict:
    dim = 1 << n
    states = rng.normal(size=(batch, dim)) + 1j * rng.normal(size=(batch, dim))
    gate = haar_random_unitary(4, rng)
    masks = np.array([(3 << q) for q in range(n - 1)] + [1 << q for q in range(n)], dtype=np.uint64)
    weights = rng.normal(size=len(masks))
    width = 64
    probs = rng.random((batch * 16, width))
    cdf = np.cumsum(probs / probs.sum(axis=1, keepdims=True), axis=1)
    rows = rng.integers(0, len(cdf), size=200_000)
    uniforms = rng.random(len(rows))
    x, z = int(rng.integers(dim)), int(rng.integers(dim))
    return {
        "apply_gate": lambda k: k.apply_gate(states, gate, (1, n - 2), n),
        "pauli_apply": lambda k: k.pauli_apply(states, x, z, 1, n),
        "term_values": lambda k: k.term_values(n, masks, weights),
        "sample_rows": lambda k: k.sample_rows(cdf, rows, uniforms),
    }


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"n={args.n} batch={args.batch} repeat={args.repeat}")
    print(f"{'kernel':<12} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, call in cases(args.n, args.batch, rng).items():
        t_np = best_time(lambda: call(numpy_kernels), args.repeat)
        t_nb = best_time(lambda: call(numba_kernels), args.repeat)
        diff = float(np.max(np.abs(np.asarray(call(numpy_kernels)) - np.asarray(call(numba_kernels)))))
        print(f"{name:<12} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
