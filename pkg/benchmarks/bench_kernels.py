"""Compare the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.
"""

import argparse
import timeit

import numpy as np

from nvcluster import _backend


def random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def bench(fn, repeat):
    t = timeit.repeat(fn, number=1, repeat=repeat)
    return min(t)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(1)
    try:
        cy = _backend.kernels("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return
    py = _backend.kernels("python")

    print(f"{'kernel':<28}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for n in (6, 12, 18, 48):
        h = random_hermitian(n, rng)
        tp = bench(lambda: py.jacobi_hermitian(h, 1e-12, 100), args.repeat)
        tc = bench(lambda: cy.jacobi_hermitian(h, 1e-12, 100), args.repeat)
        print(f"{'jacobi n=' + str(n):<28}{tp:>12.5f}{tc:>12.5f}{tp / tc:>10.1f}")

    grid = np.linspace(0.4, 0.6, 20001)
    centers = rng.uniform(0.4, 0.6, 200)
    amps = rng.uniform(0, 1, 200)
    tp = bench(lambda: py.lorentzian_sum(grid, centers, amps, 1.5e-3), args.repeat)
    tc = bench(lambda: cy.lorentzian_sum(grid, centers, amps, 1.5e-3), args.repeat)
    print(f"{'lorentzian 20001x200':<28}{tp:>12.5f}{tc:>12.5f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
