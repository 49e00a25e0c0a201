#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the two hot paths on representative workloads: Jordan-Wigner term
application during sparse-Hamiltonian assembly, and the batched RK4
integration of the RG flow.  Both backends are invoked directly, so the
comparison runs in a single process regardless of MAJORANA_LADDER_NUMBA.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from majorana_ladder import kernels
from majorana_ladder.fockspace import enumerate_sector
from majorana_ladder.models import ModelParams, h_eff_pulse_terms
from majorana_ladder.rgflow import bare_couplings


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_term_action(repeat):
    basis = enumerate_sector(9, 9)  # dim 48620
    terms = h_eff_pulse_terms(ModelParams(U0=-1.5, L=9), 0.5)
    packed = [
        (
            np.array([m for m, _ in t.factors], dtype=np.int64),
            np.array([c for _, c in t.factors], dtype=np.uint8),
        )
        for t in terms
    ]

    def run(impl):
        for modes, creates in packed:
            impl(basis.states, modes, creates)

    rows = [("term_action (dim 48620 x %d terms)" % len(packed), basis.dim)]
    results = {}
    if kernels.HAVE_NUMBA:
        run(kernels._term_action_numba)  # warm the JIT
        results["numba"] = timeit(lambda: run(kernels._term_action_numba), repeat)
    results["numpy"] = timeit(lambda: run(kernels._term_action_numpy), repeat)
    return rows[0][0], results


def bench_rg(repeat):
    u0s = np.linspace(-1.5, -0.05, 24)
    alphas = np.linspace(0.05, 0.95, 24)
    y0 = np.array(
        [
            [b.y_minus, b.y_p, b.y_bs]
            for u in u0s
            for a in alphas
            for b in [bare_couplings(float(u), float(a), 1.0 / 3.0)]
        ]
    )
    args = (y0, 1e-4, 9.0, 120.0, 0.9, 0, 2048)
    results = {}
    if kernels.HAVE_NUMBA:
        kernels._rg_integrate_numba(*args)  # warm the JIT
        results["numba"] = timeit(lambda: kernels._rg_integrate_numba(*args), repeat)
    results["numpy"] = timeit(lambda: kernels._rg_integrate_numpy(*args), repeat)
    return f"rg_integrate ({y0.shape[0]} flows, dl=1e-4)", results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    print(f"numba available: {kernels.HAVE_NUMBA}")
    for name, results in (bench_term_action(args.repeat), bench_rg(args.repeat)):
        line = f"{name}: " + "  ".join(f"{k} {v * 1e3:.1f} ms" for k, v in results.items())
        if "numba" in results and "numpy" in results:
            line += f"  (speedup x{results['numpy'] / results['numba']:.1f})"
        print(line)


if __name__ == "__main__":
    main()
