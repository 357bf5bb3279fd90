"""Compiled vs numpy-fallback timings for the three hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row reports the best of N runs per backend, the speedup and the largest
absolute difference between the two outputs.  ``FPGAS_THREADS`` applies to the
compiled grid kernel only when it is called through ``fpgas._kernels``; here the
raw single-threaded kernels are compared.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fpgas import _fallback, _kernels
from fpgas.adaptive import class_success_table, query_schedule
from fpgas.qubo import distribution, erdos_renyi_edges, graph_cut_problem, random_qubo
from fpgas.schedule import grid


def qubo_case():
    p = random_qubo(20, np.random.default_rng(1), d=None, density=1.0)
    Q = np.ascontiguousarray(p.Q)
    return "qubo_values n=20", (Q, p.offset)


def grid_case():
    return "schedule_bound_grid 101x201 lam=2^-40", (grid(0.3, 0.5, 0.002), grid(1.5, 2.5, 0.005), 2.0**-40)


def monte_carlo_case():
    problem = graph_cut_problem(erdos_renyi_edges(16, 0.5, 7), 16)
    dist = distribution(problem)
    rounds, trials = 6, 200_000
    table = class_success_table(dist, 0.4038, query_schedule(1.975, rounds))
    pos = np.repeat(np.arange(len(dist.values), dtype=np.int32), dist.counts)
    first = np.cumsum(dist.counts).astype(np.int64)
    rng = np.random.default_rng(0)
    args = (pos, first, np.ascontiguousarray(table), rng.random(trials), rng.random((trials, rounds)),
            rng.random((trials, rounds)))
    return "adaptive_model_classes 2e5 trials x 6 rounds", args


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    opts = ap.parse_args()
    if _kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    cases = [(qubo_case, "qubo_values"), (grid_case, "schedule_bound_grid"), (monte_carlo_case, "adaptive_model_classes")]
    print(f"{'kernel':48s} {'compiled s':>11s} {'fallback s':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for make, name in cases:
        label, args = make()
        fast, slow = getattr(_kernels.compiled, name), getattr(_fallback, name)
        a, b = np.asarray(fast(*args), dtype=float), np.asarray(slow(*args), dtype=float)
        diff = float(np.nanmax(np.abs(a - b))) if a.size else 0.0
        tc, tf = bench(fast, args, opts.repeat), bench(slow, args, opts.repeat)
        print(f"{label:48s} {tc:11.4f} {tf:11.4f} {tf / tc:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
