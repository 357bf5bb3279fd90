"""Selects the compiled kernels when built, the numpy fallback otherwise.

Set ``FPGAS_PURE_PYTHON=1`` to force the fallback.  ``FPGAS_THREADS`` caps
the worker threads used by the grid kernel.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from fpgas import _fallback

try:
    from fpgas import _core as compiled
except ImportError:  # extension not built
    compiled = None

fallback = _fallback

if compiled is not None and not os.environ.get("FPGAS_PURE_PYTHON"):
    _impl = compiled
    BACKEND = "compiled"
else:
    _impl = _fallback
    BACKEND = "python"


def thread_count() -> int:
    env = os.environ.get("FPGAS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def qubo_values(Q: np.ndarray, offset: float) -> np.ndarray:
    return _impl.qubo_values(np.ascontiguousarray(Q, dtype=np.float64), float(offset))


def schedule_bound_grid(deltas: np.ndarray, alphas: np.ndarray, lam: float) -> np.ndarray:
    deltas = np.ascontiguousarray(deltas, dtype=np.float64)
    alphas = np.ascontiguousarray(alphas, dtype=np.float64)
    workers = min(thread_count(), len(deltas))
    if _impl is _fallback or workers <= 1:
        return _impl.schedule_bound_grid(deltas, alphas, lam)
    # rows are independent; the compiled loop releases the GIL
    chunks = np.array_split(deltas, workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda c: _impl.schedule_bound_grid(np.ascontiguousarray(c), alphas, lam), chunks))
    return np.vstack(parts)


def adaptive_model_classes(pos_class, first_above, success_table, u0, u_succ, u_pick) -> np.ndarray:
    return _impl.adaptive_model_classes(
        np.ascontiguousarray(pos_class, dtype=np.int32),
        np.ascontiguousarray(first_above, dtype=np.int64),
        np.ascontiguousarray(success_table, dtype=np.float64),
        np.ascontiguousarray(u0, dtype=np.float64),
        np.ascontiguousarray(u_succ, dtype=np.float64),
        np.ascontiguousarray(u_pick, dtype=np.float64),
    )
