"""Pure-Python/numpy versions of the kernels in ``_core.pyx``."""
from __future__ import annotations

import numpy as np


def _bit_matrix(width: int) -> np.ndarray:
    idx = np.arange(2**width, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.float64)


def qubo_values(Q: np.ndarray, offset: float) -> np.ndarray:
    """All ``2^n`` values, split into high/low halves joined by one matmul."""
    n = Q.shape[0]
    nh = n // 2
    nl = n - nh
    Bh = _bit_matrix(nh)
    Bl = _bit_matrix(nl)
    Qhh, Qhl, Qll = Q[:nh, :nh], Q[:nh, nh:], Q[nh:, nh:]
    fh = np.einsum("ij,jk,ik->i", Bh, Qhh, Bh) if nh else np.zeros(1)
    fl = np.einsum("ij,jk,ik->i", Bl, Qll, Bl)
    cross = 2.0 * (Bh @ Qhl) @ Bl.T if nh else np.zeros((1, 2**nl))
    return (offset + fh[:, None] + fl[None, :] + cross).ravel()


def schedule_bound_grid(deltas: np.ndarray, alphas: np.ndarray, lam: float) -> np.ndarray:
    from fpgas.schedule import tau_bound_value

    out = np.empty((len(deltas), len(alphas)))
    for i, d in enumerate(deltas):
        for j, a in enumerate(alphas):
            out[i, j] = tau_bound_value(float(d), float(a), lam)
    return out


def adaptive_model_classes(pos_class, first_above, success_table, u0, u_succ, u_pick) -> np.ndarray:
    N = pos_class.shape[0]
    T = u0.shape[0]
    R = success_table.shape[1]
    hist = np.empty((T, R + 1), dtype=np.int32)
    c = pos_class[np.minimum((u0 * N).astype(np.int64), N - 1)]
    hist[:, 0] = c
    for r in range(R):
        start = first_above[c]
        above = N - start
        succ = (above > 0) & (u_succ[:, r] < success_table[c, r])
        pos = np.minimum(start + (u_pick[:, r] * above).astype(np.int64), N - 1)
        c = np.where(succ, pos_class[pos], c)
        hist[:, r + 1] = c
    return hist
