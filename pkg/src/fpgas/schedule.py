"""Query-schedule optimisation for fixed-point Grover search.

Two cost measures, both scaled by ``sqrt(lam)``:

* known marked fraction: one FPGS at the critical query count, repeated
  until success, ``tau = sqrt(lam) * l_crit / P(l_crit)``;
* unknown fraction: rounds of ``ceil(alpha^(s-1))`` queries until the first
  success.  The expected total is bounded by an exact head sum up to the
  first round that reaches ``l_crit`` plus a geometric tail.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import minimize_scalar

from fpgas import _kernels
from fpgas.fpgs import l_critical, p_fail, p_success

GROVER_TAU = math.pi / 4
BOYER_TAU = 9.0 / 4.0
CONJECTURED_TAU = 1.434
DEFAULT_DELTA = 0.4038
DEFAULT_ALPHA = 1.975


@dataclass(frozen=True)
class ScheduleParams:
    delta: float = DEFAULT_DELTA
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1")

    @property
    def tail_ratio(self) -> float:
        return self.alpha * self.delta**2

    def require_convergent(self) -> None:
        if self.tail_ratio >= 1.0:
            raise ValueError(f"alpha*delta^2 = {self.tail_ratio:.6g} >= 1: the tail bound diverges")


def round_queries(alpha: float, s: int) -> int:
    """Queries in round ``s`` (1-based): ``ceil(alpha^(s-1))``."""
    return math.ceil(alpha ** (s - 1))


# -- known marked fraction --------------------------------------------------

def tau_known_lambda(delta: float, lam: float) -> float:
    l = l_critical(lam, delta)
    return math.sqrt(lam) * l / p_success(lam, delta, l)


@dataclass(frozen=True)
class KnownLambdaOptimum:
    delta: float
    tau: float
    lam: float
    l: int
    p_success: float


def tooth_interval(lam: float, l: int) -> tuple[float, float]:
    """``delta`` range on which ``l_critical(lam, delta) == l``.

    ``l_critical <= l`` exactly when ``delta >= 1/cosh(atanh(sqrt(lam)) (2l+1))``.
    """
    u = math.atanh(math.sqrt(lam))
    lo = 1.0 / math.cosh(u * (2 * l + 1))
    hi = 1.0 / math.cosh(u * (2 * l - 1)) if l > 1 else 1.0
    return lo, hi


def _tooth_minimum(lam: float, l: int, lo: float, hi: float) -> tuple[float, float] | None:
    """Smallest ``tau`` on tooth ``l`` clipped to ``[lo, hi]``, as ``(tau, delta)``."""
    a, b = tooth_interval(lam, l)
    a, b = max(a, lo), min(b, hi)
    if b <= a:
        return None
    sq = math.sqrt(lam)
    tooth = lambda dl: sq * l / p_success(lam, dl, l)  # noqa: E731
    r = minimize_scalar(tooth, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    # the closed end ``a`` belongs to the tooth; ``b`` does not
    cands = [(float(r.fun), float(r.x)), (tooth(a), a)]
    ok = [c for c in cands if l_critical(lam, c[1]) == l]
    return min(ok) if ok else None


def optimize_known_lambda(
    lam: float = 2.0**-20,
    bracket: tuple[float, float, float] = (0.3, 0.6, 0.9),
    tol: float = 1e-4,
    refine_halfwidth: float = 5e-2,
    exhaustive_teeth: int = 400,
) -> KnownLambdaOptimum:
    """Golden-section search for the ``delta`` minimising ``tau``, then an exact polish.

    ``tau(delta)`` is a sawtooth at finite ``lam`` because ``l_crit`` is an
    integer, so the golden-section result can sit on a poor tooth.  Each
    tooth (fixed ``l``) is smooth and is minimised on its exact ``delta``
    interval.  Teeth within ``refine_halfwidth`` of the golden-section result
    are all scanned when there are at most ``exhaustive_teeth`` of them;
    otherwise a coarse sample of teeth locates the best region first (the
    per-tooth minimum varies smoothly with ``l``).
    """
    f = lambda dl: tau_known_lambda(dl, lam)  # noqa: E731
    res = minimize_scalar(f, bracket=bracket, method="golden", tol=tol)
    center = float(res.x)
    lo, hi = max(center - refine_halfwidth, 1e-6), min(center + refine_halfwidth, 1 - 1e-6)
    best = (float(res.fun), center)
    l_lo, l_hi = l_critical(lam, hi), l_critical(lam, lo)
    if l_hi - l_lo + 1 <= exhaustive_teeth:
        teeth = range(l_lo, l_hi + 1)
    else:
        coarse = np.unique(np.linspace(l_lo, l_hi, exhaustive_teeth // 2).round().astype(int))
        scored = [(m, int(l)) for l in coarse if (m := _tooth_minimum(lam, int(l), lo, hi))]
        l_best = min(scored)[1]
        step = int(np.max(np.diff(coarse)))
        teeth = range(max(l_lo, l_best - step), min(l_hi, l_best + step) + 1)
    for l in teeth:
        m = _tooth_minimum(lam, l, lo, hi)
        if m is not None and m[0] < best[0]:
            best = m
    tau, delta = best
    l = l_critical(lam, delta)
    return KnownLambdaOptimum(delta, tau, lam, l, p_success(lam, delta, l))


# -- geometric schedule -----------------------------------------------------

@dataclass(frozen=True)
class ScheduleBound:
    """Pieces of the ``tau_{delta,alpha}`` upper bound at one ``lam``."""

    tau: float
    head: float
    tail: float
    s0: int
    cutoff: int
    l_crit: int
    fail_probs: tuple[float, ...]
    q_cutoff: float


def tau_schedule_bound(params: ScheduleParams, lam: float, head_cutoff: int | None = None) -> ScheduleBound:
    """Upper bound on ``sqrt(lam) * E[total queries]`` for the geometric schedule.

    Rounds before the cutoff are summed exactly; from the cutoff ``c`` on,
    each round fails with probability at most ``delta^2`` so the remainder is
    at most ``sqrt(lam) * Q_c * alpha^(c-1) / (1 - alpha*delta^2)`` where
    ``Q_c`` is the probability that rounds ``1..c-1`` all failed.  The default
    cutoff is ``s0``, the first round with ``ceil(alpha^(s-1)) >= l_crit``.
    """
    params.require_convergent()
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    delta, alpha = params.delta, params.alpha
    lc = l_critical(lam, delta)
    s0 = 1
    while round_queries(alpha, s0) < lc:
        s0 += 1
    cutoff = s0 if head_cutoff is None else head_cutoff
    if cutoff < s0:
        raise ValueError(f"head cutoff {cutoff} precedes s0={s0}")
    sq = math.sqrt(lam)
    head = 0.0
    q = 1.0
    fails = []
    for s in range(1, cutoff):
        ls = round_queries(alpha, s)
        head += ls * q
        pf = p_fail(lam, delta, ls)
        fails.append(pf)
        q *= pf
    head *= sq
    tail = sq * q * alpha ** (cutoff - 1) / (1.0 - params.tail_ratio)
    return ScheduleBound(head + tail, head, tail, s0, cutoff, lc, tuple(fails), q)


def tau_schedule_exact(params: ScheduleParams, lam: float, rtol: float = 1e-15, max_rounds: int = 10_000) -> float:
    """``sqrt(lam) * E[total queries]`` summed round by round (no tail bound)."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("lam must lie in (0, 1]")
    total = 0.0
    q = 1.0
    for s in range(1, max_rounds + 1):
        ls = round_queries(params.alpha, s)
        total += ls * q
        q *= p_fail(lam, params.delta, ls)
        if q * ls < rtol * total:
            break
    return math.sqrt(lam) * total


def tau_bound_value(delta: float, alpha: float, lam: float) -> float:
    """Scalar bound with invalid parameters mapped to NaN (grid kernels)."""
    if not (0.0 < delta < 1.0 and alpha > 1.0) or alpha * delta * delta >= 1.0:
        return math.nan
    return tau_schedule_bound(ScheduleParams(delta, alpha), lam).tau


# -- phase portrait ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhasePortrait:
    deltas: np.ndarray
    alphas: np.ndarray
    tau: np.ndarray
    lam: float

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.tau)

    def argmin(self) -> tuple[float, float, float]:
        if not self.valid.any():
            raise ValueError("no valid cell in the grid")
        i, j = np.unravel_index(np.nanargmin(self.tau), self.tau.shape)
        return float(self.deltas[i]), float(self.alphas[j]), float(self.tau[i, j])

    def write_csv(self, out: TextIO, digits: int = 12) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["delta", "alpha", "tau", "valid"])
        for i, dl in enumerate(self.deltas):
            for j, al in enumerate(self.alphas):
                t = self.tau[i, j]
                ok = bool(np.isfinite(t))
                w.writerow([f"{dl:.{digits}g}", f"{al:.{digits}g}", f"{t:.{digits}g}" if ok else "", int(ok)])

    def to_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        self.write_csv(buf, digits)
        return buf.getvalue()


def phase_portrait(deltas: Sequence[float], alphas: Sequence[float], lam: float) -> PhasePortrait:
    """``tau_{delta,alpha}`` bound on a grid; cells with ``alpha*delta^2 >= 1`` are NaN."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    d = np.ascontiguousarray(deltas, dtype=np.float64)
    a = np.ascontiguousarray(alphas, dtype=np.float64)
    return PhasePortrait(d, a, _kernels.schedule_bound_grid(d, a, lam), lam)


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive, rounding-stable arithmetic grid."""
    count = int(round((hi - lo) / step)) + 1
    return np.round(lo + step * np.arange(count), 12)
