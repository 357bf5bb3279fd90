"""Exact evolution of the best-value distribution for adaptive Grover searches.

Both kernels depend on a configuration only through its value, so the chain
is lumped onto the distinct values of ``f``.  From class ``v`` a round
succeeds with probability ``p_v`` and then lands uniformly on a configuration
with a larger value; otherwise the best value stays.

FPGS rounds use ``p_success`` at the round's query count; GAS rounds use the
success probability of Grover's algorithm averaged over an iterate count
drawn uniformly from ``[0, m)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from fpgas.adaptive import query_schedule
from fpgas.fpgs import p_success
from fpgas.qubo import QuboProblem, ValueDistribution, distribution
from fpgas.schedule import ScheduleParams

DEFAULT_GAS_GROWTH = 6.0 / 5.0


@dataclass(frozen=True, eq=False)
class ChainState:
    support: np.ndarray
    prob: np.ndarray
    round_index: int = 0
    schedule: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        p = np.asarray(self.prob, dtype=np.float64)
        if p.shape != np.shape(self.support):
            raise ValueError("prob and support must have the same length")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("prob must be a probability vector")
        object.__setattr__(self, "prob", np.clip(p, 0.0, None))

    def mean(self) -> float:
        return float(self.prob @ self.support)

    def variance(self) -> float:
        mu = self.mean()
        return float(self.prob @ (self.support - mu) ** 2)


def initial_state(dist: ValueDistribution) -> ChainState:
    """Uniformly random starting configuration."""
    return ChainState(dist.values, dist.probabilities(), 0, ())


def _sinc_ratio(theta: float, m: int) -> float:
    """``sinc(4 m theta) / sinc(2 theta)`` with ``sinc(x) = sin(x)/x``.

    The ratio is ``sin(4 m theta) / (2 m sin(2 theta))``, a 0/0 limit at
    ``theta = pi/2``.  Above ``pi/4`` it is evaluated at ``phi = pi/2 - theta``
    through the exact reflection ``-sinc(4 m phi) / sinc(2 phi)``.
    """
    if theta > math.pi / 4:
        phi = math.pi / 2 - theta
        return -float(np.sinc(4 * m * phi / np.pi) / np.sinc(2 * phi / np.pi))
    return float(np.sinc(4 * m * theta / np.pi) / np.sinc(2 * theta / np.pi))


def gas_success_probability(lam: float, m: int) -> float:
    """``(1/m) sum_{j<m} sin^2((2j+1) theta)`` in closed form, ``sin^2 theta = lam``."""
    if m < 1:
        raise ValueError("m must be positive")
    if lam <= 0.0:
        return 0.0
    return gas_success_sinc(math.asin(math.sqrt(min(lam, 1.0))), m)


def gas_success_sinc(theta: float, m: int) -> float:
    """The same average written as ``(1 - sinc(4 m theta)/sinc(2 theta)) / 2``."""
    return 0.5 * (1.0 - _sinc_ratio(theta, m))


def gas_direct_average(theta: float, m: int) -> float:
    j = np.arange(m)
    return float(np.mean(np.sin((2 * j + 1) * theta) ** 2))


def _step(dist: ValueDistribution, state: ChainState, success: np.ndarray, queries: int) -> ChainState:
    counts = dist.counts.astype(np.float64)
    above = dist.total - np.cumsum(counts)
    flow = np.divide(state.prob * success, above, out=np.zeros_like(counts), where=above > 0)
    # mass reaching w from every lower class, exclusive prefix sum
    incoming = counts * (np.cumsum(flow) - flow)
    new = state.prob * (1.0 - success) + incoming
    new = new / new.sum()
    return ChainState(state.support, new, state.round_index + 1, state.schedule + (queries,))


def fpgs_class_success(dist: ValueDistribution, delta: float, l: int) -> np.ndarray:
    return np.array([p_success(float(lam), delta, l) if lam > 0 else 0.0 for lam in dist.class_marked_fraction()])


def gas_class_success(dist: ValueDistribution, m: int) -> np.ndarray:
    return np.array([gas_success_probability(float(lam), m) for lam in dist.class_marked_fraction()])


def fpgs_transition(dist: ValueDistribution, state: ChainState, delta: float, l: int) -> ChainState:
    return _step(dist, state, fpgs_class_success(dist, delta, l), l)


def gas_transition(dist: ValueDistribution, state: ChainState, m: int) -> ChainState:
    return _step(dist, state, gas_class_success(dist, m), m)


def transition_matrix(dist: ValueDistribution, success: np.ndarray) -> np.ndarray:
    """Row-stochastic lumped kernel ``P[v, w]``."""
    counts = dist.counts.astype(np.float64)
    C = len(counts)
    above = dist.total - np.cumsum(counts)
    P = np.diag(1.0 - success)
    for v in range(C):
        if above[v] > 0:
            P[v, v + 1 :] = success[v] * counts[v + 1 :] / above[v]
        else:
            P[v, v] = 1.0
    return P


def full_chain_matrix(problem: QuboProblem, success_of_value) -> np.ndarray:
    """Unlumped ``2^n x 2^n`` kernel; ``success_of_value(lam)`` gives the round's success."""
    if problem.n > 8:
        raise ValueError("the full chain is only built for n <= 8")
    f = problem.values
    N = len(f)
    P = np.zeros((N, N))
    for x in range(N):
        better = f > f[x]
        k = int(better.sum())
        p = success_of_value(k / N) if k else 0.0
        P[x, better] = p / k if k else 0.0
        P[x, x] += 1.0 - p
    return P


def project_to_classes(problem: QuboProblem, dist: ValueDistribution, p_full: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(dist.values, problem.values)
    return np.bincount(idx, weights=p_full, minlength=len(dist.values))


def gas_schedule(growth: float, rounds: int) -> list[int]:
    return query_schedule(growth, rounds)


def run_chain(dist: ValueDistribution, rounds: int, method: str, params: ScheduleParams | None = None,
              gas_growth: float = DEFAULT_GAS_GROWTH) -> list[ChainState]:
    """States after ``0..rounds`` rounds of ``method`` (``"fpgs"`` or ``"gas"``)."""
    params = params or ScheduleParams()
    state = initial_state(dist)
    out = [state]
    if method == "fpgs":
        for l in query_schedule(params.alpha, rounds):
            state = fpgs_transition(dist, state, params.delta, l)
            out.append(state)
    elif method == "gas":
        for m in gas_schedule(gas_growth, rounds):
            state = gas_transition(dist, state, m)
            out.append(state)
    else:
        raise ValueError("method must be 'fpgs' or 'gas'")
    return out


def expected_queries_to_top(dist: ValueDistribution, epsilon: float, params: ScheduleParams,
                            tol: float = 1e-14, max_rounds: int = 10_000) -> float:
    """Expected queries of the FPGS adaptive loop until the best value is in the top-``epsilon`` set.

    Top classes absorb (mass never moves down), so the expectation is the
    sum over rounds of the round's query count times the probability of not
    yet being in the set when the round starts.
    """
    top = dist.top_fraction_mask(epsilon)
    state = initial_state(dist)
    total = 0.0
    l = 1.0
    for _ in range(max_rounds):
        outside = float(state.prob[~top].sum())
        if outside < tol:
            break
        q = math.ceil(l)
        total += q * outside
        state = fpgs_transition(dist, state, params.delta, q)
        l *= params.alpha
    return total


# -- benchmark report -------------------------------------------------------

@dataclass(frozen=True)
class RoundStats:
    method: str
    round: int
    queries: int
    total_queries: int
    expected_pct: float
    variance_pct: float
    top_probability: float
    amplification: float


@dataclass(frozen=True, eq=False)
class BenchmarkReport:
    values: np.ndarray
    max_value: float
    rows: tuple[RoundStats, ...]
    distributions: dict[str, list[np.ndarray]]

    def final(self, method: str) -> RoundStats:
        return [r for r in self.rows if r.method == method][-1]

    def write_csv(self, out: TextIO, digits: int = 12) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "round", "queries", "total_queries", "expected_pct", "variance_pct",
                    "top_probability", "amplification"])
        g = lambda v: f"{v:.{digits}g}"  # noqa: E731
        for r in self.rows:
            w.writerow([r.method, r.round, r.queries, r.total_queries, g(r.expected_pct), g(r.variance_pct),
                        g(r.top_probability), g(r.amplification)])

    def write_histogram_csv(self, out: TextIO, digits: int = 12) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "round", "value", "probability"])
        for method, states in self.distributions.items():
            for r, p in enumerate(states):
                for v, pv in zip(self.values, p):
                    w.writerow([method, r, f"{v:.{digits}g}", f"{pv:.{digits}g}"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _stats(method: str, r: int, state: ChainState, vmax: float, baseline: float, queries: int, total: int) -> RoundStats:
    scale = vmax if vmax != 0 else 1.0
    top = float(state.prob[-1])
    return RoundStats(method, r, queries, total, 100.0 * state.mean() / scale,
                      100.0 * math.sqrt(max(state.variance(), 0.0)) / scale, top, top / baseline)


def benchmark(problem: QuboProblem | ValueDistribution, rounds: int, params: ScheduleParams | None = None,
              gas_growth: float = DEFAULT_GAS_GROWTH) -> BenchmarkReport:
    """Per-round statistics of both methods from a uniform start.

    ``expected_pct`` is the mean best value and ``variance_pct`` its standard
    deviation, both as a percentage of the maximum.  ``amplification`` is
    the probability of holding the maximum divided by its uniform probability.
    """
    params = params or ScheduleParams()
    dist = problem if isinstance(problem, ValueDistribution) else distribution(problem)
    vmax = dist.max_value
    baseline = float(dist.probabilities()[-1])
    rows: list[RoundStats] = []
    dists: dict[str, list[np.ndarray]] = {}
    for method, sched in (("fpgs", query_schedule(params.alpha, rounds)), ("gas", gas_schedule(gas_growth, rounds))):
        states = run_chain(dist, rounds, method, params, gas_growth)
        dists[method] = [s.prob for s in states]
        total = 0
        for r, s in enumerate(states):
            q = sched[r - 1] if r else 0
            total += q
            rows.append(_stats(method, r, s, vmax, baseline, q, total))
    return BenchmarkReport(dist.values, vmax, tuple(rows), dists)
