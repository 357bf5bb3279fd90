"""Fixed-point Grover adaptive search (threshold-raising loop).

Each round runs FPGS with ``ceil(l)`` queries against the current best value
``th``, measures a candidate ``x*``, accepts it when ``f(x*) > th`` and grows
``l`` by ``alpha``.

Two oracle backends:

* ``"sim"`` builds the FPGS circuit and samples the simulated input-register
  distribution;
* ``"model"`` samples the same distribution analytically.  FPGS keeps the
  amplitude uniform over the marked set and over its complement, so the
  outcome is uniform over ``{f > th}`` with probability ``p_success`` and
  uniform over ``{f <= th}`` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from fpgas import _kernels
from fpgas.fpgs import FpgsParams, build_fpgs_circuit, p_success
from fpgas.qubo import QuboProblem, ValueDistribution, distribution, index_to_bits
from fpgas.schedule import DEFAULT_ALPHA, DEFAULT_DELTA, ScheduleParams

HEURISTIC_G0 = 1.433
BACKENDS = ("model", "sim")


def query_schedule(alpha: float, rounds: int, start: float = 1.0) -> list[int]:
    """``ceil(l)`` per round with ``l`` multiplied by ``alpha`` after each round."""
    out = []
    l = start
    for _ in range(rounds):
        out.append(math.ceil(l))
        l *= alpha
    return out


@dataclass(frozen=True)
class StoppingCondition:
    max_queries: int | None = None
    max_rounds: int | None = None
    target_value: float | None = None

    def __post_init__(self) -> None:
        if self.max_queries is None and self.max_rounds is None and self.target_value is None:
            raise ValueError("set at least one of max_queries, max_rounds, target_value")

    def reached(self, state: "SearchState", max_value: float | None = None) -> bool:
        if self.max_queries is not None and state.t_elapsed >= self.max_queries:
            return True
        if self.max_rounds is not None and state.rounds >= self.max_rounds:
            return True
        if self.target_value is not None and state.best_value >= self.target_value:
            return True
        # nothing left to find: a target above the maximum would never stop otherwise
        return (
            self.target_value is not None
            and self.max_queries is None
            and self.max_rounds is None
            and max_value is not None
            and state.best_value >= max_value
        )


@dataclass(frozen=True)
class RoundRecord:
    round: int
    queries: int
    candidate: str
    candidate_value: float
    accepted: bool
    threshold: float

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "queries": self.queries,
            "candidate": self.candidate,
            "candidateValue": self.candidate_value,
            "accepted": self.accepted,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class SearchState:
    best_x: str
    best_value: float
    l: float
    t_elapsed: int
    rng_seed: int
    rounds: int = 0
    classical_samples: int = 0
    trace: tuple[RoundRecord, ...] = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "bestX": self.best_x,
            "bestValue": self.best_value,
            "l": self.l,
            "tElapsed": self.t_elapsed,
            "rngSeed": self.rng_seed,
            "rounds": self.rounds,
            "classicalSamples": self.classical_samples,
            "trace": [r.to_json() for r in self.trace],
        }


class _ModelOracle:
    def __init__(self, problem: QuboProblem, delta: float):
        self.values = problem.values
        self.order = np.argsort(self.values, kind="stable")
        self.sorted_values = self.values[self.order]
        self.delta = delta

    def sample(self, threshold: float, queries: int, rng: np.random.Generator) -> int:
        N = len(self.values)
        cut = int(np.searchsorted(self.sorted_values, threshold, side="right"))
        above = N - cut
        lam = above / N
        p = p_success(lam, self.delta, queries) if above else 0.0
        if above and rng.random() < p:
            return int(self.order[cut + int(rng.random() * above)])
        return int(self.order[int(rng.random() * cut)])


class _SimOracle:
    """Samples the simulated FPGS output; distributions cached per ``(th, l)``."""

    def __init__(self, problem: QuboProblem, delta: float):
        self.problem = problem
        self.delta = delta
        self._cache: dict[tuple[float, int], np.ndarray] = {}

    def _dist(self, threshold: float, queries: int) -> np.ndarray:
        from fpgas.statevector import simulate

        key = (threshold, queries)
        if key not in self._cache:
            circ = build_fpgs_circuit(self.problem, int(threshold), FpgsParams(self.delta, queries))
            amps = simulate(circ).amplitudes
            n = self.problem.n
            probs = np.abs(amps.reshape(2**n, -1)) ** 2
            p = probs.sum(axis=1)
            self._cache[key] = p / p.sum()
        return self._cache[key]

    def sample(self, threshold: float, queries: int, rng: np.random.Generator) -> int:
        p = self._dist(threshold, queries)
        return int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right").clip(0, len(p) - 1))


def warm_start_rounds(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2)) ** 2))


def run_fpgas(
    problem: QuboProblem,
    stop: StoppingCondition,
    params: ScheduleParams | None = None,
    backend: str = "model",
    seed: int = 0,
    *,
    reset_on_success: bool = False,
    warm_start: bool = False,
) -> SearchState:
    """One adaptive-search run; deterministic given ``seed``.

    ``reset_on_success`` sets ``l`` back to 1 after an accepted candidate
    (the default keeps growing it).  ``warm_start`` first draws
    ``ceil(log2(n)^2)`` uniform samples classically; these are counted in
    ``classical_samples``, not in ``t_elapsed``.
    """
    params = params or ScheduleParams(DEFAULT_DELTA, DEFAULT_ALPHA)
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    rng = np.random.default_rng(seed)
    oracle = _ModelOracle(problem, params.delta) if backend == "model" else _SimOracle(problem, params.delta)
    values = problem.values
    n = problem.n
    x = int(rng.integers(2**n))
    state = SearchState(index_to_bits(x, n), float(values[x]), 1.0, 0, seed)
    if warm_start:
        k = warm_start_rounds(n)
        for _ in range(k):
            cand = int(rng.integers(2**n))
            if values[cand] > state.best_value:
                state = replace(state, best_x=index_to_bits(cand, n), best_value=float(values[cand]))
        state = replace(state, classical_samples=k)
    vmax = float(values.max())
    trace = []
    while not stop.reached(state, vmax):
        queries = math.ceil(state.l)
        cand = oracle.sample(state.best_value, queries, rng)
        fc = float(values[cand])
        accepted = fc > state.best_value
        t = state.t_elapsed + queries
        trace.append(RoundRecord(state.rounds + 1, queries, index_to_bits(cand, n), fc, accepted, state.best_value))
        l = 1.0 if (accepted and reset_on_success) else state.l * params.alpha
        state = replace(
            state,
            best_x=index_to_bits(cand, n) if accepted else state.best_x,
            best_value=fc if accepted else state.best_value,
            l=l,
            t_elapsed=t,
            rounds=state.rounds + 1,
        )
    return replace(state, trace=tuple(trace))


# -- batched model Monte Carlo ----------------------------------------------

def class_success_table(dist: ValueDistribution, delta: float, schedule: list[int]) -> np.ndarray:
    """``p_success`` from every value class for every round's query count."""
    lam = dist.class_marked_fraction()
    table = np.zeros((len(lam), len(schedule)))
    for r, l in enumerate(schedule):
        for c, lc in enumerate(lam):
            table[c, r] = p_success(float(lc), delta, l) if lc > 0 else 0.0
    return table


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    values: np.ndarray
    history: np.ndarray  # (trials, rounds + 1) class indices
    schedule: tuple[int, ...]

    def class_frequencies(self, round_index: int) -> np.ndarray:
        counts = np.bincount(self.history[:, round_index], minlength=len(self.values))
        return counts / self.history.shape[0]


def monte_carlo_model(
    problem_or_dist: QuboProblem | ValueDistribution,
    rounds: int,
    params: ScheduleParams | None = None,
    trials: int = 10_000,
    seed: int = 0,
) -> MonteCarloResult:
    """Many independent model-backend runs with a fixed round count.

    Tracks only the class of the best value, which is all the outcome
    statistics depend on.  Uses the compiled kernel when available.
    """
    params = params or ScheduleParams(DEFAULT_DELTA, DEFAULT_ALPHA)
    dist = problem_or_dist if isinstance(problem_or_dist, ValueDistribution) else distribution(problem_or_dist)
    schedule = query_schedule(params.alpha, rounds)
    table = class_success_table(dist, params.delta, schedule)
    pos_class = np.repeat(np.arange(len(dist.values), dtype=np.int32), dist.counts)
    first_above = np.cumsum(dist.counts).astype(np.int64)
    rng = np.random.default_rng(seed)
    u0 = rng.random(trials)
    u_succ = rng.random((trials, rounds))
    u_pick = rng.random((trials, rounds))
    hist = _kernels.adaptive_model_classes(pos_class, first_above, np.ascontiguousarray(table), u0, u_succ, u_pick)
    return MonteCarloResult(dist.values, hist, tuple(schedule))


# -- top-fraction expectation -----------------------------------------------

@dataclass(frozen=True)
class TopFractionEstimate:
    epsilon: float
    heuristic: float
    exact_chain: float | None

    @property
    def ratio(self) -> float:
        if not self.exact_chain:
            return math.nan
        return self.heuristic / self.exact_chain


def heuristic_top_fraction_queries(epsilon: float, g0: float = HEURISTIC_G0) -> float:
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    return g0 * (1.0 / math.sqrt(epsilon) - 1.0)


def expected_queries_to_top_fraction(
    problem: QuboProblem | ValueDistribution | None,
    epsilon: float,
    params: ScheduleParams | None = None,
    g0: float = HEURISTIC_G0,
) -> TopFractionEstimate:
    """Heuristic ``g0 (1/sqrt(eps) - 1)`` next to the exact-chain expectation.

    The exact value is the expected total query count of the adaptive loop
    (uniform start, fixed geometric schedule) until the best value first lies
    in the top-``epsilon`` set; ``None`` when no problem is given.
    """
    heuristic = heuristic_top_fraction_queries(epsilon, g0)
    if problem is None:
        return TopFractionEstimate(epsilon, heuristic, None)
    from fpgas.markov import expected_queries_to_top

    dist = problem if isinstance(problem, ValueDistribution) else distribution(problem)
    params = params or ScheduleParams(DEFAULT_DELTA, DEFAULT_ALPHA)
    return TopFractionEstimate(epsilon, heuristic, expected_queries_to_top(dist, epsilon, params))
