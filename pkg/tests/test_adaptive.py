import math

import numpy as np
import pytest

from fpgas.adaptive import (
    HEURISTIC_G0,
    StoppingCondition,
    expected_queries_to_top_fraction,
    heuristic_top_fraction_queries,
    monte_carlo_model,
    query_schedule,
    run_fpgas,
    warm_start_rounds,
)
from fpgas.markov import run_chain
from fpgas.qubo import QuboProblem, distribution, evaluate
from fpgas.schedule import ScheduleParams, round_queries

PARAMS = ScheduleParams(0.4038, 1.975)


def test_stopping_condition_requires_a_bound():
    with pytest.raises(ValueError):
        StoppingCondition()


def test_query_schedule():
    assert query_schedule(1.975, 5) == [round_queries(1.975, s) for s in range(1, 6)]
    assert query_schedule(1.2, 4) == [1, 2, 2, 2]


def test_seeded_determinism(appendix):
    stop = StoppingCondition(max_rounds=10)
    a = run_fpgas(appendix, stop, PARAMS, seed=3)
    b = run_fpgas(appendix, stop, PARAMS, seed=3)
    assert a == b and a.trace == b.trace
    assert a.to_json() == b.to_json()


def test_state_invariants(appendix):
    for seed in range(20):
        s = run_fpgas(appendix, StoppingCondition(max_rounds=8), PARAMS, seed=seed)
        assert s.best_value == evaluate(appendix, s.best_x)
        assert s.t_elapsed == sum(query_schedule(PARAMS.alpha, s.rounds))
        assert s.l == pytest.approx(PARAMS.alpha**s.rounds)
        accepted = [r.candidate_value for r in s.trace if r.accepted]
        assert all(b > a for a, b in zip(accepted, accepted[1:]))
        for r in s.trace:
            assert r.accepted == (r.candidate_value > r.threshold)


def test_max_queries_stop(appendix):
    s = run_fpgas(appendix, StoppingCondition(max_queries=20), PARAMS, seed=1)
    assert s.t_elapsed >= 20
    assert s.t_elapsed - s.trace[-1].queries < 20


def test_n1_reaches_target():
    p = QuboProblem(np.array([[3.0]]))
    for seed in range(10):
        s = run_fpgas(p, StoppingCondition(target_value=3), seed=seed)
        assert s.best_value == 3 and s.best_x == "1"


def test_target_above_max_terminates(appendix):
    s = run_fpgas(appendix, StoppingCondition(target_value=99), PARAMS, seed=0)
    assert s.best_value == 5


def test_reset_on_success(appendix):
    s = run_fpgas(appendix, StoppingCondition(max_rounds=12), PARAMS, seed=4, reset_on_success=True)
    for prev, cur in zip(s.trace, s.trace[1:]):
        if prev.accepted:
            assert cur.queries == 1


def test_warm_start_counts_classical_samples(appendix):
    s = run_fpgas(appendix, StoppingCondition(max_rounds=2), PARAMS, seed=2, warm_start=True)
    assert s.classical_samples == warm_start_rounds(5) == math.ceil(math.log2(5) ** 2)
    assert s.t_elapsed == sum(query_schedule(PARAMS.alpha, 2))


def test_sim_backend_is_consistent(appendix):
    s = run_fpgas(appendix, StoppingCondition(max_rounds=4), PARAMS, backend="sim", seed=5)
    assert s.best_value == evaluate(appendix, s.best_x)
    with pytest.raises(ValueError):
        run_fpgas(appendix, StoppingCondition(max_rounds=1), backend="gpu")


def test_sim_and_model_backends_agree_in_distribution(appendix):
    stop = StoppingCondition(max_rounds=3)
    trials = 300
    sim = [run_fpgas(appendix, stop, PARAMS, backend="sim", seed=s).best_value for s in range(trials)]
    chain = run_chain(distribution(appendix), 3, "fpgs", PARAMS)[-1]
    top = chain.prob[-1]
    hits = sum(v == 5 for v in sim)
    sigma = math.sqrt(trials * top * (1 - top))
    assert abs(hits - trials * top) < 4 * sigma


def test_appendix_beats_random_baseline(appendix):
    mc = monte_carlo_model(appendix, 12, PARAMS, trials=10_000, seed=0)
    assert mc.class_frequencies(12)[-1] > 3 / 32
    assert mc.class_frequencies(0)[-1] == pytest.approx(3 / 32, abs=0.01)


def test_monte_carlo_history_monotone(appendix):
    mc = monte_carlo_model(appendix, 6, PARAMS, trials=2000, seed=1)
    assert np.all(np.diff(mc.history, axis=1) >= 0)


def test_heuristic_formula():
    assert heuristic_top_fraction_queries(1.0) == 0.0
    assert heuristic_top_fraction_queries(0.25) == pytest.approx(HEURISTIC_G0)
    est = expected_queries_to_top_fraction(None, 1 / 16)
    assert est.heuristic == pytest.approx(3 * HEURISTIC_G0) and est.exact_chain is None
    with pytest.raises(ValueError):
        heuristic_top_fraction_queries(0.0)


def test_exact_top_fraction_matches_simulation(appendix):
    est = expected_queries_to_top_fraction(appendix, 3 / 32, PARAMS)
    runs = [run_fpgas(appendix, StoppingCondition(target_value=5), PARAMS, seed=s).t_elapsed for s in range(4000)]
    se = np.std(runs) / math.sqrt(len(runs))
    assert abs(np.mean(runs) - est.exact_chain) < 4 * se
