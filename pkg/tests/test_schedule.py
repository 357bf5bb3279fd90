import math

import numpy as np
import pytest

from fpgas.fpgs import l_critical, p_fail, p_success
from fpgas.schedule import (
    BOYER_TAU,
    GROVER_TAU,
    ScheduleParams,
    grid,
    optimize_known_lambda,
    phase_portrait,
    round_queries,
    tau_bound_value,
    tau_known_lambda,
    tau_schedule_bound,
    tau_schedule_exact,
    tooth_interval,
)

CONJ = ScheduleParams(0.4038, 1.975)


def test_params_validation():
    with pytest.raises(ValueError):
        ScheduleParams(0.0, 2.0)
    with pytest.raises(ValueError):
        ScheduleParams(0.5, 1.0)
    with pytest.raises(ValueError):
        tau_schedule_bound(ScheduleParams(0.8, 2.0), 1e-3)


def test_round_queries():
    assert [round_queries(1.975, s) for s in range(1, 6)] == [1, 2, 4, 8, 16]
    assert round_queries(1.5, 3) == 3


def test_tooth_interval_matches_l_critical():
    lam = 2.0**-12
    for l in (3, 10, 40):
        lo, hi = tooth_interval(lam, l)
        assert lo < hi
        for x in np.linspace(lo, hi, 7)[1:-1]:
            assert l_critical(lam, x) == l
        assert l_critical(lam, lo * (1 + 1e-9)) == l
        assert l_critical(lam, hi * (1 + 1e-9)) == l - 1


def test_known_lambda_tau_definition():
    lam, delta = 2.0**-16, 0.55
    l = l_critical(lam, delta)
    assert tau_known_lambda(delta, lam) == pytest.approx(math.sqrt(lam) * l / p_success(lam, delta, l))


def test_known_lambda_optimum_is_best_in_neighbourhood():
    lam = 2.0**-16
    opt = optimize_known_lambda(lam)
    scan = min(tau_known_lambda(x, lam) for x in np.linspace(opt.delta - 0.01, opt.delta + 0.01, 4001))
    assert opt.tau <= scan + 1e-12
    assert opt.l == l_critical(lam, opt.delta)
    assert GROVER_TAU < opt.tau < BOYER_TAU


def test_known_lambda_limit_stable():
    a = optimize_known_lambda(2.0**-20)
    assert abs(tau_known_lambda(a.delta, 2.0**-20) - tau_known_lambda(a.delta, 2.0**-24)) < 0.01


def test_schedule_bound_pieces():
    lam = 2.0**-20
    b = tau_schedule_bound(CONJ, lam)
    assert b.tau == pytest.approx(b.head + b.tail)
    assert round_queries(CONJ.alpha, b.s0) >= b.l_crit > round_queries(CONJ.alpha, b.s0 - 1)
    assert all(0.0 <= f <= 1.0 for f in b.fail_probs)
    q = 1.0
    for s, f in enumerate(b.fail_probs, 1):
        assert f == pytest.approx(p_fail(lam, CONJ.delta, round_queries(CONJ.alpha, s)))
        q *= f
    assert b.q_cutoff == pytest.approx(q)


def test_bound_exceeds_exact_expectation():
    for lam in (2.0**-10, 2.0**-20, 2.0**-30):
        assert tau_schedule_exact(CONJ, lam) <= tau_schedule_bound(CONJ, lam).tau + 1e-12


def test_bound_nonincreasing_with_later_cutoff():
    lam = 2.0**-24
    b0 = tau_schedule_bound(CONJ, lam)
    prev = b0.tau
    for c in range(b0.s0 + 1, b0.s0 + 8):
        cur = tau_schedule_bound(CONJ, lam, head_cutoff=c).tau
        assert cur <= prev + 1e-12
        prev = cur
    with pytest.raises(ValueError):
        tau_schedule_bound(CONJ, lam, head_cutoff=b0.s0 - 1)


def test_bound_near_one():
    lam = 0.9
    assert math.isfinite(tau_schedule_bound(CONJ, lam).tau)
    assert tau_schedule_bound(CONJ, lam).tau >= math.sqrt(lam)


def test_conjecture_point():
    tau = tau_schedule_bound(CONJ, 2.0**-40).tau
    assert 1.42 <= tau <= 1.434
    assert GROVER_TAU < tau < BOYER_TAU


def test_tau_bound_value_invalid_is_nan():
    assert math.isnan(tau_bound_value(0.9, 2.0, 1e-3))
    assert math.isnan(tau_bound_value(0.4, 1.0, 1e-3))


def test_portrait_single_cell_and_invalid():
    pp = phase_portrait([0.4038], [1.975], 2.0**-40)
    assert pp.tau[0, 0] == pytest.approx(tau_schedule_bound(CONJ, 2.0**-40).tau, rel=1e-12)
    pp = phase_portrait([0.4, 0.8], [1.5, 2.0], 2.0**-20)
    assert np.isnan(pp.tau[1, 1]) and not pp.valid[1, 1] and pp.valid[0, 0]
    text = pp.to_csv()
    assert text.splitlines()[0] == "delta,alpha,tau,valid"
    assert text.splitlines()[-1].endswith(",,0")


def test_portrait_minimum_local():
    pp = phase_portrait(grid(0.38, 0.44, 0.002), grid(1.9, 2.05, 0.005), 2.0**-40)
    assert pp.argmin()[2] <= 1.44


def test_grid_inclusive():
    g = grid(0.3, 0.5, 0.002)
    assert len(g) == 101 and g[0] == 0.3 and g[-1] == 0.5
