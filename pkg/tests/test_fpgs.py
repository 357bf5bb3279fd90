import math

import mpmath as mp
import numpy as np
import pytest

from fpgas.circuit import GateKind
from fpgas.fpgs import (
    FpgsParams,
    argument_excess,
    build_fpgs_circuit,
    build_fpgs_set_circuit,
    chebyshev_t,
    fpgs_angles,
    l_critical,
    p_success,
)
from fpgas.statevector import success_probability

from conftest import APPENDIX_MARKED

mp.mp.dps = 60


def mp_p_success(lam, delta, l):
    """High-precision oracle straight from the Chebyshev definition."""
    lam, delta = mp.mpf(lam), mp.mpf(delta)
    L = 2 * l + 1
    inner = mp.cosh(mp.acosh(1 / delta) / L) * mp.sqrt(1 - lam)
    outer = mp.cosh(L * mp.acosh(inner)) if inner > 1 else mp.cos(L * mp.acos(inner))
    return 1 - outer**2 * delta**2


def mp_l_critical(lam, delta):
    lam, delta = mp.mpf(lam), mp.mpf(delta)
    l = 1
    while mp.sqrt(1 - lam) * mp.cosh(mp.acosh(1 / delta) / (2 * l + 1)) > 1:
        l += 1
    return l


def test_chebyshev_basics():
    for order in (0, 0.3, 1, 2.5, 7):
        assert chebyshev_t(order, 1.0) == pytest.approx(1.0)
    for x in np.linspace(-1, 1.5, 41):
        assert chebyshev_t(3, x) == pytest.approx(4 * x**3 - 3 * x, abs=1e-12)
    assert chebyshev_t(3, -2.0) == pytest.approx(4 * -8 + 6)
    assert chebyshev_t(1 / 3, 2.0) == pytest.approx(math.cosh(math.acosh(2) / 3))
    with pytest.raises(ValueError):
        chebyshev_t(0.5, -1.5)
    with pytest.raises(ValueError):
        chebyshev_t(-1, 0.5)


def test_chebyshev_continuous_at_one():
    assert chebyshev_t(4.5, 1 + 1e-12) == pytest.approx(chebyshev_t(4.5, 1 - 1e-12), abs=1e-9)


@pytest.mark.parametrize("lam", [2.0**-40, 2.0**-20, 1e-3, 0.3])
@pytest.mark.parametrize("delta", [0.25, 0.4038, 0.6049, 0.9])
def test_argument_excess_matches_mp(lam, delta):
    for L in (3, 11, 2001):
        want = mp.sqrt(1 - mp.mpf(lam)) * mp.cosh(mp.acosh(1 / mp.mpf(delta)) / L) - 1
        assert argument_excess(lam, delta, L) == pytest.approx(float(want), rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("lam", [2.0**-40, 2.0**-24, 1 / 16, 0.5, 0.9])
@pytest.mark.parametrize("delta", [0.25, 0.4038, 0.5, 0.75])
def test_p_success_matches_mp(lam, delta):
    lc = l_critical(lam, delta)
    for l in {1, 2, 5, max(1, lc // 2), lc, lc + 3}:
        assert p_success(lam, delta, l) == pytest.approx(float(mp_p_success(lam, delta, l)), abs=1e-10)


def test_p_success_edges():
    for l in (1, 2, 7):
        assert p_success(1.0, 0.4, l) == pytest.approx(1.0, abs=1e-12)
        assert p_success(0.0, 0.4, l) == pytest.approx(0.0, abs=1e-12)
    assert p_success(0.3, 0.5, 0) == 0.3


def test_l_critical_examples():
    assert l_critical(0.5, 0.5) == 1
    assert l_critical(0.99, 0.3) == 1
    assert p_success(0.99, 0.3, 1) >= 1 - 0.3**2


@pytest.mark.parametrize("lam", [2.0**-k for k in (2, 6, 10, 14, 20, 30)])
@pytest.mark.parametrize("delta", [0.2, 0.4038, 0.6049, 0.8])
def test_l_critical_matches_definition(lam, delta):
    lc = l_critical(lam, delta)
    assert lc == mp_l_critical(lam, delta)
    assert p_success(lam, delta, lc) >= 1 - delta**2 - 1e-12
    if lc > 1:
        assert p_success(lam, delta, lc - 1) < 1 - delta**2


def test_l_critical_scaling():
    ratios = [l_critical(2.0**-(k + 2), 0.4038) / l_critical(2.0**-k, 0.4038) for k in range(10, 24, 2)]
    assert all(abs(r - 2) < 0.05 for r in ratios)


def test_fixed_point_property():
    for lam, delta in [(1 / 64, 0.4), (0.003, 0.25), (0.2, 0.7)]:
        lc = l_critical(lam, delta)
        for l in range(lc, 3 * lc + 1):
            assert p_success(lam, delta, l) >= 1 - delta**2 - 1e-12


def test_monotone_in_lambda_precritical():
    delta, l = 0.4038, 8
    lams = np.linspace(1e-4, 1 / (l * l), 200)
    ps = [p_success(x, delta, l) for x in lams]
    assert np.all(np.diff(ps) >= -1e-12)


def test_angles_formula_and_symmetry():
    delta, l = 0.4038, 5
    L = 2 * l + 1
    g = math.tanh(math.acosh(1 / delta) / L)
    for j, a in enumerate(fpgs_angles(delta, l), 1):
        cot_arg = math.tan(2 * math.pi * j / L) * g
        assert 0 < a < 2 * math.pi
        assert 1 / math.tan(a / 2) == pytest.approx(cot_arg, rel=1e-12, abs=1e-12)
    p = FpgsParams(delta, l)
    assert p.marker_angles == tuple(reversed(p.angles))


def test_params_validation():
    with pytest.raises(ValueError):
        FpgsParams(1.2, 3)
    with pytest.raises(ValueError):
        FpgsParams(0.5, 2, angles=(0.1,))


def test_l0_circuit_is_uniform(appendix):
    c = build_fpgs_circuit(appendix, 4, FpgsParams(0.4, 0))
    assert success_probability(c, APPENDIX_MARKED).probability == pytest.approx(3 / 32)


def test_appendix_fpgs_matches_closed_form(appendix):
    c = build_fpgs_circuit(appendix, 4, FpgsParams(0.4038, 2))
    rep = success_probability(c, APPENDIX_MARKED)
    assert abs(rep.probability - p_success(3 / 32, 0.4038, 2)) < 1e-9
    assert rep.leakage < 1e-9
    assert c.count(GateKind.QFT) + c.count(GateKind.IQFT) == 2 * 2


def test_appendix_fpgs_at_l_critical(appendix):
    delta = 0.4038
    lc = l_critical(3 / 32, delta)
    rep = success_probability(build_fpgs_circuit(appendix, 4, FpgsParams(delta, lc)), APPENDIX_MARKED)
    assert rep.probability >= 1 - delta**2


def test_uniform_search_n4():
    c = build_fpgs_set_circuit(4, ["1011"], FpgsParams(0.5, 3))
    assert abs(success_probability(c, ["1011"]).probability - p_success(1 / 16, 0.5, 3)) < 1e-9
