"""Fixed-point Grover search: angles, generalized Chebyshev forms, circuits.

The success probability after ``l`` queries at marked fraction ``lam`` is

    P = 1 - delta^2 * T_{2l+1}(sqrt(1 - lam) * T_{1/(2l+1)}(1/delta))^2

The Chebyshev argument sits extremely close to 1 in the regime that matters
(``lam`` down to 2^-40), so it is carried as an excess ``h = x - 1`` computed
from hyperbolic identities instead of by subtraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from fpgas.qubo import QuboProblem

P_SUCCESS_CLAMP = 1e-12


def chebyshev_t(order: float, x: float) -> float:
    """``T_order(x)`` for real ``order >= 0``.

    ``cos(order*arccos x)`` on ``[-1, 1]`` and ``cosh(order*arccosh x)`` above
    1.  Below -1 only integer orders are defined (via parity).
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if x > 1.0:
        return math.cosh(order * math.acosh(x))
    if x >= -1.0:
        return math.cos(order * math.acos(x))
    if float(order).is_integer():
        sign = -1.0 if int(order) % 2 else 1.0
        return sign * math.cosh(order * math.acosh(-x))
    raise ValueError(f"T_{order}(x) undefined for x={x} < -1 at non-integer order")


def argument_excess(lam: float, delta: float, L: int) -> float:
    """``sqrt(1 - lam) * T_{1/L}(1/delta) - 1`` without cancellation."""
    if lam >= 1.0:
        return -1.0
    a = math.acosh(1.0 / delta)
    u = math.atanh(math.sqrt(lam))
    c = a / L
    return 2.0 * math.sinh(0.5 * (c + u)) * math.sinh(0.5 * (c - u)) / math.cosh(u)


def chebyshev_near_one(L: float, h: float) -> float:
    """``T_L(1 + h)`` for ``h >= -1``."""
    if h >= 0.0:
        return math.cosh(L * math.log1p(h + math.sqrt(h * (2.0 + h))))
    return math.cos(L * 2.0 * math.asin(math.sqrt(-0.5 * h)))


def _check_domain(lam: float, delta: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"marked fraction must lie in [0, 1], got {lam}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def p_fail(lam: float, delta: float, l: int) -> float:
    _check_domain(lam, delta)
    L = 2 * l + 1
    return delta**2 * chebyshev_near_one(L, argument_excess(lam, delta, L)) ** 2


def p_success(lam: float, delta: float, l: int) -> float:
    """Closed-form success probability of ``l``-query FPGS.

    ``lam = 0`` (nothing marked) gives 0; ``lam = 1`` gives 1.
    """
    if l < 0:
        raise ValueError("query count must be nonnegative")
    if l == 0:
        return lam
    p = 1.0 - p_fail(lam, delta, l)
    if p < 0.0:
        if p < -P_SUCCESS_CLAMP:
            raise ArithmeticError(f"negative success probability {p}")
        p = 0.0
    return p


def l_critical(lam: float, delta: float) -> int:
    """Smallest ``l >= 1`` with ``sqrt(1-lam) T_{1/(2l+1)}(1/delta) <= 1``.

    From that point on ``p_success >= 1 - delta^2``.
    """
    _check_domain(lam, delta)
    if lam == 0.0:
        raise ValueError("no finite critical query count when nothing is marked")
    if lam >= 1.0:
        return 1
    a = math.acosh(1.0 / delta)
    u = math.atanh(math.sqrt(lam))
    l = max(1, math.ceil((a / u - 1.0) / 2.0))
    while argument_excess(lam, delta, 2 * l + 1) > 0.0:
        l += 1
    while l > 1 and argument_excess(lam, delta, 2 * l - 1) <= 0.0:
        l -= 1
    return l


def fpgs_angles(delta: float, l: int) -> list[float]:
    """Diffuser phases ``alpha_1..alpha_l``; the marker uses them reversed.

    ``arccot`` takes the ``(0, pi)`` branch so the sequence is continuous
    across the pole of ``tan`` at ``j/(2l+1) = 1/4``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    L = 2 * l + 1
    g = math.tanh(math.acosh(1.0 / delta) / L)
    return [2.0 * math.atan2(1.0, math.tan(2.0 * math.pi * j / L) * g) for j in range(1, l + 1)]


@dataclass(frozen=True)
class FpgsParams:
    delta: float
    l: int
    angles: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.l < 0:
            raise ValueError("l must be nonnegative")
        if not self.angles:
            object.__setattr__(self, "angles", tuple(fpgs_angles(self.delta, self.l)) if self.l else ())
        elif len(self.angles) != self.l:
            raise ValueError("need exactly l angles")

    @property
    def marker_angles(self) -> tuple[float, ...]:
        return tuple(reversed(self.angles))


def build_fpgs_circuit(problem: QuboProblem, threshold: int, params: FpgsParams, config=None, *, d: int | None = None):
    """``H^n`` on the input register followed by ``G_1 ... G_l``.

    ``G_j`` applies the marker with phase ``alpha_{l+1-j}`` and then the
    diffuser with phase ``alpha_j``.  Each marker is an encoder/inverse pair,
    so the circuit holds ``2l`` encoder copies.
    """
    from fpgas.circuit import CircuitBuilder
    from fpgas.encoder import EncoderConfig, diffuser_into, marker_parts

    config = config or EncoderConfig(hadamard_shortcut=True)
    layout, forward, backward, sign_qubit = marker_parts(problem, threshold, config, d=d)
    b = CircuitBuilder(layout, metadata={"kind": "fpgs", "threshold": threshold, "delta": params.delta, "l": params.l})
    x = layout.register("x")
    for q in x:
        b.h(q)
    for j in range(params.l):
        beta = params.angles[params.l - 1 - j]
        b.extend(forward)
        b.phase(sign_qubit, beta)
        b.extend(backward)
        diffuser_into(b, x, params.angles[j])
    return b.build()


def build_fpgs_set_circuit(n: int, marked, params: FpgsParams):
    """FPGS against an explicit marked set, phased by X-conjugated MC phases."""
    from fpgas.circuit import CircuitBuilder, Layout
    from fpgas.encoder import diffuser_into, set_marker_into

    marked = sorted(set(marked))
    b = CircuitBuilder(Layout.of(x=n), metadata={"kind": "fpgs_set", "delta": params.delta, "l": params.l})
    x = b.layout.register("x")
    for q in x:
        b.h(q)
    for j in range(params.l):
        set_marker_into(b, x, marked, params.angles[params.l - 1 - j])
        diffuser_into(b, x, params.angles[j])
    return b.build()
