"""Dictionary encoders ``|x>|y> -> |x>|y + f(x) mod 2^d>``, marker and diffuser.

The encoder is a Draper adder: QFT on the value register, the phase
``e^{2 pi i f(x) k / 2^d}`` on each Fourier basis state ``|k>``, inverse QFT.
The phase is assembled from the XOR form of ``f``: each term with support
``S`` multiplies by ``e^{2 pi i c k' / 2^d}`` where ``k'`` is ``k`` with every
bit flipped when the parity of ``x`` on ``S`` is odd.

The terms can be phased one at a time directly on the value register
(``lambda_ancilla = 1``) or in parallel on ancilla copies of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from fpgas.circuit import Circuit, CircuitBuilder, Layout, lower_mcphase
from fpgas.qubo import QuboError, QuboProblem, rewrite

Term = tuple[tuple[int, ...], float]


class EncoderError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    """``lambda_ancilla`` is an int in ``[1, m]`` or ``"m"``.

    ``hadamard_shortcut=None`` picks the default for the context: on inside
    markers (value register starts at ``|0>``), off for standalone encoders.
    """

    lambda_ancilla: int | str = 1
    eliminate_garbage_phases: bool = False
    hadamard_shortcut: bool | None = None

    def resolve_lambda(self, m: int) -> int:
        lam = m if self.lambda_ancilla == "m" else int(self.lambda_ancilla)
        if not 1 <= lam <= m:
            raise EncoderError(f"lambda_ancilla={lam} outside [1, m={m}]")
        return lam


def phase_gadget_into(b: CircuitBuilder, qubits: Sequence[int], k: float) -> None:
    """``|y> -> e^{2 pi i k y / 2^d}|y>`` as one phase per qubit (MSB first)."""
    for j, q in enumerate(qubits):
        b.phase(q, math.pi * k / 2**j)


def phase_gadget(k: float, d: int) -> Circuit:
    if d < 1:
        raise EncoderError("d must be positive")
    b = CircuitBuilder(Layout.of(y=d), {"kind": "phase_gadget", "k": k})
    phase_gadget_into(b, b.layout.register("y"), k)
    return b.build()


def garbage_phase(problem: QuboProblem, fx: float, d: int | None = None) -> float:
    """Global phase left on ``|x>`` by the encoder, as a function of ``f(x)``."""
    d = problem.d if d is None else d
    return math.pi * (1 - 2**d) / 2**d * (fx - problem.offset)


def _term_key(support: tuple[int, ...]) -> tuple[int, int, int]:
    # j-major slot order: for each j its linear term, then pairs (j, k) by k
    return (support[0], len(support), support[-1])


def _require_integer(problem: QuboProblem) -> None:
    if problem.mode != "integer":
        raise EncoderError("encoders need an integer-mode problem")


def ancilla_count(problem: QuboProblem, config: EncoderConfig, d: int | None = None) -> int:
    d = problem.d if d is None else d
    lam = config.resolve_lambda(rewrite(problem).m)
    return (lam - 1) * d


def _phase_terms(
    b: CircuitBuilder,
    terms: list[Term],
    lam: int,
    x: Sequence[int],
    y: Sequence[int],
    anc: Sequence[int],
    label_single: bool,
) -> None:
    """Emit the Fourier-domain phase of every term, ``lam`` terms per batch."""
    d = len(y)
    batches = [terms[i : i + lam] for i in range(0, len(terms), lam)]
    for bi, batch in enumerate(batches):
        head, rest = batch[0], batch[1:]
        head_support, head_coeff = head

        # ancilla slots for ``rest``, j-major then bit-major within each j
        rest = sorted(rest, key=lambda t: _term_key(t[0]))
        slot: dict[tuple[int, int], int] = {}
        pos = 0
        by_first: dict[int, list[int]] = {}
        for i, (support, _) in enumerate(rest):
            by_first.setdefault(support[0], []).append(i)
        for j in sorted(by_first):
            for a in range(d):
                for i in by_first[j]:
                    slot[(i, a)] = anc[pos]
                    pos += 1

        def prep(out: CircuitBuilder) -> None:
            for a in range(d):
                out.fanout(y[a], [slot[(i, a)] for i in range(len(rest))])
            for stage in (0, -1):
                controls: dict[int, list[int]] = {}
                for i, (support, _) in enumerate(rest):
                    if stage == -1 and len(support) < 2:
                        continue
                    controls.setdefault(support[stage], []).extend(slot[(i, a)] for a in range(d))
                for c in sorted(controls):
                    out.fanout(x[c], controls[c])

        def head_flip() -> None:
            if lam == 1 and len(head_support) == 2:
                j, k = head_support
                b.cx(x[j], x[k])
                b.fanout(x[k], list(y))
            else:
                for j in head_support:
                    b.fanout(x[j], list(y))

        def head_unflip() -> None:
            if lam == 1 and len(head_support) == 2:
                j, k = head_support
                b.fanout(x[k], list(y))
                b.cx(x[j], x[k])
            else:
                for j in reversed(head_support):
                    b.fanout(x[j], list(y))

        tag = "U_QUBO" if label_single else f"prep{bi}"
        b.begin(tag)
        if rest:
            prep(b)
        head_flip()
        b.end(tag)
        tag = "P_f" if label_single else f"phase{bi}"
        b.begin(tag)
        phase_gadget_into(b, y, head_coeff)
        for i, (_, coeff) in enumerate(rest):
            phase_gadget_into(b, [slot[(i, a)] for a in range(d)], coeff)
        b.end(tag)
        tag = "U_QUBO_uncompute" if label_single else f"unprep{bi}"
        b.begin(tag)
        head_unflip()
        if rest:
            scratch = CircuitBuilder(b.layout)
            prep(scratch)
            for g in reversed(scratch.gates):
                b.append(g.inverse())
        b.end(tag)


def _encoder_layout(problem: QuboProblem, lam: int, d: int) -> Layout:
    return Layout.of(x=problem.n, y=d, anc=(lam - 1) * d)


def encoder_phase_circuit(problem: QuboProblem, config: EncoderConfig, d: int | None = None) -> Circuit:
    """The Fourier-domain part of the encoder, without the QFT pair."""
    _require_integer(problem)
    d = problem.d if d is None else d
    rw = rewrite(problem)
    lam = config.resolve_lambda(rw.m)
    layout = _encoder_layout(problem, lam, d)
    b = CircuitBuilder(layout, {"kind": "encoder_phase", "lambda": lam, "d": d, "m": rw.m})
    single = lam == rw.m and lam > 1
    _phase_terms(b, rw.terms(), lam, layout.register("x"), layout.register("y"), layout.register("anc"), single)
    return b.build()


def _garbage_correction(b: CircuitBuilder, problem: QuboProblem, x: Sequence[int], d: int) -> None:
    c = math.pi * (1 - 2**d) / 2**d
    Q = problem.Q
    for j in range(problem.n):
        b.phase(x[j], -c * Q[j, j])
    for j in range(problem.n):
        for k in range(j + 1, problem.n):
            if Q[j, k] != 0:
                b.cphase(x[j], x[k], -2.0 * c * Q[j, k])


def build_encoder(problem: QuboProblem, config: EncoderConfig | None = None, *, d: int | None = None) -> Circuit:
    """``|x>|y>|0> -> e^{i a(x)}|x>|y + f(x) mod 2^d>|0>``.

    ``a(x)`` is :func:`garbage_phase` unless ``eliminate_garbage_phases`` is
    set, in which case it is removed by phases on the input register.
    """
    config = config or EncoderConfig()
    _require_integer(problem)
    d = problem.d if d is None else d
    if d < problem.d:
        raise EncoderError(f"d={d} is narrower than the problem's value width {problem.d}")
    inner = encoder_phase_circuit(problem, config, d)
    layout = inner.layout
    x, y = layout.register("x"), layout.register("y")
    shortcut = bool(config.hadamard_shortcut)
    b = CircuitBuilder(layout, {**inner.metadata, "kind": "encoder", "hadamard_shortcut": shortcut,
                                "garbage_free": config.eliminate_garbage_phases})
    if shortcut:
        for q in y:
            b.h(q)
    else:
        b.qft(y)
    base = len(b.gates)
    b.extend(inner)
    for name, (s, e) in inner.blocks.items():
        b.blocks[name] = (base + s, base + e)
    b.iqft(y)
    if config.eliminate_garbage_phases:
        _garbage_correction(b, problem, x, d)
    return b.build()


def marker_width(problem: QuboProblem, threshold: float) -> int:
    """Value width needed for ``threshold - f(x)`` over all ``x``."""
    return problem.shifted(threshold).d


def marker_parts(problem: QuboProblem, threshold: float, config: EncoderConfig | None = None, *, d: int | None = None):
    """``(layout, forward, backward, sign_qubit)`` for the marker sandwich.

    ``forward`` encodes ``threshold - f(x)`` into the zeroed value register;
    its sign bit is ``sign_qubit``.  ``backward`` is the inverse of
    ``forward``.
    """
    config = config or EncoderConfig()
    _require_integer(problem)
    if threshold != round(threshold):
        raise EncoderError("integer problems need an integer threshold")
    try:
        shifted = problem.shifted(threshold)
    except QuboError as exc:  # pragma: no cover - shifted() only fails on malformed input
        raise EncoderError(str(exc)) from exc
    width = shifted.d if d is None else d
    if width < shifted.d:
        raise EncoderError(f"d={width} cannot hold threshold - f(x); need d >= {shifted.d}")
    shortcut = True if config.hadamard_shortcut is None else config.hadamard_shortcut
    enc_config = EncoderConfig(config.lambda_ancilla, config.eliminate_garbage_phases, shortcut)
    forward = build_encoder(shifted, enc_config, d=width)
    return forward.layout, forward, forward.inverse(), forward.register("y")[0]


def build_marker(
    problem: QuboProblem, threshold: float, beta: float, config: EncoderConfig | None = None, *, d: int | None = None
) -> Circuit:
    """Phase ``e^{i beta}`` on ``|x>`` exactly when ``f(x) > threshold``."""
    layout, forward, backward, sign = marker_parts(problem, threshold, config, d=d)
    b = CircuitBuilder(layout, {"kind": "marker", "threshold": threshold, "beta": beta})
    b.extend(forward)
    b.phase(sign, beta)
    b.extend(backward)
    return b.build()


def set_marker_into(b: CircuitBuilder, x: Sequence[int], marked: Sequence[str], beta: float) -> None:
    """Phase oracle for an explicit set of bitstrings via X-conjugated MC phases."""
    for s in marked:
        zeros = [x[i] for i, c in enumerate(s) if c == "0"]
        for q in zeros:
            b.x(q)
        b.mcphase(list(x[:-1]), x[-1], beta)
        for q in zeros:
            b.x(q)


def build_set_marker(n: int, marked: Sequence[str], beta: float) -> Circuit:
    for s in marked:
        if len(s) != n or set(s) - {"0", "1"}:
            raise EncoderError(f"marked entry {s!r} is not an {n}-bit string")
    b = CircuitBuilder(Layout.of(x=n), {"kind": "set_marker", "beta": beta})
    set_marker_into(b, b.layout.register("x"), sorted(set(marked)), beta)
    return b.build()


def diffuser_into(b: CircuitBuilder, x: Sequence[int], alpha: float) -> None:
    """``I + (e^{i alpha} - 1)|s><s|`` with ``|s> = H^n|0>``."""
    for q in x:
        b.h(q)
    for q in x:
        b.x(q)
    b.mcphase(list(x[:-1]), x[-1], alpha)
    for q in x:
        b.x(q)
    for q in x:
        b.h(q)


def build_diffuser(n: int, alpha: float, lowered: bool = False) -> Circuit:
    """Diffuser on ``n`` qubits; ``lowered`` trades the MC phase for MCX + ancilla."""
    if n < 1:
        raise EncoderError("n must be positive")
    b = CircuitBuilder(Layout.of(x=n), {"kind": "diffuser", "alpha": alpha})
    diffuser_into(b, b.layout.register("x"), alpha)
    circ = b.build()
    return lower_mcphase(circ) if lowered else circ
