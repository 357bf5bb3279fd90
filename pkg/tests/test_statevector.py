import numpy as np
import pytest

from fpgas.circuit import CircuitBuilder, Gate, GateKind, Layout
from fpgas.statevector import (
    SimulationError,
    SparseState,
    Statevector,
    apply,
    circuit_unitary,
    simulate,
    success_probability,
)


def rand_state(q, rng):
    v = rng.normal(size=2**q) + 1j * rng.normal(size=2**q)
    return v / np.linalg.norm(v)


def test_x_and_h():
    s = apply(Statevector.zero(1), Gate(GateKind.X, (0,)))
    assert np.allclose(s.amplitudes, [0, 1])
    s = apply(Statevector.zero(1), Gate(GateKind.H, (0,)))
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5])


def test_msb_ordering():
    s = apply(Statevector.zero(3), Gate(GateKind.X, (0,)))
    assert np.argmax(np.abs(s.amplitudes)) == 4


def test_qft_definition():
    b = CircuitBuilder(Layout.of(y=3))
    b.qft([0, 1, 2])
    U = circuit_unitary(b.build())
    k = np.arange(8)
    assert np.allclose(U, np.exp(2j * np.pi * np.outer(k, k) / 8) / np.sqrt(8), atol=1e-12)


def test_qft_on_subregister_order():
    # QFT on qubits (2, 0) of a 3-qubit register: qubit 2 is the MSB there
    b = CircuitBuilder(Layout.of(x=3))
    b.qft([2, 0])
    U = circuit_unitary(b.build())
    for src in range(8):
        bits = format(src, "03b")
        y = int(bits[2] + bits[0], 2)
        for dst in range(8):
            db = format(dst, "03b")
            if db[1] != bits[1]:
                assert abs(U[dst, src]) < 1e-12
                continue
            k = int(db[2] + db[0], 2)
            assert U[dst, src] == pytest.approx(np.exp(2j * np.pi * y * k / 4) / 2)


def test_qft_iqft_identity(rng):
    b = CircuitBuilder(Layout.of(y=4))
    b.qft([0, 1, 2, 3])
    b.iqft([0, 1, 2, 3])
    v = rand_state(4, rng)
    out = simulate(b.build(), Statevector(v, 4)).amplitudes
    assert np.max(np.abs(out - v)) < 1e-12


def _random_circuit(q, rng, count=40):
    b = CircuitBuilder(Layout.of(x=q))
    for _ in range(count):
        kind = rng.integers(7)
        qs = [int(v) for v in rng.choice(q, size=3, replace=False)]
        if kind == 0:
            b.h(qs[0])
        elif kind == 1:
            b.cx(qs[0], qs[1])
        elif kind == 2:
            b.phase(qs[0], rng.uniform(-3, 3))
        elif kind == 3:
            b.fanout(qs[0], qs[1:])
        elif kind == 4:
            b.mcx(qs[:2], qs[2])
        elif kind == 5:
            b.mcphase(qs[:2], qs[2], rng.uniform(-3, 3))
        else:
            b.qft(qs[:2])
    return b.build()


def test_norm_preserved(rng):
    c = _random_circuit(6, rng)
    simulate(c, Statevector(rand_state(6, rng), 6), check_norm=True)


def test_linearity(rng):
    c = _random_circuit(5, rng)
    u, v = rand_state(5, rng), rand_state(5, rng)
    a, b = 0.6 - 0.2j, 0.3 + 0.7j
    lhs = simulate(c, Statevector(a * u + b * v, 5)).amplitudes
    rhs = a * simulate(c, Statevector(u, 5)).amplitudes + b * simulate(c, Statevector(v, 5)).amplitudes
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_batched_matches_single(rng):
    c = _random_circuit(4, rng)
    U = circuit_unitary(c)
    for i in range(16):
        assert np.allclose(U[:, i], simulate(c, Statevector.basis(4, i)).amplitudes)


def test_sparse_matches_dense(rng):
    c = _random_circuit(6, rng, 30)
    cols = [0, 5, 17, 63]
    dense = Statevector.columns(6, cols).run(c).amplitudes
    s = SparseState.columns(6, cols).run(c)
    out = np.zeros_like(dense)
    out[s.batch, s.keys.astype(np.int64)] = s.amps
    assert np.max(np.abs(out - dense)) < 1e-12


def test_qubit_range_and_cap():
    with pytest.raises(SimulationError):
        apply(Statevector.zero(2), Gate(GateKind.H, (2,)))
    with pytest.raises(SimulationError):
        Statevector.zero(27)


def test_success_probability_uniform():
    b = CircuitBuilder(Layout.of(x=3))
    for q in range(3):
        b.h(q)
    c = b.build()
    all_x = [format(i, "03b") for i in range(8)]
    assert success_probability(c, all_x).probability == pytest.approx(1.0)
    assert success_probability(c, all_x[:3]).probability == pytest.approx(3 / 8)


def test_success_probability_reports_leakage():
    b = CircuitBuilder(Layout.of(x=1, anc=1))
    b.h(0)
    b.cx(0, 1)
    rep = success_probability(b.build(), ["0", "1"])
    assert rep.probability == pytest.approx(0.5)
    assert rep.leakage == pytest.approx(0.5)
