import math

import numpy as np
import pytest

from fpgas.circuit import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    CostModel,
    Gate,
    GateKind,
    Layout,
    asap_layers,
    fanout_tree,
    lower_fanout,
    lower_mcphase,
    lower_qft,
    resources,
    to_qasm,
)
from fpgas.statevector import Statevector, circuit_unitary


def random_state(q, rng):
    v = rng.normal(size=2**q) + 1j * rng.normal(size=2**q)
    return Statevector(v / np.linalg.norm(v), q)


def test_gate_validation():
    with pytest.raises(CircuitError):
        Gate(GateKind.CNOT, (1, 1))
    with pytest.raises(CircuitError):
        Gate(GateKind.H, (0, 1))
    with pytest.raises(CircuitError):
        Circuit(Layout.of(x=2), (Gate(GateKind.H, (2,)),))


def test_zero_angles_elided():
    b = CircuitBuilder(Layout.of(x=2))
    b.phase(0, 0.0)
    b.phase(0, 2 * math.pi)
    b.cphase(0, 1, -4 * math.pi)
    b.phase(1, 1e-3)
    assert len(b.build()) == 1


def test_layout_registers():
    lay = Layout.of(x=3, y=2, anc=0)
    assert lay.register("x") == (0, 1, 2) and lay.register("y") == (3, 4)
    assert lay.register("anc") == () and lay.num_qubits == 5


def test_inverse_and_json_roundtrip():
    b = CircuitBuilder(Layout.of(x=2, y=3))
    b.h(0)
    b.fanout(0, [2, 3, 4])
    b.qft([2, 3, 4])
    b.cphase(0, 1, 0.3)
    b.mcphase([0, 1], 2, 0.7)
    c = b.build()
    back = Circuit.from_json(c.to_json())
    assert back.gates == c.gates and back.layout == c.layout
    U = circuit_unitary(c)
    V = circuit_unitary(c.inverse())
    assert np.allclose(V @ U, np.eye(32), atol=1e-12)


def test_fanout_one_target_is_cnot():
    assert fanout_tree(0, [1]) == [(0, 1)]
    c = lower_fanout(Circuit(Layout.of(x=2), (Gate(GateKind.FANOUT, (0, 1)),)))
    assert [g.kind for g in c.gates] == [GateKind.CNOT]
    assert resources(c).total_depth == 1


@pytest.mark.parametrize("k", range(1, 17))
def test_fanout_tree_bounds(k):
    cnots = fanout_tree(0, list(range(1, k + 1)))
    assert k <= len(cnots) <= 2 * k
    c = lower_fanout(Circuit(Layout.of(x=k + 1), (Gate(GateKind.FANOUT, tuple(range(k + 1))),)))
    assert len(asap_layers(c)) <= 2 * math.ceil(math.log2(k + 1))


def test_fanout_four_targets():
    c = lower_fanout(Circuit(Layout.of(x=5), (Gate(GateKind.FANOUT, (0, 1, 2, 3, 4)),)))
    assert c.count(GateKind.CNOT) <= 8
    assert len(asap_layers(c)) <= 2 * 2 + 2


@pytest.mark.parametrize("k", range(1, 7))
def test_fanout_lowering_unitary(k, rng):
    qs = list(rng.permutation(k + 1))
    c = Circuit(Layout.of(x=k + 1), (Gate(GateKind.FANOUT, tuple(int(q) for q in qs)),))
    assert np.allclose(circuit_unitary(lower_fanout(c)), circuit_unitary(c), atol=1e-12)


def test_fanout_k5_statevector(rng):
    c = Circuit(Layout.of(x=6), (Gate(GateKind.FANOUT, (3, 0, 5, 1, 2, 4)),))
    s = random_state(6, rng)
    a = s.copy().run(c).amplitudes
    b = s.copy().run(lower_fanout(c)).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("w", [1, 2, 3, 4, 5])
def test_qft_lowering(w):
    b = CircuitBuilder(Layout.of(y=w))
    b.qft(list(range(w)))
    c = b.build()
    assert np.allclose(circuit_unitary(lower_qft(c)), circuit_unitary(c), atol=1e-12)
    assert np.allclose(circuit_unitary(lower_qft(c.inverse())), circuit_unitary(c.inverse()), atol=1e-12)


def test_mcphase_lowering():
    b = CircuitBuilder(Layout.of(x=3))
    b.mcphase([0, 1], 2, 0.9)
    c = b.build()
    low = lower_mcphase(c)
    assert low.num_qubits == 4
    U = circuit_unitary(low)
    # restrict to ancilla = |0> in and out
    keep = [i for i in range(16) if i % 2 == 0]
    assert np.allclose(U[np.ix_(keep, keep)], circuit_unitary(c), atol=1e-12)


def test_empty_resources():
    r = resources(Circuit(Layout.of(x=3), ()))
    assert all(v == 0 for k, v in r.to_json().items() if k != "qubitCount")


def test_rz_counting():
    b = CircuitBuilder(Layout.of(x=2))
    b.phase(0, math.pi / 2)  # Clifford
    b.phase(0, math.pi / 4)  # counted
    b.cphase(0, 1, math.pi)  # CZ, Clifford
    b.cphase(0, 1, 0.3)  # counted twice
    r = resources(b.build())
    assert r.rz_count == 3


def test_layers_are_disjoint(rng):
    b = CircuitBuilder(Layout.of(x=6))
    for _ in range(60):
        q = rng.choice(6, size=2, replace=False)
        b.cx(int(q[0]), int(q[1])) if rng.random() < 0.5 else b.h(int(q[0]))
    c = b.build()
    for layer in asap_layers(c):
        seen = [q for i in layer for q in c.gates[i].qubits]
        assert len(seen) == len(set(seen))


def test_depth_deterministic():
    b = CircuitBuilder(Layout.of(x=3))
    b.h(0)
    b.cx(0, 1)
    b.h(2)
    b.cx(1, 2)
    c = b.build()
    assert resources(c).total_depth == 3 == resources(c).total_depth


def test_cost_models_differ_only_on_qft():
    b = CircuitBuilder(Layout.of(y=8))
    b.qft(list(range(8)))
    c = b.build()
    assert resources(c, CostModel()).rz_count != resources(c, CostModel.approximate_qft()).rz_count
    low = lower_qft(c)
    assert resources(low).rz_count == resources(c).rz_count


def test_qasm_export():
    b = CircuitBuilder(Layout.of(x=2, y=2))
    b.h(0)
    b.fanout(0, [2, 3])
    b.phase(2, 0.25)
    b.mcx([0, 1], 3)
    b.mcphase([0, 1, 2], 3, 0.5)
    b.qft([2, 3])
    c = b.build()
    with pytest.raises(CircuitError):
        to_qasm(c)
    text = to_qasm(lower_qft(lower_fanout(c)))
    assert text.startswith("OPENQASM 3.0;")
    assert "ctrl(2) @ x x[0], x[1], y[1];" in text
    assert "ctrl(3) @ p(0.5)" in text
    assert "qubit[2] y;" in text
