"""Brute-force checks of circuit actions against enumerated QUBO values."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fpgas.circuit import Circuit
from fpgas.encoder import garbage_phase
from fpgas.qubo import QuboProblem, index_to_bits
from fpgas.statevector import MAX_DENSE_QUBITS, SparseState, Statevector

_DENSE_BUDGET = 2**24  # complex amplitudes held at once


@dataclass(frozen=True)
class ActionCheck:
    max_error: float
    leakage: float
    columns: int
    backend: str

    def ok(self, tol: float = 1e-9) -> bool:
        return self.max_error < tol and self.leakage < tol


def _run_columns(circuit: Circuit, columns: np.ndarray) -> tuple[np.ndarray, str]:
    """Output amplitudes as a dense ``(columns, 2^q)`` array or a sparse triple."""
    q = circuit.num_qubits
    if q <= MAX_DENSE_QUBITS and len(columns) * 2**q <= _DENSE_BUDGET:
        return Statevector.columns(q, columns).run(circuit).amplitudes, "dense"
    s = SparseState.columns(q, columns).run(circuit)
    return (s.keys, s.amps, s.batch), "sparse"


def _compare(out, backend: str, expected_index: np.ndarray, expected_amp: np.ndarray) -> tuple[float, float]:
    """Max amplitude error at the expected entries and the mass outside them."""
    cols = len(expected_index)
    if backend == "dense":
        got = out[np.arange(cols), expected_index]
        err = float(np.max(np.abs(got - expected_amp)))
        rest = np.sum(np.abs(out) ** 2, axis=1) - np.abs(got) ** 2
        return err, float(max(0.0, rest.max()))
    keys, amps, batch = out
    got = np.zeros(cols, dtype=np.complex128)
    hit = keys == expected_index[batch].astype(np.uint64)
    np.add.at(got, batch[hit], amps[hit])
    stray = np.zeros(cols)
    np.add.at(stray, batch[~hit], np.abs(amps[~hit]) ** 2)
    return float(np.max(np.abs(got - expected_amp))), float(stray.max(initial=0.0))


def check_encoder(circuit: Circuit, problem: QuboProblem, garbage_free: bool | None = None) -> ActionCheck:
    """Every ``|x>|y>|0>`` must map to ``e^{i a(x)}|x>|y + f(x) mod 2^d>|0>``.

    ``a(x)`` is compared modulo ``2 pi`` through the complex amplitude.
    """
    n = problem.n
    d = len(circuit.register("y"))
    anc = circuit.num_qubits - n - d
    if garbage_free is None:
        garbage_free = bool(circuit.metadata.get("garbage_free", False))
    N = 2**d
    xs, ys = np.meshgrid(np.arange(2**n), np.arange(N), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    cols = (xs << (d + anc)) | (ys << anc)
    f = problem.values[xs]
    fi = np.round(f).astype(np.int64)
    expected_index = (xs << (d + anc)) | (((ys + fi) % N) << anc)
    phase = np.zeros(len(xs)) if garbage_free else np.array([garbage_phase(problem, v, d) for v in f])
    out, backend = _run_columns(circuit, cols)
    err, leak = _compare(out, backend, expected_index, np.exp(1j * phase))
    return ActionCheck(err, leak, len(cols), backend)


def check_diagonal_on_inputs(circuit: Circuit, n: int, expected_phase: np.ndarray) -> ActionCheck:
    """``|x>|0> -> e^{i phi(x)}|x>|0>`` for every ``x`` (markers, phase oracles)."""
    rest = circuit.num_qubits - n
    xs = np.arange(2**n)
    cols = xs << rest
    out, backend = _run_columns(circuit, cols)
    err, leak = _compare(out, backend, cols, np.exp(1j * np.asarray(expected_phase)))
    return ActionCheck(err, leak, len(cols), backend)


def marker_phases(circuit: Circuit, n: int) -> dict[str, complex]:
    """Diagonal entry of a marker on each input (other registers at ``|0>``)."""
    rest = circuit.num_qubits - n
    xs = np.arange(2**n)
    out, backend = _run_columns(circuit, xs << rest)
    if backend == "dense":
        diag = out[xs, xs << rest]
    else:
        keys, amps, batch = out
        diag = np.zeros(len(xs), dtype=np.complex128)
        hit = keys == (xs[batch] << rest).astype(np.uint64)
        np.add.at(diag, batch[hit], amps[hit])
    return {index_to_bits(int(i), n): complex(diag[i]) for i in xs}


def check_marker(circuit: Circuit, problem: QuboProblem, threshold: float, beta: float) -> ActionCheck:
    marked = problem.values > threshold
    return check_diagonal_on_inputs(circuit, problem.n, np.where(marked, beta, 0.0))


def phase_error(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    return abs(math.remainder(a - b, 2 * math.pi))
