"""Exact circuit simulation.

:class:`Statevector` is a dense amplitude array, optionally batched over
many input columns at once.  :class:`SparseState` stores only nonzero
amplitudes as ``uint64`` basis keys and handles wide circuits (ancilla-heavy
encoders) whose only branching gates are H and QFT on a few qubits.

Basis index bit ``Q - 1 - q`` holds qubit ``q``, so qubit 0 is the MSB.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from fpgas.circuit import Circuit, Gate, GateKind

MAX_DENSE_QUBITS = 26
MAX_SPARSE_QUBITS = 64
NORM_TOL = 1e-10
_SQRT_HALF = np.sqrt(0.5)


class SimulationError(ValueError):
    pass


class Statevector:
    """Dense amplitudes of shape ``(batch, 2, ..., 2)``, mutated in place by :meth:`apply`."""

    def __init__(self, amplitudes: np.ndarray, num_qubits: int, batched: bool = False):
        if num_qubits > MAX_DENSE_QUBITS:
            raise SimulationError(f"{num_qubits} qubits exceeds the dense cap of {MAX_DENSE_QUBITS}")
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if not batched:
            amps = amps.reshape(1, -1)
        if amps.shape[1] != 2**num_qubits:
            raise SimulationError(f"expected 2^{num_qubits} amplitudes per column, got {amps.shape[1]}")
        self.num_qubits = num_qubits
        self.batched = batched
        self._t = np.ascontiguousarray(amps).reshape((amps.shape[0],) + (2,) * num_qubits)

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "Statevector":
        return cls.columns(num_qubits, [index], batched=False)

    @classmethod
    def columns(cls, num_qubits: int, indices: Sequence[int], batched: bool = True) -> "Statevector":
        if num_qubits > MAX_DENSE_QUBITS:
            raise SimulationError(f"{num_qubits} qubits exceeds the dense cap of {MAX_DENSE_QUBITS}")
        idx = np.asarray(indices, dtype=np.int64)
        amps = np.zeros((len(idx), 2**num_qubits), dtype=np.complex128)
        amps[np.arange(len(idx)), idx] = 1.0
        return cls(amps, num_qubits, batched=True) if batched else cls(amps[0], num_qubits)

    @property
    def batch_size(self) -> int:
        return self._t.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        """``(2^q,)`` for an unbatched state, ``(batch, 2^q)`` otherwise (copies)."""
        flat = self._t.reshape(self.batch_size, -1).copy()
        return flat if self.batched else flat[0]

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self._t.reshape(self.batch_size, -1)) ** 2, axis=1))

    def copy(self) -> "Statevector":
        return Statevector(self._t.reshape(self.batch_size, -1).copy(), self.num_qubits, batched=True)._as(self.batched)

    def _as(self, batched: bool) -> "Statevector":
        self.batched = batched
        return self

    # -- gate application ---------------------------------------------------

    def _axis(self, q: int) -> int:
        if not 0 <= q < self.num_qubits:
            raise SimulationError(f"qubit {q} out of range for {self.num_qubits} qubits")
        return q + 1

    def _select(self, controls: Iterable[int]) -> tuple:
        idx: list = [slice(None)] * (self.num_qubits + 1)
        for c in controls:
            idx[self._axis(c)] = 1
        return tuple(idx)

    def _flip(self, controls: Sequence[int], targets: Sequence[int]) -> None:
        view = self._t[self._select(controls)]
        # axes of ``view`` after integer indexing removed the control axes
        ctrl = sorted(self._axis(c) for c in controls)
        axes = tuple(self._axis(t) - sum(1 for c in ctrl if c < self._axis(t)) for t in targets)
        view[...] = np.flip(view, axis=axes).copy()

    def _phase(self, qubits: Sequence[int], theta: float) -> None:
        self._t[self._select(qubits)] *= np.exp(1j * theta)

    def _h(self, q: int) -> None:
        ax = self._axis(q)
        a0 = np.take(self._t, 0, axis=ax)
        a1 = np.take(self._t, 1, axis=ax)
        s, d = (a0 + a1) * _SQRT_HALF, (a0 - a1) * _SQRT_HALF
        idx0 = [slice(None)] * self._t.ndim
        idx1 = list(idx0)
        idx0[ax], idx1[ax] = 0, 1
        self._t[tuple(idx0)] = s
        self._t[tuple(idx1)] = d

    def _qft(self, qubits: Sequence[int], inverse: bool) -> None:
        axes = [self._axis(q) for q in qubits]
        w = len(axes)
        moved = np.moveaxis(self._t, axes, range(self._t.ndim - w, self._t.ndim))
        shape = moved.shape
        flat = moved.reshape(shape[:-w] + (2**w,))
        # |y> -> sum_k e^{+2 pi i yk/2^w}|k>/sqrt(2^w) is numpy's orthonormal ifft
        out = np.fft.fft(flat, axis=-1, norm="ortho") if inverse else np.fft.ifft(flat, axis=-1, norm="ortho")
        self._t[...] = np.moveaxis(out.reshape(shape), range(self._t.ndim - w, self._t.ndim), axes)

    def apply(self, gate: Gate) -> "Statevector":
        k, qs = gate.kind, gate.qubits
        for q in qs:
            self._axis(q)
        if k == GateKind.H:
            self._h(qs[0])
        elif k == GateKind.X:
            self._flip((), qs)
        elif k == GateKind.CNOT:
            self._flip(qs[:1], qs[1:])
        elif k == GateKind.FANOUT:
            self._flip(qs[:1], qs[1:])
        elif k == GateKind.MCX:
            self._flip(qs[:-1], qs[-1:])
        elif k in (GateKind.PHASE, GateKind.CPHASE, GateKind.MCPHASE):
            self._phase(qs, gate.angle)
        elif k == GateKind.QFT:
            self._qft(qs, inverse=False)
        elif k == GateKind.IQFT:
            self._qft(qs, inverse=True)
        elif k == GateKind.GPHASE:
            self._t *= np.exp(1j * gate.angle)
        else:  # pragma: no cover
            raise SimulationError(f"unsupported gate {k}")
        return self

    def run(self, circuit: Circuit, check_norm: bool = False) -> "Statevector":
        if circuit.num_qubits != self.num_qubits:
            raise SimulationError(f"circuit has {circuit.num_qubits} qubits, state has {self.num_qubits}")
        for g in circuit.gates:
            self.apply(g)
            if check_norm:
                err = np.max(np.abs(self.norms() - 1.0))
                if err > NORM_TOL:
                    raise SimulationError(f"norm drifted by {err:.3g} after {g.kind.value}")
        return self


def apply(state: Statevector, gate: Gate) -> Statevector:
    """Apply ``gate`` to a copy of ``state``."""
    return state.copy().apply(gate)


def simulate(circuit: Circuit, initial: Statevector | None = None, check_norm: bool = False) -> Statevector:
    state = Statevector.zero(circuit.num_qubits) if initial is None else initial.copy()
    return state.run(circuit, check_norm=check_norm)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary; column ``i`` is the image of basis state ``i``."""
    q = circuit.num_qubits
    cols = Statevector.columns(q, range(2**q)).run(circuit)
    return cols.amplitudes.T


# -- sparse simulation ------------------------------------------------------

@dataclass
class SparseState:
    """Nonzero amplitudes ``amps[i]`` at basis ``keys[i]`` of input column ``batch[i]``."""

    num_qubits: int
    keys: np.ndarray
    amps: np.ndarray
    batch: np.ndarray
    prune: float = 1e-13

    @classmethod
    def columns(cls, num_qubits: int, indices: Sequence[int]) -> "SparseState":
        if num_qubits > MAX_SPARSE_QUBITS:
            raise SimulationError(f"{num_qubits} qubits exceeds the sparse cap of {MAX_SPARSE_QUBITS}")
        keys = np.asarray(indices, dtype=np.uint64)
        return cls(num_qubits, keys, np.ones(len(keys), dtype=np.complex128), np.arange(len(keys), dtype=np.int64))

    def _bit(self, q: int) -> np.uint64:
        if not 0 <= q < self.num_qubits:
            raise SimulationError(f"qubit {q} out of range for {self.num_qubits} qubits")
        return np.uint64(1) << np.uint64(self.num_qubits - 1 - q)

    def _all_set(self, qubits: Sequence[int]) -> np.ndarray:
        mask = np.uint64(0)
        for q in qubits:
            mask |= self._bit(q)
        return (self.keys & mask) == mask

    def _merge(self) -> None:
        order = np.lexsort((self.keys, self.batch))
        keys, batch, amps = self.keys[order], self.batch[order], self.amps[order]
        new = np.ones(len(keys), dtype=bool)
        new[1:] = (keys[1:] != keys[:-1]) | (batch[1:] != batch[:-1])
        starts = np.flatnonzero(new)
        summed = np.add.reduceat(amps, starts) if len(amps) else amps
        keep = np.abs(summed) > self.prune
        self.keys, self.batch, self.amps = keys[starts][keep], batch[starts][keep], summed[keep]

    def _register_value(self, qubits: Sequence[int]) -> np.ndarray:
        v = np.zeros(len(self.keys), dtype=np.int64)
        for q in qubits:
            v = (v << 1) | ((self.keys & self._bit(q)) != 0).astype(np.int64)
        return v

    def _with_register(self, keys: np.ndarray, qubits: Sequence[int], values: np.ndarray) -> np.ndarray:
        mask = np.uint64(0)
        for q in qubits:
            mask |= self._bit(q)
        out = keys & ~mask
        w = len(qubits)
        for i, q in enumerate(qubits):
            bit = ((values >> (w - 1 - i)) & 1).astype(np.uint64)
            out |= bit * self._bit(q)
        return out

    def _branch(self, qubits: Sequence[int], matrix: np.ndarray) -> None:
        """Apply a dense ``2^w x 2^w`` matrix on ``qubits`` (column = input)."""
        w = len(qubits)
        size = 2**w
        src = self._register_value(qubits)
        out_vals = np.arange(size, dtype=np.int64)
        amps = (matrix[:, src].T * self.amps[:, None]).ravel()
        keys = np.repeat(self.keys, size)
        vals = np.tile(out_vals, len(src))
        self.keys = self._with_register(keys, qubits, vals)
        self.amps = amps
        self.batch = np.repeat(self.batch, size)
        self._merge()

    def apply(self, gate: Gate) -> "SparseState":
        k, qs = gate.kind, gate.qubits
        if k == GateKind.H:
            self._branch(qs, np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF)
        elif k in (GateKind.X, GateKind.CNOT, GateKind.FANOUT, GateKind.MCX):
            if k == GateKind.X:
                controls, targets = (), qs
            elif k == GateKind.MCX:
                controls, targets = qs[:-1], qs[-1:]
            else:
                controls, targets = qs[:1], qs[1:]
            mask = np.uint64(0)
            for t in targets:
                mask |= self._bit(t)
            sel = self._all_set(controls) if controls else np.ones(len(self.keys), dtype=bool)
            self.keys = np.where(sel, self.keys ^ mask, self.keys)
        elif k in (GateKind.PHASE, GateKind.CPHASE, GateKind.MCPHASE):
            sel = self._all_set(qs)
            self.amps = np.where(sel, self.amps * np.exp(1j * gate.angle), self.amps)
        elif k in (GateKind.QFT, GateKind.IQFT):
            size = 2 ** len(qs)
            sign = -1.0 if k == GateKind.IQFT else 1.0
            grid = np.outer(np.arange(size), np.arange(size))
            self._branch(qs, np.exp(sign * 2j * np.pi * grid / size) / np.sqrt(size))
        elif k == GateKind.GPHASE:
            self.amps = self.amps * np.exp(1j * gate.angle)
        else:  # pragma: no cover
            raise SimulationError(f"unsupported gate {k}")
        return self

    def run(self, circuit: Circuit) -> "SparseState":
        if circuit.num_qubits != self.num_qubits:
            raise SimulationError(f"circuit has {circuit.num_qubits} qubits, state has {self.num_qubits}")
        for g in circuit.gates:
            self.apply(g)
        return self


# -- measurement helpers ----------------------------------------------------

@dataclass(frozen=True)
class SuccessReport:
    probability: float
    leakage: float
    marked: int
    num_qubits: int

    def to_json(self) -> dict:
        return {"successProbability": self.probability, "leakage": self.leakage,
                "markedCount": self.marked, "qubitCount": self.num_qubits}


def success_probability(circuit: Circuit, marked: Iterable[str], x_register: str = "x") -> SuccessReport:
    """Run ``circuit`` on ``|0...0>`` and measure the marked mass on the input register.

    Only basis states whose other qubits are all ``|0>`` count as success;
    the mass elsewhere is reported as leakage.
    """
    x = circuit.register(x_register)
    n = len(x)
    marked = {s for s in marked}
    for s in marked:
        if len(s) != n or set(s) - {"0", "1"}:
            raise SimulationError(f"marked entry {s!r} is not an {n}-bit string")
    state = simulate(circuit)
    q = circuit.num_qubits
    probs = np.abs(state.amplitudes) ** 2
    t = probs.reshape((2,) * q)
    others = [i for i in range(q) if i not in x]
    idx = tuple(0 if i in others else slice(None) for i in range(q))
    clean = t[idx].reshape(-1) if others else t.reshape(-1)
    leakage = float(max(0.0, probs.sum() - clean.sum()))
    hit = sum(clean[int(s, 2)] for s in marked)
    return SuccessReport(float(hit), leakage, len(marked), q)
