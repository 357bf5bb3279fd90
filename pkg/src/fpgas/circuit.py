"""Gate-level circuit IR, lowering passes, resource accounting and export.

Qubits are global integers; a :class:`Layout` names contiguous ranges
(``x`` input, ``y`` value register, ``anc`` ancillas, ...).  Qubit 0 is the
most significant bit of a basis-state index.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

ANGLE_EPS = 1e-15
_CLIFFORD_TOL = 1e-12


class GateKind(str, Enum):
    H = "H"
    X = "X"
    CNOT = "CNOT"
    FANOUT = "FANOUT"  # qubits = (control, *targets)
    PHASE = "RZ_PHASE"  # diag(1, e^{i angle})
    CPHASE = "CPHASE"
    MCX = "MCX"  # qubits = (*controls, target)
    MCPHASE = "MCPHASE"  # qubits = (*controls, target)
    QFT = "QFT"  # qubits = register, MSB first
    IQFT = "IQFT"
    GPHASE = "GLOBAL_PHASE"


_ANGLED = {GateKind.PHASE, GateKind.CPHASE, GateKind.MCPHASE, GateKind.GPHASE}
_SELF_INVERSE = {GateKind.H, GateKind.X, GateKind.CNOT, GateKind.FANOUT, GateKind.MCX}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self) -> None:
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.kind.value} repeats a qubit: {self.qubits}")
        arity = {GateKind.H: 1, GateKind.X: 1, GateKind.PHASE: 1, GateKind.CNOT: 2, GateKind.CPHASE: 2, GateKind.GPHASE: 0}
        need = arity.get(self.kind)
        if need is not None and len(self.qubits) != need:
            raise CircuitError(f"{self.kind.value} acts on {need} qubits, got {len(self.qubits)}")
        if need is None and len(self.qubits) < 1:
            raise CircuitError(f"{self.kind.value} needs qubits")
        if self.kind == GateKind.FANOUT and len(self.qubits) < 2:
            raise CircuitError("FANOUT needs a control and at least one target")

    def inverse(self) -> "Gate":
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind == GateKind.QFT:
            return Gate(GateKind.IQFT, self.qubits)
        if self.kind == GateKind.IQFT:
            return Gate(GateKind.QFT, self.qubits)
        return Gate(self.kind, self.qubits, -self.angle)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.kind in _ANGLED:
            out["angle"] = self.angle
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Gate":
        return cls(GateKind(data["kind"]), tuple(int(q) for q in data["qubits"]), float(data.get("angle", 0.0)))


def is_zero_angle(theta: float) -> bool:
    r = math.remainder(theta, 2 * math.pi)
    return abs(r) <= ANGLE_EPS


def is_multiple_of(theta: float, unit: float) -> bool:
    r = math.remainder(theta, unit)
    return abs(r) <= _CLIFFORD_TOL


@dataclass(frozen=True)
class Layout:
    """Ordered named registers covering qubits ``0..num_qubits-1``."""

    registers: tuple[tuple[str, int], ...]

    @classmethod
    def of(cls, **sizes: int) -> "Layout":
        return cls(tuple((k, v) for k, v in sizes.items() if v > 0))

    @property
    def num_qubits(self) -> int:
        return sum(size for _, size in self.registers)

    def register(self, name: str) -> tuple[int, ...]:
        start = 0
        for reg, size in self.registers:
            if reg == name:
                return tuple(range(start, start + size))
            start += size
        return ()

    def names(self) -> list[str]:
        return [r for r, _ in self.registers]

    def extended(self, name: str, size: int) -> "Layout":
        if name in self.names():
            raise CircuitError(f"register {name!r} already exists")
        return Layout(self.registers + ((name, size),))


@dataclass(frozen=True, eq=False)
class Circuit:
    layout: Layout
    gates: tuple[Gate, ...]
    metadata: dict = field(default_factory=dict)
    blocks: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        nq = self.layout.num_qubits
        for g in self.gates:
            if any(q < 0 or q >= nq for q in g.qubits):
                raise CircuitError(f"{g.kind.value} on {g.qubits} outside the {nq}-qubit layout")

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def __len__(self) -> int:
        return len(self.gates)

    def register(self, name: str) -> tuple[int, ...]:
        return self.layout.register(name)

    def block(self, name: str) -> "Circuit":
        start, stop = self.blocks[name]
        return Circuit(self.layout, self.gates[start:stop], {"block": name})

    def inverse(self) -> "Circuit":
        n = len(self.gates)
        blocks = {k: (n - b, n - a) for k, (a, b) in self.blocks.items()}
        return Circuit(self.layout, tuple(g.inverse() for g in reversed(self.gates)), dict(self.metadata), blocks)

    def with_gates(self, gates: Iterable[Gate], layout: Layout | None = None) -> "Circuit":
        return Circuit(layout or self.layout, tuple(gates), dict(self.metadata))

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_json(self) -> dict:
        return {
            "registers": [{"name": r, "size": s} for r, s in self.layout.registers],
            "gates": [g.to_json() for g in self.gates],
            "metadata": self.metadata,
            "blocks": {k: list(v) for k, v in self.blocks.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Circuit":
        layout = Layout(tuple((r["name"], int(r["size"])) for r in data["registers"]))
        gates = tuple(Gate.from_json(g) for g in data["gates"])
        blocks = {k: (int(v[0]), int(v[1])) for k, v in data.get("blocks", {}).items()}
        return cls(layout, gates, data.get("metadata", {}), blocks)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


class CircuitBuilder:
    """Mutable gate list; :meth:`build` freezes it into a :class:`Circuit`.

    Rotations whose angle is a multiple of 2*pi are dropped on entry.
    """

    def __init__(self, layout: Layout, metadata: dict | None = None):
        self.layout = layout
        self.gates: list[Gate] = []
        self.metadata = dict(metadata or {})
        self.blocks: dict[str, tuple[int, int]] = {}
        self._open: dict[str, int] = {}

    def _add(self, kind: GateKind, qubits: Sequence[int], angle: float = 0.0) -> None:
        if kind in _ANGLED and is_zero_angle(angle):
            return
        self.gates.append(Gate(kind, tuple(qubits), float(angle)))

    def h(self, q: int) -> None:
        self._add(GateKind.H, (q,))

    def x(self, q: int) -> None:
        self._add(GateKind.X, (q,))

    def cx(self, c: int, t: int) -> None:
        self._add(GateKind.CNOT, (c, t))

    def fanout(self, c: int, targets: Sequence[int]) -> None:
        if len(targets) == 1:
            self.cx(c, targets[0])
        elif targets:
            self._add(GateKind.FANOUT, (c, *targets))

    def phase(self, q: int, theta: float) -> None:
        self._add(GateKind.PHASE, (q,), theta)

    def cphase(self, c: int, t: int, theta: float) -> None:
        self._add(GateKind.CPHASE, (c, t), theta)

    def mcx(self, controls: Sequence[int], target: int) -> None:
        if not controls:
            self.x(target)
        elif len(controls) == 1:
            self.cx(controls[0], target)
        else:
            self._add(GateKind.MCX, (*controls, target))

    def mcphase(self, controls: Sequence[int], target: int, theta: float) -> None:
        if not controls:
            self.phase(target, theta)
        elif len(controls) == 1:
            self.cphase(controls[0], target, theta)
        else:
            self._add(GateKind.MCPHASE, (*controls, target), theta)

    def qft(self, qubits: Sequence[int]) -> None:
        self._add(GateKind.QFT, qubits)

    def iqft(self, qubits: Sequence[int]) -> None:
        self._add(GateKind.IQFT, qubits)

    def gphase(self, theta: float) -> None:
        self._add(GateKind.GPHASE, (), theta)

    def append(self, gate: Gate) -> None:
        self._add(gate.kind, gate.qubits, gate.angle)

    def extend(self, other: Circuit | Iterable[Gate]) -> None:
        gates = other.gates if isinstance(other, Circuit) else other
        for g in gates:
            self.append(g)

    def begin(self, name: str) -> None:
        self._open[name] = len(self.gates)

    def end(self, name: str) -> None:
        self.blocks[name] = (self._open.pop(name), len(self.gates))

    def build(self) -> Circuit:
        return Circuit(self.layout, tuple(self.gates), dict(self.metadata), dict(self.blocks))


# -- lowering ---------------------------------------------------------------

def fanout_tree(control: int, targets: Sequence[int]) -> list[tuple[int, int]]:
    """CNOT list XOR-ing ``control`` into every target in log depth.

    Uses a binomial tree rooted at the control over ``k + 1`` nodes.  The
    targets first store differences with their tree parent (bottom-up, edges
    from the control skipped), then the tree is re-accumulated top-down so
    every target gains the control bit.  ``2k - (children of control)``
    CNOTs, depth at most ``2 ceil(log2(k + 1))``.
    """
    nodes = [control, *targets]
    k1 = len(nodes)
    rounds: list[list[tuple[int, int]]] = []
    r = 0
    while (1 << r) < k1:
        step = 1 << r
        rounds.append([(i, i + step) for i in range(step) if i + step < k1])
        r += 1
    down = [(nodes[a], nodes[b]) for rnd in rounds for a, b in rnd]
    up = [(nodes[a], nodes[b]) for rnd in reversed(rounds) for a, b in rnd if a != 0]
    return up + down


def lower_fanout(circuit: Circuit) -> Circuit:
    out: list[Gate] = []
    for g in circuit.gates:
        if g.kind == GateKind.FANOUT:
            out.extend(Gate(GateKind.CNOT, (c, t)) for c, t in fanout_tree(g.qubits[0], g.qubits[1:]))
        else:
            out.append(g)
    return circuit.with_gates(out)


def qft_gates(qubits: Sequence[int], inverse: bool = False) -> list[Gate]:
    """Textbook QFT (``|y> -> sum_k e^{2 pi i yk/2^w}|k>``) in H, CPHASE and CNOT-swaps."""
    w = len(qubits)
    gates: list[Gate] = []
    for i in range(w):
        gates.append(Gate(GateKind.H, (qubits[i],)))
        for j in range(i + 1, w):
            gates.append(Gate(GateKind.CPHASE, (qubits[j], qubits[i]), math.pi / 2 ** (j - i)))
    for i in range(w // 2):
        a, b = qubits[i], qubits[w - 1 - i]
        gates += [Gate(GateKind.CNOT, (a, b)), Gate(GateKind.CNOT, (b, a)), Gate(GateKind.CNOT, (a, b))]
    if inverse:
        gates = [g.inverse() for g in reversed(gates)]
    return gates


def lower_qft(circuit: Circuit) -> Circuit:
    out: list[Gate] = []
    for g in circuit.gates:
        if g.kind in (GateKind.QFT, GateKind.IQFT):
            out.extend(qft_gates(g.qubits, inverse=g.kind == GateKind.IQFT))
        else:
            out.append(g)
    return circuit.with_gates(out)


def lower_mcphase(circuit: Circuit, ancilla_register: str = "mcp") -> Circuit:
    """Multi-controlled phases via one clean ancilla: MCX, phase, MCX."""
    if not any(g.kind == GateKind.MCPHASE for g in circuit.gates):
        return circuit
    layout = circuit.layout
    if not layout.register(ancilla_register):
        layout = layout.extended(ancilla_register, 1)
    anc = layout.register(ancilla_register)[0]
    out: list[Gate] = []
    for g in circuit.gates:
        if g.kind == GateKind.MCPHASE:
            mcx = Gate(GateKind.MCX, (*g.qubits, anc))
            out += [mcx, Gate(GateKind.PHASE, (anc,), g.angle), mcx]
        else:
            out.append(g)
    return circuit.with_gates(out, layout)


def lower_for_export(circuit: Circuit) -> Circuit:
    return lower_qft(lower_fanout(circuit))


# -- resources --------------------------------------------------------------

def _log2_ceil(k: int) -> int:
    return max(0, math.ceil(math.log2(k))) if k > 0 else 0


@dataclass(frozen=True)
class GateCost:
    depth: int = 1
    rz_count: int = 0
    rz_depth: int = 0
    cnot_count: int = 0
    non_clifford: int = 0


def _default_mcx_cost(k: int) -> GateCost:
    # O(log k) depth with one ancilla; Toffoli-count ~ 2k
    return GateCost(depth=2 * _log2_ceil(k) + 1, non_clifford=2 * k if k >= 2 else 0, cnot_count=0)


def _default_qft_cost(w: int) -> GateCost:
    counted = sum(1 for i in range(w) for j in range(i + 1, w) if j - i >= 2)
    half_pi = sum(1 for i in range(w) for j in range(i + 1, w) if j - i == 1)
    return GateCost(
        depth=max(1, 2 * w - 1 + (3 if w >= 2 else 0)),
        rz_count=2 * counted,
        rz_depth=max(0, 2 * w - 3) if counted else 0,
        cnot_count=2 * (counted + half_pi) + 3 * (w // 2),
        non_clifford=counted + half_pi,
    )


def _approx_qft_cost(w: int) -> GateCost:
    """Approximate-QFT T-count model: O(w log w) count, O(w) depth."""
    t = int(math.ceil(w * max(1.0, math.log2(max(w, 2)))))
    return GateCost(depth=max(1, 2 * w), rz_count=t, rz_depth=w, cnot_count=w * w, non_clifford=t)


@dataclass(frozen=True)
class CostModel:
    """Costs charged to gates kept primitive (FANOUT, MCX, MC phases, QFT)."""

    mcx: Callable[[int], GateCost] = _default_mcx_cost
    qft: Callable[[int], GateCost] = _default_qft_cost

    @classmethod
    def approximate_qft(cls) -> "CostModel":
        return cls(qft=_approx_qft_cost)


DEFAULT_COST_MODEL = CostModel()


def gate_cost(g: Gate, model: CostModel = DEFAULT_COST_MODEL) -> GateCost:
    k = g.kind
    if k in (GateKind.H, GateKind.X):
        return GateCost()
    if k == GateKind.CNOT:
        return GateCost(cnot_count=1)
    if k == GateKind.FANOUT:
        cnots = fanout_tree(g.qubits[0], g.qubits[1:])
        return GateCost(depth=_fanout_depth(len(g.qubits) - 1), cnot_count=len(cnots))
    if k == GateKind.PHASE:
        nc = not is_multiple_of(g.angle, math.pi / 2)
        return GateCost(rz_count=int(nc), rz_depth=int(nc), non_clifford=int(nc))
    if k == GateKind.CPHASE:
        nc = not is_multiple_of(g.angle, math.pi / 2)
        return GateCost(depth=3, rz_count=2 * nc, rz_depth=int(nc), cnot_count=2,
                        non_clifford=int(not is_multiple_of(g.angle, math.pi)))
    if k == GateKind.MCX:
        return model.mcx(len(g.qubits) - 1)
    if k == GateKind.MCPHASE:
        base = model.mcx(len(g.qubits) - 1)
        nc = not is_multiple_of(g.angle, math.pi / 2)
        return GateCost(depth=2 * base.depth + 1, rz_count=int(nc), rz_depth=int(nc),
                        cnot_count=2 * base.cnot_count, non_clifford=2 * base.non_clifford + int(nc))
    if k in (GateKind.QFT, GateKind.IQFT):
        return model.qft(len(g.qubits))
    if k == GateKind.GPHASE:
        return GateCost(depth=0)
    raise CircuitError(f"no cost for {k}")


def _fanout_depth(k: int) -> int:
    nodes = k + 1
    rounds = _log2_ceil(nodes)
    # control-rooted edges are skipped on the way up
    up = rounds - 1 if rounds else 0
    return up + rounds


def asap_layers(circuit: Circuit) -> list[list[int]]:
    """Greedy as-soon-as-possible layering with unit cost per gate.

    Gates share a layer only when their supports are disjoint.
    """
    ready = [0] * circuit.num_qubits
    layers: list[list[int]] = []
    for i, g in enumerate(circuit.gates):
        if not g.qubits:
            continue
        t = max(ready[q] for q in g.qubits)
        if t == len(layers):
            layers.append([])
        layers[t].append(i)
        for q in g.qubits:
            ready[q] = t + 1
    return layers


@dataclass(frozen=True)
class ResourceReport:
    total_depth: int
    rz_depth: int
    rz_count: int
    cnot_count: int
    non_clifford_count: int
    qubit_count: int
    max_qubit_degree: int

    def to_json(self) -> dict:
        return {
            "totalDepth": self.total_depth,
            "rzDepth": self.rz_depth,
            "rzCount": self.rz_count,
            "cnotCount": self.cnot_count,
            "nonCliffordCount": self.non_clifford_count,
            "qubitCount": self.qubit_count,
            "maxQubitDegree": self.max_qubit_degree,
        }


def resources(circuit: Circuit, model: CostModel = DEFAULT_COST_MODEL) -> ResourceReport:
    """Resource counts for ``circuit`` under ``model``.

    ``total_depth`` schedules each gate as soon as its qubits are free, a
    gate occupying its qubits for its modelled depth.  ``rz_depth`` counts
    ASAP layers holding at least one counted rotation (a primitive QFT adds
    its modelled rotation depth for its layer).
    """
    nq = circuit.num_qubits
    ready = [0] * nq
    total = 0
    rz_count = cnot = nonc = 0
    partners: list[set[int]] = [set() for _ in range(nq)]
    costs = [gate_cost(g, model) for g in circuit.gates]
    for g, c in zip(circuit.gates, costs):
        rz_count += c.rz_count
        cnot += c.cnot_count
        nonc += c.non_clifford
        if not g.qubits:
            continue
        start = max(ready[q] for q in g.qubits)
        end = start + c.depth
        for q in g.qubits:
            ready[q] = end
        total = max(total, end)
        if len(g.qubits) > 1:
            for q in g.qubits:
                partners[q].update(g.qubits)
    rz_depth = 0
    for layer in asap_layers(circuit):
        rz_depth += max((costs[i].rz_depth for i in layer), default=0)
    degree = max((len(p) - 1 for p in partners if p), default=0)
    return ResourceReport(total, rz_depth, rz_count, cnot, nonc, nq, degree)


# -- OpenQASM 3 -------------------------------------------------------------

def to_qasm(circuit: Circuit) -> str:
    """OpenQASM 3 text; FANOUT and QFT gates must be lowered first.

    Multi-controlled gates are written with the ``ctrl(k) @`` modifier.
    """
    lines = ["OPENQASM 3.0;", 'include "stdgates.inc";']
    names = {}
    for reg, size in circuit.layout.registers:
        lines.append(f"qubit[{size}] {reg};")
        for i, q in enumerate(circuit.layout.register(reg)):
            names[q] = f"{reg}[{i}]"
    fmt = lambda a: repr(float(a))  # noqa: E731
    for g in circuit.gates:
        qs = ", ".join(names[q] for q in g.qubits)
        k = g.kind
        if k == GateKind.H:
            lines.append(f"h {qs};")
        elif k == GateKind.X:
            lines.append(f"x {qs};")
        elif k == GateKind.CNOT:
            lines.append(f"cx {qs};")
        elif k == GateKind.PHASE:
            lines.append(f"p({fmt(g.angle)}) {qs};")
        elif k == GateKind.CPHASE:
            lines.append(f"cp({fmt(g.angle)}) {qs};")
        elif k == GateKind.MCX:
            lines.append(f"ctrl({len(g.qubits) - 1}) @ x {qs};")
        elif k == GateKind.MCPHASE:
            lines.append(f"ctrl({len(g.qubits) - 1}) @ p({fmt(g.angle)}) {qs};")
        elif k == GateKind.GPHASE:
            lines.append(f"gphase({fmt(g.angle)});")
        else:
            raise CircuitError(f"{k.value} must be lowered before QASM export")
    return "\n".join(lines) + "\n"
