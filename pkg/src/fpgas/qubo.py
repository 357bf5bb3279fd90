"""QUBO instances, value enumeration and exact value distributions.

A problem is ``f(x) = offset + x^T Q x`` over ``x in {0, 1}^n`` with ``Q``
symmetric.  Bitstrings are indexed MSB-first: configuration index ``i``
corresponds to ``x_0 x_1 ... x_{n-1}`` with ``x_0`` the most significant bit,
the same ordering the simulator uses for the input register.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from fpgas import _kernels

DEFAULT_ENUMERATION_CAP = 24
_EXHAUSTIVE_RANGE_CHECK = 24


class QuboError(ValueError):
    """Raised for malformed or out-of-range QUBO input."""


def _as_bits(x: str | Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    if isinstance(x, str):
        if any(c not in "01" for c in x):
            raise QuboError(f"bitstring {x!r} contains characters other than 0/1")
        bits = np.fromiter((int(c) for c in x), dtype=np.int64, count=len(x))
    else:
        bits = np.asarray(x, dtype=np.int64).ravel()
    if bits.size != n:
        raise QuboError(f"expected {n} bits, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise QuboError("configuration entries must be 0 or 1")
    return bits


def bits_to_index(x: str | Sequence[int]) -> int:
    """MSB-first bitstring to configuration index."""
    if isinstance(x, str):
        return int(x, 2) if x else 0
    out = 0
    for b in x:
        out = (out << 1) | int(b)
    return out


def index_to_bits(i: int, n: int) -> str:
    return format(i, f"0{n}b") if n else ""


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    if np.array_equal(matrix, matrix.T):
        return matrix.copy()
    if np.all(np.tril(matrix, -1) == 0):
        # upper-triangular input: (U + U^T)/2 keeps the diagonal and x^T U x
        return (matrix + matrix.T) / 2.0
    raise QuboError("matrix must be symmetric or upper-triangular")


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """An ``n``-variable QUBO ``f(x) = offset + x^T Q x`` (maximisation).

    ``mode`` is ``"integer"`` or ``"real"``.  Integer problems must be
    integer-valued on every configuration, and all values must fit the signed
    ``d``-bit window ``[-2^(d-1), 2^(d-1))``.  When ``d`` is omitted for an
    integer problem the smallest sufficient width is chosen.
    """

    Q: np.ndarray
    offset: float = 0.0
    d: int | None = None
    mode: str = "integer"

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise QuboError(f"coefficient matrix must be square and non-empty, got shape {Q.shape}")
        if not np.all(np.isfinite(Q)):
            raise QuboError("coefficient matrix has non-finite entries")
        Q = _symmetrize(Q)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "offset", float(self.offset))
        if self.mode not in ("integer", "real"):
            raise QuboError(f"mode must be 'integer' or 'real', got {self.mode!r}")
        if self.mode == "integer":
            self._check_integer()
        elif self.d is not None and self.d < 1:
            raise QuboError("d must be positive")

    def _check_integer(self) -> None:
        Q = self.Q
        off_diag = 2.0 * Q[np.triu_indices(self.n, 1)]
        if not (
            np.all(np.diag(Q) == np.round(np.diag(Q)))
            and np.all(off_diag == np.round(off_diag))
            and self.offset == round(self.offset)
        ):
            raise QuboError("integer mode requires integer diagonal, offset and pair terms 2*Q[j,k]")
        lo, hi = self.value_range()
        width = required_width(lo, hi)
        if self.d is None:
            object.__setattr__(self, "d", width)
        elif self.d < 1:
            raise QuboError("d must be positive")
        elif self.d < width:
            raise QuboError(
                f"values span [{lo:g}, {hi:g}] which does not fit d={self.d} "
                f"signed bits (need d >= {width})"
            )

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def from_matrix(cls, matrix, offset: float = 0.0, d: int | None = None, mode: str = "integer") -> "QuboProblem":
        return cls(np.asarray(matrix, dtype=np.float64), offset=offset, d=d, mode=mode)

    def with_width(self, d: int) -> "QuboProblem":
        return QuboProblem(self.Q, self.offset, d, self.mode)

    def shifted(self, threshold: float) -> "QuboProblem":
        """The problem ``threshold - f(x)`` (used to build markers)."""
        return QuboProblem(-self.Q, threshold - self.offset, None, self.mode)

    def value_range(self) -> tuple[float, float]:
        """Exact min/max for ``n <= 24``, a coefficient-sign interval bound otherwise."""
        if self.n <= _EXHAUSTIVE_RANGE_CHECK:
            v = self.values
            return float(v.min()), float(v.max())
        return (
            self.offset + float(np.minimum(self.Q, 0).sum()),
            self.offset + float(np.maximum(self.Q, 0).sum()),
        )

    @cached_property
    def values(self) -> np.ndarray:
        """``f`` on every configuration, indexed MSB-first (read-only)."""
        return enumerate_values(self)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "offset": self.offset,
            "matrix": self.Q.tolist(),
            "mode": self.mode,
        }


def required_width(lo: float, hi: float) -> int:
    """Smallest ``d >= 1`` with ``[lo, hi]`` inside ``[-2^(d-1), 2^(d-1))``."""
    d = 1
    while lo < -(2 ** (d - 1)) or hi >= 2 ** (d - 1):
        d += 1
    return d


def evaluate(problem: QuboProblem, x) -> float:
    """``f(x) = offset + x^T Q x`` for a bitstring or 0/1 sequence."""
    bits = _as_bits(x, problem.n).astype(np.float64)
    return float(problem.offset + bits @ problem.Q @ bits)


def enumerate_values(problem: QuboProblem, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    if problem.n > cap:
        raise QuboError(f"n={problem.n} exceeds the enumeration cap {cap}")
    out = _kernels.qubo_values(np.ascontiguousarray(problem.Q), problem.offset)
    if problem.mode == "integer":
        out = np.round(out)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RewriteCoefficients:
    """XOR form ``f(x) = offset + sum_j qj[j] x_j - sum_{j<k} Q[j,k] (x_j xor x_k)``.

    ``q_empty`` is the constant phase coefficient of the encoder,
    ``offset + tr(Q)/4 + sum(Q)/4``; ``m`` counts the constant term plus the
    nonzero linear and pair terms.
    """

    qj: np.ndarray
    q_empty: float
    pair_coeffs: dict[tuple[int, int], float]
    m: int

    def terms(self) -> list[tuple[tuple[int, ...], float]]:
        """Encoder phase terms in declaration order: constant, linear, pairs.

        Each entry is ``(support, phase_coefficient)`` where the coefficient is
        the ``k`` fed to the phase gadget: ``q_empty``, ``-q_j/2`` or ``Q_jk/2``.
        """
        out: list[tuple[tuple[int, ...], float]] = [((), self.q_empty)]
        out += [((j,), -float(q) / 2.0) for j, q in enumerate(self.qj) if q != 0]
        out += [((j, k), c / 2.0) for (j, k), c in self.pair_coeffs.items()]
        return out


def rewrite(problem: QuboProblem) -> RewriteCoefficients:
    Q = problem.Q
    qj = Q.sum(axis=1)
    q_empty = problem.offset + float(np.trace(Q)) / 4.0 + float(Q.sum()) / 4.0
    n = problem.n
    pairs = {(j, k): float(Q[j, k]) for j in range(n - 1) for k in range(j + 1, n) if Q[j, k] != 0}
    m = 1 + int(np.count_nonzero(qj)) + len(pairs)
    qj.setflags(write=False)
    return RewriteCoefficients(qj=qj, q_empty=q_empty, pair_coeffs=pairs, m=m)


@dataclass(frozen=True, eq=False)
class ValueDistribution:
    """Exact histogram of ``f`` over all ``2^n`` configurations."""

    values: np.ndarray
    counts: np.ndarray
    n: int
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if values.shape != counts.shape or np.any(np.diff(values) <= 0):
            raise QuboError("values must be strictly increasing with matching counts")
        if int(counts.sum()) != 2**self.n:
            raise QuboError("counts must sum to 2^n")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_cum", np.cumsum(counts))

    @property
    def total(self) -> int:
        return 2**self.n

    @property
    def max_value(self) -> float:
        return float(self.values[-1])

    def count_at_most(self, y: float) -> int:
        i = int(np.searchsorted(self.values, y, side="right"))
        return int(self._cum[i - 1]) if i else 0

    def count_above(self, y: float) -> int:
        return self.total - self.count_at_most(y)

    def cdf(self, y: float) -> float:
        """``F(y)``: fraction of configurations with ``f(x) <= y``."""
        return self.count_at_most(y) / self.total

    def marked_fraction(self, y: float) -> float:
        """``lambda(y) = 1 - F(y)``: fraction with ``f(x) > y``."""
        return self.count_above(y) / self.total

    def class_cdf(self) -> np.ndarray:
        return self._cum / self.total

    def class_marked_fraction(self) -> np.ndarray:
        """``lambda`` at each distinct value, from integer counts."""
        return (self.total - self._cum) / self.total

    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    def in_top_fraction(self, value: float, epsilon: float) -> bool:
        """Membership of a configuration with ``f = value`` in the top-``epsilon`` set.

        A configuration is in the set when at least ``(1 - epsilon) 2^n``
        configurations have strictly smaller value.
        """
        below = int(np.searchsorted(self.values, value, side="left"))
        strictly_below = int(self._cum[below - 1]) if below else 0
        return strictly_below >= (1.0 - epsilon) * self.total

    def top_fraction_mask(self, epsilon: float) -> np.ndarray:
        strictly_below = np.concatenate(([0], self._cum[:-1]))
        return strictly_below >= (1.0 - epsilon) * self.total

    def mean(self) -> float:
        return float(self.probabilities() @ self.values)

    def variance(self) -> float:
        p = self.probabilities()
        mu = float(p @ self.values)
        return float(p @ (self.values - mu) ** 2)


def distribution(problem: QuboProblem, cap: int = DEFAULT_ENUMERATION_CAP) -> ValueDistribution:
    if problem.n > cap:
        raise QuboError(f"n={problem.n} exceeds the enumeration cap {cap}")
    values, counts = np.unique(problem.values, return_counts=True)
    return ValueDistribution(values, counts, problem.n)


def graph_cut_problem(edges: Iterable[tuple[int, int]], n: int) -> QuboProblem:
    """Max-cut as a QUBO: ``Q`` is the graph Laplacian, ``d = 2*ceil(log2 n)``."""
    if n < 1:
        raise QuboError("graph needs at least one vertex")
    L = np.zeros((n, n))
    seen: set[tuple[int, int]] = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise QuboError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise QuboError(f"edge ({u}, {v}) out of range for {n} vertices")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise QuboError(f"duplicate edge {key}")
        seen.add(key)
        L[u, v] -= 1
        L[v, u] -= 1
        L[u, u] += 1
        L[v, v] += 1
    d = max(2, 2 * math.ceil(math.log2(n))) if n > 1 else 2
    return QuboProblem(L, 0.0, d, "integer")


def erdos_renyi_edges(n: int, p: float, seed: int, connected: bool = True, max_tries: int = 10_000) -> list[tuple[int, int]]:
    """Seeded G(n, p) sample; redrawn from the same stream until connected."""
    import networkx as nx

    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    for _ in range(max_tries):
        keep = rng.random(iu.size) < p
        edges = [(int(a), int(b)) for a, b in zip(iu[keep], ju[keep])]
        if not connected:
            return edges
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(edges)
        if n <= 1 or nx.is_connected(g):
            return edges
    raise RuntimeError(f"no connected G({n}, {p}) sample after {max_tries} draws")


def random_qubo(n: int, rng: np.random.Generator, low: int = -4, high: int = 4, d: int | None = None, density: float = 1.0) -> QuboProblem:
    """Random symmetric integer QUBO with entries in ``[low, high]``."""
    Q = rng.integers(low, high + 1, size=(n, n)).astype(np.float64)
    if density < 1.0:
        Q *= rng.random((n, n)) < density
    Q = np.triu(Q)
    Q = Q + np.triu(Q, 1).T
    return QuboProblem(Q, 0.0, d, "integer")


# -- file formats -----------------------------------------------------------

def load_qubo(path: str | Path) -> QuboProblem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise QuboError(f"{path}: invalid JSON ({exc})") from exc
    return qubo_from_json(data)


def qubo_from_json(data: dict) -> QuboProblem:
    if "matrix" not in data:
        raise QuboError("QUBO JSON needs a 'matrix' field")
    matrix = np.asarray(data["matrix"], dtype=np.float64)
    if "n" in data and matrix.shape != (data["n"], data["n"]):
        raise QuboError(f"matrix shape {matrix.shape} does not match n={data['n']}")
    return QuboProblem(matrix, data.get("offset", 0.0), data.get("d"), data.get("mode", "integer"))


def save_qubo(problem: QuboProblem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(problem.to_json(), indent=2) + "\n")


def load_graph(path: str | Path) -> tuple[list[tuple[int, int]], int]:
    """Edge list, one ``u v`` pair per line, 0-indexed; ``#`` starts a comment.

    The vertex count is one more than the largest index, unless a
    ``# n = N`` header line gives it explicitly (for trailing isolated vertices).
    """
    edges: list[tuple[int, int]] = []
    n = 0
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].replace(" ", "")
            if body.startswith("n="):
                n = max(n, int(body[2:]))
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise QuboError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        u, v = int(parts[0]), int(parts[1])
        if u < 0 or v < 0:
            raise QuboError(f"{path}:{lineno}: negative vertex index")
        edges.append((u, v))
        n = max(n, u + 1, v + 1)
    return edges, n


def save_graph(edges: Sequence[tuple[int, int]], n: int, path: str | Path) -> None:
    lines = [f"# n = {n}"] + [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n")


APPENDIX_Q = np.array(
    [
        [2, -1, 0, -1, 0],
        [-1, 1, 0, 0, 0],
        [0, 0, 2, 0, -1],
        [-1, 0, 0, 2, 0],
        [0, 0, -1, 0, 2],
    ],
    dtype=np.float64,
)


def appendix_problem(d: int = 4) -> QuboProblem:
    """The five-variable hardware-test instance (maximum 5)."""
    return QuboProblem(APPENDIX_Q, 0.0, d, "integer")
