"""Qubit coupling graphs and matrix-free application of the Hamiltonian.

Qubits are numbered from 1; qubit k lives on bit (k-1) of a basis index, so
sigma^z_k has eigenvalue +1 on |0> and -1 on |1>.  The Hamiltonian is

    H(t) = 1/2 sum_<ij> J_ij Z_i Z_j + 1/2 sum_i A_i(t) Z_i
           + 1/2 sum_(active pulses) V_j(t) sigma_j^axis
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .noise import NoiseTrace
    from .sequences import PulseSchedule

__all__ = [
    "HamiltonianContext",
    "QubitGraph",
    "ScheduleViolation",
    "apply_pauli",
    "design_coupling",
    "hamiltonian_apply",
    "star_graph",
    "z_signs",
]


class ScheduleViolation(ValueError):
    """Two neighbouring qubits are driven at the same time."""


@dataclass(frozen=True)
class QubitGraph:
    n: int
    edges: frozenset[tuple[int, int]]
    sublattice: dict[int, str] = field(hash=False)
    J: dict[tuple[int, int], float] = field(hash=False)

    def __post_init__(self):
        norm = frozenset(tuple(sorted(e)) for e in self.edges)
        object.__setattr__(self, "edges", norm)
        for i, j in norm:
            if not (1 <= i <= self.n and 1 <= j <= self.n) or i == j:
                raise ValueError(f"bad edge {(i, j)}")
            if self.sublattice[i] == self.sublattice[j]:
                raise ValueError(f"edge {(i, j)} joins two {self.sublattice[i]} qubits; graph must be bipartite")
        if set(self.sublattice) != set(range(1, self.n + 1)):
            raise ValueError("every qubit needs a sublattice label")
        if set(self.sublattice.values()) - {"A", "B"}:
            raise ValueError("sublattice labels must be 'A' or 'B'")
        object.__setattr__(self, "J", {tuple(sorted(e)): float(v) for e, v in self.J.items()})
        if set(self.J) != set(norm):
            raise ValueError("need exactly one coupling per edge")

    @property
    def qubits(self) -> range:
        return range(1, self.n + 1)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def neighbors(self, q: int) -> set[int]:
        return {j if i == q else i for i, j in self.edges if q in (i, j)}

    def degree(self, q: int) -> int:
        return len(self.neighbors(q))

    def adjacent(self, i: int, j: int) -> bool:
        return tuple(sorted((i, j))) in self.edges

    def coupling(self, i: int, j: int) -> float:
        return self.J[tuple(sorted((i, j)))]

    def uniform_J(self) -> float:
        vals = set(self.J.values())
        if len(vals) != 1:
            raise ValueError("couplings are not uniform")
        return vals.pop()

    def center(self) -> int:
        return max(self.qubits, key=self.degree)

    def ising_diagonal(self) -> np.ndarray:
        """Diagonal of 1/2 sum J Z_i Z_j in the computational basis."""
        z = z_signs(self.n)
        d = np.zeros(self.dim)
        for (i, j), Jij in self.J.items():
            d += 0.5 * Jij * z[:, i - 1] * z[:, j - 1]
        return d


def star_graph(n_leaves: int, J: float) -> QubitGraph:
    """Leaves 1..n_leaves on sublattice A, the centre (qubit n_leaves+1) on B."""
    if n_leaves < 1:
        raise ValueError("need at least one leaf")
    c = n_leaves + 1
    edges = frozenset((k, c) for k in range(1, c))
    sub = {k: "A" for k in range(1, c)}
    sub[c] = "B"
    return QubitGraph(c, edges, sub, {e: J for e in edges})


def design_coupling(n_rep: int) -> float:
    """J from n_rep * J * tau_p = pi/16."""
    if n_rep < 1:
        raise ValueError("n_rep must be >= 1")
    return math.pi / (16 * n_rep)


def z_signs(n: int) -> np.ndarray:
    """(2^n, n) array of sigma^z eigenvalues, column k-1 for qubit k."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def apply_pauli(cols: np.ndarray, qubit: int, axis: str) -> np.ndarray:
    """sigma^axis on one qubit, applied to the rows of ``cols``."""
    n_rows = cols.shape[0]
    mask = 1 << (qubit - 1)
    idx = np.arange(n_rows)
    bit = (idx >> (qubit - 1)) & 1
    if axis == "z":
        return (1.0 - 2.0 * bit)[:, None] * cols if cols.ndim == 2 else (1.0 - 2.0 * bit) * cols
    flipped = cols[idx ^ mask]
    if axis == "x":
        return flipped
    if axis == "y":
        # sigma^y |0> = i|1>, sigma^y |1> = -i|0>
        ph = np.where(bit == 1, 1j, -1j)
        return (ph[:, None] * flipped) if cols.ndim == 2 else ph * flipped
    raise ValueError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class HamiltonianContext:
    graph: QubitGraph
    noise: "NoiseTrace | None" = None
    schedule: "PulseSchedule | None" = None

    def __post_init__(self):
        if self.noise is not None and self.schedule is not None:
            if self.noise.duration + 1e-12 < self.schedule.total_duration:
                raise ValueError("noise trace is shorter than the schedule")
            if self.noise.n_qubits != self.graph.n:
                raise ValueError("noise trace has the wrong number of qubits")


def hamiltonian_apply(ctx: HamiltonianContext, t: float, cols: np.ndarray) -> np.ndarray:
    """H(t) @ cols, term by term, without building the 2^n x 2^n matrix."""
    g = ctx.graph
    cols = np.asarray(cols, dtype=complex)
    if cols.shape[0] != g.dim:
        raise ValueError(f"columns have dimension {cols.shape[0]}, expected {g.dim}")
    diag = g.ising_diagonal()
    z = z_signs(g.n)
    if ctx.noise is not None:
        a = ctx.noise.values_at(t)
        diag = diag + 0.5 * z @ a
    out = diag[:, None] * cols if cols.ndim == 2 else diag * cols
    if ctx.schedule is not None:
        active = ctx.schedule.controls_at(t)
        driven = [q for q, _, v in active if v != 0.0]
        for i, q in enumerate(driven):
            for p in driven[i + 1:]:
                if g.adjacent(q, p):
                    raise ScheduleViolation(f"qubits {q} and {p} are neighbours and both driven at t={t}")
        for q, axis, v in active:
            if v != 0.0:
                out = out + 0.5 * v * apply_pauli(cols, q, axis)
    return out
