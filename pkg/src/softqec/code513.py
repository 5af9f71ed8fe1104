"""The [[5,1,3]] code on the six-qubit star.

Data qubits are the leaves 1..5 and the ancilla sits at the centre, qubit 6.
Logical operators are Xbar = -XXXXX and Zbar = ZZZZZ.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gates import Circuit, Measure, cnot_gate, cz_gate, hadamard_gate, swap_gate
from .network import apply_pauli

__all__ = [
    "ANCILLA",
    "PauliString",
    "SyndromeTable",
    "decoding_circuit",
    "encoded_columns",
    "encoding_circuit",
    "generators",
    "logical_operators",
    "logical_states",
    "measurement_cycle",
    "recovery_errors",
    "syndrome_of",
    "syndrome_table",
]

N_DATA = 5
ANCILLA = 6

# single-qubit products: (a, b) -> (phase exponent of i, symbol)
_MUL = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}


@dataclass(frozen=True)
class PauliString:
    """i^phase * (tensor product of symbols); symbols[k] acts on qubit k+1."""

    symbols: str
    phase: int = 0

    def __post_init__(self):
        if set(self.symbols) - set("IXYZ"):
            raise ValueError(f"bad Pauli string {self.symbols!r}")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        t = text.strip()
        phase = 0
        for prefix, k in (("-i", 3), ("+i", 1), ("i", 1), ("-", 2), ("+", 0)):
            if t.startswith(prefix) and len(t) > len(prefix) and t[len(prefix)] in "IXYZ":
                phase, t = k, t[len(prefix):]
                break
        return cls(t, phase)

    @classmethod
    def single(cls, n: int, qubit: int, symbol: str) -> "PauliString":
        s = ["I"] * n
        s[qubit - 1] = symbol
        return cls("".join(s))

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.symbols)

    def support(self, symbol: str | None = None) -> tuple[int, ...]:
        return tuple(k + 1 for k, c in enumerate(self.symbols) if c != "I" and (symbol is None or c == symbol))

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("length mismatch")
        ph = self.phase + other.phase
        out = []
        for a, b in zip(self.symbols, other.symbols):
            k, c = _MUL[a, b]
            ph += k
            out.append(c)
        return PauliString("".join(out), ph)

    def __neg__(self) -> "PauliString":
        return PauliString(self.symbols, self.phase + 2)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.symbols, other.symbols))
        return anti % 2 == 0

    def padded(self, n: int) -> "PauliString":
        return PauliString(self.symbols + "I" * (n - self.n), self.phase)

    def apply(self, cols: np.ndarray) -> np.ndarray:
        """Act on state columns of any register with at least n qubits."""
        out = np.asarray(cols, dtype=complex)
        for k, c in enumerate(self.symbols):
            if c != "I":
                out = apply_pauli(out, k + 1, c.lower())
        return (1j**self.phase) * out

    def matrix(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        return self.apply(np.eye(1 << n))

    def __str__(self) -> str:
        return ("", "i", "-", "-i")[self.phase] + self.symbols


def generators() -> list[PauliString]:
    return [PauliString(s) for s in ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")]


def logical_operators() -> dict[str, PauliString]:
    return {"X": PauliString("XXXXX", 2), "Z": PauliString("ZZZZZ")}


# |Psi_m>, up to normalization: (bits of qubits 1..4, last bit is m or mbar, coefficient)
_COMMON = (("0000", 0, 1), ("0110", 0, -1), ("1001", 0, 1), ("1111", 0, -1),
           ("0010", 1, 1), ("0100", 1, 1), ("1101", 1, -1), ("1011", 1, -1))
_SIGNED = (("0001", 1, 1), ("1110", 1, 1), ("0111", 1, 1), ("1000", 1, 1),
           ("0011", 0, 1), ("0101", 0, -1), ("1010", 0, -1), ("1100", 0, 1))


def _index(bits: str) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


@lru_cache(maxsize=1)
def _logical_states() -> tuple[np.ndarray, np.ndarray]:
    out = []
    for m in (0, 1):
        v = np.zeros(1 << N_DATA)
        for group, sign in ((_COMMON, 1), (_SIGNED, -((-1) ** m))):
            for head, flip, c in group:
                last = m ^ flip
                v[_index(head + str(last))] += sign * c
        v /= np.linalg.norm(v)
        v.setflags(write=False)
        out.append(v)
    return out[0], out[1]


def logical_states() -> tuple[np.ndarray, np.ndarray]:
    """Normalized |Psi_0>, |Psi_1> on qubits 1..5 (32-dim, qubit k on bit k-1)."""
    return _logical_states()


def encoded_columns(n_qubits: int = 6) -> np.ndarray:
    """Logical basis on qubits 1..5 with the remaining qubits in |0>."""
    p0, p1 = logical_states()
    out = np.zeros((1 << n_qubits, 2), dtype=complex)
    out[: 1 << N_DATA, 0] = p0
    out[: 1 << N_DATA, 1] = p1
    return out


# -- syndromes ---------------------------------------------------------------


def syndrome_of(error: PauliString, gens=None) -> tuple[int, ...]:
    gens = generators() if gens is None else gens
    return tuple(0 if error.commutes_with(g) else 1 for g in gens)


@dataclass(frozen=True)
class SyndromeTable:
    table: dict

    def lookup(self, syndrome) -> PauliString | None:
        s = tuple(int(b) for b in syndrome)
        if s not in self.table:
            raise KeyError(f"syndrome {s} not in table")
        return self.table[s]

    def __len__(self) -> int:
        return len(self.table)


def recovery_errors(n: int = N_DATA) -> list[PauliString]:
    """The 15 weight-one Paulis on the data qubits."""
    return [PauliString.single(n, q, s) for q in range(1, N_DATA + 1) for s in "XYZ"]


def syndrome_table(gens=None) -> SyndromeTable:
    gens = generators() if gens is None else gens
    table: dict = {(0,) * len(gens): None}
    for e in recovery_errors():
        s = syndrome_of(e, gens)
        if s in table:
            other = table[s]
            raise ValueError(f"syndrome {s} shared by {other} and {e}; not a perfect code")
        table[s] = e
    if len(table) != 1 << len(gens):
        raise ValueError("syndrome table is not a bijection")
    return SyndromeTable(table)


# -- circuits ----------------------------------------------------------------


def measurement_cycle(n_rep: int = 5) -> Circuit:
    """Measure G1..G4 with the centre ancilla: Hadamards on the X support,
    leaf-controlled CNOTs onto the ancilla, undo Hadamards, measure/reset."""
    layers: list = []
    for i, g in enumerate(generators(), start=1):
        xs = g.support("X")
        layers.append((hadamard_gate(*xs),))
        for q in g.support():
            layers.append((cnot_gate(q, ANCILLA, n_rep),))
        layers.append((hadamard_gate(*xs),))
        layers.append((Measure(ANCILLA, f"G{i}"),))
    return Circuit(tuple(layers), ancilla=ANCILLA, label="cycle")


def _conceptual(n_rep: int) -> Circuit:
    # Hadamard on the information qubit, repetition-code fan-out, then the
    # graph-state encoder of the ring 1-2-3-4-5-1.
    layers = [
        (hadamard_gate(5),),
        *((cnot_gate(5, t, n_rep),) for t in (1, 2, 3, 4)),
        (hadamard_gate(1, 2, 3, 4, 5),),
        *((cz_gate(a, b, n_rep),) for a, b in ((1, 2), (2, 3), (3, 4), (4, 5), (5, 1))),
    ]
    return Circuit(tuple(layers), label="encode-conceptual")


# Star routing: the information qubit c5 starts at the centre.  Conceptual
# qubits c1..c4 start on leaves 3, 2, 5, 4; leaf 1 holds the ancilla.  Two
# SWAPs bring c3 and then c1 to the centre for the ring CZs, and the final
# SWAP parks c1 on leaf 1 and the ancilla at the centre.
def _star(n_rep: int) -> Circuit:
    c = ANCILLA
    layers = [
        (hadamard_gate(c),),
        *((cnot_gate(c, t, n_rep),) for t in (3, 2, 5, 4)),
        (hadamard_gate(2, 3, 4, 5),),
        (hadamard_gate(c),),
        (cz_gate(c, 4, n_rep),),  # c5-c4
        (cz_gate(c, 3, n_rep),),  # c5-c1
        (swap_gate(c, 5, n_rep),),  # centre now holds c3
        (cz_gate(c, 2, n_rep),),  # c3-c2
        (cz_gate(c, 4, n_rep),),  # c3-c4
        (swap_gate(c, 3, n_rep),),  # centre now holds c1
        (cz_gate(c, 2, n_rep),),  # c1-c2
        (swap_gate(1, c, n_rep),),
    ]
    return Circuit(tuple(layers), ancilla=ANCILLA, label="encode")


def encoding_circuit(layout: str = "star", n_rep: int = 5) -> Circuit:
    if layout == "star":
        return _star(n_rep)
    if layout == "conceptual":
        return _conceptual(n_rep)
    raise ValueError(f"unknown layout {layout!r}")


def decoding_circuit(layout: str = "star", n_rep: int = 5) -> Circuit:
    inv = encoding_circuit(layout, n_rep).inverse()
    return Circuit(inv.layers, inv.ancilla, label="decode" if layout == "star" else "decode-conceptual")
