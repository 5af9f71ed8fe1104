"""Named gates, circuits and their compilation into pulse schedules.

Each gate is a list of 16 tau_p windows.  A window is either a batch of
single-qubit rotations (every other qubit runs the idle decoupling variant)
or one ZZ-preserving block.  Two-qubit gates share the layout

    [rot] [zz] x n_rep [rot] [rot] [rot]

with the dressings

    cnot(j, k):  R_y^k(pi/2),  ZZ,  R_y^k(-pi/2), R_x^k(pi/2), R_z^j(pi/2)
    cy(j, k):    R_x^k(-pi/2), ZZ,  R_x^k(pi/2),  R_y^k(pi/2), R_z^j(pi/2)
    cz(j, k):    idle,         ZZ,  R_z^j(-pi/2), R_z^k(-pi/2), idle

where ZZ^n_rep = exp(-i pi/4 Z_j Z_k).  All three equal the textbook gates up
to a global phase.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .network import QubitGraph
from .sequences import SEQ_SLOTS, PulseSchedule, build_single_qubit_gate, build_zz_sequence

__all__ = [
    "Circuit",
    "CompileError",
    "GateSpec",
    "Measure",
    "apply_matrix",
    "cnot_gate",
    "compile_circuit",
    "cy_gate",
    "cz_gate",
    "format_circuit",
    "gate_windows",
    "hadamard_gate",
    "ideal_unitary",
    "parse_circuit",
    "rotation_gate",
    "swap_gate",
]

GATE_NAMES = ("rot", "hadamard", "cnot", "cy", "cz", "swap")
TWO_QUBIT = ("cnot", "cy", "cz", "swap")
HALF_PI = math.pi / 2

_I = np.eye(2, dtype=complex)
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CompileError(ValueError):
    pass


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    return math.cos(angle / 2) * _I - 1j * math.sin(angle / 2) * _PAULI[axis]


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CY = np.eye(4, dtype=complex)
_CY[2:, 2:] = _PAULI["y"]
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class GateSpec:
    name: str
    operands: tuple[int, ...]
    axis: str | None = None
    angle: float | None = None
    n_rep: int = 5

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "operands", tuple(int(q) for q in self.operands))
        if len(set(self.operands)) != len(self.operands) or not self.operands:
            raise ValueError(f"bad operands {self.operands}")
        if self.name == "rot":
            if len(self.operands) != 1 or self.axis not in ("x", "y", "z") or self.angle is None:
                raise ValueError("rot needs one qubit, an axis and an angle")
            if not -2 * math.pi < self.angle <= 2 * math.pi:
                raise ValueError("rotation angle must lie in (-2pi, 2pi]")
        if self.name in TWO_QUBIT and len(self.operands) != 2:
            raise ValueError(f"{self.name} takes two qubits")
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")

    def inverse(self) -> "GateSpec":
        if self.name == "rot":
            return GateSpec("rot", self.operands, self.axis, -self.angle, self.n_rep)
        return self  # hadamard, cnot, cy, cz, swap are involutions

    def matrix(self) -> np.ndarray:
        """Textbook matrix; first operand is the most significant factor."""
        if self.name == "rot":
            return rotation_matrix(self.axis, self.angle)
        if self.name == "hadamard":
            return _HADAMARD
        return {"cnot": _CNOT, "cy": _CY, "cz": _CZ, "swap": _SWAP}[self.name]

    @property
    def duration(self) -> int:
        return SEQ_SLOTS * len(gate_windows(self))

    def to_text(self) -> str:
        if self.name == "rot":
            return f"rot({self.operands[0]},{self.axis},{_fmt_angle(self.angle)})"
        return f"{self.name}({','.join(map(str, self.operands))})"


def rotation_gate(qubit: int, axis: str, angle: float) -> GateSpec:
    return GateSpec("rot", (qubit,), axis, float(angle))


def hadamard_gate(*qubits: int) -> GateSpec:
    return GateSpec("hadamard", tuple(qubits))


def cnot_gate(control: int, target: int, n_rep: int = 5) -> GateSpec:
    return GateSpec("cnot", (control, target), n_rep=n_rep)


def cy_gate(control: int, target: int, n_rep: int = 5) -> GateSpec:
    return GateSpec("cy", (control, target), n_rep=n_rep)


def cz_gate(j: int, k: int, n_rep: int = 5) -> GateSpec:
    return GateSpec("cz", (j, k), n_rep=n_rep)


def swap_gate(j: int, k: int, n_rep: int = 5) -> GateSpec:
    return GateSpec("swap", (j, k), n_rep=n_rep)


@dataclass(frozen=True)
class Measure:
    """Measure ``qubit`` in Z and reset it to |0>."""

    qubit: int
    label: str = ""

    def to_text(self) -> str:
        return f"M({self.qubit})" + (f"  # {self.label}" if self.label else "")


# -- windows ---------------------------------------------------------------

# ("rot", ((q, axis, angle), ...)) or ("zz", ((j, k), ...))
Window = tuple


def _rot(*items) -> Window:
    return ("rot", tuple(items))


def gate_windows(g: GateSpec) -> list[Window]:
    if g.name == "rot":
        return [_rot((g.operands[0], g.axis, g.angle))]
    if g.name == "hadamard":
        return [
            _rot(*((q, "y", HALF_PI) for q in g.operands)),
            _rot(*((q, "x", math.pi) for q in g.operands)),
        ]
    j, k = g.operands
    zz = [("zz", ((j, k),))] * g.n_rep
    if g.name == "cnot":
        return [_rot((k, "y", HALF_PI)), *zz, _rot((k, "y", -HALF_PI)), _rot((k, "x", HALF_PI)), _rot((j, "z", HALF_PI))]
    if g.name == "cy":
        return [_rot((k, "x", -HALF_PI)), *zz, _rot((k, "x", HALF_PI)), _rot((k, "y", HALF_PI)), _rot((j, "z", HALF_PI))]
    if g.name == "cz":
        return [_rot(), *zz, _rot((j, "z", -HALF_PI)), _rot((k, "z", -HALF_PI)), _rot()]
    # swap: three CNOTs of alternating direction
    c1 = gate_windows(GateSpec("cnot", (j, k), n_rep=g.n_rep))
    c2 = gate_windows(GateSpec("cnot", (k, j), n_rep=g.n_rep))
    return c1 + c2 + c1


# -- circuits --------------------------------------------------------------

Layer = tuple  # tuple[GateSpec, ...] or (Measure,)


@dataclass(frozen=True)
class Circuit:
    layers: tuple[Layer, ...] = ()
    ancilla: int | None = None
    label: str = ""

    def __post_init__(self):
        layers = tuple(tuple(layer) if isinstance(layer, (tuple, list)) else (layer,) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        for layer in layers:
            if any(isinstance(x, Measure) for x in layer):
                if len(layer) != 1:
                    raise CompileError("a measurement marker occupies its own layer")
                if self.ancilla is not None and layer[0].qubit != self.ancilla:
                    raise CompileError(f"marker on qubit {layer[0].qubit}, but the ancilla is {self.ancilla}")
                continue
            seen: set[int] = set()
            for g in layer:
                if seen & set(g.operands):
                    raise CompileError(f"layer reuses a qubit: {format_layer(layer)}")
                seen |= set(g.operands)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.layers + other.layers, self.ancilla or other.ancilla, self.label)

    def gates(self):
        for layer in self.layers:
            for g in layer:
                if isinstance(g, GateSpec):
                    yield g

    def inverse(self) -> "Circuit":
        layers = []
        for layer in reversed(self.layers):
            if isinstance(layer[0], Measure):
                raise CompileError("cannot invert a circuit containing measurements")
            layers.append(tuple(g.inverse() for g in layer))
        return Circuit(tuple(layers), self.ancilla, self.label + "^-1" if self.label else "")

    def duration(self) -> int:
        return sum(_layer_duration(layer) for layer in self.layers)


def _layer_duration(layer: Layer) -> int:
    if isinstance(layer[0], Measure):
        return 0
    return max(g.duration for g in layer)


def layer_windows(layer: Layer, graph: QubitGraph | None = None) -> list[Window]:
    """Merge the windows of parallel gates; their layouts must match."""
    gates = list(layer)
    if graph is not None:
        for i, a in enumerate(gates):
            for b in gates[i + 1:]:
                for p in a.operands:
                    for q in b.operands:
                        if graph.adjacent(p, q):
                            raise CompileError(f"parallel gates on neighbours {p} and {q}")
        for g in gates:
            if g.name in TWO_QUBIT and not graph.adjacent(*g.operands):
                raise CompileError(f"{g.name}{g.operands}: operands are not coupled")
            if g.name == "hadamard":
                for i, p in enumerate(g.operands):
                    for q in g.operands[i + 1:]:
                        if graph.adjacent(p, q):
                            raise CompileError(f"hadamard on neighbours {p} and {q}")
    per_gate = [gate_windows(g) for g in gates]
    n = max(len(w) for w in per_gate)
    out = []
    for i in range(n):
        kinds = {ws[i][0] for ws in per_gate if i < len(ws)}
        if len(kinds) > 1 or any(len(ws) != n for ws in per_gate if any(len(o) != n for o in per_gate)):
            raise CompileError(f"gates in one layer have different window layouts: {format_layer(layer)}")
        kind = kinds.pop()
        items = tuple(it for ws in per_gate for it in ws[i][1])
        out.append((kind, items))
    return out


@lru_cache(maxsize=512)
def _window_schedule(graph: QubitGraph, w: Window) -> PulseSchedule:
    kind, items = w
    if kind == "rot":
        rots = {q: (axis, angle) for q, axis, angle in items}
        return build_single_qubit_gate(graph, rots, label=_window_label(w))
    return build_zz_sequence(graph, items, Fraction(1, 2), label=_window_label(w))


def _window_label(w: Window) -> str:
    kind, items = w
    if kind == "zz":
        return "zz" + "".join(f"({j},{k})" for j, k in items)
    return "rot" + "".join(f"({q},{a},{_fmt_angle(t)})" for q, a, t in items) if items else "idle"


def compile_circuit(circuit: Circuit, graph: QubitGraph) -> PulseSchedule:
    """Concatenate the window schedules of every layer; markers land at
    layer boundaries."""
    parts = []
    windows: list[tuple[float, str]] = []
    t = 0.0
    for layer in circuit.layers:
        if isinstance(layer[0], Measure):
            parts.append(PulseSchedule(0.0).with_marker("M", layer[0].qubit, layer[0].label))
            continue
        for w in layer_windows(layer, graph):
            parts.append(_window_schedule(graph, w))
            windows.append((t, _window_label(w)))
            t += SEQ_SLOTS
    sched = PulseSchedule.concatenate(parts, label=circuit.label)
    sched.metadata["windows"] = tuple(windows)
    return sched


# -- ideal action ----------------------------------------------------------


def apply_matrix(cols: np.ndarray, U: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix on ``qubits`` (first = most significant) to
    the rows of ``cols``."""
    cols = np.asarray(cols, dtype=complex)
    vec = cols.ndim == 1
    if vec:
        cols = cols[:, None]
    N = cols.shape[0]
    n = N.bit_length() - 1
    k = len(qubits)
    idx = np.arange(N)
    sub = np.zeros(N, dtype=np.int64)
    for pos, q in enumerate(qubits):
        sub |= ((idx >> (q - 1)) & 1) << (k - 1 - pos)
    rest = idx.copy()
    for q in qubits:
        rest &= ~(1 << (q - 1))
    out = np.zeros_like(cols)
    for b in range(1 << k):
        # row index with the operand bits replaced by the pattern b
        src = rest.copy()
        for pos, q in enumerate(qubits):
            src |= ((b >> (k - 1 - pos)) & 1) << (q - 1)
        out += U[sub, b][:, None] * cols[src]
    if n <= 0:
        raise ValueError("need at least one qubit")
    return out[:, 0] if vec else out


def ideal_unitary(item, n: int) -> np.ndarray:
    U = np.eye(1 << n, dtype=complex)
    if isinstance(item, GateSpec):
        if item.name == "hadamard":
            for q in item.operands:
                U = apply_matrix(U, _HADAMARD, (q,))
            return U
        return apply_matrix(U, item.matrix(), item.operands)
    if isinstance(item, Measure):
        return U
    for g in item.gates():
        U = ideal_unitary(g, n) @ U
    return U


def windows_unitary(windows, n: int) -> np.ndarray:
    """Product of the ideal window actions (ZZ blocks at pi/(4 n_rep))."""
    U = np.eye(1 << n, dtype=complex)
    for w, reps in windows:
        kind, items = w
        if kind == "rot":
            for q, axis, angle in items:
                U = apply_matrix(U, rotation_matrix(axis, angle), (q,))
        else:
            for j, k in items:
                ph = np.exp(-1j * (math.pi / 4) / reps * np.array([1, -1, -1, 1]))
                U = apply_matrix(U, np.diag(ph), (j, k))
    return U


# -- text format -----------------------------------------------------------

_TOKEN = re.compile(r"^\s*([A-Za-z]+)\s*\(([^)]*)\)\s*$")


def _fmt_angle(a: float) -> str:
    r = Fraction(a / math.pi).limit_denominator(64)
    if abs(float(r) * math.pi - a) < 1e-12:
        if r == 0:
            return "0"
        num = "" if abs(r.numerator) == 1 else f"{abs(r.numerator)}*"
        s = ("-" if r < 0 else "") + f"{num}pi"
        return s if r.denominator == 1 else f"{s}/{r.denominator}"
    return repr(float(a))


def _parse_angle(s: str) -> float:
    s = s.replace(" ", "")
    m = re.fullmatch(r"([+-]?)(?:(\d+)\*)?pi(?:/(\d+))?", s)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        return sign * int(m.group(2) or 1) * math.pi / int(m.group(3) or 1)
    return float(s)


def format_layer(layer: Layer) -> str:
    return " | ".join(g.to_text() for g in layer)


def format_circuit(c: Circuit) -> str:
    return "\n".join(format_layer(layer) for layer in c.layers) + "\n"


def parse_circuit(text: str, n_rep: int = 5, ancilla: int | None = None) -> Circuit:
    layers = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        layer = []
        for tok in line.split("|"):
            m = _TOKEN.match(tok)
            if m is None:
                raise ValueError(f"line {lineno}: cannot parse {tok.strip()!r}")
            name, args = m.group(1), [a.strip() for a in m.group(2).split(",") if a.strip()]
            try:
                if name == "M":
                    layer.append(Measure(int(args[0])))
                elif name == "rot":
                    layer.append(GateSpec("rot", (int(args[0]),), args[1], _parse_angle(args[2]), n_rep))
                else:
                    layer.append(GateSpec(name, tuple(int(a) for a in args), n_rep=n_rep))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
        layers.append(tuple(layer))
    return Circuit(tuple(layers), ancilla)
