from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import PAULI, embed
from softqec.engine import Integrator, ReducedEvolution
from softqec.gates import (
    Circuit,
    CompileError,
    GateSpec,
    Measure,
    apply_matrix,
    cnot_gate,
    compile_circuit,
    cy_gate,
    cz_gate,
    format_circuit,
    gate_windows,
    hadamard_gate,
    ideal_unitary,
    parse_circuit,
    rotation_gate,
    rotation_matrix,
    swap_gate,
    windows_unitary,
)
from softqec.metrics import fidelity
from softqec.network import HamiltonianContext, design_coupling, star_graph
from softqec.sequences import validate_schedule


def _equal_up_to_phase(U, W, tol=1e-12):
    k = np.argmax(np.abs(W))
    ph = U.flat[k] / W.flat[k]
    return abs(abs(ph) - 1) < tol and np.allclose(U, ph * W, atol=tol)


def test_textbook_cnot():
    U = ideal_unitary(cnot_gate(1, 2), 2)
    # control 1 is bit 0: |c=1,t=0> = index 1 -> index 3
    assert U[3, 1] == 1 and U[1, 3] == 1 and U[0, 0] == 1 and U[2, 2] == 1


def test_hadamard_decomposition():
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert _equal_up_to_phase(rotation_matrix("x", math.pi) @ rotation_matrix("y", math.pi / 2), H)


def test_rz_ideal():
    np.testing.assert_allclose(rotation_matrix("z", math.pi / 2), np.diag(np.exp([-0.25j * math.pi, 0.25j * math.pi])))


@pytest.mark.parametrize("g", [cnot_gate(3, 6), cnot_gate(6, 2), cy_gate(1, 6), cy_gate(6, 5), cz_gate(4, 6),
                               swap_gate(6, 5), hadamard_gate(1, 3), rotation_gate(2, "y", -math.pi / 2)])
def test_windows_reproduce_textbook_gate(g):
    ws = [(w, g.n_rep) for w in gate_windows(g)]
    assert _equal_up_to_phase(windows_unitary(ws, 6), ideal_unitary(g, 6), 1e-12)


def test_cz_symmetric():
    np.testing.assert_allclose(ideal_unitary(cz_gate(2, 6), 6), ideal_unitary(cz_gate(6, 2), 6))
    assert _equal_up_to_phase(cz_gate(1, 2).matrix(), np.diag([1, 1, 1, -1]))


def test_swap_is_three_cnots():
    U = ideal_unitary(cnot_gate(1, 2), 2) @ ideal_unitary(cnot_gate(2, 1), 2) @ ideal_unitary(cnot_gate(1, 2), 2)
    np.testing.assert_allclose(ideal_unitary(swap_gate(1, 2), 2), U)


@pytest.mark.parametrize("n_rep", [1, 2, 5])
def test_durations(n_rep):
    assert rotation_gate(1, "x", math.pi).duration == 16
    assert hadamard_gate(1).duration == 32
    for g in (cnot_gate, cy_gate, cz_gate):
        assert g(1, 6, n_rep).duration == 64 + 16 * n_rep
    assert swap_gate(1, 6, n_rep).duration == 3 * (64 + 16 * n_rep)


def test_gate_validation():
    with pytest.raises(ValueError):
        GateSpec("rot", (1,), "x", 7.0)
    with pytest.raises(ValueError):
        GateSpec("cnot", (1, 1))
    with pytest.raises(ValueError):
        GateSpec("toffoli", (1, 2, 3))


def test_compile_rejects_bad_layers(star):
    with pytest.raises(CompileError):
        compile_circuit(Circuit(((cnot_gate(1, 2),),)), star)  # leaves are not coupled
    with pytest.raises(CompileError):
        compile_circuit(Circuit(((hadamard_gate(1, 6),),)), star)
    with pytest.raises(CompileError):
        Circuit(((cnot_gate(1, 6), cnot_gate(2, 6)),))
    with pytest.raises(CompileError):
        Circuit(((Measure(3),),), ancilla=6)


def test_empty_circuit(star):
    s = compile_circuit(Circuit(()), star)
    assert s.total_duration == 0 and not s.placements


def test_markers_land_at_layer_boundaries(star):
    c = Circuit(((hadamard_gate(1),), (cnot_gate(1, 6),), (Measure(6, "G"),), (hadamard_gate(1),)), ancilla=6)
    s = compile_circuit(c, star)
    assert s.total_duration == c.duration() == 32 + 144 + 32
    assert [(m.time, m.kind, m.qubit, m.label) for m in s.markers] == [(176.0, "M", 6, "G")]


def test_compiled_windows_validate(star):
    c = Circuit(((hadamard_gate(1, 3, 5),), (cz_gate(2, 6),)))
    s = compile_circuit(c, star)
    # every 16-slot window on its own satisfies the decoupling contract
    from fractions import Fraction

    from softqec.sequences import PulseSchedule

    for t0, label in s.metadata["windows"]:
        win = PulseSchedule(16.0, tuple(p.__class__(p.qubit, p.axis, p.shape, p.sign, p.start - t0)
                                        for p in s.placements if t0 <= p.start < t0 + 16))
        coupled = {(2, 6): Fraction(1, 2)} if label.startswith("zz") else None
        assert validate_schedule(win, star, coupled).passed, label


@given(st.lists(st.sampled_from(["cnot(1,6)", "cz(6,3)", "cy(6,2)", "hadamard(1,4)", "rot(5,z,-pi/2)",
                                 "rot(2,x,3*pi/4)", "swap(4,6)"]), min_size=1, max_size=5))
def test_text_roundtrip(tokens):
    c = parse_circuit("\n".join(tokens))
    assert parse_circuit(format_circuit(c)) == c


def test_parse_layer_and_errors():
    c = parse_circuit("hadamard(1,3) | rot(5,y,pi/2)\nM(6)\n", ancilla=6)
    assert len(c.layers) == 2 and isinstance(c.layers[1][0], Measure)
    with pytest.raises(ValueError):
        parse_circuit("cnot 1 6")


@given(st.integers(0, 2**31))
def test_circuit_then_inverse_is_identity(seed):
    rng = np.random.default_rng(seed)
    pool = [cnot_gate(1, 6), cy_gate(6, 2), cz_gate(3, 6), hadamard_gate(2, 4), swap_gate(6, 5),
            rotation_gate(6, "x", float(rng.uniform(-3, 3)))]
    layers = tuple((pool[i],) for i in rng.integers(0, len(pool), size=4))
    c = Circuit(layers)
    U = ideal_unitary(c + c.inverse(), 6)
    np.testing.assert_allclose(U, np.eye(64), atol=1e-12)


def test_ideal_unitary_is_unitary():
    U = ideal_unitary(Circuit(((cnot_gate(2, 6),), (hadamard_gate(1, 2),), (cy_gate(6, 4),))), 6)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(64), atol=1e-13)


def test_apply_matrix_order():
    # first operand is the most significant factor of the 4x4 matrix
    U = apply_matrix(np.eye(4, dtype=complex), cnot_gate(2, 1).matrix(), (2, 1))
    want = embed({2: np.diag([1, 0])}, 2) + embed({2: np.diag([0, 1]), 1: PAULI["x"]}, 2)
    np.testing.assert_allclose(U, want)


def _pulse_infidelity(g, n, S=256, items=None):
    graph = star_graph(5, design_coupling(g.n_rep if g is not None else 5))
    c = Circuit(tuple((x,) for x in (items or [g])))
    sched = compile_circuit(c, graph)
    rng = np.random.default_rng(0)
    v0 = np.linalg.qr(rng.normal(size=(64, 2)) + 1j * rng.normal(size=(64, 2)))[0]
    V = Integrator(HamiltonianContext(graph, None, sched), S).advance(ReducedEvolution.from_columns(v0), c.duration())
    return 1 - fidelity(V.matrix, ideal_unitary(c, 6) @ v0)


@pytest.mark.parametrize("g", [cnot_gate(2, 6), cnot_gate(6, 4), cy_gate(1, 6), cz_gate(6, 5)])
def test_pulse_level_two_qubit_gates(g):
    assert _pulse_infidelity(g, 6) <= 1e-5


def test_pulse_level_hadamard_pairs():
    assert _pulse_infidelity(None, 6, items=[hadamard_gate(1, 3), hadamard_gate(1, 3)]) <= 2e-6
    assert _pulse_infidelity(hadamard_gate(1, 3), 6) <= 1e-6


def test_pulse_level_swap_squared():
    assert _pulse_infidelity(None, 6, items=[swap_gate(6, 2), swap_gate(6, 2)]) <= 1e-4


def test_zero_angle_rotation_is_decoupled_identity():
    assert _pulse_infidelity(rotation_gate(3, "x", 0.0), 6) <= 1e-6


def test_gate_error_converges_with_n_rep():
    e = {n: _pulse_infidelity(cnot_gate(1, 6, n), 6) for n in (1, 2, 4)}
    slope = np.polyfit(np.log([1, 2, 4]), np.log([e[1], e[2], e[4]]), 1)[0]
    # infidelity ~ (J tau_p)^(2p) with J ~ 1/n_rep; order p >= 2 in the amplitude error
    assert slope <= -2.0, e
