from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softqec.engine import Integrator, ReducedEvolution
from softqec.gates import rotation_matrix
from softqec.network import HamiltonianContext, design_coupling, star_graph
from softqec.sequences import (
    GATE_SLOTS,
    SEQ_SLOTS,
    ProfileError,
    PulsePlacement,
    PulseSchedule,
    SequenceError,
    build_single_qubit_gate,
    build_zz_sequence,
    delta_pulse_unitary,
    toggling_profile,
    validate_schedule,
)
from softqec.shapes import shape_for_angle
from softqec.metrics import fidelity
from oracles import embed

PI = shape_for_angle(math.pi)


def test_slot_audit():
    # 8 pi slots + 3 composite identities of 2 slots + P of 2 slots
    pis = len(GATE_SLOTS["A"]) + len(GATE_SLOTS["B"])
    assert pis + 2 * len(GATE_SLOTS["I"]) + 2 == SEQ_SLOTS == 16
    used = set(GATE_SLOTS["A"]) | set(GATE_SLOTS["B"]) | {GATE_SLOTS["P"], GATE_SLOTS["P"] + 1}
    for s in GATE_SLOTS["I"]:
        used |= {s, s + 1}
    assert used == set(range(16))


def test_idle_gate_toggling(star):
    sched = build_single_qubit_gate(star, {})
    assert sched.total_duration == 16
    prof = toggling_profile(sched, star.qubits)
    assert all(prof.mean(q) == 0 for q in star.qubits)
    assert all(prof.mean_product(*e) == 0 for e in star.edges)
    assert validate_schedule(sched, star).passed


@given(st.integers(1, 6), st.sampled_from("xyz"), st.sampled_from([math.pi, math.pi / 2, -math.pi / 2]))
def test_rotation_gate_validates(q, axis, angle):
    g = star_graph(5, design_coupling(5))
    assert validate_schedule(build_single_qubit_gate(g, {q: (axis, angle)}), g).passed


def test_parallel_leaf_rotations_validate(star):
    sched = build_single_qubit_gate(star, {1: ("y", math.pi / 2), 3: ("x", math.pi)})
    assert validate_schedule(sched, star).passed


def test_adjacent_targets_rejected(star):
    with pytest.raises(SequenceError):
        build_single_qubit_gate(star, {1: ("x", math.pi), 6: ("x", math.pi)})


def test_zz_contract(star):
    for k in range(1, 6):
        sched = build_zz_sequence(star, [(k, 6)])
        rep = validate_schedule(sched, star, {(k, 6): Fraction(1, 2)})
        assert rep.passed, rep.failures
    assert validate_schedule(build_zz_sequence(star, []), star).passed


def test_zz_wrong_fraction_fails(star):
    rep = validate_schedule(build_zz_sequence(star, [(2, 6)]), star, {(2, 6): Fraction(1, 4)})
    assert not rep.passed
    assert any(f.startswith("(c)") for f in rep.failures)
    assert math.isclose(rep.residuals["<s2s6>"], 0.25)


def test_zz_errors(star):
    with pytest.raises(SequenceError):
        build_zz_sequence(star, [(1, 6)], Fraction(1, 3))
    with pytest.raises(SequenceError):
        build_zz_sequence(star, [(1, 6), (2, 6)])
    with pytest.raises(SequenceError):
        build_zz_sequence(star, [(1, 2)])


def test_simultaneous_neighbours_fail(star):
    p = (PulsePlacement(1, "x", PI, 1, 3.0), PulsePlacement(6, "x", PI, 1, 3.0))
    rep = validate_schedule(PulseSchedule(16.0, p), star)
    assert not rep.passed and any("neighbours" in f for f in rep.failures)


def test_profile_examples():
    empty = toggling_profile(PulseSchedule(16.0), [1, 2])
    assert empty.mean(1) == 1 and empty.mean_product(1, 2) == 1
    # a stretched pi pulse on slots 7-8 flips the sign at t = 8
    one = toggling_profile(PulseSchedule(16.0, (PulsePlacement(1, "x", PI.scaled(2.0), 1, 7.0),)), [1])
    assert one.mean(1) == 0 and one.flips(1) == 1


def test_off_grid_start_rejected():
    with pytest.raises(SequenceError):
        PulseSchedule(16.0, (PulsePlacement(1, "x", PI, 1, 3.5),))


def test_cpmg_pair():
    p = (PulsePlacement(1, "x", PI, 1, 3.0), PulsePlacement(1, "x", PI, 1, 11.0))
    prof = toggling_profile(PulseSchedule(16.0, p), [1, 2])
    # flips at 3.5 and 11.5: +1 for 3.5, -1 for 8, +1 for 4.5
    assert prof.mean(1) == 0
    assert prof.mean_product(1, 2) == 0


def test_profile_rejects_stray_rotation():
    p = (PulsePlacement(1, "x", shape_for_angle(math.pi / 2), 1, 3.0),)
    with pytest.raises(ProfileError):
        toggling_profile(PulseSchedule(16.0, p), [1])


def test_overlapping_placements_rejected():
    with pytest.raises(SequenceError):
        PulseSchedule(16.0, (PulsePlacement(1, "x", PI, 1, 3.0), PulsePlacement(1, "x", PI.scaled(2.0), 1, 2.0)))


@pytest.mark.parametrize("pair", [(1, 6), (4, 6)])
def test_delta_oracle_zz(star, pair):
    sched = build_zz_sequence(star, [pair])
    U = delta_pulse_unitary(sched, star)
    J = star.uniform_J()
    zz = embed({pair[0]: np.diag([1, -1]), pair[1]: np.diag([1, -1])}, 6)
    want = np.diag(np.exp(-0.5j * 0.5 * J * 16 * np.diag(zz)))
    ph = np.vdot(want, U) / 64
    assert abs(abs(ph) - 1) < 1e-12
    np.testing.assert_allclose(U, ph / abs(ph) * want, atol=1e-12)


def test_delta_oracle_pure_decoupling(star):
    U = delta_pulse_unitary(build_zz_sequence(star, []), star)
    ph = np.trace(U) / 64
    np.testing.assert_allclose(U, ph * np.eye(64), atol=1e-12)


def test_zz_total_angle():
    # five repetitions at J = pi/80 give alpha = pi/4
    J = design_coupling(5)
    assert math.isclose(5 * 0.5 * J * 16 / 2, math.pi / 4)


def test_text_export(star):
    text = build_zz_sequence(star, [(2, 6)]).to_text()
    lines = text.strip().splitlines()
    assert lines[0].startswith("# ")
    q, axis, sign, name, start, dur = lines[1].split()
    assert axis in "xyz" and sign in "+-" and float(dur) in (1.0, 2.0)


def test_concatenate_and_shift(star):
    a = build_zz_sequence(star, [(1, 6)])
    b = build_single_qubit_gate(star, {})
    c = PulseSchedule.concatenate([a, b])
    assert c.total_duration == 32 and len(c.placements) == len(a.placements) + len(b.placements)
    s = a.shifted(16.0)
    assert s.total_duration == 32 and min(p.start for p in s.placements) >= 16


def _gate_fidelity(graph, sched, ideal, S=256):
    v0 = np.eye(64, dtype=complex)[:, [0, 1, 32, 33, 5, 62]]
    ctx = HamiltonianContext(graph, None, sched)
    V = Integrator(ctx, S).advance(ReducedEvolution.from_columns(v0), sched.total_duration)
    return fidelity(V.matrix, ideal @ v0)


@pytest.mark.parametrize("n_rep", [1, 2, 4])
def test_zz_infidelity_shrinks_with_n_rep(n_rep):
    # fixed total angle pi/4, J = pi/(16 n_rep); check against the ideal ZZ rotation
    errs = {}
    for n in (n_rep, 2 * n_rep):
        g = star_graph(5, design_coupling(n))
        seq = PulseSchedule.concatenate([build_zz_sequence(g, [(1, 6)])] * n)
        zz = np.diag(embed({1: np.diag([1, -1]), 6: np.diag([1, -1])}, 6))
        ideal = np.diag(np.exp(-1j * math.pi / 4 * zz))
        errs[n] = 1 - _gate_fidelity(g, seq, ideal)
    assert errs[2 * n_rep] < errs[n_rep] / 3.5  # order >= 2 in J tau_p


def test_rotation_gate_pulse_level(star):
    sched = build_single_qubit_gate(star, {2: ("x", math.pi)})
    ideal = embed({2: rotation_matrix("x", math.pi)}, 6)
    assert 1 - _gate_fidelity(star, sched, ideal) <= 1e-6
