"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (also repeated in the terminal
summary).  The stochastic criteria 7-9 run the shipped experiment files and
reuse the per-realization cache, so a cold run takes hours on one core.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE, ROOT
from oracles import embed
from softqec import code513
from softqec.config import load_experiments
from softqec.engine import Integrator, ReducedEvolution
from softqec.gates import (
    Circuit,
    cnot_gate,
    compile_circuit,
    hadamard_gate,
    ideal_unitary,
    rotation_gate,
)
from softqec.metrics import fidelity
from softqec.network import HamiltonianContext, design_coupling, star_graph
from softqec.noise import NoiseSpec, estimate_t2
from softqec.protocol import RunConfig, build_protocol, run, run_ensemble
from softqec.sequences import (
    PulseSchedule,
    build_single_qubit_gate,
    build_zz_sequence,
    delta_pulse_unitary,
    validate_schedule,
)


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def _experiments(fname):
    return {e.name: e for e in load_experiments(ROOT / "configs" / fname)}


def _ensemble(exp, cache_dir):
    return run_ensemble(exp.config, exp.n_realizations, exp.exclusion, cache_dir=cache_dir)


# 1 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_1_step_halving():
    cfg = RunConfig(noise=(NoiseSpec(20e-3, 128.0),), mode="qec", n_cycles=1, steps_per_tau_p=1024, seed=101)
    a = run(cfg, 0)
    b = run(RunConfig(**{**cfg.__dict__, "steps_per_tau_p": 2048}), 0)
    assert [r.outcome for r in a.records] == [r.outcome for r in b.records]
    worst = 0.0
    for ra, rb in zip(a.records, b.records):
        for k in ("F_b", "F_a", "Fp_b", "Fp_a", "F_D", "Fp_D"):
            worst = max(worst, abs(getattr(ra, k) - getattr(rb, k)) / abs(getattr(rb, k)))
    for k in ("F_full", "F_single", "F_full_D", "F_single_D"):
        worst = max(worst, abs(getattr(a.end, k) - getattr(b.end, k)) / abs(getattr(b.end, k)))
    verdict(1, worst <= 1e-9, f"max relative fidelity change 1024->2048 steps = {worst:.2e} (<= 1e-9)")


# 2 ---------------------------------------------------------------------------


def _pulse_infidelity(items, S=1024):
    g = star_graph(5, design_coupling(5))
    c = Circuit(tuple((x,) for x in items))
    rng = np.random.default_rng(0)
    v0 = np.linalg.qr(rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4)))[0]
    V = Integrator(HamiltonianContext(g, None, compile_circuit(c, g)), S).advance(
        ReducedEvolution.from_columns(v0), c.duration())
    return 1 - fidelity(V.matrix, ideal_unitary(c, 6) @ v0)


def test_criterion_2_gate_quality():
    cnot = max(_pulse_infidelity([cnot_gate(q, 6, 5)]) for q in (1, 3))
    cnot = max(cnot, _pulse_infidelity([cnot_gate(6, 2, 5)]))
    singles = [rotation_gate(2, "x", math.pi), rotation_gate(6, "y", math.pi / 2), rotation_gate(4, "z", -math.pi / 2),
               hadamard_gate(1, 3, 5), hadamard_gate(6)]
    single = max(_pulse_infidelity([g]) for g in singles)
    ok = cnot <= 1e-5 and single <= 1e-6
    verdict(2, ok, f"CNOT infidelity {cnot:.2e} (<= 1e-5, target 1e-6); single-qubit {single:.2e} (<= 1e-6)")


# 3 ---------------------------------------------------------------------------


def test_criterion_3_durations():
    cyc = code513.measurement_cycle(5)
    marks, t = [], 0.0
    for layer in cyc.layers:
        if isinstance(layer[0], code513.Measure):
            marks.append(t)
        else:
            t += max(g.duration for g in layer)
    got = (rotation_gate(1, "x", 1.0).duration, hadamard_gate(1).duration, cnot_gate(1, 6, 5).duration,
           cyc.duration(), tuple(np.diff([0.0] + marks)))
    want = (16, 32, 144, 2560, (640.0,) * 4)
    sched = compile_circuit(cyc, star_graph(5, design_coupling(5)))
    ok = got == want and sched.total_duration == 2560 and [m.time for m in sched.markers] == marks
    verdict(3, ok, f"rotation/Hadamard/CNOT/cycle/per-generator = {got[:4]} / {got[4][0]:g}")


# 4 ---------------------------------------------------------------------------


def test_criterion_4_code_algebra():
    gens = code513.generators()
    commute = all(a.commutes_with(b) for a in gens for b in gens)
    table = code513.syndrome_table()
    nonzero = [s for s in table.table if any(s)]
    bijective = len(nonzero) == 15 and len({str(table.lookup(s)) for s in nonzero}) == 15
    p0, p1 = code513.logical_states()
    roundtrip = True
    for e in code513.recovery_errors():
        fix = table.lookup(code513.syndrome_of(e))
        for v in (p0, p1):
            roundtrip &= np.allclose(fix.matrix() @ (e.matrix() @ v), v, atol=1e-14)
    verdict(4, commute and bijective and roundtrip,
            f"generators commute={commute}, 15-syndrome bijection={bijective}, weight-1 round trip={roundtrip}")


# 5 ---------------------------------------------------------------------------


def _stabilizer_codewords():
    """Codewords from the generators alone: prod (1 + G_i)/2 |00000>, then Xbar."""
    P = np.eye(32)
    for g in code513.generators():
        P = P @ (np.eye(32) + g.matrix()) / 2
    v0 = P[:, 0] / np.linalg.norm(P[:, 0])
    return v0, code513.logical_operators()["X"].matrix() @ v0


def test_criterion_5_encoder():
    # the transcribed expansions against codewords built from the generators
    p0, p1 = code513.logical_states()
    s0, s1 = _stabilizer_codewords()
    ph = np.vdot(s0, p0)
    gens_ok = abs(abs(ph) - 1) < 1e-10 and np.allclose(p0, ph * s0, atol=1e-10) and np.allclose(p1, ph * s1, atol=1e-10)
    U = ideal_unitary(code513.encoding_circuit("star", 5), 6)
    v_in = build_protocol(1, 5).v_init
    out = U @ v_in
    want = code513.encoded_columns()
    overlaps = [abs(np.vdot(want[:, m], out[:, m])) for m in (0, 1)]
    # a common phase: the relative phase between the two columns must vanish
    rel = np.vdot(want[:, 0], out[:, 0]) * np.conj(np.vdot(want[:, 1], out[:, 1]))
    D = ideal_unitary(code513.decoding_circuit("star", 5), 6)
    ident = np.max(np.abs(D @ out - v_in))
    ok = gens_ok and min(overlaps) >= 1 - 1e-10 and abs(rel - 1) < 1e-10 and ident < 1e-10
    verdict(5, ok, f"codeword overlaps {min(overlaps):.12f}, encode->decode residual {ident:.1e}")


# 6 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_6_t2():
    details, ok = [], True
    for sigma, tau in ((20e-3, 128.0), (50e-3, 32.0)):
        want = 2.0 / (math.sqrt(math.pi) * sigma**2 * tau)
        got = estimate_t2(NoiseSpec(sigma, tau, seed=2024), n_realizations=200).t2
        err = abs(got / want - 1)
        ok &= err <= 0.10
        details.append(f"sigma={sigma:g} tau_n={tau:g}: T2={got:.2f} vs {want:.2f} ({100 * err:.1f}%)")
    verdict(6, ok, "; ".join(details))


# 7 ---------------------------------------------------------------------------

AVG4_REFERENCE = {"a": 14.3, "b": 15.0, "c": 9.73, "d": 1.36}


@pytest.mark.slow
def test_criterion_7_qec_improvement(cache_dir):
    exps = _experiments("avg4.yaml")
    ok, parts = True, []
    for panel, ref in AVG4_REFERENCE.items():
        res = _ensemble(exps[f"fig_avg4_{panel}"], cache_dir)
        r = res.qec_ratio
        within = ref / 3 <= r <= ref * 3
        side = r > 5 if panel != "d" else r < 3
        ok &= within and side
        parts.append(f"({panel}) {r:.2f} vs {ref}")
    verdict(7, ok, "end-of-decoding ratios (1-F'_D)/(1-F'): " + ", ".join(parts))


# 8 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_8_zeno(cache_dir):
    exps = _experiments("ecc513ii.yaml")
    ok, parts = True, []
    for name, exp in exps.items():
        res = _ensemble(exp, cache_dir)
        wm, nm = res.infidelity("F_a")[-1], res.infidelity("F_D")[-1]
        ok &= nm >= 5 * wm
        parts.append(f"{name}: NM/WM = {nm / wm:.2f}")
    verdict(8, ok, "; ".join(parts) + " (>= 5)")


# 9 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_9_bimodal(cache_dir):
    exps = _experiments("twonoise5.yaml")
    slow = _ensemble(exps["fig_twonoise5_slow"], cache_dir)
    fast = _ensemble(exps["fig_twonoise5_bimodal"], cache_dir)

    def avg(res, key):
        return float(np.nanmean(res.infidelity(key)))

    rf = avg(fast, "F_a") / avg(slow, "F_a")
    rp = avg(fast, "Fp_a") / avg(slow, "Fp_a")
    ok = 4 <= rf <= 30 and 30 <= rp <= 500
    verdict(9, ok, f"1-F grows {rf:.1f}x (4..30), 1-F' grows {rp:.1f}x (30..500)")


# 10 --------------------------------------------------------------------------


def _windows(sched: PulseSchedule):
    for t0, label in sched.metadata["windows"]:
        pl = tuple(p.__class__(p.qubit, p.axis, p.shape, p.sign, p.start - t0)
                   for p in sched.placements if t0 <= p.start < t0 + 16)
        yield label, PulseSchedule(16.0, pl)


def test_criterion_10_sequence_contract():
    g = star_graph(5, design_coupling(5))
    failures = []
    shipped = [("idle", build_single_qubit_gate(g, {}), None), ("zz-none", build_zz_sequence(g, []), None)]
    shipped += [(f"zz{k}6", build_zz_sequence(g, [(k, 6)]), {(k, 6): Fraction(1, 2)}) for k in range(1, 6)]
    for label, s, coupled in shipped:
        rep = validate_schedule(s, g, coupled)
        if not rep.passed:
            failures.append(label)
    proto = build_protocol(3, 5).schedule
    n_windows = 0
    for label, win in _windows(proto):
        n_windows += 1
        pair = None
        if label.startswith("zz"):
            a, b = (int(x) for x in label[3:-1].split(","))
            pair = {(min(a, b), max(a, b)): Fraction(1, 2)}
        if not validate_schedule(win, g, pair).passed:
            failures.append(f"protocol window {label}")
    J = g.uniform_J()
    worst = 0.0
    for k in range(1, 6):
        U = delta_pulse_unitary(build_zz_sequence(g, [(k, 6)]), g)
        zz = np.diag(embed({k: np.diag([1, -1]), 6: np.diag([1, -1])}, 6))
        want = np.diag(np.exp(-0.5j * 0.5 * J * 16 * zz))
        ph = np.vdot(want, U) / 64
        worst = max(worst, float(np.max(np.abs(U - ph / abs(ph) * want))))
    ok = not failures and worst <= 1e-12
    verdict(10, ok, f"{len(shipped)} sequences and {n_windows} protocol windows validated"
                    f"{'' if not failures else ' FAILED: ' + ', '.join(failures[:5])}; delta oracle residual {worst:.1e}")
