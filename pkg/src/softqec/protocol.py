"""Zeno and QEC protocols at pulse level, with DD-only and no-pulse baselines.

One realization runs the full star schedule

    encode (2688) | measurement cycle (2560) x n_cycles | decode (2688)

under a sampled noise trace.  The protected columns (projections applied at
the ``M`` markers) and the DD companion columns (same pulses, no
projections) are stacked into one 64 x 4 matrix so they see identical
noise and share every RK4 step.  The no-pulse baseline only has diagonal
terms and is evaluated from exact phase integrals of the noise.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import code513
from .engine import (
    Integrator,
    Projector,
    ReducedEvolution,
    apply_instant_pauli,
    probability,
    project,
    reset_ancilla,
    sample_outcome,
)
from .gates import Circuit, Measure, compile_circuit, ideal_unitary
from .metrics import fidelity, recovery_fidelity, single_qubit_fidelity
from .network import HamiltonianContext, design_coupling, star_graph, z_signs
from .noise import NoiseSpec, sample_composite

__all__ = [
    "MODES",
    "EnsembleResult",
    "EndRecord",
    "MeasurementRecord",
    "MetricsTrace",
    "RunConfig",
    "build_protocol",
    "fidelity",
    "recovery_fidelity",
    "run",
    "run_ensemble",
    "run_qec",
    "run_zeno",
    "write_ensemble_csv",
    "write_trace_csv",
]

MODES = ("zeno", "qec", "dd_only", "free")
N_QUBITS = 6
CENTER = code513.ANCILLA


@dataclass(frozen=True)
class RunConfig:
    """One protocol realization.

    ``noise`` holds one component, or two for bimodal noise.  ``inject`` lists
    instantaneous Paulis ``(t, qubit, axis)`` applied to the protected
    columns, for fault-injection tests.
    """

    noise: tuple[NoiseSpec, ...] = ()
    mode: str = "qec"
    n_cycles: int = 3
    n_rep: int = 5
    steps_per_tau_p: int = 1024
    seed: int = 0
    noise_dt: float = 1.0 / 64
    inject: tuple[tuple[float, int, str], ...] = ()

    def __post_init__(self):
        noise = self.noise
        if isinstance(noise, NoiseSpec):
            noise = (noise,)
        object.__setattr__(self, "noise", tuple(noise))
        object.__setattr__(self, "inject", tuple((float(t), int(q), str(a)) for t, q, a in self.inject))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.noise) > 2:
            raise ValueError("at most two noise components (bimodal)")
        if self.n_cycles < 0 or self.n_rep < 1:
            raise ValueError("n_cycles >= 0 and n_rep >= 1 required")
        if self.noise_dt <= 0:
            raise ValueError("noise_dt must be positive")
        if self.inject and self.mode in ("dd_only", "free"):
            raise ValueError("fault injection needs a protected run (zeno or qec)")
        for t, q, a in self.inject:
            if a not in "xyz" or not 1 <= q <= N_QUBITS:
                raise ValueError(f"bad injected Pauli {(t, q, a)}")

    @property
    def J(self) -> float:
        return design_coupling(self.n_rep)

    def component_specs(self) -> tuple[NoiseSpec, ...]:
        # distinct seeds so the two bimodal components are independent
        return tuple(replace(s, seed=self.seed * 1_000_003 + 7919 * i) for i, s in enumerate(self.noise))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = [{"sigma": s.sigma, "tau_n": s.tau_n} for s in self.noise]
        d["inject"] = [list(x) for x in self.inject]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["noise"] = tuple(NoiseSpec(float(n["sigma"]), float(n["tau_n"])) for n in d.get("noise", ()))
        d["inject"] = tuple(tuple(x) for x in d.get("inject", ()))
        return cls(**d)


@dataclass
class MeasurementRecord:
    """Metrics around one ancilla projection.

    QEC: fidelities of the renormalized state, ``outcome`` sampled.  Zeno:
    conditioned fidelities F/SP, ``p0`` the conditional zero probability and
    ``sp`` the cumulative success probability.  ``F_D``/``Fp_D`` belong to the
    DD companion and ``F_NP`` to the no-pulse baseline.
    """

    index: int
    t: float
    generator: str
    F_b: float = math.nan
    F_a: float = math.nan
    Fp_b: float = math.nan
    Fp_a: float = math.nan
    outcome: int = 0
    p0: float = math.nan
    sp: float = math.nan
    trigger: bool = False
    correction: str = ""
    F_D: float = math.nan
    Fp_D: float = math.nan
    F_NP: float = math.nan


@dataclass
class EndRecord:
    """End of decoding: full six-qubit and centre-qubit fidelities."""

    t: float
    F_full: float = math.nan
    F_single: float = math.nan
    F_full_D: float = math.nan
    F_single_D: float = math.nan
    F_full_NP: float = math.nan
    sp: float = math.nan


@dataclass
class MetricsTrace:
    config: RunConfig
    realization: int
    records: list[MeasurementRecord] = field(default_factory=list)
    end: EndRecord | None = None
    t_first: float = math.nan

    @property
    def open_at_end(self) -> bool:
        """A collection window was still open when decoding finished."""
        return bool(self.records) and self.records[-1].trigger and not self.records[-1].correction

    @property
    def n_triggers(self) -> int:
        """Number of opened collection windows."""
        n, open_ = 0, False
        for r in self.records:
            if r.trigger and not open_:
                n += 1
            open_ = r.trigger and not r.correction
        return n

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "realization": self.realization,
            "t_first": self.t_first,
            "records": [asdict(r) for r in self.records],
            "end": None if self.end is None else asdict(self.end),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsTrace":
        return cls(
            RunConfig.from_dict(d["config"]),
            int(d["realization"]),
            [MeasurementRecord(**r) for r in d["records"]],
            None if d["end"] is None else EndRecord(**d["end"]),
            float(d["t_first"]),
        )


# -- schedule and ideal references -------------------------------------------


@dataclass(frozen=True)
class Protocol:
    circuit: Circuit
    schedule: object
    markers: tuple  # (time, generator label, ideal V0 there)
    v_init: np.ndarray
    v_end: np.ndarray


def initial_columns() -> np.ndarray:
    """Information qubit on the centre in |0> or |1>, everything else |0>."""
    v = np.zeros((1 << N_QUBITS, 2), dtype=complex)
    v[0, 0] = 1.0
    v[1 << (CENTER - 1), 1] = 1.0
    return v


@lru_cache(maxsize=4)
def build_protocol(n_cycles: int = 3, n_rep: int = 5) -> Protocol:
    circuit = code513.encoding_circuit("star", n_rep)
    for _ in range(n_cycles):
        circuit = circuit + code513.measurement_cycle(n_rep)
    circuit = circuit + code513.decoding_circuit("star", n_rep)
    graph = star_graph(5, design_coupling(n_rep))
    sched = compile_circuit(circuit, graph)
    v = initial_columns()
    refs = []
    for layer in circuit.layers:
        if isinstance(layer[0], Measure):
            ref = v.copy()
            ref.setflags(write=False)
            refs.append(ref)
            continue
        for g in layer:
            v = ideal_unitary(g, N_QUBITS) @ v
    marks = tuple((m.time, m.label, ref) for m, ref in zip(sched.markers, refs))
    v_init = initial_columns()
    return Protocol(circuit, sched, marks, v_init, v)


def _noise_trace(cfg: RunConfig, realization: int, duration: float):
    if not cfg.noise:
        return None
    return sample_composite(cfg.component_specs(), N_QUBITS, duration + 2.0, cfg.noise_dt, realization)


def _phase_integrals(trace, times: np.ndarray) -> np.ndarray:
    """int_0^t A_q dt' of the Catmull-Rom interpolant, exact, shape (len(times), n)."""
    s = trace.samples
    n = s.shape[1]
    pad = np.concatenate([s[:, :1], s, s[:, -1:]], axis=1)
    # integral over [k, k+1] of the spline: (-p0 + 13 p1 + 13 p2 - p3)/24
    seg = (-pad[:, :-3] + 13 * pad[:, 1:-2] + 13 * pad[:, 2:-1] - pad[:, 3:]) / 24 * trace.dt
    cum = np.concatenate([np.zeros((s.shape[0], 1)), np.cumsum(seg, axis=1)], axis=1)
    out = np.empty((len(times), s.shape[0]))
    for i, t in enumerate(times):
        x = t / trace.dt
        k = int(math.floor(x + 1e-12))
        if abs(x - k) > 1e-9 or k >= n:
            raise ValueError("no-pulse phases are evaluated on noise samples only")
        out[i] = cum[:, k]
    return out


def _no_pulse_columns(trace, v0: np.ndarray, t0: float, times) -> list[np.ndarray]:
    """Free dephasing of v0 from t0 on, no pulses and couplings switched off."""
    if trace is None:
        return [v0.copy() for _ in times]
    phi = _phase_integrals(trace, np.asarray(times, dtype=float)) - _phase_integrals(trace, np.array([t0]))
    z = z_signs(N_QUBITS)
    return [np.exp(-0.5j * (z @ p))[:, None] * v0 for p in phi]


# -- single realization --------------------------------------------------------


def _context(cfg: RunConfig, proto: Protocol, trace):
    graph = star_graph(5, cfg.J)
    return HamiltonianContext(graph, trace, proto.schedule)


def _errors():
    return [e.padded(N_QUBITS).apply for e in code513.recovery_errors()]


def _events(cfg: RunConfig, proto: Protocol):
    ev = [(t, 0, "inject", (q, a)) for t, q, a in cfg.inject]
    ev += [(t, 1, "M", (label, ref)) for t, label, ref in proto.markers]
    ev.sort(key=lambda e: (e[0], e[1]))
    return ev


def _rng(cfg: RunConfig, realization: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed & (2**64 - 1), realization, 0x5EED]))


def run(cfg: RunConfig, realization: int = 0) -> MetricsTrace:
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "zeno":
        return run_zeno(cfg, realization)
    return run_qec(cfg, realization)


def run_qec(cfg: RunConfig, realization: int = 0) -> MetricsTrace:
    """QEC with triggered syndrome windows; also serves ``dd_only`` and ``free``.

    In ``dd_only`` mode only the companion columns are evolved, in ``free``
    mode only the no-pulse baseline is computed.
    """
    if cfg.mode not in ("qec", "dd_only", "free"):
        raise ValueError(f"run_qec cannot run mode {cfg.mode!r}")
    return _run(cfg, realization)


def run_zeno(cfg: RunConfig, realization: int = 0) -> MetricsTrace:
    """Postselected zero-syndrome projections without renormalization."""
    if cfg.mode != "zeno":
        raise ValueError(f"run_zeno needs mode 'zeno', got {cfg.mode!r}")
    return _run(cfg, realization)


def _run(cfg: RunConfig, realization: int) -> MetricsTrace:
    proto = build_protocol(cfg.n_cycles, cfg.n_rep)
    T = proto.schedule.total_duration
    trace = _noise_trace(cfg, realization, T)
    out = MetricsTrace(cfg, realization)
    if proto.markers:
        out.t_first = proto.markers[0][0]

    times = [t for t, _, _ in proto.markers]
    if cfg.mode == "free":
        out.end = EndRecord(T)
        if proto.markers:
            np_cols = _no_pulse_columns(trace, proto.markers[0][2], out.t_first, times + [T])
            for i, (t, label, ref) in enumerate(proto.markers):
                out.records.append(MeasurementRecord(i, t, label, F_NP=fidelity(np_cols[i], ref)))
            out.end.F_full_NP = fidelity(np_cols[-1], proto.markers[0][2])
        return out

    protected = cfg.mode in ("qec", "zeno")
    companion = cfg.mode in ("qec", "zeno", "dd_only")
    integ = Integrator(_context(cfg, proto, trace), cfg.steps_per_tau_p)
    parts = [proto.v_init] * (int(protected) + int(companion))
    V = ReducedEvolution.from_columns(np.concatenate(parts, axis=1))
    errors = _errors()
    rng = _rng(cfg, realization)
    table = code513.syndrome_table()
    gen_names = [f"G{i}" for i in range(1, 5)]

    np_cols = None
    if cfg.mode == "zeno" and proto.markers:
        np_cols = _no_pulse_columns(trace, proto.markers[0][2], out.t_first, times + [T])

    window: dict | None = None
    sp = 1.0
    idx = 0
    for t, _, kind, payload in _events(cfg, proto):
        V = integ.advance(V, t)
        P, D = _split(V, protected, companion)
        if kind == "inject":
            q, a = payload
            P = apply_instant_pauli(P, q, a)
            V = _join(V, P, D)
            continue
        label, ref = payload
        rec = MeasurementRecord(idx, t, label)
        if D is not None:
            rec.F_D = fidelity(D, ref)
            rec.Fp_D = recovery_fidelity(D, ref, errors)
        if np_cols is not None:
            rec.F_NP = fidelity(np_cols[idx], ref)
        if P is not None and cfg.mode == "zeno":
            rec.F_b = fidelity(P, ref) / sp
            rec.Fp_b = recovery_fidelity(P, ref, errors) / sp
            P, prob = project(P, Projector(CENTER, 0), "postselect")
            rec.p0 = prob / sp if sp > 0 else math.nan
            sp = P.norm()
            rec.sp = sp
            if sp <= 1e-15:
                rec.trigger = True  # degenerate branch: flagged, metrics undefined
            else:
                rec.F_a = fidelity(P, ref) / sp
                rec.Fp_a = recovery_fidelity(P, ref, errors) / sp
        elif P is not None:
            rec.F_b = fidelity(P, ref)
            rec.Fp_b = recovery_fidelity(P, ref, errors)
            rec.p0 = 1.0 - _p1(P)
            outcome, P = sample_outcome(P, CENTER, rng)
            P = reset_ancilla(P, CENTER)
            rec.outcome = outcome
            g = gen_names.index(label) if label in gen_names else idx % 4
            if window is None and outcome:
                window = {}
            if window is not None:
                rec.trigger = True
                window[g] = outcome
                if len(window) == 4:
                    err = table.lookup(tuple(window[i] for i in range(4)))
                    if err is not None:
                        for q, s in zip(range(1, 6), err.symbols):
                            if s != "I":
                                P = apply_instant_pauli(P, q, s.lower())
                        rec.correction = str(err)
                    else:
                        rec.correction = "I"
                    window = None
            rec.F_a = fidelity(P, ref)
            rec.Fp_a = recovery_fidelity(P, ref, errors)
        V = _join(V, P, D)
        out.records.append(rec)
        idx += 1

    V = integ.advance(V, T)
    P, D = _split(V, protected, companion)
    end = EndRecord(T)
    v_end = proto.v_end
    if P is not None:
        scale = sp if cfg.mode == "zeno" else 1.0
        end.sp = sp if cfg.mode == "zeno" else math.nan
        if scale > 1e-15:
            end.F_full = fidelity(P, v_end) / scale
            end.F_single = single_qubit_fidelity(P, v_end, CENTER)
    if D is not None:
        end.F_full_D = fidelity(D, v_end)
        end.F_single_D = single_qubit_fidelity(D, v_end, CENTER)
    if np_cols is not None:
        end.F_full_NP = fidelity(np_cols[-1], proto.markers[0][2])
    out.end = end
    return out


def _p1(P: ReducedEvolution) -> float:
    return probability(P, Projector(CENTER, 1)) / P.norm()


def _split(V: ReducedEvolution, protected: bool, companion: bool):
    m = V.matrix
    if protected and companion:
        return (replace(V, matrix=m[:, :2]), replace(V, matrix=m[:, 2:], last_projection=None, norm_log=0.0))
    if protected:
        return V, None
    return None, V


def _join(V: ReducedEvolution, P, D) -> ReducedEvolution:
    if P is not None and D is not None:
        return replace(P, matrix=np.concatenate([P.matrix, D.matrix], axis=1))
    return P if P is not None else D


# -- ensembles -------------------------------------------------------------------

_METRICS = ("F_b", "F_a", "Fp_b", "Fp_a", "F_D", "Fp_D", "F_NP", "sp", "p0")
_END = ("F_full", "F_single", "F_full_D", "F_single_D", "F_full_NP", "sp")


@dataclass
class EnsembleResult:
    config: RunConfig
    traces: list[MetricsTrace]
    exclusion: bool
    times: np.ndarray
    generators: list[str]
    mean: dict
    sem: dict
    count: dict
    end_mean: dict
    end_sem: dict

    def infidelity(self, key: str) -> np.ndarray:
        return 1.0 - self.mean[key]

    @property
    def qec_ratio(self) -> float:
        """(1 - F'_D)/(1 - F') at the end of decoding, single-qubit fidelities."""
        return (1.0 - self.end_mean["F_single_D"]) / (1.0 - self.end_mean["F_single"])


# Bump whenever a change alters what a realization computes.
RESULTS_VERSION = 1


def _data_digest() -> str:
    h = hashlib.sha256()
    for p in sorted((Path(__file__).parent / "data").glob("*.txt")):
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def cache_key(cfg: RunConfig, realization: int) -> str:
    blob = json.dumps([cfg.to_dict(), realization, RESULTS_VERSION, _data_digest()], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _run_cached(args) -> MetricsTrace:
    cfg, r, cache_dir = args
    if cache_dir is not None:
        path = Path(cache_dir) / f"{cache_key(cfg, r)}.json"
        if path.exists():
            return MetricsTrace.from_dict(json.loads(path.read_text()))
    tr = run(cfg, r)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(tr.to_dict()))
        tmp.replace(path)
    return tr


def run_ensemble(
    cfg: RunConfig,
    n_realizations: int,
    exclusion: bool = True,
    jobs: int = 1,
    cache_dir: str | Path | None = None,
) -> EnsembleResult:
    """Average ``n_realizations`` runs pointwise over the measurement index.

    With ``exclusion`` records inside a trigger window (trigger to correction)
    are left out of the means, and so is the end record of a realization
    whose last window never closed.  Realization r uses noise stream r.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    tasks = [(cfg, r, cache_dir) for r in range(n_realizations)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            traces = list(ex.map(_run_cached, tasks))
    else:
        traces = [_run_cached(t) for t in tasks]
    return aggregate(cfg, traces, exclusion)


def aggregate(cfg: RunConfig, traces: list[MetricsTrace], exclusion: bool = True) -> EnsembleResult:
    n_rec = len(traces[0].records)
    if any(len(t.records) != n_rec for t in traces):
        raise ValueError("traces have different numbers of records")
    mean, sem, count = {}, {}, {}
    for key in _METRICS:
        vals = np.full((len(traces), n_rec), np.nan)
        for i, tr in enumerate(traces):
            for j, r in enumerate(tr.records):
                if exclusion and r.trigger and cfg.mode == "qec":
                    continue
                vals[i, j] = getattr(r, key)
        mean[key], sem[key], count[key] = _stats(vals)
    end_mean, end_sem = {}, {}
    # an end record inside an unfinished window is excluded like any other
    drop = [exclusion and cfg.mode == "qec" and t.open_at_end for t in traces]
    for key in _END:
        vals = np.array([[math.nan if d else getattr(t.end, key)] for t, d in zip(traces, drop)])
        m, s, _ = _stats(vals)
        end_mean[key], end_sem[key] = float(m[0]), float(s[0])
    times = np.array([r.t for r in traces[0].records])
    gens = [r.generator for r in traces[0].records]
    return EnsembleResult(cfg, traces, exclusion, times, gens, mean, sem, count, end_mean, end_sem)


def _stats(vals: np.ndarray):
    ok = np.isfinite(vals)
    n = ok.sum(axis=0)
    v = np.where(ok, vals, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(n > 0, v.sum(axis=0) / np.maximum(n, 1), np.nan)
        var = np.where(n > 1, (np.where(ok, (vals - m) ** 2, 0.0)).sum(axis=0) / np.maximum(n - 1, 1), np.nan)
        s = np.sqrt(var / np.maximum(n, 1))
    return m, s, n


# -- CSV -------------------------------------------------------------------------

TRACE_COLUMNS = ("realization", "t", "kind", "generator", "F_b", "F_a", "Fp_b", "Fp_a", "outcome", "trigger",
                 "p0", "sp", "F_D", "Fp_D", "F_NP")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_trace_csv(traces, path: str | Path) -> None:
    """One row per measurement record plus one ``end`` row per realization."""
    lines = [",".join(TRACE_COLUMNS)]
    for tr in traces:
        for r in tr.records:
            row = [tr.realization, r.t, "M", r.generator, r.F_b, r.F_a, r.Fp_b, r.Fp_a, r.outcome, r.trigger,
                   r.p0, r.sp, r.F_D, r.Fp_D, r.F_NP]
            lines.append(",".join(_fmt(x) if not isinstance(x, str) else x for x in row))
        e = tr.end
        if e is not None:
            # end row: F_b/F_a hold the full-system fidelity, Fp_* the centre-qubit one
            row = [tr.realization, e.t, "end", "", e.F_full, e.F_full, e.F_single, e.F_single, "", "",
                   "", e.sp, e.F_full_D, e.F_single_D, e.F_full_NP]
            lines.append(",".join(_fmt(x) if not isinstance(x, str) else x for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_ensemble_csv(res: EnsembleResult, path: str | Path) -> None:
    """Means and standard errors per measurement index, then the end row."""
    cols = ["index", "t", "generator"]
    for k in _METRICS:
        cols += [f"{k}_mean", f"{k}_sem", f"{k}_n"]
    lines = [",".join(cols)]
    for j, t in enumerate(res.times):
        row = [str(j), _fmt(float(t)), res.generators[j]]
        for k in _METRICS:
            row += [_fmt(float(res.mean[k][j])), _fmt(float(res.sem[k][j])), str(int(res.count[k][j]))]
        lines.append(",".join(row))
    lines.append("")
    lines.append("end," + ",".join(_END))
    lines.append("mean," + ",".join(_fmt(res.end_mean[k]) for k in _END))
    lines.append("sem," + ",".join(_fmt(res.end_sem[k]) for k in _END))
    Path(path).write_text("\n".join(lines) + "\n")
