"""Fixed-step RK4 propagation of the reduced evolution matrix.

The state is an N x M slice V of the full propagator (N = 2^n, M input
states).  Pulse phases phi(t) are tabulated once per schedule at half-step
resolution, so every RK4 stage reads exact shape values; the noise field is
interpolated from its coarse trace inside the kernel.  Projections, resets
and instantaneous Paulis act between kernel calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from numba import njit

from .metrics import single_qubit_fidelity
from .network import HamiltonianContext, QubitGraph, ScheduleViolation, apply_pauli, z_signs
from .sequences import PulseSchedule

__all__ = [
    "DegenerateBranchError",
    "GridError",
    "Integrator",
    "Projector",
    "ReducedEvolution",
    "apply_instant_pauli",
    "integrate",
    "probability",
    "project",
    "reset_ancilla",
    "sample_outcome",
    "single_qubit_fidelity",
]

DEFAULT_STEPS = 1024
MIN_STEPS = 256


class GridError(ValueError):
    """Time or step count not compatible with the integration grid."""


class DegenerateBranchError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReducedEvolution:
    matrix: np.ndarray
    t: float = 0.0
    norm_log: float = 0.0
    last_projection: "Projector | None" = field(default=None, compare=False)

    @classmethod
    def from_columns(cls, cols: np.ndarray, t: float = 0.0) -> "ReducedEvolution":
        cols = np.array(cols, dtype=complex)
        if cols.ndim == 1:
            cols = cols[:, None]
        return cls(cols, float(t))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def norm(self) -> float:
        """(1/M) Tr(V^dag V)."""
        return float(np.vdot(self.matrix, self.matrix).real / self.n_cols)

    def unitarity_error(self) -> float:
        g = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(g - np.eye(self.n_cols))))


@dataclass(frozen=True)
class Projector:
    qubit: int
    outcome: int

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")

    def mask(self, dim: int) -> np.ndarray:
        bit = (np.arange(dim) >> (self.qubit - 1)) & 1
        return (bit == self.outcome).astype(float)


# -- kernel ------------------------------------------------------------------


@njit(cache=True, inline="always")
def _catmull_rom(noise, ndt, t, q):
    n = noise.shape[1]
    x = t / ndt
    k = int(math.floor(x))
    if k < 0:
        k = 0
    if k > n - 2:
        k = n - 2
    u = x - k
    i0 = k - 1 if k > 0 else 0
    i3 = k + 2 if k + 2 < n else n - 1
    p0 = noise[q, i0]
    p1 = noise[q, k]
    p2 = noise[q, k + 1]
    p3 = noise[q, i3]
    return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)))


@njit(cache=True, fastmath=True)
def _fill_diag(d, ising, zs, noise, ndt, has_noise, t):
    N, n = zs.shape
    for r in range(N):
        d[r] = ising[r]
    if has_noise:
        for q in range(n):
            a = 0.5 * _catmull_rom(noise, ndt, t, q)
            for r in range(N):
                d[r] += a * zs[r, q]


@njit(cache=True, fastmath=True)
def _rotate(w, q, ax, c, s):
    # w <- exp(-i theta sigma^ax / 2) w with c = cos(theta/2), s = sin(theta/2)
    M, N = w.shape
    m = 1 << q
    if ax == 2:
        e0 = c - 1j * s
        e1 = c + 1j * s
        for col in range(M):
            for base in range(0, N, 2 * m):
                for r in range(base, base + m):
                    w[col, r] *= e0
                    w[col, r + m] *= e1
        return
    if ax == 0:
        ms = -1j * s
        for col in range(M):
            for base in range(0, N, 2 * m):
                for r in range(base, base + m):
                    x0 = w[col, r]
                    x1 = w[col, r + m]
                    w[col, r] = c * x0 + ms * x1
                    w[col, r + m] = c * x1 + ms * x0
    else:
        for col in range(M):
            for base in range(0, N, 2 * m):
                for r in range(base, base + m):
                    x0 = w[col, r]
                    x1 = w[col, r + m]
                    w[col, r] = c * x0 - s * x1
                    w[col, r + m] = c * x1 + s * x0


@njit(cache=True, fastmath=True)
def _hv(v, out, d, lo, hi, c_q, c_ax, cs, sn):
    # out = -i U^dag D U v, U the product of the active x/y rotations
    M, N = v.shape
    for col in range(M):
        for r in range(N):
            out[col, r] = v[col, r]
    for i in range(lo, hi):
        if c_ax[i] != 2:
            _rotate(out, c_q[i], c_ax[i], cs[i - lo], sn[i - lo])
    for col in range(M):
        for r in range(N):
            out[col, r] *= -1j * d[r]
    for i in range(lo, hi):
        if c_ax[i] != 2:
            _rotate(out, c_q[i], c_ax[i], cs[i - lo], -sn[i - lo])


@njit(cache=True)
def _frame(cs, sn, lo, hi, c_sign, c_start, tabs, c_tab, ref, j):
    for i in range(lo, hi):
        th = c_sign[i] * tabs[c_tab[i], j - c_start[i]] - ref[i - lo]
        cs[i - lo] = math.cos(0.5 * th)
        sn[i - lo] = math.sin(0.5 * th)


@njit(cache=True, fastmath=True)
def _rk4(V, k0, k1, S, ising, zs, noise, ndt, has_noise,
         slot_ptr, c_q, c_ax, c_tab, c_sign, c_start, tabs):
    # V is stored transposed, V[column, row].  Inside each slot segment the
    # state is carried in the interaction frame of the control rotations,
    # which are exact; RK4 only sees the Ising and noise terms.
    M, N = V.shape
    h = 1.0 / S
    k1v = np.empty_like(V)
    k2v = np.empty_like(V)
    k3v = np.empty_like(V)
    k4v = np.empty_like(V)
    tmp = np.empty_like(V)
    d0 = np.empty(N)
    dm = np.empty(N)
    d1 = np.empty(N)
    ref = np.zeros(8)
    c0 = np.ones(8)
    s0 = np.zeros(8)
    cm = np.ones(8)
    sm = np.zeros(8)
    c1 = np.ones(8)
    s1 = np.zeros(8)
    _fill_diag(d0, ising, zs, noise, ndt, has_noise, k0 * h)
    ka = k0
    while ka < k1:
        s = ka // S
        kb = min(k1, (s + 1) * S)
        lo = slot_ptr[s]
        hi = slot_ptr[s + 1]
        for i in range(lo, hi):
            ref[i - lo] = c_sign[i] * tabs[c_tab[i], 2 * ka - c_start[i]]
        _frame(c0, s0, lo, hi, c_sign, c_start, tabs, c_tab, ref, 2 * ka)
        for k in range(ka, kb):
            t = k * h
            _fill_diag(dm, ising, zs, noise, ndt, has_noise, t + 0.5 * h)
            _fill_diag(d1, ising, zs, noise, ndt, has_noise, t + h)
            _frame(cm, sm, lo, hi, c_sign, c_start, tabs, c_tab, ref, 2 * k + 1)
            _frame(c1, s1, lo, hi, c_sign, c_start, tabs, c_tab, ref, 2 * k + 2)
            _hv(V, k1v, d0, lo, hi, c_q, c_ax, c0, s0)
            for c in range(M):
                for r in range(N):
                    tmp[c, r] = V[c, r] + 0.5 * h * k1v[c, r]
            _hv(tmp, k2v, dm, lo, hi, c_q, c_ax, cm, sm)
            for c in range(M):
                for r in range(N):
                    tmp[c, r] = V[c, r] + 0.5 * h * k2v[c, r]
            _hv(tmp, k3v, dm, lo, hi, c_q, c_ax, cm, sm)
            for c in range(M):
                for r in range(N):
                    tmp[c, r] = V[c, r] + h * k3v[c, r]
            _hv(tmp, k4v, d1, lo, hi, c_q, c_ax, c1, s1)
            for c in range(M):
                for r in range(N):
                    V[c, r] += (h / 6.0) * (k1v[c, r] + 2.0 * k2v[c, r] + 2.0 * k3v[c, r] + k4v[c, r])
            for r in range(N):
                d0[r] = d1[r]
            for i in range(hi - lo):
                c0[i] = c1[i]
                s0[i] = s1[i]
        # back to the lab frame
        for i in range(lo, hi):
            _rotate(V, c_q[i], c_ax[i], c1[i - lo], s1[i - lo])
        ka = kb


# -- control tables ----------------------------------------------------------

_AXIS = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class _Tables:
    slot_ptr: np.ndarray
    c_q: np.ndarray
    c_ax: np.ndarray
    c_tab: np.ndarray
    c_sign: np.ndarray
    c_start: np.ndarray
    tabs: np.ndarray


def _build_tables(schedule: PulseSchedule | None, graph: QubitGraph, S: int, n_slots: int) -> _Tables:
    active = [] if schedule is None else [p for p in schedule.placements if not p.is_zero]
    shape_ids: dict = {}
    rows = []
    for p in active:
        if p.shape not in shape_ids:
            shape_ids[p.shape] = len(rows)
            half = np.arange(2 * S * int(round(p.duration)) + 1) / (2.0 * S)
            rows.append(p.shape.phase(half))
    width = max((r.size for r in rows), default=1)
    tabs = np.zeros((max(len(rows), 1), width))
    for i, r in enumerate(rows):
        tabs[i, : r.size] = r
    per_slot: list[list] = [[] for _ in range(n_slots)]
    for p in active:
        s0 = int(round(p.start))
        for s in range(s0, s0 + int(round(p.duration))):
            if s < n_slots:
                per_slot[s].append(p)
    for s, ps in enumerate(per_slot):
        if len(ps) > 8:
            raise ScheduleViolation("more than eight simultaneous pulses")
        for i, p in enumerate(ps):
            for r in ps[i + 1:]:
                if graph.adjacent(p.qubit, r.qubit):
                    raise ScheduleViolation(f"qubits {p.qubit} and {r.qubit} are neighbours and both driven at t={s}")
    slot_ptr = np.zeros(n_slots + 1, dtype=np.int64)
    flat = []
    for s, ps in enumerate(per_slot):
        flat.extend(ps)
        slot_ptr[s + 1] = len(flat)
    return _Tables(
        slot_ptr,
        np.array([p.qubit - 1 for p in flat], dtype=np.int64),
        np.array([_AXIS[p.axis] for p in flat], dtype=np.int64),
        np.array([shape_ids[p.shape] for p in flat], dtype=np.int64),
        np.array([float(p.sign) for p in flat]),
        np.array([2 * S * int(round(p.start)) for p in flat], dtype=np.int64),
        tabs,
    )


class Integrator:
    """Holds the per-schedule tables; ``advance`` moves V along the grid."""

    def __init__(self, ctx: HamiltonianContext, steps_per_tau_p: int = DEFAULT_STEPS):
        S = int(steps_per_tau_p)
        if S < MIN_STEPS or S & (S - 1):
            raise GridError(f"steps_per_tau_p must be a power of two >= {MIN_STEPS}, got {steps_per_tau_p}")
        self.ctx = ctx
        self.S = S
        g = ctx.graph
        horizon = ctx.schedule.total_duration if ctx.schedule is not None else None
        if horizon is None and ctx.noise is not None:
            horizon = math.floor(ctx.noise.duration)
        self.horizon = horizon
        n_slots = int(round(horizon)) if horizon is not None else 0
        self.tables = _build_tables(ctx.schedule, g, S, n_slots)
        self.ising = g.ising_diagonal()
        self.zs = np.ascontiguousarray(z_signs(g.n))
        if ctx.noise is not None:
            self.noise = np.ascontiguousarray(ctx.noise.samples)
            self.ndt = float(ctx.noise.dt)
        else:
            self.noise = np.zeros((g.n, 2))
            self.ndt = 1.0
        self.has_noise = ctx.noise is not None

    def step_index(self, t: float) -> int:
        k = t * self.S
        kr = int(round(k))
        if abs(k - kr) > 1e-6:
            raise GridError(f"time {t} is not on the integration grid (h = 1/{self.S})")
        return kr

    def advance(self, V: ReducedEvolution, t_end: float) -> ReducedEvolution:
        k0, k1 = self.step_index(V.t), self.step_index(t_end)
        if k1 < k0:
            raise GridError("cannot integrate backwards")
        if k1 == k0:
            return V
        if self.horizon is None:
            if np.any(self.ising) or self.has_noise:
                raise GridError("no schedule or noise horizon to integrate over")
            return replace(V, t=float(t_end))
        if k1 > self.S * int(round(self.horizon)):
            raise GridError(f"t_end={t_end} beyond the schedule horizon {self.horizon}")
        if V.dim != self.ctx.graph.dim:
            raise ValueError("state dimension does not match the graph")
        m = np.ascontiguousarray(V.matrix.T, dtype=complex)
        if m is V.matrix or np.shares_memory(m, V.matrix):
            m = m.copy()
        tb = self.tables
        _rk4(m, k0, k1, self.S, self.ising, self.zs, self.noise, self.ndt, self.has_noise,
             tb.slot_ptr, tb.c_q, tb.c_ax, tb.c_tab, tb.c_sign, tb.c_start, tb.tabs)
        return replace(V, matrix=np.ascontiguousarray(m.T), t=k1 / self.S, last_projection=None)


@lru_cache(maxsize=8)
def _cached_integrator(ctx: HamiltonianContext, S: int) -> Integrator:
    return Integrator(ctx, S)


def integrate(
    V: ReducedEvolution,
    ctx: HamiltonianContext,
    t_end: float,
    steps_per_tau_p: int = DEFAULT_STEPS,
) -> ReducedEvolution:
    try:
        integ = _cached_integrator(ctx, int(steps_per_tau_p))
    except TypeError:  # unhashable context
        integ = Integrator(ctx, steps_per_tau_p)
    return integ.advance(V, t_end)


# -- measurement -------------------------------------------------------------


def probability(V: ReducedEvolution, p: Projector) -> float:
    """(1/M) Tr(V^dag P V)."""
    w = p.mask(V.dim)
    return float(np.sum(w[:, None] * np.abs(V.matrix) ** 2) / V.n_cols)


def project(V: ReducedEvolution, p: Projector, mode: str = "renormalize") -> tuple[ReducedEvolution, float]:
    if mode not in ("postselect", "renormalize"):
        raise ValueError(f"unknown projection mode {mode!r}")
    prob = probability(V, p)
    m = p.mask(V.dim)[:, None] * V.matrix
    if mode == "postselect":
        return replace(V, matrix=m, last_projection=p), prob
    if prob <= 1e-15:
        raise DegenerateBranchError(f"branch {p} has probability {prob:.3e}")
    total = V.norm()
    m = m * math.sqrt(total / prob)
    return replace(V, matrix=m, norm_log=V.norm_log + math.log(prob / total), last_projection=p), prob


def sample_outcome(V: ReducedEvolution, qubit: int, rng: np.random.Generator) -> tuple[int, ReducedEvolution]:
    p1 = probability(V, Projector(qubit, 1)) / V.norm()
    outcome = int(rng.random() < p1)
    out, _ = project(V, Projector(qubit, outcome), "renormalize")
    return outcome, out


def reset_ancilla(V: ReducedEvolution, qubit: int) -> ReducedEvolution:
    last = V.last_projection
    if last is None or last.qubit != qubit:
        raise RuntimeError(f"reset of qubit {qubit} without a preceding projection on it")
    if last.outcome == 0:
        return V
    return replace(V, matrix=apply_pauli(V.matrix, qubit, "x"), last_projection=Projector(qubit, 0))


def apply_instant_pauli(V: ReducedEvolution, qubit: int, axis: str) -> ReducedEvolution:
    return replace(V, matrix=apply_pauli(V.matrix, qubit, axis))
