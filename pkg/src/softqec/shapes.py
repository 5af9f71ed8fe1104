"""Symmetric one-axis pulse profiles and self-refocusing calibration.

Times are in units of the nominal pulse length tau_p and amplitudes in
units of 1/tau_p.  A profile of duration ``d`` is

    V(t) = (1/d) * [c_0 + sum_k c_k (1 - cos(2 pi k t / d))],   0 <= t <= d,

so that the accumulated angle is ``phi(d) = c_0 + sum_k c_k``.  Every
harmonic term vanishes at both ends and is symmetric about ``d/2``; the
constant ``c_0`` term only exists to represent rectangular pulses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct

__all__ = [
    "CalibrationError",
    "PulseShape",
    "ShapeResiduals",
    "calibrate",
    "default_library",
    "load_library",
    "phase_profile",
    "rectangular",
    "residuals",
    "save_library",
    "shape_for_angle",
    "zero_shape",
]

LIBRARY_PATH = Path(__file__).with_name("data") / "shapes.txt"


class CalibrationError(RuntimeError):
    """Raised when the shape solver does not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PulseShape:
    name: str
    angle: float
    coeffs: tuple[float, ...]  # (c_0, c_1, ..., c_K)
    duration: float = 1.0
    order: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        total = math.fsum(self.coeffs)
        if abs(total - self.angle) > 1e-12 * max(1.0, abs(self.angle)):
            raise ValueError(
                f"coefficients integrate to {total!r}, not the nominal angle {self.angle!r}"
            )

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    @property
    def n_harmonics(self) -> int:
        return len(self.coeffs) - 1

    def amplitude(self, t):
        """V(t) on the pulse support; accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        d = self.duration
        out = np.full(t.shape, self.coeffs[0] / d)
        for k, c in enumerate(self.coeffs[1:], start=1):
            if c:
                out = out + (c / d) * (1.0 - np.cos(2.0 * np.pi * k * t / d))
        return out

    def phase(self, t):
        """Accumulated angle phi(t) from the exact antiderivative."""
        t = np.asarray(t, dtype=float)
        d = self.duration
        out = self.coeffs[0] * t / d
        for k, c in enumerate(self.coeffs[1:], start=1):
            if c:
                w = 2.0 * np.pi * k / d
                out = out + (c / d) * (t - np.sin(w * t) / w)
        return out

    def scaled(self, duration: float, name: str | None = None) -> "PulseShape":
        """Same angle squeezed or stretched to a new duration."""
        return replace(self, duration=float(duration), name=name or self.name)

    def negated(self) -> "PulseShape":
        return replace(self, angle=-self.angle, coeffs=tuple(-c for c in self.coeffs))

    def peak(self, n: int = 4001) -> float:
        t = np.linspace(0.0, self.duration, n)
        return float(np.max(np.abs(self.amplitude(t))))


def zero_shape(duration: float = 1.0) -> PulseShape:
    return PulseShape("zero", 0.0, (0.0,), duration=duration, order=0)


def rectangular(angle: float, duration: float = 1.0) -> PulseShape:
    return PulseShape(f"rect({angle:.6g})", angle, (angle,), duration=duration, order=0)


def phase_profile(shape: PulseShape, t: float) -> float:
    if not 0.0 <= t <= shape.duration:
        raise ValueError(f"t={t} outside the pulse support [0, {shape.duration}]")
    return float(shape.phase(t))


@dataclass(frozen=True)
class ShapeResiduals:
    """Time averages of cos/sin of the rotation angle plus the static
    second-order term.

    ``s2`` is the double integral (1/d^2) int_0^d dt1 int_0^t1 dt2
    sin(phi(t1) - phi(t2)), the coefficient of the sigma^x term that a static
    longitudinal field produces at second order in the toggling frame.
    """

    c1: float
    s1: float
    s2: float
    degree: int = field(default=0, compare=False)

    def max_abs(self, order: int = 2) -> float:
        vals = [self.c1, self.s1] + ([self.s2] if order >= 2 else [])
        return max(abs(v) for v in vals)


def _cheb_nodes(deg: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))


def _cheb_coeffs(vals: np.ndarray) -> np.ndarray:
    # interpolation coefficients on first-kind nodes via DCT-II
    n = vals.size
    a = dct(vals, type=2) / n
    a[0] *= 0.5
    return a


def _antiderivative(vals: np.ndarray, x: np.ndarray, deg: int) -> np.ndarray:
    # interval [0, d] mapped to [-1, 1]; result integrates in units of d
    coef = _cheb_coeffs(vals)
    return cheb.chebint(coef, lbnd=-1) * 0.5, coef


def _residuals_at_degree(shape: PulseShape, deg: int):
    x = _cheb_nodes(deg)
    t = 0.5 * (x + 1.0) * shape.duration
    p = shape.phase(t)
    cosp, sinp = np.cos(p), np.sin(p)
    C, ccoef = _antiderivative(cosp, x, deg)
    S, scoef = _antiderivative(sinp, x, deg)
    Cv, Sv = cheb.chebval(x, C), cheb.chebval(x, S)
    S2, _ = _antiderivative(sinp * Cv - cosp * Sv, x, deg)
    tail = max(np.max(np.abs(ccoef[-4:])), np.max(np.abs(scoef[-4:])))
    return (float(cheb.chebval(1.0, C)), float(cheb.chebval(1.0, S)), float(cheb.chebval(1.0, S2))), tail


def residuals(shape: PulseShape, tol: float = 1e-14) -> ShapeResiduals:
    """Chebyshev quadrature, doubling the degree until the series tail is
    below ``tol``."""
    deg = 64
    while True:
        (c1, s1, s2), tail = _residuals_at_degree(shape, deg)
        if tail < tol or deg >= 1024:
            return ShapeResiduals(c1, s1, s2, degree=deg)
        deg *= 2


def _conditions(shape: PulseShape, order: int) -> np.ndarray:
    r = residuals(shape)
    eqs = [r.c1, r.s1]
    if order >= 2:
        eqs.append(r.s2)
    return np.array(eqs)


def _from_free(angle: float, free: np.ndarray, duration: float, order: int, name: str) -> PulseShape:
    # c_1 absorbs the angle normalization, which is linear in the coefficients
    c1 = angle - math.fsum(free)
    return PulseShape(name, angle, (0.0, c1, *map(float, free)), duration=duration, order=order)


def _damped_newton(fun, x0: np.ndarray, max_iter: int = 60, tol: float = 1e-13):
    """Gauss-Newton with step halving on the residual norm."""
    x = np.array(x0, dtype=float)
    r = fun(x)
    norm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if norm < tol:
            break
        eps = 1e-7 * np.maximum(1.0, np.abs(x))
        jac = np.empty((r.size, x.size))
        for j in range(x.size):
            xp = x.copy()
            xp[j] += eps[j]
            xm = x.copy()
            xm[j] -= eps[j]
            jac[:, j] = (fun(xp) - fun(xm)) / (2 * eps[j])
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        while lam > 1e-4:
            xn = x + lam * step
            rn = fun(xn)
            nn = float(np.linalg.norm(rn))
            if nn < norm:
                x, r, norm = xn, rn, nn
                break
            lam *= 0.5
        else:
            break
    return x, norm


def calibrate(
    nominal_angle: float,
    order: int,
    n_harmonics: int | None = None,
    duration: float = 1.0,
    n_starts: int = 48,
    seed: int = 2015,
    tol: float = 1e-10,
    name: str | None = None,
) -> PulseShape:
    """Find harmonic coefficients meeting the self-refocusing conditions.

    Runs damped Newton from ``n_starts`` deterministic random starts and keeps
    the converged root with the smallest peak amplitude.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if n_harmonics is None:
        n_harmonics = order + 1
    if n_harmonics < order + 1:
        raise ValueError("need at least order + 1 harmonics")
    if nominal_angle == 0.0:
        raise ValueError("use zero_shape() for idle slots")
    name = name or f"Q{order}({nominal_angle:.6g})"
    n_free = n_harmonics - 1
    rng = np.random.default_rng(seed)

    def fun(free):
        return _conditions(_from_free(nominal_angle, free, 1.0, order, name), order)

    best = None
    best_res = math.inf
    for i in range(n_starts):
        scale = (2.0, 5.0, 10.0, 30.0)[i % 4]
        x0 = rng.normal(scale=scale, size=n_free)
        x, res = _damped_newton(fun, x0)
        best_res = min(best_res, res)
        if res > tol:
            continue
        shape = _from_free(nominal_angle, x, 1.0, order, name)
        if best is None or shape.peak() < best.peak():
            best = shape
    if best is None:
        raise CalibrationError(f"no root found for angle={nominal_angle}, order={order}", best_res)
    return best.scaled(duration)


# -- shape library ---------------------------------------------------------


def save_library(shapes: dict[str, PulseShape], path: Path | str = LIBRARY_PATH) -> None:
    lines = ["# name angle order duration coefficients..."]
    for key, s in shapes.items():
        coeffs = " ".join(repr(float(c)) for c in s.coeffs)
        lines.append(f"{key} {s.angle!r} {s.order} {s.duration!r} {coeffs}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_library(path: Path | str = LIBRARY_PATH) -> dict[str, PulseShape]:
    shapes = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, angle, order, duration, *coeffs = line.split()
        shapes[name] = PulseShape(
            name, float(angle), tuple(float(c) for c in coeffs), duration=float(duration), order=int(order)
        )
    return shapes


@lru_cache(maxsize=1)
def default_library() -> dict[str, PulseShape]:
    return load_library()


@lru_cache(maxsize=64)
def _calibrated(angle: float, order: int) -> PulseShape:
    return calibrate(angle, order)


def shape_for_angle(angle: float, duration: float = 1.0, order: int = 2) -> PulseShape:
    """Second-order self-refocusing shape for a positive rotation angle.

    pi and pi/2 come from the shipped library; other angles are calibrated on
    first use and cached.
    """
    if angle <= 0:
        raise ValueError("angle must be positive; use the placement sign for negative rotations")
    lib = default_library()
    for s in lib.values():
        if s.order == order and abs(s.angle - angle) < 1e-12:
            return s.scaled(duration)
    return _calibrated(float(angle), order).scaled(duration)
