"""Stationary Gaussian dephasing fields with Gaussian autocorrelation.

    <A_i(t)> = 0,   <A_i(t) A_j(t')> = sigma^2 delta_ij exp(-(t - t')^2 / tau_n^2)

Traces are synthesised by circulant embedding: the target covariance is laid
out on a periodic grid padded by at least 8 tau_n, its FFT gives the
eigenvalues of the circulant covariance, and white complex noise filtered by
their square root has exactly that covariance.  One stream per
(realization, qubit) is drawn from numpy's SeedSequence spawning.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import fft, next_fast_len

__all__ = [
    "NoiseSpec",
    "NoiseTrace",
    "T2FitError",
    "T2Estimate",
    "asymptotic_t2",
    "compose_traces",
    "estimate_t2",
    "load_trace",
    "phase_variance",
    "sample_trace",
    "save_trace",
    "zero_trace",
]


class T2FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    tau_n: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.tau_n <= 0:
            raise ValueError("tau_n must be positive")


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    """Samples A_i(k dt), k = 0..n_samples-1, one row per qubit."""

    dt: float
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2:
            raise ValueError("samples must be (n_qubits, n_samples)")
        if not np.all(np.isfinite(s)):
            raise ValueError("noise samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n_qubits(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    def values_at(self, t: float) -> np.ndarray:
        """Catmull-Rom interpolation (exact at the samples), one value per qubit."""
        return catmull_rom(self.samples, self.dt, t)

    def __eq__(self, other):
        return (
            isinstance(other, NoiseTrace)
            and self.dt == other.dt
            and np.array_equal(self.samples, other.samples)
        )


def catmull_rom(samples: np.ndarray, dt: float, t: float) -> np.ndarray:
    n = samples.shape[1]
    x = t / dt
    k = int(math.floor(x))
    k = min(max(k, 0), n - 2)
    u = x - k
    idx = np.clip([k - 1, k, k + 1, k + 2], 0, n - 1)
    p0, p1, p2, p3 = (samples[:, i] for i in idx)
    return p1 + 0.5 * u * (p2 - p0 + u * (2 * p0 - 5 * p1 + 4 * p2 - p3 + u * (3 * (p1 - p2) + p3 - p0)))


def n_samples_for(duration: float, dt: float) -> int:
    return int(math.ceil(duration / dt - 1e-9)) + 1


def _circulant_sqrt_spectrum(spec: NoiseSpec, n_samples: int, dt: float) -> tuple[int, np.ndarray]:
    pad = int(math.ceil(8.0 * spec.tau_n / dt))
    m = next_fast_len(n_samples + pad)
    lag = np.minimum(np.arange(m), m - np.arange(m)) * dt
    cov = spec.sigma**2 * np.exp(-((lag / spec.tau_n) ** 2))
    lam = fft(cov).real
    # the Gaussian kernel is positive definite; negatives are round-off
    lam = np.clip(lam, 0.0, None)
    return m, np.sqrt(lam / m)


def _stream(seed: int, realization: int, qubit: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), realization, qubit]))


def sample_trace(
    spec: NoiseSpec,
    n_qubits: int,
    duration: float,
    dt: float,
    realization: int = 0,
) -> NoiseTrace:
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    n = n_samples_for(duration, dt)
    if spec.sigma == 0:
        return NoiseTrace(dt, np.zeros((n_qubits, n)))
    m, root = _circulant_sqrt_spectrum(spec, n, dt)
    out = np.empty((n_qubits, n))
    for q in range(n_qubits):
        rng = _stream(spec.seed, realization, q)
        w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        out[q] = fft(root * w)[:n].real
    return NoiseTrace(dt, out)


def zero_trace(n_qubits: int, duration: float, dt: float) -> NoiseTrace:
    return NoiseTrace(dt, np.zeros((n_qubits, n_samples_for(duration, dt))))


def compose_traces(a: NoiseTrace, b: NoiseTrace) -> NoiseTrace:
    if a.dt != b.dt or a.samples.shape != b.samples.shape:
        raise ValueError("traces live on different grids")
    return NoiseTrace(a.dt, a.samples + b.samples)


def sample_composite(
    specs, n_qubits: int, duration: float, dt: float, realization: int = 0
) -> NoiseTrace:
    trace = zero_trace(n_qubits, duration, dt)
    for s in specs:
        trace = compose_traces(trace, sample_trace(s, n_qubits, duration, dt, realization))
    return trace


# -- dephasing of a single free qubit ---------------------------------------


def asymptotic_t2(sigma: float, tau_n: float) -> float:
    """1/T2 = (sqrt(pi)/2) sigma^2 tau_n."""
    if sigma == 0:
        return math.inf
    return 2.0 / (math.sqrt(math.pi) * sigma**2 * tau_n)


def phase_variance(sigma: float, tau_n: float, lag):
    """Closed-form Var[int_0^lag A dt] for the Gaussian correlator."""
    lag = np.asarray(lag, dtype=float)
    x = lag / tau_n
    from scipy.special import erf

    return sigma**2 * tau_n**2 * (math.sqrt(math.pi) * x * erf(x) + np.exp(-(x**2)) - 1.0)


@dataclass(frozen=True)
class T2Estimate:
    t2: float
    lags: np.ndarray
    decay: np.ndarray  # -ln |<exp(-i phi)>| from the phase cumulant
    coherence: np.ndarray  # direct ensemble estimate of |<exp(-i phi)>|


def estimate_t2(
    spec: NoiseSpec,
    n_realizations: int = 200,
    dt: float | None = None,
    window: tuple[float, float] = (3.0, 8.0),
    length: float = 512.0,
) -> T2Estimate:
    """Fit the asymptotic dephasing rate of one uncontrolled qubit.

    The free qubit picks up the phase phi(t) = int A dt.  The decay function
    -ln|<exp(-i phi)>| equals Var[phi]/2 for Gaussian noise; the variance is
    estimated from the simulated phases (averaging over realizations and
    start times of the stationary trace) and a straight line is fitted to the
    tail, lags in ``window`` (units of tau_n).  Trace length is ``length``
    tau_n, sampled at ``dt`` (default tau_n/32).  The direct, noisier
    estimate of |<exp(-i phi)>| is returned for reference.
    """
    if n_realizations < 100:
        raise ValueError("need at least 100 realizations")
    if spec.sigma == 0:
        lags = np.array([0.0])
        return T2Estimate(math.inf, lags, np.zeros(1), np.ones(1))
    T = length * spec.tau_n
    dt = spec.tau_n / 32 if dt is None else dt
    lag_steps = np.unique(
        np.round(np.linspace(window[0], window[1], 11) * spec.tau_n / dt).astype(int)
    )
    acc = np.zeros(lag_steps.size)
    coh = np.zeros(lag_steps.size, dtype=complex)
    for r in range(n_realizations):
        a = sample_trace(spec, 1, T, dt, realization=r).samples[0]
        phi = np.concatenate([[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * dt)])
        for i, L in enumerate(lag_steps):
            inc = phi[L:] - phi[:-L]
            acc[i] += np.mean(inc**2)
            coh[i] += np.mean(np.exp(-1j * inc))
    lags = lag_steps * dt
    decay = 0.5 * acc / n_realizations
    slope, _ = np.polyfit(lags, decay, 1)
    if not np.isfinite(slope) or slope <= 0:
        raise T2FitError(f"no dephasing detected: fitted slope {slope:.3g} over lags {lags[0]:g}..{lags[-1]:g}")
    return T2Estimate(1.0 / slope, lags, decay, np.abs(coh) / n_realizations)


# -- debug dump ----------------------------------------------------------------

_HEADER = struct.Struct("<qqd")


def save_trace(trace: NoiseTrace, path: Path | str) -> None:
    """Little-endian binary: int64 n_qubits, int64 n_samples, float64 dt, then float64 samples."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(trace.n_qubits, trace.n_samples, trace.dt))
        fh.write(np.ascontiguousarray(trace.samples, dtype="<f8").tobytes())


def load_trace(path: Path | str) -> NoiseTrace:
    raw = Path(path).read_bytes()
    nq, ns, dt = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nq, ns)
    return NoiseTrace(dt, data.copy())
