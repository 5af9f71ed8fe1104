"""Fidelity measures for reduced evolution matrices."""
from __future__ import annotations

import math

import numpy as np

__all__ = ["fidelity", "recovery_fidelity", "reduced_density", "single_qubit_fidelity", "state_fidelity_2x2"]


def _mat(V) -> np.ndarray:
    return getattr(V, "matrix", V)


def fidelity(V, V0) -> float:
    """[Tr(V0^dag V V^dag V0) + |Tr(V0^dag V)|^2] / (M (M+1))."""
    V, V0 = _mat(V), _mat(V0)
    if V.shape != V0.shape:
        raise ValueError(f"shape mismatch {V.shape} vs {V0.shape}")
    M = V.shape[1]
    o = V0.conj().T @ V
    return float((np.vdot(o, o).real + abs(np.trace(o)) ** 2) / (M * (M + 1)))


def recovery_fidelity(V, V0, errors) -> float:
    """F(V, V0) plus F(V, E V0) for every operator ``E`` (callables on columns)."""
    V, V0 = _mat(V), _mat(V0)
    return fidelity(V, V0) + sum(fidelity(V, E(V0)) for E in errors)


def reduced_density(psi: np.ndarray, keep: int, n: int) -> np.ndarray:
    """2x2 density matrix of qubit ``keep`` (1-based) from an n-qubit vector."""
    t = psi.reshape((2,) * n)
    ax = n - keep  # qubit k is bit k-1, i.e. reshape axis n-k
    t = np.moveaxis(t, ax, 0).reshape(2, -1)
    return t @ t.conj().T


def state_fidelity_2x2(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity of two normalized qubit states (closed form)."""
    # explicit determinants: LU-based det yields NaN on subnormal entries
    d_rho = (rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real
    d_sig = (sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]).real
    det = max(d_rho, 0.0) * max(d_sig, 0.0)
    return float(min(1.0, max(0.0, np.trace(rho @ sigma).real + 2.0 * math.sqrt(det))))


# the six Pauli eigenstates form a 3-design, so averaging over them equals the
# uniform average of any quantity quadratic in the input state
_DESIGN = [
    np.array([1, 0]),
    np.array([0, 1]),
    np.array([1, 1]) / math.sqrt(2),
    np.array([1, -1]) / math.sqrt(2),
    np.array([1, 1j]) / math.sqrt(2),
    np.array([1, -1j]) / math.sqrt(2),
]


def single_qubit_fidelity(V, V0, keep_qubit: int) -> float:
    """Input-averaged fidelity of the kept qubit after tracing out the rest.

    For each design input |psi> of the two-dimensional input space the reduced
    states Tr_others(V psi psi^dag V^dag) and the same for V0 are compared
    with the Uhlmann fidelity.
    """
    V, V0 = _mat(V), _mat(V0)
    if V.shape[1] != 2:
        raise ValueError("single-qubit fidelity needs M = 2 input columns")
    n = int(round(math.log2(V.shape[0])))
    acc = 0.0
    for c in _DESIGN:
        rho = reduced_density(V @ c, keep_qubit, n)
        sig = reduced_density(V0 @ c, keep_qubit, n)
        tr = np.trace(rho).real
        if tr <= 0:
            continue
        acc += state_fidelity_2x2(rho / tr, sig / np.trace(sig).real)
    return acc / len(_DESIGN)
