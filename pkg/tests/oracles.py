"""Dense reference matrices built with np.kron (qubit k on bit k-1)."""
from __future__ import annotations

from functools import reduce

import numpy as np

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    """Tensor product with ops[k] on qubit k; highest qubit is the leftmost factor."""
    return reduce(np.kron, [ops.get(k, PAULI["i"]) for k in range(n, 0, -1)])


def pauli(n: int, **kw) -> np.ndarray:
    """pauli(6, q3="x") style helper."""
    return embed({int(k[1:]): PAULI[v] for k, v in kw.items()}, n)


def dense_hamiltonian(graph, A=None, pulses=()) -> np.ndarray:
    n = graph.n
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for (i, j), J in graph.J.items():
        H += 0.5 * J * embed({i: PAULI["z"], j: PAULI["z"]}, n)
    if A is not None:
        for q in range(1, n + 1):
            H += 0.5 * A[q - 1] * embed({q: PAULI["z"]}, n)
    for q, axis, v in pulses:
        H += 0.5 * v * embed({q: PAULI[axis]}, n)
    return H
