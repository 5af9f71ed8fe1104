"""Compare the star-routed encoder with the conceptual ring encoder.

Prints the layer schedule of the star encoder, its duration, and the overlap
of its output with the codewords produced by the conceptual circuit (run on
five qubits with the information on qubit 5).
"""
from __future__ import annotations

import numpy as np

from softqec.code513 import encoded_columns, encoding_circuit
from softqec.gates import format_circuit, ideal_unitary
from softqec.metrics import fidelity
from softqec.protocol import initial_columns


def main():
    star = encoding_circuit("star", 5)
    t = 0.0
    for layer, text in zip(star.layers, format_circuit(star).splitlines()):
        d = max(g.duration for g in layer)
        print(f"{t:6.0f}  {text}  ({d:g})")
        t += d
    print(f"total {star.duration():g} tau_p")
    v = np.zeros((32, 2))
    v[0, 0] = v[16, 1] = 1.0
    concept = ideal_unitary(encoding_circuit("conceptual", 5), 5) @ v
    star_out = ideal_unitary(star, 6) @ initial_columns()
    print(f"fidelity(star, codewords)      = {fidelity(star_out, encoded_columns()):.15f}")
    print(f"fidelity(conceptual, codewords) = {fidelity(concept, encoded_columns(5)):.15f}")


if __name__ == "__main__":
    main()
