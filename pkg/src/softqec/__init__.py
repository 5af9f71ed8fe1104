"""Pulse-level simulation of the [[5,1,3]] code on a six-qubit star network with always-on Ising couplings."""
