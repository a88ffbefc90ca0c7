"""Novikov-Veselov laboratory: spectral solver, symbol identities, lattice counts and estimate probes."""

__version__ = "0.1.0"
