"""Numerical laboratory for low-regularity gravity water waves.

Modules
-------
spectral    periodic grids, Littlewood-Paley ladder, norms
paradiff    paraproducts, paradifferential quantization, local-smoothing weights
elliptic    flattened-strip solves, Dirichlet-to-Neumann map, pressure
zakharov    surface evolution, traces, vector-field identity diagnostics
hamiltonian Hamilton flow, linearized-flow diagnostics, eikonal phases
packets     wave-packet lattice, tight frame, matching, residuals
dispersive  reference dispersive solver and the measurement suite
cli         experiment runner producing deterministic artifacts
"""

__version__ = "0.1.0"
