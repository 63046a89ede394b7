"""Numerical tolerances shared across the package.

All checks that decide whether a matrix is Hermitian, unitary, physical, etc.
read their thresholds from :data:`TOL` so they can be tuned in one place.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12        # relative: ||A - A^H|| <= tol * max(1, ||A||)
    unitary: float = 1e-10          # ||U^H U - I||
    generator: float = 1e-10        # ||exp(-iH) - U|| for stored gate generators
    branch_cut: float = 1e-8        # eigenvalue distance from -1 that triggers a warning
    basis_norm: float = 1e-10       # slack on ||B|| <= 1 after normalisation
    kraus_completeness: float = 1e-9
    trace_preserving: float = 1e-9
    negative_eigenvalue: float = 1e-8
    condition_max: float = 1e12
    feasibility: float = 1e-6


TOL = Tolerances()
