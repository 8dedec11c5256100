"""Numerical spectral analysis of spherically symmetric MHD alpha^2-dynamos.

Subpackages cover the radial alpha-profiles, finite-difference operator
assembly under realistic and idealized boundary conditions, dense
eigensolves with branch tracking, the exactly solvable constant-alpha
spectral mesh with its diabolical-point perturbation theory, and the
quasi-exactly solvable soliton-profile model.
"""

__version__ = "0.1.0"
