"""Numerical verification of the Grassmannian NLS hierarchy, its development
map, symplectic structures and the KdV recursion operators."""

from .calculus import DecayWarning, Grid
from .lie import DomainError, OrbitParams, ParameterError, make_base_point

__all__ = ["DecayWarning", "DomainError", "Grid", "OrbitParams", "ParameterError", "make_base_point"]
__version__ = "0.1.0"
