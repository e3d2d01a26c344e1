"""Numerical laboratory for the mass-resonant quadratic Schrodinger system.

Ground states, split-step dynamics, variational thresholds, and the
interaction-Morawetz machinery, with every explicit identity of the
underlying analysis wired to a numerical check.
"""

from .fields import FieldPair, galilean_boost, pair_from_arrays
from .grid import Field, RadialGrid, UniformGrid
from .ground_state import GroundState, oracle_coarse_solve, petviashvili_solve

__all__ = [
    "Field",
    "FieldPair",
    "GroundState",
    "RadialGrid",
    "UniformGrid",
    "galilean_boost",
    "oracle_coarse_solve",
    "pair_from_arrays",
    "petviashvili_solve",
]
