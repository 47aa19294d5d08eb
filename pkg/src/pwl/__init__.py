"""Kinetic prudent walks on the square and triangular lattices.

Simulation, excursion decomposition, the effective one-dimensional walk,
the corner coupling and the Brownian limit functional, plus a seeded
experiment harness (``pwl`` on the command line).
"""

from .lattice import LatticeKind, LatticePoint, PlanePoint, StepDirection, embed
from .prudent import PrudentPath, legal_steps, simulate, step, walk_arrays
from .rng import Stream

__version__ = "0.1.0"

__all__ = [
    "LatticeKind",
    "LatticePoint",
    "PlanePoint",
    "PrudentPath",
    "StepDirection",
    "Stream",
    "embed",
    "legal_steps",
    "simulate",
    "step",
    "walk_arrays",
]
