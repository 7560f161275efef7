"""Bang-bang optimal arrangements of several conducting materials.

The package computes energy-maximising material layouts by the dual flux
formulation: for fixed fluxes the best design is a bathtub allocation over
levels of ``psi``, and on balls with radial sources this gives the exact
optimum.  On 2-D grids the same allocation drives an alternating saddle
solver with certified bounds.
"""

from ._validation import ConstraintError, InfeasibleError, SolverError
from .core import (
    Ball,
    ConstraintMode,
    DesignField,
    LoadCase,
    Material,
    ProblemSpec,
    Rectangle,
    VolumeConstraint,
    lambda_minus,
    lambda_plus,
)
from .measure_alloc import WeightedCells, allocate, bathtub, distribution, thresholds
from .piecewise import PiecewisePoly
from .radial import solve_radial
from .saddle import SaddleOptions, alternate

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ConstraintError",
    "ConstraintMode",
    "DesignField",
    "InfeasibleError",
    "LoadCase",
    "Material",
    "PiecewisePoly",
    "ProblemSpec",
    "Rectangle",
    "SaddleOptions",
    "SolverError",
    "VolumeConstraint",
    "WeightedCells",
    "allocate",
    "alternate",
    "bathtub",
    "distribution",
    "lambda_minus",
    "lambda_plus",
    "solve_radial",
    "thresholds",
    "__version__",
]
