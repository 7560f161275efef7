"""Problem model: materials, volume constraints, loads, domains and design fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from ._validation import (
    SIMPLEX_TOL,
    ConstraintError,
    check_nonnegative,
    check_positive,
    check_simplex,
)

QUANTITY_RTOL = 1e-12
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Material:
    """A pure phase, described by the extreme eigenvalues of its conductivity."""

    label: str
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda_min) and math.isfinite(self.lambda_max)):
            raise ConstraintError(f"material {self.label!r}: eigenvalues must be finite")
        if not 0 < self.lambda_min <= self.lambda_max:
            raise ConstraintError(
                f"material {self.label!r}: need 0 < lambda_min <= lambda_max, "
                f"got {self.lambda_min}, {self.lambda_max}"
            )


class ConstraintMode(str, Enum):
    EXACT = "exact"
    UPPER = "upper"


@dataclass(frozen=True)
class VolumeConstraint:
    quantities: tuple
    mode: ConstraintMode = ConstraintMode.EXACT

    def __post_init__(self):
        q = check_nonnegative(self.quantities, "quantities")
        if q.ndim != 1 or q.size == 0:
            raise ConstraintError("quantities must be a non-empty sequence")
        object.__setattr__(self, "quantities", tuple(float(v) for v in q))
        object.__setattr__(self, "mode", ConstraintMode(self.mode))

    @property
    def total(self):
        return math.fsum(self.quantities)

    def check_against(self, measure):
        """Raise unless the quantities are compatible with a domain of ``measure``."""
        if self.mode is ConstraintMode.EXACT:
            if abs(self.total - measure) > QUANTITY_RTOL * measure:
                raise ConstraintError(
                    f"exact quantities sum to {self.total!r}, domain measure is {measure!r}"
                )
        elif self.total < measure * (1 - QUANTITY_RTOL):
            raise ConstraintError(
                f"upper bounds sum to {self.total!r} < domain measure {measure!r}"
            )

    @classmethod
    def from_fractions(cls, fractions, measure, mode=ConstraintMode.EXACT):
        eta = check_nonnegative(fractions, "fractions")
        return cls(tuple(float(e) * measure for e in eta), mode)


@dataclass(frozen=True)
class LoadCase:
    """A source term with its positive weight in the objective."""

    source: Any
    weight: float = 1.0

    def __post_init__(self):
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ConstraintError(f"load weight must be positive, got {self.weight!r}")


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class Ball:
    radius: float
    dimension: int = 2

    def __post_init__(self):
        if self.dimension < 1:
            raise ConstraintError("dimension must be >= 1")
        if not self.radius > 0:
            raise ConstraintError("ball radius must be positive")

    @property
    def measure(self):
        return unit_ball_volume(self.dimension) * self.radius**self.dimension

    def shell_volume(self, a, b):
        """Volume of {a < |x| < b}; vectorized over ``a`` and ``b``."""
        d = self.dimension
        return unit_ball_volume(d) * (np.asarray(b, float) ** d - np.asarray(a, float) ** d)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle, optionally restricted to a disk ``(cx, cy, radius)``."""

    extents: tuple  # ((x0, x1), (y0, y1))
    disk: tuple | None = None

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.extents
        if not (x1 > x0 and y1 > y0):
            raise ConstraintError(f"degenerate rectangle {self.extents!r}")
        if self.disk is not None:
            cx, cy, rad = self.disk
            if not rad > 0:
                raise ConstraintError("disk radius must be positive")

    @property
    def dimension(self):
        return 2

    @property
    def measure(self):
        if self.disk is not None:
            return math.pi * self.disk[2] ** 2
        (x0, x1), (y0, y1) = self.extents
        return (x1 - x0) * (y1 - y0)


@dataclass(frozen=True)
class ProblemSpec:
    domain: Any
    materials: tuple
    constraint: VolumeConstraint
    loads: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        object.__setattr__(self, "loads", tuple(self.loads))
        if not self.materials:
            raise ConstraintError("at least one material is required")
        if len(self.constraint.quantities) != len(self.materials):
            raise ConstraintError(
                f"{len(self.constraint.quantities)} quantities for {len(self.materials)} materials"
            )
        if not self.domain.measure > 0:
            raise ConstraintError("domain measure must be positive")

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def measure(self):
        return self.domain.measure

    @property
    def n_materials(self):
        return len(self.materials)

    @property
    def lambda_min(self):
        return np.array([m.lambda_min for m in self.materials])

    @property
    def quantities(self):
        return np.array(self.constraint.quantities)


def _lambda_mins(materials):
    return check_positive([m.lambda_min for m in materials], "lambda_min")


def lambda_minus(theta, materials):
    """Harmonic (Reuss) bound: ``1/lambda_-(theta) = sum theta_i / lambda_min_i``.

    ``theta`` may be a single simplex vector or an array of rows.
    """
    lam = _lambda_mins(materials)
    th = check_simplex(theta, len(lam))
    return 1.0 / (th @ (1.0 / lam))


def lambda_plus(theta, materials):
    """Arithmetic (Voigt) bound ``sum theta_i * lambda_max_i``."""
    lam = check_positive([m.lambda_max for m in materials], "lambda_max")
    th = check_simplex(theta, len(lam))
    return th @ lam


@dataclass(frozen=True)
class Permutation:
    """Result of sorting materials by ``lambda_min``.

    ``order[j]`` is the original index of the material now at position ``j``;
    ``tie_groups`` lists runs of sorted positions with equal ``lambda_min``.
    """

    order: tuple
    tie_groups: tuple = ()

    @property
    def is_identity(self):
        return self.order == tuple(range(len(self.order)))

    def to_original(self, values):
        """Reorder a per-material array (last axis) from sorted back to original order."""
        arr = np.asarray(values)
        out = np.empty_like(arr)
        out[..., list(self.order)] = arr
        return out


def tie_groups(lambdas, rtol=TIE_RTOL):
    """Runs of consecutive (sorted) values equal within ``rtol``."""
    groups, start = [], 0
    for j in range(1, len(lambdas) + 1):
        if j == len(lambdas) or abs(lambdas[j] - lambdas[start]) > rtol * abs(lambdas[start]):
            groups.append(tuple(range(start, j)))
            start = j
    return tuple(groups)


def sort_materials(problem):
    """Stable-sort materials by non-decreasing ``lambda_min``.

    Returns the permuted problem and a Permutation record.
    """
    lam = problem.lambda_min
    order = tuple(int(i) for i in np.argsort(lam, kind="stable"))
    mats = tuple(problem.materials[i] for i in order)
    q = tuple(problem.constraint.quantities[i] for i in order)
    groups = tuple(g for g in tie_groups([m.lambda_min for m in mats]) if len(g) > 1)
    sorted_problem = replace(
        problem, materials=mats, constraint=VolumeConstraint(q, problem.constraint.mode)
    )
    return sorted_problem, Permutation(order, groups)


@dataclass(frozen=True)
class DesignField:
    """Simplex-valued volume fractions on a discretization.

    ``measures[j]`` is the measure of cell (or radial band) ``j`` and
    ``theta[j]`` its material fractions.  ``support`` carries the geometric
    description (band edges for radial designs, a grid for 2-D ones).
    """

    measures: np.ndarray
    theta: np.ndarray
    support: Any = None
    labels: tuple = field(default=())

    def __post_init__(self):
        m = check_positive(self.measures, "cell measures")
        th = check_simplex(np.atleast_2d(self.theta))
        if th.shape[0] != m.shape[0]:
            raise ConstraintError(f"{th.shape[0]} theta rows for {m.shape[0]} cells")
        m.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "measures", m)
        object.__setattr__(self, "theta", th)

    @property
    def volumes(self):
        """Per-material integral of theta."""
        return self.measures @ self.theta

    def check_volumes(self, quantities, total=None, rtol=1e-10):
        total = float(self.measures.sum()) if total is None else total
        err = np.abs(self.volumes - np.asarray(quantities, float))
        if np.any(err > rtol * total):
            raise ConstraintError(f"volume mismatch {err.tolist()} exceeds {rtol}*{total}")
        return float(err.max(initial=0.0))


__all__ = [
    "Ball",
    "ConstraintMode",
    "DesignField",
    "LoadCase",
    "Material",
    "Permutation",
    "ProblemSpec",
    "Rectangle",
    "SIMPLEX_TOL",
    "VolumeConstraint",
    "lambda_minus",
    "lambda_plus",
    "sort_materials",
    "tie_groups",
    "unit_ball_volume",
]
