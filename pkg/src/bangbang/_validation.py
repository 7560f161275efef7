"""Input validation helpers shared by the solvers and estimators."""

from __future__ import annotations

import numpy as np

SIMPLEX_TOL = 1e-12


class ConstraintError(ValueError):
    """Raised when an input violates a modelling constraint (simplex, volume, sign)."""


class InfeasibleError(ConstraintError):
    """Raised when volume constraints cannot be met."""


class SolverError(RuntimeError):
    """Raised when a numerical routine fails to produce a trustworthy result."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


def check_positive(values, name):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ConstraintError(f"{name} must be finite and strictly positive, got {values!r}")
    return arr


def check_nonnegative(values, name):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConstraintError(f"{name} must be finite and nonnegative, got {values!r}")
    return arr


def check_simplex(theta, n_materials=None, tol=SIMPLEX_TOL):
    """Validate rows of ``theta`` against the probability simplex.

    Rows within ``tol`` (absolute, per component and on the row sum) are
    clipped and renormalized; anything further out raises ConstraintError.
    Accepts a single vector or a 2-D array of rows and returns the same shape.
    """
    arr = np.array(theta, dtype=float)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.ndim != 2:
        raise ConstraintError(f"theta must be 1-D or 2-D, got shape {arr.shape}")
    if n_materials is not None and rows.shape[1] != n_materials:
        raise ConstraintError(f"theta has {rows.shape[1]} components, expected {n_materials}")
    if not np.all(np.isfinite(rows)):
        raise ConstraintError("theta contains non-finite values")
    if np.any(rows < -tol) or np.any(rows > 1 + tol):
        raise ConstraintError("theta components outside [0, 1]")
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol * max(1, rows.shape[1])):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ConstraintError(f"theta row {bad} sums to {sums[bad]!r}, not 1")
    rows = np.clip(rows, 0.0, None)
    rows /= rows.sum(axis=1, keepdims=True)
    return rows[0] if single else rows
