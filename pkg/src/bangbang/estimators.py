"""Estimator-style wrappers around the allocation and design solvers.

They follow the scikit-learn conventions (constructor stores parameters,
``fit`` learns attributes ending in ``_``, ``get_params``/``set_params`` and
``clone`` work), which makes them easy to drop into parameter sweeps::

    alloc = BathtubAllocator(fractions=[0.5, 0.5]).fit(psi, sample_weight=areas)
    alloc.thresholds_, alloc.transform(psi_new)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ConstraintError
from .core import Ball, LoadCase, Material, ProblemSpec, Rectangle, VolumeConstraint
from .grid import Grid2D
from .measure_alloc import WeightedCells, bathtub, objective, strip_index
from .piecewise import PiecewisePoly
from .radial import solve_radial
from .saddle import SaddleOptions, alternate, problem_on_grid


def _materials(spec):
    out = []
    for i, m in enumerate(spec):
        if isinstance(m, Material):
            out.append(m)
        else:
            lo, hi = (m, m) if np.isscalar(m) else tuple(m)
            out.append(Material(f"M{i + 1}", float(lo), float(hi)))
    return tuple(out)


def _constraint(quantities, fractions, measure, n):
    if (quantities is None) == (fractions is None):
        raise ConstraintError("give exactly one of 'quantities' and 'fractions'")
    if fractions is not None:
        fr = np.asarray(fractions, float)
        if fr.shape != (n,):
            raise ConstraintError(f"{fr.size} fractions for {n} materials")
        return VolumeConstraint.from_fractions(fr / fr.sum(), measure)
    q = np.asarray(quantities, float)
    if q.shape != (n,):
        raise ConstraintError(f"{q.size} quantities for {n} materials")
    return VolumeConstraint(tuple(q))


def _psi_column(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected one psi value per row, got {X.shape[1]} columns")
        X = X[:, 0]
    if np.any(X < 0):
        raise ValueError("psi values must be non-negative")
    return X


class BathtubAllocator(TransformerMixin, BaseEstimator):
    """Optimal allocation of materials to cells for a fixed density ``psi``.

    ``fit(X, sample_weight=measures)`` takes one ``psi`` value per cell.
    Materials are indexed by increasing conductivity, so material 0 goes
    where ``psi`` is largest.  ``transform`` maps new ``psi`` values to
    fractions using the fitted thresholds (levels carrying several materials
    get the fitted proportions), ``predict`` to the dominant material.
    """

    def __init__(self, quantities=None, fractions=None, lambda_min=None):
        self.quantities = quantities
        self.fractions = fractions
        self.lambda_min = lambda_min

    def fit(self, X, y=None, sample_weight=None):
        psi = _psi_column(X)
        w = np.ones_like(psi) if sample_weight is None else np.asarray(sample_weight, float)
        cells = WeightedCells(w, psi)
        if self.fractions is not None and self.quantities is None:
            fr = np.asarray(self.fractions, float)
            q = fr / fr.sum() * cells.total_measure
        elif self.quantities is not None and self.fractions is None:
            q = np.asarray(self.quantities, float)
        else:
            raise ConstraintError("give exactly one of 'quantities' and 'fractions'")
        th, alloc = bathtub(cells, q)
        self.thresholds_ = th.alphas
        self.theta_ = alloc.theta
        self.levels_ = alloc.levels
        self.quantities_ = q
        self.n_features_in_ = 1
        self._level_mix = {}
        for lvl in alloc.levels:
            mix = np.zeros(q.size)
            for k, amount in lvl.amounts.items():
                mix[k] = amount
            self._level_mix[float(lvl.alpha)] = mix / mix.sum()
        return self

    def transform(self, X):
        check_is_fitted(self, "thresholds_")
        psi = _psi_column(X)
        n = self.quantities_.size
        k = np.minimum(strip_index(psi, self.thresholds_), n - 1)
        out = np.zeros((psi.size, n))
        out[np.arange(psi.size), k] = 1.0
        for alpha, mix in self._level_mix.items():
            out[psi == alpha] = mix
        return out

    def predict(self, X):
        return np.argmax(self.transform(X), axis=1)

    def score(self, X, y=None, sample_weight=None):
        """Objective ``sum measure * psi / lambda_-`` of the allocation for ``X`` (needs ``lambda_min``)."""
        if self.lambda_min is None:
            raise ConstraintError("score needs lambda_min")
        psi = _psi_column(X)
        w = np.ones_like(psi) if sample_weight is None else np.asarray(sample_weight, float)
        return objective(WeightedCells(w, psi), self.transform(X), np.asarray(self.lambda_min, float))


class RadialDesigner(TransformerMixin, BaseEstimator):
    """Exact optimal design on a ball for radial piecewise sources.

    ``fit(X)`` takes a list of sources, each a :class:`PiecewisePoly` or a
    list of ``(r_lo, r_hi, coeffs[, min_power])`` rows.  ``transform(r)``
    returns the volume fractions at radii ``r``; ``predict(r)`` the dominant
    material (original order).
    """

    def __init__(self, materials=((1.0, 1.0),), fractions=None, quantities=None, radius=1.0, dimension=2,
                 weights=None, n_samples=100, random_state=None):
        self.materials = materials
        self.fractions = fractions
        self.quantities = quantities
        self.radius = radius
        self.dimension = dimension
        self.weights = weights
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        sources = [s if isinstance(s, PiecewisePoly) else PiecewisePoly.from_spec(s) for s in X]
        mats = _materials(self.materials)
        ball = Ball(float(self.radius), int(self.dimension))
        weights = [1.0] * len(sources) if self.weights is None else list(self.weights)
        if len(weights) != len(sources):
            raise ConstraintError(f"{len(weights)} weights for {len(sources)} sources")
        loads = tuple(LoadCase(s, float(w)) for s, w in zip(sources, weights))
        problem = ProblemSpec(ball, mats, _constraint(self.quantities, self.fractions, ball.measure, len(mats)), loads)
        rng = np.random.default_rng(self.random_state)
        sol = solve_radial(problem, rng=rng, n_samples=self.n_samples)
        self.solution_ = sol
        self.design_ = sol.design
        self.radii_ = np.array(sol.radii)
        self.thresholds_ = np.asarray(sol.alphas)
        self.objective_ = sol.objective
        self.certificate_ = sol.certificate
        return self

    def transform(self, X):
        check_is_fitted(self, "design_")
        r = np.ravel(check_array(X, ensure_2d=False, dtype=float))
        return self.design_.theta_at(r)

    def predict(self, X):
        return np.argmax(self.transform(X), axis=1)

    def state(self, r, load=0):
        check_is_fitted(self, "solution_")
        return self.solution_.states[load](np.asarray(r, float))


class GridSaddleDesigner(TransformerMixin, BaseEstimator):
    """Alternating saddle solver on a rectangle (optionally a disk inside it).

    ``fit(X)`` takes source fields of shape ``(ny, nx)`` or
    ``(n_loads, ny, nx)`` on the grid with spacing ``h``; ``transform(P)``
    returns the fractions in the cells containing the points ``P``
    (shape ``(n, 2)``, rows outside the domain get NaN).
    """

    def __init__(self, materials=((1.0, 1.0),), fractions=None, quantities=None, extents=((0.0, 1.0), (0.0, 1.0)),
                 disk=None, h=1.0 / 64, weights=None, damping=0.5, tol_gap=1e-3, max_iters=200, line_search=True,
                 round_result=True):
        self.materials = materials
        self.fractions = fractions
        self.quantities = quantities
        self.extents = extents
        self.disk = disk
        self.h = h
        self.weights = weights
        self.damping = damping
        self.tol_gap = tol_gap
        self.max_iters = max_iters
        self.line_search = line_search
        self.round_result = round_result

    def fit(self, X, y=None):
        dom = Rectangle(tuple(tuple(e) for e in self.extents), None if self.disk is None else tuple(self.disk))
        grid = Grid2D.from_domain(dom, float(self.h))
        fields = np.asarray(X, float)
        if fields.ndim == 2:
            fields = fields[None]
        if fields.shape[1:] != grid.shape:
            raise ValueError(f"source fields have shape {fields.shape[1:]}, grid is {grid.shape}")
        mats = _materials(self.materials)
        weights = [1.0] * len(fields) if self.weights is None else list(self.weights)
        loads = tuple(LoadCase(None, float(w)) for w in weights)
        problem = ProblemSpec(dom, mats, _constraint(self.quantities, self.fractions, dom.measure, len(mats)), loads)
        opts = SaddleOptions(
            max_iters=self.max_iters,
            damping=self.damping,
            tol_gap=self.tol_gap,
            line_search=self.line_search,
            round_result=self.round_result,
        )
        res = alternate(problem_on_grid(problem, grid), grid, list(fields), options=opts)
        self.grid_ = grid
        self.result_ = res
        self.theta_ = res.theta
        self.lower_, self.upper_ = res.lower, res.upper
        self.relative_gap_ = res.relative_gap
        self.thresholds_ = np.asarray(res.alphas)
        return self

    def transform(self, X):
        check_is_fitted(self, "theta_")
        P = check_array(X, dtype=float)
        g = self.grid_
        ix = np.floor((P[:, 0] - g.origin[0]) / g.h).astype(int)
        iy = np.floor((P[:, 1] - g.origin[1]) / g.h).astype(int)
        inside = (ix >= 0) & (ix < g.nx) & (iy >= 0) & (iy < g.ny)
        out = np.full((P.shape[0], self.theta_.shape[1]), np.nan)
        idx = np.full(P.shape[0], -1)
        idx[inside] = g._index[iy[inside], ix[inside]]
        ok = idx >= 0
        out[ok] = self.theta_[idx[ok]]
        return out

    def predict(self, X):
        th = self.transform(X)
        out = np.full(th.shape[0], -1)
        ok = ~np.isnan(th[:, 0])
        out[ok] = np.argmax(th[ok], axis=1)
        return out
