"""Alternating max-min optimisation of the design on grids, with duality-gap bounds.

Each iteration solves the state equations for the current design, forms the
optimal fluxes and their density ``psi``, and computes the exact bathtub
maximiser of ``H(., sigma)``.  With ``L = H(theta, sigma_theta) = I(theta)``
and ``U = max_theta' H(theta', sigma_theta)`` every iteration brackets the
optimum of the discrete problem: ``L <= I* <= U``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import ConstraintError, SolverError, check_simplex
from .core import VolumeConstraint
from .grid import energy, face_fluxes, psi_field, solve_state
from .measure_alloc import WeightedCells, bathtub, objective, prepare, strip_index

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    lower: float
    upper: float
    gap: float
    change: float
    energy: float

    @property
    def relative_gap(self):
        return self.gap / abs(self.lower) if self.lower else math.inf

    def line(self):
        return (
            f"{self.iteration},{self.lower:.17g},{self.upper:.17g},{self.gap:.17g},"
            f"{self.change:.17g},{self.energy:.17g}"
        )


LOG_HEADER = "iter,L,U,gap,change,energy"


@dataclass
class SaddleDiagnostics:
    records: list = field(default_factory=list)

    def append(self, rec):
        self.records.append(rec)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    @property
    def last(self):
        return self.records[-1]

    def lines(self):
        return [LOG_HEADER] + [r.line() for r in self.records]


@dataclass(frozen=True)
class SaddleOptions:
    max_iters: int = 200
    damping: float = 0.5
    tol_gap: float = 1e-3
    tol_change: float = 1e-10
    cg_rtol: float = 1e-10
    line_search: bool = True
    round_result: bool = True
    round_tol: float = 5e-3

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ConstraintError(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_iters < 1:
            raise ConstraintError("max_iters must be >= 1")
        if self.tol_gap < 0 or self.round_tol < 0:
            raise ConstraintError("tolerances must be non-negative")


@dataclass
class GridState:
    """States, fluxes and psi for one design."""

    theta: np.ndarray
    u: list
    sigma: list
    psi: np.ndarray

    def cells(self, grid):
        return WeightedCells(grid.measures, grid.active(self.psi))


def evaluate(grid, theta, sources, weights, materials, u0=None, rtol=1e-10):
    u = []
    for k, f in enumerate(sources):
        guess = None if u0 is None else u0[k]
        u.append(solve_state(grid, theta, f, materials, u0=guess, rtol=rtol))
    sigma = [face_fluxes(grid, theta, uk, materials) for uk in u]
    psi = psi_field(grid, sigma, weights)
    if not np.all(np.isfinite(psi)):
        raise SolverError("non-finite psi")
    return GridState(theta, u, sigma, psi)


def bounds(grid, theta, state, quantities, materials):
    """``(L, U, theta_bb, thresholds)`` for a design and its own fluxes."""
    cells = state.cells(grid)
    lower = objective(cells, theta, materials)
    th, alloc = bathtub(cells, quantities)
    upper = objective(cells, alloc.theta, materials)
    return lower, upper, alloc.theta, th


def uniform_design(grid, quantities):
    q = np.asarray(quantities, float)
    return np.tile(q / q.sum(), (grid.n_active, 1))


def _quadratic_step(grid, theta, theta_bb, lower, slope, sources, weights, mats, q, opts):
    """Step along ``theta_bb - theta`` maximising a concave quadratic model of ``I``.

    The model matches ``I`` and its slope (the gap) at 0 and ``I(theta_bb)``
    at 1; the step is capped by the damping factor.  Also returns the upper
    bound obtained from the fluxes of ``theta_bb``, which comes for free.
    """
    end = evaluate(grid, theta_bb, sources, weights, mats, rtol=opts.cg_rtol)
    i_end, u_end, _, _ = bounds(grid, theta_bb, end, q, mats)
    curv = i_end - lower - slope
    if curv >= 0:
        return opts.damping, u_end
    return float(min(opts.damping, -slope / (2 * curv))), u_end


def round_design(theta, psi, measures, quantities):
    """Volume-preserving bang-bang rounding of a relaxed design.

    Cells are ordered by their expected material index ``sum_j j theta_j``
    (ties broken by decreasing ``psi``) and filled with the materials in
    order, so at most ``N - 1`` cells end up split between two materials.
    """
    theta = np.asarray(theta, float)
    n = theta.shape[1]
    score = theta @ np.arange(n)
    order = np.lexsort((-np.asarray(psi, float), score))
    m = np.asarray(measures, float)[order]
    ends = np.cumsum(np.asarray(quantities, float))
    ends[-1] = max(ends[-1], m.sum())
    starts = np.concatenate([[0.0], np.cumsum(m)[:-1]])
    stops = starts + m
    out = np.zeros_like(theta)
    lo = 0.0
    for j, hi in enumerate(ends):
        overlap = np.clip(np.minimum(stops, hi) - np.maximum(starts, lo), 0.0, None)
        out[order, j] = overlap / m
        lo = hi
    return out / out.sum(axis=1, keepdims=True)


@dataclass
class SaddleResult:
    """Outcome of :func:`alternate`.

    ``theta`` is the returned design in the caller's material order (the
    bang-bang rounding when it was accepted, else the best relaxed iterate).
    ``upper`` is the smallest upper bound seen over all evaluated designs, so
    ``(upper - lower) / lower`` certifies the returned design.
    """

    theta: np.ndarray
    reduced_theta: np.ndarray
    state: GridState
    lower: float
    upper: float
    alphas: np.ndarray
    diagnostics: SaddleDiagnostics
    converged: bool
    rounded: bool
    relaxed_theta: np.ndarray  # reduced material order
    relaxed_lower: float
    materials: tuple
    reduced_materials: tuple
    quantities: np.ndarray

    @property
    def relative_gap(self):
        return (self.upper - self.lower) / abs(self.lower) if self.lower else math.inf

    @property
    def bang_bang_fraction(self):
        return float(np.mean(self.theta.max(axis=1) > 1 - 1e-9))


def problem_on_grid(problem, grid):
    """Rescale the quantities of ``problem`` to the grid's (staircase) measure."""
    scale = grid.measure / problem.measure
    c = problem.constraint
    return replace(problem, constraint=VolumeConstraint(tuple(v * scale for v in c.quantities), c.mode))


def alternate(problem, grid, sources, theta0=None, options=None, callback=None):
    """Alternate state solves with exact bathtub updates until the gap closes.

    ``problem`` carries materials, weights (through its loads) and quantities
    measured on ``grid``; ``sources`` are full ``(ny, nx)`` fields, one per load.
    Each step moves towards the bathtub maximiser ``theta_bb``; with
    ``line_search`` the step length maximises a quadratic model of ``I``
    along that direction (capped by ``damping``), otherwise it equals
    ``damping``.
    """
    opts = options or SaddleOptions()
    weights = [ld.weight for ld in problem.loads]
    if len(sources) != len(weights):
        raise ConstraintError(f"{len(sources)} sources for {len(weights)} loads")
    problem.constraint.check_against(grid.measure)
    prep = prepare(problem, grid.measure)
    red = prep.reduced
    mats, q = red.materials, red.quantities
    theta = uniform_design(grid, q) if theta0 is None else check_simplex(theta0, len(mats))
    vol_err = np.abs(grid.measures @ theta - q)
    if np.any(vol_err > 1e-10 * grid.measure):
        raise ConstraintError(f"initial design violates the volume constraints by {vol_err.tolist()}")

    diag = SaddleDiagnostics()
    best = None
    u_min = math.inf
    u_prev = None
    converged = False
    for it in range(1, opts.max_iters + 1):
        state = evaluate(grid, theta, sources, weights, mats, u0=u_prev, rtol=opts.cg_rtol)
        u_prev = state.u
        lower, upper, theta_bb, th = bounds(grid, theta, state, q, mats)
        u_min = min(u_min, upper)
        e = energy(grid, state.u, sources, weights)
        gap = upper - lower
        step = opts.damping
        if opts.line_search and gap > opts.tol_gap * abs(lower):
            step, u_end = _quadratic_step(grid, theta, theta_bb, lower, gap, sources, weights, mats, q, opts)
            u_min = min(u_min, u_end)
        new = theta + step * (theta_bb - theta)
        change = float(np.max(np.abs(new - theta)))
        rec = IterationRecord(it, lower, upper, gap, change, e)
        diag.append(rec)
        log.debug("iter %d L=%.10g U=%.10g gap=%.3e step=%.3g", it, lower, upper, gap, step)
        if callback is not None:
            callback(rec, theta, state)
        if best is None or lower > best[0]:
            best = (lower, theta, state, th.alphas)
        if gap <= opts.tol_gap * abs(lower) or change <= opts.tol_change:
            converged = True
            break
        theta = new / new.sum(axis=1, keepdims=True)

    lower, theta_out, state_out, alphas = best
    relaxed_theta, relaxed_lower = theta_out, lower
    rounded = False
    if opts.round_result:
        cand = round_design(theta_out, grid.active(state_out.psi), grid.measures, q)
        c_state = evaluate(grid, cand, sources, weights, mats, u0=state_out.u, rtol=opts.cg_rtol)
        c_lower, c_upper, _, c_th = bounds(grid, cand, c_state, q, mats)
        u_min = min(u_min, c_upper)
        if (u_min - c_lower) <= opts.round_tol * abs(c_lower):
            lower, theta_out, state_out, alphas = c_lower, cand, c_state, c_th.alphas
            rounded = True
        log.debug("rounded design L=%.10g accepted=%s", c_lower, rounded)
    return SaddleResult(
        theta=prep.to_original(theta_out),
        reduced_theta=theta_out,
        state=state_out,
        lower=lower,
        upper=u_min,
        alphas=alphas,
        diagnostics=diag,
        converged=converged,
        rounded=rounded,
        relaxed_theta=relaxed_theta,
        relaxed_lower=relaxed_lower,
        materials=problem.materials,
        reduced_materials=mats,
        quantities=q,
    )


@dataclass
class GridCertificate:
    flux_residual: list
    strip_violation_fraction: float
    violating_cells: np.ndarray
    lower: float
    upper: float

    @property
    def relative_gap(self):
        return (self.upper - self.lower) / abs(self.lower) if self.lower else math.inf

    def as_dict(self):
        return {
            "flux_residual": list(self.flux_residual),
            "strip_violation_fraction": self.strip_violation_fraction,
            "lower": self.lower,
            "upper": self.upper,
            "relative_gap": self.relative_gap,
        }


def strip_violations(theta, psi_active, alphas, tol=1e-8):
    """Boolean mask of cells breaking the strip conditions for thresholds ``alphas``."""
    alphas = np.asarray(alphas, float)
    n = alphas.size
    upper = np.concatenate([[np.inf], alphas[:-1]])
    bad = np.zeros(theta.shape[0], bool)
    on_level = np.isin(psi_active, alphas)
    k = strip_index(psi_active, alphas)
    strip = ~on_level
    bad[strip] = theta[strip, k[strip]] < 1 - tol
    for i in range(n):
        present = theta[:, i] > tol
        bad |= present & ((psi_active < alphas[i]) | (psi_active > upper[i]))
    return bad


def certify_grid(grid, theta, sigma, sources, problem):
    """Re-solve the states for ``theta`` and compare with the supplied fluxes.

    ``theta`` is on the reduced (sorted, merged) material axis of ``problem``.
    """
    prep = prepare(problem, grid.measure)
    mats, q = prep.reduced.materials, prep.reduced.quantities
    weights = [ld.weight for ld in problem.loads]
    state = evaluate(grid, theta, sources, weights, mats)
    resid = [(s - t).l2() for s, t in zip(sigma, state.sigma)]
    psi_given = psi_field(grid, sigma, weights)
    cells = WeightedCells(grid.measures, grid.active(psi_given))
    th, _ = bathtub(cells, q)
    bad = strip_violations(theta, cells.psi, th.alphas)
    lower = objective(state.cells(grid), theta, mats)
    _, upper, _, _ = bounds(grid, theta, state, q, mats)
    return GridCertificate(resid, float(bad.mean()), bad, lower, upper)


@dataclass(frozen=True)
class InterfaceReport:
    """Recovered interface radii compared with reference radii along rays."""

    radii: np.ndarray  # reference interface radii
    max_error: np.ndarray  # worst deviation per interface over all rays
    missing: np.ndarray  # rays on which the transition was not found, per interface
    stray_cells: int  # mismatched cells farther than ``tol`` from every band edge
    h: float

    def within(self, n_h):
        return bool(np.all(self.missing == 0) and np.all(self.max_error <= n_h * self.h))


def interface_errors(grid, labels, edges, band_labels, center=(0.0, 0.0), n_rays=360, tol_h=2.0):
    """Compare a cellwise material map with concentric reference bands.

    ``labels`` holds one material index per active cell; ``edges`` are the band
    radii ``0 = r_0 < ... < r_m = R`` and ``band_labels`` the band materials.
    Along each ray the transition between the materials of bands ``k`` and
    ``k + 1`` closest to ``edges[k + 1]`` is located to a quarter cell.
    """
    edges = np.asarray(edges, float)
    band_labels = np.asarray(band_labels)
    full = np.full(grid.shape, -1, dtype=np.int64)
    full[grid.mask] = labels
    step = 0.25 * grid.h
    rs = np.arange(0.5 * step, edges[-1], step)
    interfaces = edges[1:-1]
    worst = np.zeros(interfaces.size)
    missing = np.zeros(interfaces.size, dtype=np.int64)
    for phi in np.linspace(0.0, 2 * np.pi, n_rays, endpoint=False):
        x = center[0] + rs * np.cos(phi)
        y = center[1] + rs * np.sin(phi)
        ix = np.floor((x - grid.origin[0]) / grid.h).astype(int)
        iy = np.floor((y - grid.origin[1]) / grid.h).astype(int)
        ok = (ix >= 0) & (ix < grid.nx) & (iy >= 0) & (iy < grid.ny)
        lab = np.where(ok, full[np.clip(iy, 0, grid.ny - 1), np.clip(ix, 0, grid.nx - 1)], -1)
        change = np.nonzero((lab[1:] != lab[:-1]) & (lab[1:] >= 0) & (lab[:-1] >= 0))[0]
        where = 0.5 * (rs[change] + rs[change + 1])
        for k, rk in enumerate(interfaces):
            a, b = band_labels[k], band_labels[k + 1]
            hit = where[(lab[change] == a) & (lab[change + 1] == b)]
            if hit.size == 0:
                missing[k] += 1
                continue
            worst[k] = max(worst[k], float(np.min(np.abs(hit - rk))))
    r = grid.active(grid.radius(center))
    ref = band_labels[np.clip(np.searchsorted(edges, r, side="right") - 1, 0, band_labels.size - 1)]
    dist = np.min(np.abs(r[:, None] - edges[None, 1:]), axis=1)
    stray = int(np.sum((np.asarray(labels) != ref) & (dist > tol_h * grid.h)))
    return InterfaceReport(interfaces, worst, missing, stray, grid.h)
