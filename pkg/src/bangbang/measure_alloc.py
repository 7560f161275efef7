"""Distribution functions, allocation thresholds and bathtub allocation on weighted cells.

Materials are assumed ordered by increasing ``lambda_min``; the best material
(the one with the smallest eigenvalue, hence the largest ``1/lambda``) goes where
the density ``psi`` is largest.  Level sets of ``psi`` with positive measure
("fat" levels) admit many optimal allocations; the allocator picks one
deterministically and records the admissible family in a ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import ConstraintError, InfeasibleError, check_positive
from .core import (
    TIE_RTOL,
    ConstraintMode,
    Permutation,
    ProblemSpec,
    VolumeConstraint,
    sort_materials,
    tie_groups,
)

VOLUME_RTOL = 1e-12


@dataclass(frozen=True)
class WeightedCells:
    measures: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        m = np.array(self.measures, dtype=float).ravel()
        p = np.array(self.psi, dtype=float).ravel()
        if m.size == 0:
            raise ConstraintError("empty cell list")
        if m.shape != p.shape:
            raise ConstraintError(f"{m.size} measures for {p.size} psi values")
        check_positive(m, "cell measures")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ConstraintError("psi must be finite and nonnegative")
        m.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "measures", m)
        object.__setattr__(self, "psi", p)

    @property
    def total_measure(self):
        return math.fsum(self.measures)

    def __len__(self):
        return self.measures.size


class DistributionFunction:
    """Exact step function ``alpha -> measure{psi > alpha}`` of a set of cells.

    >>> d = distribution(WeightedCells([1, 1, 1], [3, 1, 2]))
    >>> d(0), d(1), d(2), d(3), d.left_limit(1)
    (3.0, 2.0, 1.0, 0.0, 3.0)
    """

    def __init__(self, values, masses, total_measure):
        self.values = np.asarray(values, float)  # distinct psi values, ascending
        self.masses = np.asarray(masses, float)  # measure of each level set
        self.total_measure = float(total_measure)
        # _ge[j] = measure{psi >= values[j]}; trailing 0 for convenience
        tail = np.cumsum(self.masses[::-1])[::-1]
        self._ge = np.append(tail, 0.0)

    def __call__(self, alpha):
        """Measure of ``{psi > alpha}``; vectorized."""
        idx = np.searchsorted(self.values, alpha, side="right")
        out = self._ge[idx]
        return float(out) if np.ndim(out) == 0 else out

    def left_limit(self, alpha):
        """Measure of ``{psi >= alpha}``."""
        idx = np.searchsorted(self.values, alpha, side="left")
        out = self._ge[idx]
        return float(out) if np.ndim(out) == 0 else out

    @property
    def max_value(self):
        return float(self.values[-1])

    def jumps(self):
        """Fat levels as ``(value, measure)`` pairs; every cell value is one here."""
        return list(zip(self.values.tolist(), self.masses.tolist()))


def distribution(cells):
    """Distribution function of the cell values of ``psi``.

    Cells with bit-identical psi are grouped into one level.
    """
    if not isinstance(cells, WeightedCells):
        cells = WeightedCells(*cells)
    values, inverse = np.unique(cells.psi, return_inverse=True)
    masses = np.bincount(inverse, weights=cells.measures, minlength=values.size)
    return DistributionFunction(values, masses, cells.total_measure)


@dataclass(frozen=True)
class Thresholds:
    alphas: np.ndarray
    attained: tuple
    cumulative: np.ndarray

    def __len__(self):
        return len(self.alphas)


def _cumulative(q):
    q = np.asarray(q, float)
    return np.array([math.fsum(q[: k + 1]) for k in range(q.size)])


def thresholds(dist, q, tol=VOLUME_RTOL):
    """Allocation thresholds ``alpha_k = min{alpha >= 0 : lambda(alpha) <= q_1 + ... + q_k}``.

    ``q`` is an exact-mode quantity vector (or a VolumeConstraint in exact mode)
    whose sum equals ``dist.total_measure``.  The minimum is searched over the
    step function's breakpoints, so the result is exact.
    """
    if isinstance(q, VolumeConstraint):
        if q.mode is not ConstraintMode.EXACT:
            raise ConstraintError("thresholds need exact quantities; reduce upper bounds first")
        q = q.quantities
    q = np.asarray(q, float)
    total = dist.total_measure
    cum = _cumulative(q)
    if abs(cum[-1] - total) > tol * total:
        raise ConstraintError(f"quantities sum to {cum[-1]!r} but total measure is {total!r}")
    slack = tol * total
    # lambda evaluated at each breakpoint value; non-increasing in the index
    lam_at = dist._ge[1:]
    alphas = np.empty(q.size)
    for k, target in enumerate(cum):
        if k == q.size - 1 or dist(0.0) <= target + slack:
            alphas[k] = 0.0
            continue
        # first breakpoint whose lambda drops to the target
        j = int(np.searchsorted(-lam_at, -(target + slack), side="left"))
        alphas[k] = dist.values[j]
    attained = tuple(bool(abs(dist(a) - c) <= slack) for a, c in zip(alphas, cum))
    return Thresholds(alphas, attained, cum)


@dataclass(frozen=True)
class FatLevel:
    """Ledger entry for a positive-measure level set ``{psi = alpha}``.

    ``admissible`` is the inclusive material index range allowed on the level
    and ``amounts`` the measure of each admissible material placed there.
    Any rearrangement on the level that keeps these amounts is equally optimal.
    """

    alpha: float
    admissible: tuple
    measure: float
    amounts: dict
    cells: tuple = ()

    def describe(self):
        lo, hi = self.admissible
        parts = ", ".join(f"M{i + 1}: {a:.6g}" for i, a in sorted(self.amounts.items()))
        return f"psi = {self.alpha:.6g} (measure {self.measure:.6g}): materials {lo + 1}..{hi + 1} [{parts}]"


@dataclass(frozen=True)
class Allocation:
    theta: np.ndarray
    alphas: np.ndarray
    levels: tuple = field(default=())

    @property
    def material(self):
        """Dominant material per cell."""
        return np.argmax(self.theta, axis=1)


def level_amounts(alphas, q, strip_amounts, level_measures, tol):
    """Split each fat level among its admissible materials.

    ``strip_amounts[i]`` is what material ``i`` already received on the open
    strip ``alpha_i < psi < alpha_{i-1}``; ``level_measures`` maps an alpha value
    to the measure of ``{psi = alpha}``.  Returns ``{alpha: (admissible, amounts)}``.
    Levels are processed top-down so that a material straddling two levels
    first completes the upper one.
    """
    alphas = np.asarray(alphas, float)
    n = alphas.size
    placed = np.asarray(strip_amounts, float).copy()
    q = np.asarray(q, float)
    out = {}
    for a in sorted(set(alphas.tolist()), reverse=True):
        idx = np.flatnonzero(alphas == a)
        lo, hi = int(idx[0]), int(idx[-1]) + 1
        capped = hi >= n
        hi = min(hi, n - 1)
        measure = level_measures.get(a, 0.0)
        amounts = {}
        full = range(lo, hi + 1) if capped else range(lo, hi)
        for i in full:
            amounts[i] = q[i] - placed[i]
        if not capped:
            amounts[hi] = measure - math.fsum(amounts.values())
        bad = {i: v for i, v in amounts.items() if v < -tol}
        if bad:
            raise InfeasibleError(
                f"negative residual on level psi={a!r}: {bad} (level measure {measure!r})"
            )
        amounts = {i: max(v, 0.0) for i, v in amounts.items()}
        used = math.fsum(amounts.values())
        if abs(used - measure) > tol:
            raise InfeasibleError(
                f"level psi={a!r} has measure {measure!r} but residuals total {used!r}"
            )
        for i, v in amounts.items():
            placed[i] += v
            if placed[i] > q[i] + tol:
                raise InfeasibleError(
                    f"material {i + 1} over-allocated on level psi={a!r}: {placed[i]!r} > {q[i]!r}"
                )
        if measure > 0:
            out[a] = ((lo, hi), amounts)
    return out


def strip_index(psi, alphas):
    """Index ``k`` with ``alpha_k < psi < alpha_{k-1}`` (alpha_{-1} = +inf), vectorized."""
    a = np.asarray(alphas, float)
    return np.sum(a[None, :] > np.asarray(psi, float)[:, None], axis=1)


def allocate(cells, q, alphas):
    """Optimal allocation for materials sorted by increasing ``lambda_min``.

    Open strips get a single material; every fat level is filled with its
    admissible materials in ascending cell-index order, splitting at most one
    cell per material boundary.
    """
    if not isinstance(cells, WeightedCells):
        cells = WeightedCells(*cells)
    alphas = np.asarray(getattr(alphas, "alphas", alphas), float)
    q = np.asarray(q, float)
    n_mat = q.size
    if alphas.size != n_mat:
        raise ConstraintError(f"{alphas.size} thresholds for {n_mat} materials")
    m, psi = cells.measures, cells.psi
    theta = np.zeros((m.size, n_mat))
    on_level = np.isin(psi, alphas)
    strip = ~on_level
    k = strip_index(psi[strip], alphas)
    theta[np.flatnonzero(strip), k] = 1.0
    strip_amounts = np.bincount(k, weights=m[strip], minlength=n_mat)

    level_cells = {}
    for j in np.flatnonzero(on_level):
        level_cells.setdefault(float(psi[j]), []).append(j)
    level_measures = {a: math.fsum(m[idx]) for a, idx in level_cells.items()}
    tol = 1e-10 * cells.total_measure
    plan = level_amounts(alphas, q, strip_amounts, level_measures, tol)

    levels = []
    for a, ((lo, hi), amounts) in plan.items():
        idx = level_cells[a]
        _fill_in_order(theta, m, idx, amounts)
        levels.append(
            FatLevel(
                float(a),
                (int(lo), int(hi)),
                float(level_measures[a]),
                {int(i): float(v) for i, v in amounts.items()},
                tuple(int(j) for j in idx),
            )
        )
    theta /= theta.sum(axis=1, keepdims=True)
    return Allocation(theta, alphas, tuple(levels))


def _fill_in_order(theta, measures, idx, amounts):
    cap = {j: float(measures[j]) for j in idx}
    order = sorted(amounts)
    pos = 0
    for n_done, i in enumerate(order):
        last = n_done == len(order) - 1
        remaining = amounts[i]
        while pos < len(idx):
            j = idx[pos]
            take = cap[j] if last else min(remaining, cap[j])
            theta[j, i] += take / measures[j]
            cap[j] -= take
            remaining -= take
            if last or cap[j] <= 1e-14 * measures[j]:
                pos += 1
            if not last and remaining <= 1e-14 * measures[j]:
                break


def objective(cells, theta, materials):
    """``sum_cells measure * psi * sum_j theta_j / lambda_min_j``."""
    if not isinstance(cells, WeightedCells):
        cells = WeightedCells(*cells)
    inv = 1.0 / _lambda_array(materials)
    th = np.atleast_2d(np.asarray(theta, float))
    return float(np.sum(cells.measures * cells.psi * (th @ inv)))


def _lambda_array(materials):
    if len(materials) and hasattr(materials[0], "lambda_min"):
        return np.array([mat.lambda_min for mat in materials], float)
    return check_positive(materials, "lambda_min")


@dataclass(frozen=True)
class Expansion:
    """Maps a merged material axis back to the sorted, unmerged one."""

    groups: tuple
    quantities: tuple

    @property
    def is_identity(self):
        return all(len(g) == 1 for g in self.groups)

    def expand(self, theta):
        th = np.atleast_2d(np.asarray(theta, float))
        q = np.asarray(self.quantities, float)
        out = np.zeros(th.shape[:-1] + (q.size,))
        for g, members in enumerate(self.groups):
            qs = q[list(members)]
            share = qs / qs.sum() if qs.sum() > 0 else np.full(len(members), 1 / len(members))
            out[..., list(members)] = th[..., g : g + 1] * share
        return out


def merge_equal_materials(problem, rtol=TIE_RTOL):
    """Merge consecutive materials with equal ``lambda_min`` into one.

    The problem must already be sorted.  Merged materials keep the first
    member's eigenvalues and the summed quantity.
    """
    lam = [m.lambda_min for m in problem.materials]
    if any(b < a for a, b in zip(lam, lam[1:])):
        raise ConstraintError("materials must be sorted by lambda_min before merging")
    groups = tie_groups(lam, rtol)
    q = problem.constraint.quantities
    mats, merged_q = [], []
    for g in groups:
        first = problem.materials[g[0]]
        if len(g) > 1:
            label = "+".join(problem.materials[i].label for i in g)
            first = replace(first, label=label)
        mats.append(first)
        merged_q.append(math.fsum(q[i] for i in g))
    reduced = replace(
        problem,
        materials=tuple(mats),
        constraint=VolumeConstraint(tuple(merged_q), problem.constraint.mode),
    )
    return reduced, Expansion(groups, tuple(q))


def reduce_upper_bounds(problem, measure=None):
    """Turn upper-bound quantities into exact ones for sorted materials.

    Materials are used greedily in order until the domain is covered; the
    first material that overflows keeps only what is needed and the rest are
    dropped.  Exact-mode problems are returned unchanged.  ``measure``
    overrides the domain measure (a grid covers a staircase approximation).
    """
    c = problem.constraint
    if c.mode is ConstraintMode.EXACT:
        return problem
    mu = problem.measure if measure is None else float(measure)
    q = list(c.quantities)
    if math.fsum(q) < mu * (1 - VOLUME_RTOL):
        raise InfeasibleError(f"upper bounds sum to {math.fsum(q)!r} < domain measure {mu!r}")
    n_full = 0
    while n_full < len(q) and math.fsum(q[: n_full + 1]) < mu * (1 - VOLUME_RTOL):
        n_full += 1
    kept = q[:n_full] + [mu - math.fsum(q[:n_full])]
    return replace(
        problem,
        materials=problem.materials[: n_full + 1],
        constraint=VolumeConstraint(tuple(kept), ConstraintMode.EXACT),
    )


@dataclass(frozen=True)
class PreparedProblem:
    """A problem reduced to exact, sorted, strictly ordered materials.

    ``to_original`` maps a theta array on the reduced material axis back to
    the caller's material order (dropped materials get zero).
    """

    original: ProblemSpec
    reduced: ProblemSpec
    permutation: Permutation
    n_kept: int
    expansion: Expansion

    def to_original(self, theta):
        th = self.expansion.expand(theta)
        n = self.original.n_materials
        full = np.zeros(th.shape[:-1] + (n,))
        full[..., : self.n_kept] = th
        return self.permutation.to_original(full)

    def to_reduced(self, theta):
        """Inverse of :meth:`to_original`: sort, drop unused materials and sum merged ones.

        Fractions of dropped materials are discarded; callers that care check
        them with :meth:`dropped_mass`.
        """
        th = np.asarray(theta, float)[..., list(self.permutation.order)]
        kept = th[..., : self.n_kept]
        return np.stack([kept[..., list(g)].sum(axis=-1) for g in self.expansion.groups], axis=-1)

    def dropped_mass(self, theta):
        th = np.asarray(theta, float)[..., list(self.permutation.order)]
        return float(np.abs(th[..., self.n_kept :]).sum()) if th.shape[-1] > self.n_kept else 0.0


def prepare(problem, measure=None):
    """Sort, reduce upper bounds and merge ties, in that order."""
    sorted_problem, perm = sort_materials(problem)
    exact = reduce_upper_bounds(sorted_problem, measure)
    merged, expansion = merge_equal_materials(exact)
    return PreparedProblem(problem, merged, perm, exact.n_materials, expansion)


def bathtub(cells, q, materials=None):
    """Thresholds plus allocation in one call; returns ``(thresholds, allocation)``."""
    if not isinstance(cells, WeightedCells):
        cells = WeightedCells(*cells)
    th = thresholds(distribution(cells), q)
    return th, allocate(cells, q, th.alphas)


__all__ = [
    "Allocation",
    "DistributionFunction",
    "Expansion",
    "FatLevel",
    "PreparedProblem",
    "Thresholds",
    "WeightedCells",
    "allocate",
    "bathtub",
    "distribution",
    "level_amounts",
    "merge_equal_materials",
    "objective",
    "prepare",
    "reduce_upper_bounds",
    "strip_index",
    "thresholds",
]
