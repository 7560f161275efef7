import itertools
import math

import numpy as np
import pytest

from bangbang._validation import ConstraintError, InfeasibleError
from bangbang.core import Ball, ConstraintMode, LoadCase, Material, ProblemSpec, VolumeConstraint
from bangbang.measure_alloc import (
    WeightedCells,
    allocate,
    bathtub,
    distribution,
    merge_equal_materials,
    objective,
    prepare,
    reduce_upper_bounds,
    thresholds,
)

from conftest import single_load_problem


def _mats(lmins):
    return [Material(f"M{i + 1}", v, v) for i, v in enumerate(lmins)]


def _cells(pairs):
    m, p = zip(*pairs)
    return WeightedCells(m, p)


def brute_force(psi, counts, lam, scale=1.0):
    """Best objective over all assignments of one material per (equal-measure) cell."""
    n = len(psi)
    best = -math.inf
    pool = [k for k, c in enumerate(counts) for _ in range(c)]
    for perm in set(itertools.permutations(pool, n)):
        val = math.fsum(scale * psi[j] / lam[perm[j]] for j in range(n))
        best = max(best, val)
    return best


def random_instance(rng):
    n = int(rng.integers(1, 9))
    k = int(rng.integers(1, 4))
    # small integer psi values make ties (fat levels) common
    psi = rng.integers(0, 4, size=n).astype(float) * rng.uniform(0.5, 2.0)
    lam = np.sort(rng.uniform(0.5, 5.0, size=k))
    cuts = np.sort(rng.integers(0, n + 1, size=k - 1))
    counts = np.diff(np.concatenate([[0], cuts, [n]])).astype(int)
    return psi, counts, lam


class TestDistribution:
    def test_enumerated_cells(self):
        d = distribution(_cells([(1, 3), (1, 1), (1, 2)]))
        assert [d(a) for a in (0, 1, 2, 3)] == [3.0, 2.0, 1.0, 0.0]
        assert d.left_limit(1) == 3.0

    def test_single_cell(self):
        d = distribution(_cells([(2.5, 0.7)]))
        assert d(0.0) == 2.5 and d(0.69) == 2.5
        assert d(0.7) == 0.0 and d(5.0) == 0.0

    def test_constant_level(self):
        d = distribution(_cells([(1, 2.0), (2, 2.0), (0.5, 2.0)]))
        assert d.left_limit(2.0) == pytest.approx(3.5)
        assert d(2.0) == 0.0
        assert d.jumps() == [(2.0, 3.5)]

    def test_vectorized(self):
        d = distribution(_cells([(1, 3), (1, 1), (1, 2)]))
        np.testing.assert_array_equal(d(np.array([0.5, 1.5, 2.5])), [3.0, 2.0, 1.0])


class TestThresholds:
    def test_enumerated(self):
        th = thresholds(distribution(_cells([(1, 3), (1, 1), (1, 2)])), [1, 2])
        np.testing.assert_array_equal(th.alphas, [2.0, 0.0])

    def test_one_material_fills(self):
        cells = _cells([(1, 3), (1, 1), (1, 2)])
        th = thresholds(distribution(cells), [3, 0, 0])
        assert th.alphas[0] == 0.0

    def test_fine_sampling_converges_to_radial(self):
        # psi of a disk with an inner source, sampled on thin rings
        from bangbang.radial import solve_radial

        sol = solve_radial(single_load_problem())
        errs = []
        for n in (200, 800, 3200):
            edges = np.linspace(0, 1, n + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])
            cells = WeightedCells(math.pi * np.diff(edges**2), sol.psi(mid))
            th = thresholds(distribution(cells), sol.problem.quantities)
            errs.append(abs(th.alphas[0] - sol.alphas[0]))
        assert errs[2] < errs[0]
        assert errs[2] < 1e-4


class TestAllocate:
    lam = np.array([1.0, 2.0])

    def test_strips(self):
        cells = _cells([(1, 3), (1, 1), (1, 2)])
        th, alloc = bathtub(cells, [1, 2])
        np.testing.assert_array_equal(alloc.material, [0, 1, 1])
        assert objective(cells, alloc.theta, _mats(self.lam)) == pytest.approx(4.5, rel=1e-15)

    def test_strips_beat_every_vertex(self):
        cells = _cells([(1, 3), (1, 1), (1, 2)])
        vals = []
        for j in range(3):
            theta = np.tile([0.0, 1.0], (3, 1))
            theta[j] = [1.0, 0.0]
            vals.append(objective(cells, theta, _mats(self.lam)))
        assert sorted(vals) == pytest.approx([3.5, 4.0, 4.5])

    def test_fat_level_ledger(self):
        cells = _cells([(1, 2), (1, 2), (1, 1)])
        th, alloc = bathtub(cells, [1, 2])
        assert len(alloc.levels) == 1
        lvl = alloc.levels[0]
        assert lvl.alpha == 2.0 and lvl.measure == 2.0
        assert lvl.admissible == (0, 1)
        assert lvl.amounts == pytest.approx({0: 1.0, 1: 1.0})
        assert set(lvl.cells) == {0, 1}
        assert objective(cells, alloc.theta, _mats(self.lam)) == pytest.approx(3.5, rel=1e-15)

    @pytest.mark.parametrize("split", [0.0, 0.3, 0.5, 1.0])
    def test_fat_level_split_is_free(self, split):
        cells = _cells([(1, 2), (1, 2), (1, 1)])
        theta = np.array([[split, 1 - split], [1 - split, split], [0.0, 1.0]])
        assert objective(cells, theta, _mats(self.lam)) == pytest.approx(3.5, rel=1e-15)

    def test_single_material(self):
        _, alloc = bathtub(_cells([(1, 3), (2, 0), (1, 2)]), [4.0])
        np.testing.assert_array_equal(alloc.theta, np.ones((3, 1)))

    def test_volumes_exact(self, rng):
        for _ in range(50):
            psi = rng.integers(0, 3, size=12).astype(float)
            m = rng.uniform(0.1, 1.0, size=12)
            fr = rng.dirichlet(np.ones(3))
            q = fr * m.sum()
            _, alloc = bathtub(WeightedCells(m, psi), q)
            np.testing.assert_allclose(m @ alloc.theta, q, rtol=0, atol=1e-12 * m.sum())
            np.testing.assert_allclose(alloc.theta.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(alloc.theta >= 0)

    def test_wrong_threshold_count(self):
        with pytest.raises(ConstraintError):
            allocate(_cells([(1, 1)]), [1.0], [0.0, 0.0])

    def test_infeasible_thresholds(self):
        with pytest.raises(InfeasibleError):
            allocate(_cells([(1, 3), (1, 1), (1, 2)]), [1, 2], [0.5, 0.0])


class TestBruteForce:
    def test_small_instances_match_enumeration(self, rng):
        for _ in range(60):
            psi, counts, lam = random_instance(rng)
            c = float(rng.uniform(0.5, 2.0))
            cells = WeightedCells(np.full(psi.size, c), psi)
            _, alloc = bathtub(cells, counts * c)
            got = objective(cells, alloc.theta, _mats(lam))
            assert got == pytest.approx(brute_force(psi, counts, lam, c), rel=1e-12, abs=1e-300)


class TestReductions:
    def _problem(self, lmins, q, mode=ConstraintMode.EXACT, measure=None):
        ball = Ball(1.0, 2)
        q = np.asarray(q, float)
        if measure is not None:
            q = q * ball.measure / measure
        return ProblemSpec(ball, _mats(lmins), VolumeConstraint(tuple(q), mode), [LoadCase(None)])

    def test_merge_ties(self):
        p = self._problem([1, 1, 2], [1, 2, 3], measure=6)
        merged, exp = merge_equal_materials(p)
        assert [m.lambda_min for m in merged.materials] == [1, 2]
        np.testing.assert_allclose(np.array(merged.constraint.quantities) * 6 / math.pi, [3, 3])
        assert exp.groups == ((0, 1), (2,))

    def test_merge_identity(self):
        _, exp = merge_equal_materials(self._problem([1, 2, 3], [2, 2, 2], measure=6))
        assert exp.is_identity

    def test_expansion_keeps_objective(self, rng):
        mats = _mats([1.0, 1.0, 2.0])
        for _ in range(20):
            psi = rng.uniform(0, 1, 10)
            m = rng.uniform(0.5, 1, 10)
            fr = rng.dirichlet(np.ones(3))
            ball = Ball(1.0, 2)
            p = ProblemSpec(ball, mats, VolumeConstraint(tuple(fr * ball.measure)), [LoadCase(None)])
            merged, exp = merge_equal_materials(p)
            theta = rng.dirichlet(np.ones(2), size=10)
            cells = WeightedCells(m, psi)
            a = objective(cells, theta, merged.materials)
            b = objective(cells, exp.expand(theta), mats)
            assert a == pytest.approx(b, rel=1e-12)

    def test_upper_bound_reduction(self):
        p = self._problem([1, 2, 3], [1, 1, 5], ConstraintMode.UPPER, measure=3)
        r = reduce_upper_bounds(p)
        np.testing.assert_allclose(np.array(r.constraint.quantities) * 3 / math.pi, [1, 1, 1], rtol=1e-14)
        assert r.constraint.mode is ConstraintMode.EXACT

    def test_upper_exact_sum_unchanged(self):
        p = self._problem([1, 2], [1, 2], ConstraintMode.UPPER, measure=3)
        r = reduce_upper_bounds(p)
        np.testing.assert_allclose(r.constraint.quantities, p.constraint.quantities, rtol=1e-14)

    def test_first_covers_everything(self):
        p = self._problem([1, 2], [3, 7], ConstraintMode.UPPER, measure=3)
        r = reduce_upper_bounds(p)
        assert r.n_materials == 1
        assert r.constraint.quantities[0] == pytest.approx(math.pi)

    def test_prepare_round_trip(self):
        p = self._problem([3, 1, 1, 2], [1, 1, 2, 2], measure=6)
        prep = prepare(p)
        assert prep.reduced.n_materials == 3
        theta = np.array([[0.2, 0.5, 0.3]])
        back = prep.to_original(theta)
        np.testing.assert_allclose(back.sum(axis=1), 1.0)
        np.testing.assert_allclose(prep.to_reduced(back), theta, atol=1e-15)
        # material with lambda 3 (original index 0) sits last on the reduced axis
        assert back[0, 0] == pytest.approx(0.3)
