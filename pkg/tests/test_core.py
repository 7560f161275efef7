import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bangbang._validation import ConstraintError
from bangbang.core import (
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
    sort_materials,
)


def _mats(lmins, lmaxs=None):
    lmaxs = lmins if lmaxs is None else lmaxs
    return [Material(f"M{i + 1}", a, b) for i, (a, b) in enumerate(zip(lmins, lmaxs))]


def _problem(lmins):
    ball = Ball(1.0, 2)
    n = len(lmins)
    return ProblemSpec(ball, _mats(lmins), VolumeConstraint.from_fractions([1 / n] * n, ball.measure), [LoadCase(None)])


class TestMaterial:
    def test_rejects_inverted_eigenvalues(self):
        with pytest.raises(ConstraintError):
            Material("bad", 2.0, 1.0)

    @pytest.mark.parametrize("lo", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_nonpositive(self, lo):
        with pytest.raises(ConstraintError):
            Material("bad", lo, 3.0)


class TestMixtureBounds:
    def test_pure_phase(self):
        mats = _mats([1.0, 2.0, 5.0], [1.5, 4.0, 9.0])
        for k in range(3):
            e = np.eye(3)[k]
            assert lambda_minus(e, mats) == pytest.approx(mats[k].lambda_min, rel=1e-15)
            assert lambda_plus(e, mats) == pytest.approx(mats[k].lambda_max, rel=1e-15)

    def test_harmonic_half_half(self):
        assert lambda_minus([0.5, 0.5], _mats([1.0, 3.0])) == pytest.approx(1.5, rel=1e-15)

    def test_arithmetic_half_half(self):
        assert lambda_plus([0.5, 0.5], _mats([1.0, 3.0])) == pytest.approx(2.0, rel=1e-15)

    def test_vertex(self):
        assert lambda_minus([1, 0, 0], _mats([1.0, 2.0, 5.0])) == 1.0

    def test_rows(self):
        out = lambda_minus([[1, 0], [0.5, 0.5]], _mats([1.0, 3.0]))
        np.testing.assert_allclose(out, [1.0, 1.5], rtol=1e-15)

    def test_off_simplex_rejected(self):
        with pytest.raises(ConstraintError):
            lambda_minus([0.7, 0.7], _mats([1.0, 3.0]))

    @given(
        st.lists(st.floats(0.1, 10), min_size=1, max_size=5).flatmap(
            lambda lam: st.tuples(
                st.just(lam),
                st.lists(st.floats(0, 1), min_size=len(lam), max_size=len(lam)).filter(lambda w: sum(w) > 1e-3),
            )
        )
    )
    def test_harmonic_below_arithmetic(self, case):
        lam, w = case
        theta = np.array(w) / sum(w)
        mats = _mats(lam)
        assert lambda_minus(theta, mats) <= lambda_plus(theta, mats) * (1 + 1e-12)


class TestSorting:
    def test_order(self):
        _, perm = sort_materials(_problem([2.0, 1.0, 3.0]))
        assert perm.order == (1, 0, 2)

    def test_identity(self):
        _, perm = sort_materials(_problem([1.0, 2.0, 3.0]))
        assert perm.is_identity

    def test_ties_stable(self):
        sp, perm = sort_materials(_problem([1.0, 1.0, 2.0]))
        assert perm.order == (0, 1, 2)
        assert perm.tie_groups == ((0, 1),)
        assert [m.label for m in sp.materials] == ["M1", "M2", "M3"]

    def test_round_trip(self):
        _, perm = sort_materials(_problem([3.0, 1.0, 2.0]))
        vals = np.array([10.0, 20.0, 30.0])  # sorted order
        back = perm.to_original(vals)
        np.testing.assert_array_equal(back[list(perm.order)], vals)


class TestConstraints:
    def test_exact_sum_checked(self):
        with pytest.raises(ConstraintError):
            VolumeConstraint((1.0, 1.0)).check_against(3.0)

    def test_exact_ok(self):
        VolumeConstraint((1.0, 2.0)).check_against(3.0)

    def test_upper_needs_cover(self):
        with pytest.raises(ConstraintError):
            VolumeConstraint((1.0, 1.0), ConstraintMode.UPPER).check_against(3.0)
        VolumeConstraint((1.0, 5.0), ConstraintMode.UPPER).check_against(3.0)

    def test_negative_rejected(self):
        with pytest.raises(ConstraintError):
            VolumeConstraint((-1.0, 4.0))

    def test_quantity_count(self):
        with pytest.raises(ConstraintError):
            ProblemSpec(Ball(1.0), _mats([1.0, 2.0]), VolumeConstraint((math.pi,)), [])

    def test_load_weight(self):
        with pytest.raises(ConstraintError):
            LoadCase(None, 0.0)


class TestDomains:
    def test_ball_measure(self):
        assert Ball(2.0, 2).measure == pytest.approx(4 * math.pi, rel=1e-15)
        assert Ball(1.0, 3).measure == pytest.approx(4 * math.pi / 3, rel=1e-15)

    def test_disk_measure(self):
        assert Rectangle(((-1, 1), (-1, 1)), (0, 0, 1)).measure == pytest.approx(math.pi)

    def test_degenerate_rectangle(self):
        with pytest.raises(ConstraintError):
            Rectangle(((0, 0), (0, 1)))


class TestDesignField:
    def test_volumes(self):
        d = DesignField(np.array([1.0, 2.0]), np.array([[1.0, 0.0], [0.25, 0.75]]))
        np.testing.assert_allclose(d.volumes, [1.5, 1.5])
        d.check_volumes([1.5, 1.5])

    def test_bad_simplex(self):
        with pytest.raises(ConstraintError):
            DesignField(np.array([1.0]), np.array([[0.5, 0.6]]))
