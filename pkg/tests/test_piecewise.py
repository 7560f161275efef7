import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bangbang._validation import ConstraintError, SolverError
from bangbang.piecewise import Laurent, PiecewisePoly, real_roots_in
from bangbang.rootfind import bracket_root


class TestLaurent:
    def test_evaluate_negative_powers(self):
        p = Laurent((1.0, 2.0), -1)  # 1/r + 2
        assert p(0.5) == pytest.approx(4.0)

    def test_normalizes_zeros(self):
        p = Laurent((0.0, 0.0, 3.0, 0.0), 0)
        assert p.coeffs == (3.0,) and p.low == 2

    def test_derivative_antiderivative(self):
        p = Laurent((1.0, -2.0, 0.5), -1)
        q = p.antiderivative().derivative()
        r = np.linspace(0.3, 2.0, 7)
        np.testing.assert_allclose(q(r), p(r), rtol=1e-13)

    def test_inverse_power_antiderivative_is_log(self):
        g = Laurent((1.0,), -1).antiderivative()
        assert g.log == 1.0
        assert float(g(math.e)) - float(g(1.0)) == pytest.approx(1.0)


class TestPiecewise:
    def test_from_spec_requires_contiguous(self):
        with pytest.raises(ConstraintError):
            PiecewisePoly.from_spec([(0, 1, [1]), (1.5, 2, [0])])

    def test_breaks_increase(self):
        with pytest.raises(ConstraintError):
            PiecewisePoly((0.0, 0.0), (Laurent.constant(1.0),))

    def test_evaluate(self):
        f = PiecewisePoly.from_spec([(0, 1, [-2]), (1, 2, [-1], -1)])
        np.testing.assert_allclose(f(np.array([0.5, 1.5])), [-2.0, -1 / 1.5])

    def test_integral_matches_quad(self):
        f = PiecewisePoly.from_spec([(0, 0.5, [1, 0, 3]), (0.5, 2, [2, -1], -1)])
        ref, _ = integrate.quad(lambda r: float(f(r)), 0.1, 1.7, points=[0.5], epsabs=1e-13)
        assert f.integral(0.1, 1.7) == pytest.approx(ref, rel=1e-11)

    def test_refine_same_values(self):
        f = PiecewisePoly.from_spec([(0, 1, [1, 1]), (1, 2, [3])])
        g = f.refine([0.25, 1.5])
        r = np.linspace(0, 2, 41)
        np.testing.assert_array_equal(f(r), g(r))
        assert len(g.pieces) == 4


class TestRoots:
    def test_bracket(self):
        x = bracket_root(lambda t: t * t - 2.0, 0.0, 2.0)
        assert x == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_reversed_interval(self):
        assert bracket_root(lambda t: t - 0.3, 1.0, 0.0) == pytest.approx(0.3, abs=1e-12)

    def test_no_bracket(self):
        with pytest.raises(SolverError):
            bracket_root(lambda t: t * t + 1, -1.0, 1.0)

    def test_flat_then_steep(self):
        x = bracket_root(lambda t: t**9 - 1e-9, 0.0, 1.0)
        assert x == pytest.approx(0.1, rel=1e-10)

    def test_laurent_roots(self):
        # (r - 0.3)(r - 0.7) / r
        p = Laurent((0.21, -1.0, 1.0), -1)
        np.testing.assert_allclose(sorted(real_roots_in(p, 0.1, 1.0)), [0.3, 0.7], atol=1e-12)

    def test_no_roots(self):
        assert real_roots_in(Laurent((1.0, 0.0, 1.0)), 0.0, 3.0) == []

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4, unique=True))
    def test_recovers_planted_roots(self, roots):
        roots = sorted(roots)
        if min(np.diff(roots), default=1.0) < 1e-3:
            return
        coeffs = np.polynomial.polynomial.polyfromroots(roots)
        found = sorted(real_roots_in(Laurent(tuple(coeffs)), 0.0, 1.0, n_probe=64))
        np.testing.assert_allclose(found, roots, atol=1e-9)
