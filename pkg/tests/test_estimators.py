
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bangbang._validation import ConstraintError
from bangbang.estimators import BathtubAllocator, GridSaddleDesigner, RadialDesigner

from conftest import TABLE1, closed_form_radii

INNER = [(0, 0.5, [1]), (0.5, 1, [0])]
OUTER = [(0, 0.5, [0]), (0.5, 1, [1])]


class TestBathtubAllocator:
    def test_fit_transform(self):
        est = BathtubAllocator(quantities=[1, 2], lambda_min=[1, 2]).fit([3, 1, 2])
        np.testing.assert_array_equal(est.thresholds_, [2.0, 0.0])
        np.testing.assert_array_equal(est.predict([3, 1, 2]), [0, 1, 1])
        assert est.score([3, 1, 2]) == pytest.approx(4.5)

    def test_fractions_and_weights(self):
        est = BathtubAllocator(fractions=[1, 1]).fit([[0.2], [0.9], [0.5]], sample_weight=[1, 1, 2])
        np.testing.assert_allclose(est.quantities_, [2, 2])
        np.testing.assert_allclose(np.array([1, 1, 2]) @ est.theta_, [2, 2])

    def test_fat_level_mix(self):
        est = BathtubAllocator(quantities=[1, 2]).fit([2, 2, 1])
        np.testing.assert_allclose(est.transform([2.0]), [[0.5, 0.5]])
        assert len(est.levels_) == 1

    def test_params_and_clone(self):
        est = BathtubAllocator(fractions=[0.3, 0.7])
        assert est.get_params() == {"quantities": None, "fractions": [0.3, 0.7], "lambda_min": None}
        c = clone(est).set_params(fractions=[0.5, 0.5])
        assert c.fractions == [0.5, 0.5] and est.fractions == [0.3, 0.7]

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            BathtubAllocator(fractions=[1]).transform([1.0])

    def test_needs_one_budget(self):
        with pytest.raises(ConstraintError):
            BathtubAllocator().fit([1.0])

    def test_rejects_negative_psi(self):
        with pytest.raises(ValueError):
            BathtubAllocator(fractions=[1]).fit([-1.0])

    def test_score_needs_lambda(self):
        est = BathtubAllocator(fractions=[1]).fit([1.0])
        with pytest.raises(ConstraintError):
            est.score([1.0])


class TestRadialDesigner:
    def test_single_load(self):
        est = RadialDesigner(materials=[1, 2, 3], fractions=[0.4, 0.4, 0.2], random_state=0).fit([INNER])
        np.testing.assert_allclose(est.radii_, closed_form_radii(), atol=1e-9)
        assert est.certificate_.passed
        np.testing.assert_array_equal(est.predict([0.1, 0.3, 0.5, 0.8, 0.99]), [2, 1, 0, 1, 2])
        th = est.transform([0.1, 0.5])
        np.testing.assert_allclose(th.sum(axis=1), 1.0)
        assert est.state(1.0) == 0.0

    def test_two_loads(self):
        est = RadialDesigner(materials=[1, 2, 3], fractions=[0.4, 0.4, 0.2], weights=[3, 1]).fit([INNER, OUTER])
        np.testing.assert_allclose(est.radii_, TABLE1, atol=5e-4)

    def test_clone_refit(self):
        est = RadialDesigner(materials=[1, 2], fractions=[0.5, 0.5])
        c = clone(est).fit([INNER])
        assert len(c.radii_) >= 1
        assert not hasattr(est, "radii_")

    def test_weight_count(self):
        with pytest.raises(ConstraintError):
            RadialDesigner(fractions=[1.0], weights=[1, 2]).fit([INNER])


class TestGridSaddleDesigner:
    def test_fit(self):
        h = 1 / 16
        est = GridSaddleDesigner(
            materials=[1, 2, 3], fractions=[0.4, 0.4, 0.2], extents=((-1, 1), (-1, 1)), disk=(0, 0, 1), h=h
        )
        n = int(round(2 / h))
        x = -1 + (np.arange(n) + 0.5) * h
        X, Y = np.meshgrid(x, x)
        est.fit((np.hypot(X, Y) < 0.5).astype(float))
        assert est.upper_ >= est.lower_
        assert est.relative_gap_ <= 5e-3
        out = est.transform([[0.0, 0.0], [0.99, 0.99], [5.0, 5.0]])
        np.testing.assert_allclose(out[0].sum(), 1.0)
        assert np.isnan(out[1]).all() and np.isnan(out[2]).all()
        assert est.predict([[0.0, 0.0], [5.0, 5.0]])[1] == -1

    def test_shape_check(self):
        est = GridSaddleDesigner(fractions=[1.0], h=0.25)
        with pytest.raises(ValueError):
            est.fit(np.ones((3, 3)))

    def test_get_params(self):
        params = GridSaddleDesigner().get_params()
        assert params["h"] == 1 / 64 and params["damping"] == 0.5
