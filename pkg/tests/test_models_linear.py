import numpy as np
import pytest

from conftest import make_nv
from powermod.core import CounterSchema, NormalizationParams
from powermod.errors import EmptyDatasetError
from powermod.models import fit_lr, fit_lr_xy


@pytest.fixture
def schema():
    return CounterSchema(names=("a", "b"))


@pytest.fixture
def norm():
    return NormalizationParams(minima=np.zeros(2), maxima=np.ones(2))


class TestFitLr:
    def test_exact_recovery(self, schema, norm):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 1, (50, 2))
        y = x @ np.array([2.0, 3.0])
        model = fit_lr_xy(x, y, schema, norm)
        assert np.allclose(model.coefficients, [2.0, 3.0], rtol=1e-8)

    def test_duplicated_column_minimum_norm(self, norm):
        schema = CounterSchema(names=("a", "a2"))
        rng = np.random.default_rng(1)
        col = rng.uniform(0, 1, (40, 1))
        x = np.hstack([col, col])
        y = 2.0 * col[:, 0]
        model = fit_lr_xy(x, y, schema, norm)
        # pseudo-inverse splits the weight evenly across identical columns
        assert np.allclose(model.coefficients, [1.0, 1.0], atol=1e-8)

    def test_zero_targets(self, schema, norm):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, (30, 2))
        model = fit_lr_xy(x, np.zeros(30), schema, norm)
        assert np.allclose(model.coefficients, 0.0, atol=1e-12)

    def test_empty_raises(self, schema, norm):
        with pytest.raises(EmptyDatasetError):
            fit_lr([], schema, norm)

    def test_vector_interface(self, schema, norm):
        train = [make_nv([0.1 * i, 0.05 * i], p=0.5 * i, seq=i) for i in range(1, 20)]
        model = fit_lr(train, schema, norm)
        pred = model.predict_normalized(np.array([[0.2, 0.1]]))
        assert np.isfinite(pred).all()

    def test_intercept_flag(self, schema, norm):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (60, 2))
        y = x @ np.array([2.0, -1.0]) + 0.7
        without = fit_lr_xy(x, y, schema, norm)
        with_ic = fit_lr_xy(x, y, schema, norm, intercept=True)
        assert with_ic.intercept == pytest.approx(0.7, abs=1e-8)
        assert without.intercept == 0.0

    def test_local_optimality(self, schema, norm):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, (80, 2))
        y = x @ np.array([1.5, 0.5]) + 0.05 * rng.normal(size=80)
        model = fit_lr_xy(x, y, schema, norm)
        base_sse = float(((x @ model.coefficients - y) ** 2).sum())
        for k in range(2):
            for delta in (1e-3, -1e-3):
                c = model.coefficients.copy()
                c[k] += delta
                sse = float(((x @ c - y) ** 2).sum())
                assert sse >= base_sse - 1e-12
