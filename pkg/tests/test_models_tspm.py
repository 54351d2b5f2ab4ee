import numpy as np
import pytest

from powermod.core import CounterSchema, NormalizationParams
from powermod.models import (
    SvrConfig,
    fit_lr_xy,
    fit_svr_xy,
    fit_two_stage_xy,
    predict,
    predict_batch,
)
from conftest import make_nv, make_vec


@pytest.fixture
def schema():
    return CounterSchema(names=("a", "b"))


@pytest.fixture
def norm():
    return NormalizationParams(minima=np.zeros(2), maxima=np.ones(2))


def nonlinear_data(seed=0, n=150):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, (n, 2))
    y = 2.0 * x[:, 0] + 1.0 * x[:, 1] + 1.5 * np.where(x[:, 0] > 0.5, x[:, 1] ** 2, 0.0)
    return x, y


class TestTwoStage:
    def test_decomposition_identity(self, schema, norm):
        x, y = nonlinear_data()
        model = fit_two_stage_xy(x, y, schema, norm, SvrConfig(gamma=2.0))
        total = model.predict_normalized(x)
        parts = model.base.predict_normalized(x) + model.difference.predict_normalized(x)
        assert np.array_equal(total, parts)

    def test_residual_stage_sees_differences(self, schema, norm):
        x, y = nonlinear_data(seed=1)
        config = SvrConfig(gamma=2.0)
        model = fit_two_stage_xy(x, y, schema, norm, config)
        base = fit_lr_xy(x, y, schema, norm)
        assert np.array_equal(base.coefficients, model.base.coefficients)
        residuals = y - base.predict_normalized(x)
        difference = fit_svr_xy(x, residuals, schema, norm, config)
        assert np.array_equal(difference.dual_coef, model.difference.dual_coef)
        assert difference.bias == model.difference.bias

    def test_linear_data_matches_linear_model(self, schema, norm):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, (100, 2))
        y = x @ np.array([2.0, 3.0])
        config = SvrConfig(gamma=2.0, epsilon=0.01)
        model = fit_two_stage_xy(x, y, schema, norm, config)
        base_pred = model.base.predict_normalized(x)
        assert np.max(np.abs(model.predict_normalized(x) - base_pred)) <= 2 * config.epsilon

    def test_beats_linear_on_nonlinear_data(self, schema, norm):
        x, y = nonlinear_data(seed=3)
        two_stage = fit_two_stage_xy(x, y, schema, norm, SvrConfig(gamma=4.0))
        linear = fit_lr_xy(x, y, schema, norm)
        ts_mse = float(np.mean((two_stage.predict_normalized(x) - y) ** 2))
        lr_mse = float(np.mean((linear.predict_normalized(x) - y) ** 2))
        assert ts_mse <= lr_mse


class TestPredictContract:
    def test_sum_example(self, schema, norm):
        x, y = nonlinear_data(seed=4)
        model = fit_two_stage_xy(x, y, schema, norm, SvrConfig(gamma=2.0))
        v = make_nv([0.4, 0.6])
        expected = float(
            model.base.predict_normalized(v.counters[None, :])[0]
            + model.difference.predict_normalized(v.counters[None, :])[0]
        )
        assert predict(model, v) == expected

    def test_raw_vector_normalized_first(self, schema):
        norm = NormalizationParams(minima=np.zeros(2), maxima=np.array([10.0, 20.0]))
        x = np.random.default_rng(5).uniform(0, 1, (50, 2))
        y = x @ np.array([1.0, 1.0])
        model = fit_lr_xy(x, y, schema, norm)
        raw = make_vec([5.0, 10.0])  # normalizes to (0.5, 0.5)
        normalized = make_nv([0.5, 0.5])
        assert predict(model, raw) == predict(model, normalized)

    def test_schema_mismatch_rejected(self, schema, norm):
        from powermod.errors import SchemaMismatchError

        x = np.random.default_rng(6).uniform(0, 1, (30, 2))
        model = fit_lr_xy(x, x[:, 0], schema, norm)
        with pytest.raises(SchemaMismatchError):
            predict_batch(model, np.zeros((1, 3)))

    def test_metadata_does_not_affect_prediction(self, schema, norm):
        x = np.random.default_rng(7).uniform(0, 1, (30, 2))
        model = fit_lr_xy(x, x[:, 0] + x[:, 1], schema, norm)
        a = predict(model, make_nv([0.3, 0.3], trace="t1", seq=5))
        b = predict(model, make_nv([0.3, 0.3], trace="zzz", seq=999))
        assert a == b
