"""Tube-regression solver against the dense projected-gradient QP oracle
(see ``oracles.py``)."""

import numpy as np
import pytest

from oracles import qp_oracle
from powermod.core import CounterSchema, NormalizationParams
from powermod.models import SvrConfig, dual_objective, fit_svr_xy, kernel_matrix


def toy_problems():
    rng = np.random.default_rng(42)
    problems = []
    # 4-point 1-D case
    x = np.array([[0.0], [0.3], [0.6], [1.0]])
    y = np.array([0.0, 1.0, 1.2, 0.4])
    problems.append((x, y, SvrConfig(kernel="rbf", gamma=1.0, c=5.0, epsilon=0.05)))
    for n in (8, 14, 20):
        x = rng.uniform(0, 1, (n, 2))
        y = np.sin(3 * x[:, 0]) + x[:, 1] + 0.1 * rng.normal(size=n)
        problems.append((x, y, SvrConfig(kernel="rbf", gamma=2.0, c=10.0, epsilon=0.01)))
        problems.append((x, y, SvrConfig(kernel="linear", gamma=None, c=3.0, epsilon=0.1)))
    return problems


@pytest.fixture
def schema():
    return CounterSchema(names=("a", "b"))


@pytest.fixture
def norm():
    return NormalizationParams(minima=np.zeros(2), maxima=np.ones(2))


class TestSolverAgainstOracle:
    @pytest.mark.parametrize("case", range(7))
    def test_objective_matches_oracle(self, case, norm):
        x, y, config = toy_problems()[case]
        schema = CounterSchema(names=tuple(f"f{i}" for i in range(x.shape[1])))
        model = fit_svr_xy(x, y, schema, norm, config)
        gamma = model.config.gamma
        kmat = kernel_matrix(x, x, config.kernel, gamma)
        beta = np.zeros(x.shape[0])
        mask = np.zeros(x.shape[0], dtype=bool)
        # reconstruct full beta from stored support rows
        bi = 0
        for i in range(x.shape[0]):
            if bi < model.support_x.shape[0] and np.array_equal(model.support_x[bi], x[i]):
                beta[i] = model.dual_coef[bi]
                bi += 1
        got = dual_objective(kmat, y, beta, config.epsilon)
        _, want = qp_oracle(kmat, y, config.c, config.epsilon)
        assert got == pytest.approx(want, abs=1e-2)
        assert model.kkt_gap <= config.tol

    def test_dual_coefficients_in_box(self, norm, schema):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 1, (30, 2))
        y = np.cos(4 * x[:, 0]) * 2 + x[:, 1]
        config = SvrConfig(gamma=3.0, c=2.0, epsilon=0.01)
        model = fit_svr_xy(x, y, schema, norm, config)
        assert np.all(np.abs(model.dual_coef) <= config.c + 1e-12)

    def test_wide_tube_gives_flat_predictor(self, norm, schema):
        rng = np.random.default_rng(8)
        x = rng.uniform(0, 1, (20, 2))
        y = 1.0 + 0.1 * rng.uniform(size=20)
        spread = float(y.max() - y.min())
        model = fit_svr_xy(x, y, schema, norm, SvrConfig(gamma=1.0, c=10.0, epsilon=spread))
        assert model.support_x.shape[0] == 0
        pred = model.predict_normalized(x)
        assert np.all(pred == model.bias)
        assert y.min() - spread <= model.bias <= y.max() + spread

    def test_large_c_reproduces_training_points(self, norm, schema):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 1, (15, 2))
        y = np.sin(2 * x[:, 0]) + 0.5 * x[:, 1]
        epsilon = 0.05
        config = SvrConfig(gamma=2.0, c=1e6, epsilon=epsilon, tol=1e-7)
        model = fit_svr_xy(x, y, schema, norm, config)
        pred = model.predict_normalized(x)
        assert np.max(np.abs(pred - y)) <= epsilon + 1e-6

    def test_deterministic(self, norm, schema):
        rng = np.random.default_rng(10)
        x = rng.uniform(0, 1, (25, 2))
        y = x @ np.array([1.0, -0.5])
        a = fit_svr_xy(x, y, schema, norm, SvrConfig(gamma=1.5))
        b = fit_svr_xy(x, y, schema, norm, SvrConfig(gamma=1.5))
        assert np.array_equal(a.dual_coef, b.dual_coef)
        assert a.bias == b.bias

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            SvrConfig(c=0.0)
        with pytest.raises(ValueError):
            SvrConfig(epsilon=-0.1)
        with pytest.raises(ValueError):
            SvrConfig(kernel="poly")
