"""Tube-regression power model (epsilon-insensitive, kernelized).

The dual is solved by the pairwise kernel in ``powermod._kernels``:
maximal-violating-pair coordinate descent to a KKT gap below ``tol``.
Deterministic given the data order; no randomness is involved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .. import _kernels
from ..core import CounterSchema, NormalizationParams
from ..errors import EmptyDatasetError

log = logging.getLogger("powermod.svr")


@dataclass(frozen=True)
class SvrConfig:
    kernel: str = "rbf"  # rbf | linear
    gamma: float | None = None  # rbf width; defaults to 1/n_features at fit time
    c: float = 10.0
    epsilon: float = 0.01
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        if self.kernel not in ("rbf", "linear"):
            raise ValueError("kernel must be rbf|linear")
        if self.c <= 0:
            raise ValueError("C must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if kernel == "linear":
        return a @ b.T
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SvrModel:
    schema: CounterSchema
    normalization: NormalizationParams
    config: SvrConfig  # gamma resolved
    support_x: np.ndarray  # (m, n) rows with non-zero dual coefficient
    dual_coef: np.ndarray  # (m,), each in [-C, C]
    bias: float
    kkt_gap: float
    iterations: int

    def predict_normalized(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.support_x.shape[0] == 0:
            return np.full(x.shape[0], self.bias)
        k = kernel_matrix(x, self.support_x, self.config.kernel, self.config.gamma)
        return k @ self.dual_coef + self.bias


def dual_objective(kmat: np.ndarray, y: np.ndarray, beta: np.ndarray, epsilon: float) -> float:
    """0.5 b'Kb - y'b + epsilon*|b|_1: the quantity the solver minimizes."""
    return float(0.5 * beta @ kmat @ beta - y @ beta + epsilon * np.abs(beta).sum())


def fit_svr_xy(
    x: np.ndarray,
    y: np.ndarray,
    schema: CounterSchema,
    normalization: NormalizationParams,
    config: SvrConfig | None = None,
) -> SvrModel:
    config = config or SvrConfig()
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyDatasetError("cannot fit on an empty training set")
    gamma = config.gamma if config.gamma is not None else 1.0 / x.shape[1]
    resolved = replace(config, gamma=gamma)
    kmat = kernel_matrix(x, x, resolved.kernel, gamma)
    beta, bias, iterations, gap = _kernels.smo_solve(
        np.ascontiguousarray(kmat), y, resolved.c, resolved.epsilon, resolved.tol,
        resolved.max_iter,
    )
    if gap > resolved.tol:
        log.warning("solver stopped at max_iter=%d with KKT gap %.3g", iterations, gap)
    support = beta != 0.0
    return SvrModel(
        schema=schema,
        normalization=normalization,
        config=resolved,
        support_x=x[support].copy(),
        dual_coef=beta[support].copy(),
        bias=bias,
        kkt_gap=gap,
        iterations=iterations,
    )


def fit_svr(
    train,
    schema: CounterSchema,
    normalization: NormalizationParams,
    config: SvrConfig | None = None,
) -> SvrModel:
    if not train:
        raise EmptyDatasetError("cannot fit on an empty training set")
    x = np.stack([v.counters for v in train])
    y = np.array([v.p_dynamic for v in train], dtype=np.float64)
    return fit_svr_xy(x, y, schema, normalization, config)
