"""Linear power model: dynamic power as a weighted sum of counter values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CounterSchema, NormalizationParams
from ..errors import EmptyDatasetError


@dataclass
class LinearModel:
    schema: CounterSchema
    normalization: NormalizationParams
    coefficients: np.ndarray
    intercept: float = 0.0

    def predict_normalized(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return x @ self.coefficients + self.intercept


def fit_lr_xy(
    x: np.ndarray,
    y: np.ndarray,
    schema: CounterSchema,
    normalization: NormalizationParams,
    intercept: bool = False,
) -> LinearModel:
    """Least squares; minimum-norm solution when the design is rank-deficient.

    No constant term by default: zero activity should predict zero dynamic
    power. Pass ``intercept=True`` to fit one anyway.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise EmptyDatasetError("cannot fit a linear model on an empty training set")
    design = np.hstack([x, np.ones((x.shape[0], 1))]) if intercept else x
    solution, *_ = np.linalg.lstsq(design, y, rcond=None)
    if intercept:
        return LinearModel(
            schema=schema,
            normalization=normalization,
            coefficients=solution[:-1],
            intercept=float(solution[-1]),
        )
    return LinearModel(schema=schema, normalization=normalization, coefficients=solution)


def fit_lr(
    train,
    schema: CounterSchema,
    normalization: NormalizationParams,
    intercept: bool = False,
) -> LinearModel:
    if not train:
        raise EmptyDatasetError("cannot fit a linear model on an empty training set")
    x = np.stack([v.counters for v in train])
    y = np.array([v.p_dynamic for v in train], dtype=np.float64)
    return fit_lr_xy(x, y, schema, normalization, intercept=intercept)
