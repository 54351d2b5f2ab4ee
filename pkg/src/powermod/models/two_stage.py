"""Two-stage composite: a linear base predictor plus a kernel model of its
residuals. The final prediction is exactly base + difference, which keeps the
base model's steadiness on unfamiliar inputs while the residual stage soaks
up the structure the linear fit leaves behind."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CounterSchema, NormalizationParams
from ..errors import EmptyDatasetError
from .linear import LinearModel, fit_lr_xy
from .svr import SvrConfig, SvrModel, fit_svr_xy


@dataclass
class TwoStageModel:
    base: LinearModel
    difference: SvrModel

    @property
    def schema(self) -> CounterSchema:
        return self.base.schema

    @property
    def normalization(self) -> NormalizationParams:
        return self.base.normalization

    def predict_normalized(self, x: np.ndarray) -> np.ndarray:
        return self.base.predict_normalized(x) + self.difference.predict_normalized(x)


def fit_two_stage_xy(
    x: np.ndarray,
    y: np.ndarray,
    schema: CounterSchema,
    normalization: NormalizationParams,
    svr_config: SvrConfig | None = None,
    lr_intercept: bool = False,
) -> TwoStageModel:
    """Fit the base, replace each target with (measured - base prediction),
    then fit the residual model on that difference set."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyDatasetError("cannot fit on an empty training set")
    base = fit_lr_xy(x, y, schema, normalization, intercept=lr_intercept)
    residuals = y - base.predict_normalized(x)
    difference = fit_svr_xy(x, residuals, schema, normalization, svr_config)
    return TwoStageModel(base=base, difference=difference)


def fit_two_stage(
    train,
    schema: CounterSchema,
    normalization: NormalizationParams,
    svr_config: SvrConfig | None = None,
    lr_intercept: bool = False,
) -> TwoStageModel:
    if not train:
        raise EmptyDatasetError("cannot fit on an empty training set")
    x = np.stack([v.counters for v in train])
    y = np.array([v.p_dynamic for v in train], dtype=np.float64)
    return fit_two_stage_xy(x, y, schema, normalization, svr_config, lr_intercept)
