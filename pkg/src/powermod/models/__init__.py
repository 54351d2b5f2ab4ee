"""The four power models behind one fit/predict contract.

* lrpm: linear sum of counter values (``linear``)
* svmpm: epsilon-tube kernel regression (``svr``)
* nnpm: feed-forward network (``nn``)
* tspm: linear base plus kernel residual model (``two_stage``)

Every fitted model carries its schema and the normalization parameters it
was trained under, so ``predict`` accepts raw vectors and scales them itself;
already-normalized vectors are used as-is.
"""

from __future__ import annotations

import numpy as np

from ..core import (
    CounterSchema,
    NormalizationParams,
    NormalizedVector,
    Vector,
)
from ..errors import SchemaMismatchError
from .io import KINDS, load_model, model_kind, save_model, to_json_dict, from_json_dict
from .linear import LinearModel, fit_lr, fit_lr_xy
from .nn import NnConfig, NnModel, fit_nn, fit_nn_xy, init_model
from .search import grid_search
from .svr import SvrConfig, SvrModel, dual_objective, fit_svr, fit_svr_xy, kernel_matrix
from .two_stage import TwoStageModel, fit_two_stage, fit_two_stage_xy

PowerModel = LinearModel | SvrModel | NnModel | TwoStageModel


def predict_batch(model: PowerModel, x_normalized: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x_normalized, dtype=np.float64))
    if x.shape[1] != model.schema.n:
        raise SchemaMismatchError(
            f"input has {x.shape[1]} counters, model expects {model.schema.n}"
        )
    return model.predict_normalized(x)


def predict(model: PowerModel, vector: Vector | NormalizedVector) -> float:
    """Predict watts for one vector; raw vectors are normalized first."""
    if isinstance(vector, Vector):
        x = model.normalization.apply(vector.counters)[None, :]
    else:
        x = np.asarray(vector.counters, dtype=np.float64)[None, :]
    return float(predict_batch(model, x)[0])


def train_model(
    kind: str,
    x: np.ndarray,
    y: np.ndarray,
    schema: CounterSchema,
    normalization: NormalizationParams,
    svr_config: SvrConfig | None = None,
    nn_config: NnConfig | None = None,
    lr_intercept: bool = False,
) -> PowerModel:
    """Fit one model kind on normalized counters ``x`` and watt targets ``y``."""
    if kind == "lrpm":
        return fit_lr_xy(x, y, schema, normalization, intercept=lr_intercept)
    if kind == "svmpm":
        return fit_svr_xy(x, y, schema, normalization, svr_config)
    if kind == "nnpm":
        return fit_nn_xy(x, y, schema, normalization, nn_config)
    if kind == "tspm":
        return fit_two_stage_xy(x, y, schema, normalization, svr_config, lr_intercept)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")


__all__ = [
    "KINDS",
    "LinearModel",
    "NnConfig",
    "NnModel",
    "PowerModel",
    "SvrConfig",
    "SvrModel",
    "TwoStageModel",
    "dual_objective",
    "fit_lr",
    "fit_lr_xy",
    "fit_nn",
    "fit_nn_xy",
    "fit_svr",
    "fit_svr_xy",
    "fit_two_stage",
    "fit_two_stage_xy",
    "from_json_dict",
    "grid_search",
    "init_model",
    "kernel_matrix",
    "load_model",
    "model_kind",
    "predict",
    "predict_batch",
    "save_model",
    "to_json_dict",
    "train_model",
]
