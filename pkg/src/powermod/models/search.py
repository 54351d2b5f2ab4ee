"""Hyperparameter grid search scored on validation mean percent error."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import CounterSchema, NormalizationParams


def _mean_ape(pred: np.ndarray, measured: np.ndarray) -> float:
    live = measured > 0
    if not live.any():
        return float("inf")
    return float(np.mean(100.0 * np.abs(pred[live] - measured[live]) / measured[live]))


def grid_search(
    kind: str,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    grid: Sequence,
    schema: CounterSchema,
    normalization: NormalizationParams,
):
    """Fit one model per grid entry, return (best config, its validation error).

    The grid holds ``SvrConfig``/``NnConfig`` objects (or None for defaults)
    matching ``kind``. Ties keep the earliest grid entry.
    """
    from . import train_model

    if not grid:
        raise ValueError("grid must contain at least one configuration")
    best_config = None
    best_error = np.inf
    for config in grid:
        if kind in ("svmpm", "tspm"):
            model = train_model(kind, x_train, y_train, schema, normalization, svr_config=config)
        elif kind == "nnpm":
            model = train_model(kind, x_train, y_train, schema, normalization, nn_config=config)
        else:
            model = train_model(kind, x_train, y_train, schema, normalization)
        error = _mean_ape(model.predict_normalized(x_val), y_val)
        if error < best_error:
            best_error = error
            best_config = config
    return best_config, float(best_error)
