"""JSON serialization of model artifacts.

Artifact layout: ``{"kind", "schema", "normalization", "params"}`` with kind
one of lrpm|svmpm|nnpm|tspm. Floats are written with full round-trip
precision, so a saved and reloaded model predicts identically.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..core import CounterSchema, NormalizationParams
from ..util import as_float_list, dump_json, load_json
from .linear import LinearModel
from .nn import NnConfig, NnModel
from .svr import SvrConfig, SvrModel
from .two_stage import TwoStageModel

KINDS = ("lrpm", "svmpm", "nnpm", "tspm")


def model_kind(model) -> str:
    if isinstance(model, LinearModel):
        return "lrpm"
    if isinstance(model, SvrModel):
        return "svmpm"
    if isinstance(model, NnModel):
        return "nnpm"
    if isinstance(model, TwoStageModel):
        return "tspm"
    raise TypeError(f"unknown model type {type(model).__name__}")


def _norm_dict(params: NormalizationParams) -> dict:
    return {"min": as_float_list(params.minima), "max": as_float_list(params.maxima)}


def _norm_from(data: dict) -> NormalizationParams:
    return NormalizationParams(
        minima=np.array(data["min"], dtype=np.float64),
        maxima=np.array(data["max"], dtype=np.float64),
    )


def _lr_params(model: LinearModel) -> dict:
    return {
        "coefficients": as_float_list(model.coefficients),
        "intercept": float(model.intercept),
    }


def _lr_from(params: dict, schema: CounterSchema, norm: NormalizationParams) -> LinearModel:
    return LinearModel(
        schema=schema,
        normalization=norm,
        coefficients=np.array(params["coefficients"], dtype=np.float64),
        intercept=float(params.get("intercept", 0.0)),
    )


def _svr_params(model: SvrModel) -> dict:
    return {
        "kernel": model.config.kernel,
        "gamma": model.config.gamma,
        "c": model.config.c,
        "epsilon": model.config.epsilon,
        "tol": model.config.tol,
        "max_iter": model.config.max_iter,
        "support_x": [as_float_list(row) for row in model.support_x],
        "dual_coef": as_float_list(model.dual_coef),
        "bias": float(model.bias),
        "kkt_gap": float(model.kkt_gap),
        "iterations": int(model.iterations),
    }


def _svr_from(params: dict, schema: CounterSchema, norm: NormalizationParams) -> SvrModel:
    config = SvrConfig(
        kernel=params["kernel"],
        gamma=params["gamma"],
        c=params["c"],
        epsilon=params["epsilon"],
        tol=params.get("tol", 1e-3),
        max_iter=params.get("max_iter", 200_000),
    )
    support = np.array(params["support_x"], dtype=np.float64)
    if support.size == 0:
        support = support.reshape(0, schema.n)
    return SvrModel(
        schema=schema,
        normalization=norm,
        config=config,
        support_x=support,
        dual_coef=np.array(params["dual_coef"], dtype=np.float64),
        bias=float(params["bias"]),
        kkt_gap=float(params.get("kkt_gap", 0.0)),
        iterations=int(params.get("iterations", 0)),
    )


def _nn_params(model: NnModel) -> dict:
    return {
        "activation": model.activation,
        "hidden": list(model.config.hidden),
        "learning_rate": model.config.learning_rate,
        "epochs": model.config.epochs,
        "batch_size": model.config.batch_size,
        "rng_seed": model.config.rng_seed,
        "weights": [[as_float_list(row) for row in w] for w in model.weights],
        "biases": [as_float_list(b) for b in model.biases],
    }


def _nn_from(params: dict, schema: CounterSchema, norm: NormalizationParams) -> NnModel:
    config = NnConfig(
        hidden=tuple(params["hidden"]),
        activation=params["activation"],
        learning_rate=params.get("learning_rate", 0.05),
        epochs=params.get("epochs", 300),
        batch_size=params.get("batch_size", 32),
        rng_seed=params.get("rng_seed", 0),
    )
    return NnModel(
        schema=schema,
        normalization=norm,
        weights=[np.array(w, dtype=np.float64) for w in params["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in params["biases"]],
        activation=params["activation"],
        config=config,
    )


def to_json_dict(model) -> dict:
    kind = model_kind(model)
    if kind == "lrpm":
        params = _lr_params(model)
    elif kind == "svmpm":
        params = _svr_params(model)
    elif kind == "nnpm":
        params = _nn_params(model)
    else:
        params = {"base": _lr_params(model.base), "difference": _svr_params(model.difference)}
    return {
        "kind": kind,
        "schema": list(model.schema.names),
        "normalization": _norm_dict(model.normalization),
        "params": params,
    }


def from_json_dict(data: dict):
    kind = data["kind"]
    schema = CounterSchema(names=tuple(data["schema"]))
    norm = _norm_from(data["normalization"])
    params = data["params"]
    if kind == "lrpm":
        return _lr_from(params, schema, norm)
    if kind == "svmpm":
        return _svr_from(params, schema, norm)
    if kind == "nnpm":
        return _nn_from(params, schema, norm)
    if kind == "tspm":
        return TwoStageModel(
            base=_lr_from(params["base"], schema, norm),
            difference=_svr_from(params["difference"], schema, norm),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> Path:
    path = Path(path)
    dump_json(to_json_dict(model), path)
    return path


def load_model(path: str | Path):
    return from_json_dict(load_json(path))
