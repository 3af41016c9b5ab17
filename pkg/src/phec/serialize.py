"""Model persistence: versioned JSON, every float written as a shortest
round-trip decimal, so load(save(m)) reproduces m bit-exactly."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .classify.forest import ForestModel, Tree
from .classify.knn import KnnModel
from .classify.nets import LinearModel, MlpModel
from .errors import DataError
from .federated import StackedModel
from .reduce import PcaModel

MODEL_FORMAT = "phec-model"
MODEL_VERSION = 1


def _nan_to_none(values) -> list:
    return [None if math.isnan(v) else v for v in values]


def _none_to_nan(values) -> np.ndarray:
    return np.array([math.nan if v is None else v for v in values], dtype=np.float64)


def _encode_tree(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": _nan_to_none(tree.threshold.tolist()),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": _nan_to_none(tree.value.tolist()),
    }


def _decode_tree(payload: dict) -> Tree:
    return Tree(
        np.array(payload["feature"], dtype=np.int64),
        _none_to_nan(payload["threshold"]),
        np.array(payload["left"], dtype=np.int64),
        np.array(payload["right"], dtype=np.int64),
        _none_to_nan(payload["value"]),
    )


def _encode_mlp(model: MlpModel) -> dict:
    return {
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "alpha": model.alpha,
        "epochs_trained": model.epochs_trained,
        "loss_history": model.loss_history,
    }


def _decode_mlp(payload: dict) -> MlpModel:
    return MlpModel(
        [np.array(w, dtype=np.float64) for w in payload["weights"]],
        [np.array(b, dtype=np.float64) for b in payload["biases"]],
        payload["alpha"],
        payload["epochs_trained"],
        list(payload["loss_history"]),
    )


def encode_model(model) -> dict:
    """Typed payload for any supported fitted model."""
    if isinstance(model, PcaModel):
        return {
            "kind": "pca",
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "explained_variance": model.explained_variance.tolist(),
        }
    if isinstance(model, KnnModel):
        return {
            "kind": "knn",
            "k": model.k,
            "features": model.features.tolist(),
            "labels": model.labels.tolist(),
        }
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "n_features": model.n_features,
            "max_depth": model.max_depth,
            "features_per_split": model.features_per_split,
            "bootstrap": model.bootstrap,
            "seed": model.seed,
            "trees": [_encode_tree(t) for t in model.trees],
        }
    if isinstance(model, LinearModel):
        return {
            "kind": "linear",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "alpha": model.alpha,
            "loss_history": model.loss_history,
        }
    if isinstance(model, MlpModel):
        return {"kind": "mlp", **_encode_mlp(model)}
    if isinstance(model, StackedModel):
        return {
            "kind": "stacked",
            "gamma_star": model.gamma_star,
            "aggregator": model.aggregator,
            "columns": [_encode_mlp(c) for c in model.columns],
        }
    raise DataError(f"save_model: unsupported model type {type(model).__name__}")


def decode_model(payload: dict):
    kind = payload.get("kind")
    if kind == "pca":
        return PcaModel(
            np.array(payload["mean"], dtype=np.float64),
            np.array(payload["components"], dtype=np.float64),
            np.array(payload["explained_variance"], dtype=np.float64),
        )
    if kind == "knn":
        return KnnModel(
            np.array(payload["features"], dtype=np.float64),
            np.array(payload["labels"], dtype=np.uint8),
            payload["k"],
        )
    if kind == "forest":
        return ForestModel(
            [_decode_tree(t) for t in payload["trees"]],
            payload["n_features"],
            payload["max_depth"],
            payload["features_per_split"],
            payload["bootstrap"],
            payload["seed"],
        )
    if kind == "linear":
        return LinearModel(
            np.array(payload["weights"], dtype=np.float64),
            payload["bias"],
            payload["alpha"],
            list(payload["loss_history"]),
        )
    if kind == "mlp":
        return _decode_mlp(payload)
    if kind == "stacked":
        return StackedModel(
            [_decode_mlp(c) for c in payload["columns"]],
            payload["gamma_star"],
            payload["aggregator"],
        )
    raise DataError(f"load_model: unknown model kind {kind!r}")


def save_model(model, path):
    payload = {"format": MODEL_FORMAT, "version": MODEL_VERSION, **encode_model(model)}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_model(path):
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: corrupt model file ({exc})")
    if payload.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} file")
    if "version" not in payload:
        raise DataError(f"{path}: missing format version")
    if payload["version"] != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {payload['version']}")
    return decode_model(payload)
