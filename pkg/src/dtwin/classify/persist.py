"""JSON model artifacts.

Floats are written with 17 significant digits so a load restores every
parameter bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..dataset import NormalizationStats, atomic_write_text
from ..errors import ConfigError
from .discriminant import LdaModel, QdaModel
from .knn import KnnModel
from .tree import TreeModel

FORMAT_VERSION = 1


def _encode(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ConfigError("cannot serialise non-finite value")
        return f"{float(obj):.16e}"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def model_to_dict(model) -> dict:
    d = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "labels": list(model.classes),
        "normalization": model.normalization.to_dict() if model.normalization else None,
        "config_digest": model.config_digest,
    }
    if isinstance(model, QdaModel):
        d.update(priors=model.priors, means=model.means, covariances=model.covariances)
    elif isinstance(model, LdaModel):
        d.update(priors=model.priors, means=model.means, covariance=model.covariance)
    elif isinstance(model, KnnModel):
        d.update(points=model.points, point_labels=model.point_labels)
    elif isinstance(model, TreeModel):
        d.update(feature=model.feature, threshold=model.threshold, left=model.left,
                 right=model.right, counts=model.counts)
    else:
        raise TypeError(f"unsupported model {type(model).__name__}")
    return d


def model_from_dict(d: dict):
    try:
        kind = d["kind"]
        common = dict(
            classes=tuple(d["labels"]),
            normalization=NormalizationStats.from_dict(d["normalization"]) if d.get("normalization") else None,
            config_digest=d.get("config_digest"),
        )
        arr = lambda key, dtype=float: np.array(d[key], dtype=dtype)  # noqa: E731
        if kind == "qda":
            return QdaModel(priors=arr("priors"), means=arr("means"),
                            covariances=arr("covariances"), **common)
        if kind == "lda":
            return LdaModel(priors=arr("priors"), means=arr("means"),
                            covariance=arr("covariance"), **common)
        if kind == "knn":
            return KnnModel(points=arr("points"), point_labels=arr("point_labels", int), **common)
        if kind == "tree":
            return TreeModel(feature=arr("feature", int), threshold=arr("threshold"),
                             left=arr("left", int), right=arr("right", int),
                             counts=arr("counts", int), **common)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    atomic_write_text(path, _encode(model_to_dict(model)) + "\n")


def load_model(path):
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc
    return model_from_dict(d)
