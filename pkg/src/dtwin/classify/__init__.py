"""Classifiers for damage scenarios: QDA, LDA, 1-NN and a Gini tree."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .discriminant import LdaModel, QdaModel, fit_lda, fit_qda
from .evaluation import ConfusionMatrix, ConfusionReport, accuracy, confusion, cross_validate
from .knn import KnnModel, fit_knn
from .tree import TreeModel, fit_tree

FITTERS = {"qda": fit_qda, "lda": fit_lda, "knn": fit_knn, "tree": fit_tree}


def fit(kind: str, data, **kw):
    try:
        fitter = FITTERS[kind]
    except KeyError:
        raise ConfigError(f"unknown classifier {kind!r}; choose from {sorted(FITTERS)}") from None
    return fitter(data, **kw)


def predict(model, x):
    """Label and posterior vector for a single raw feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ConfigError("predict expects one feature vector")
    post = model.posterior(x[None, :])[0]
    return str(model.predict(x[None, :])[0]), post


__all__ = [
    "FITTERS", "fit", "predict", "fit_qda", "fit_lda", "fit_knn", "fit_tree",
    "QdaModel", "LdaModel", "KnnModel", "TreeModel",
    "cross_validate", "confusion", "accuracy", "ConfusionMatrix", "ConfusionReport",
]
