from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, NormalizationStats, apply_normalization, fit_normalization
from ..errors import ConfigError


@dataclass(frozen=True)
class KnnModel:
    """One nearest neighbour, Euclidean distance in standardized space."""

    classes: tuple[str, ...]
    points: np.ndarray
    point_labels: np.ndarray  # class indices
    normalization: NormalizationStats | None
    config_digest: str | None = None
    kind = "knn"

    def _nearest(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.points.shape[1]:
            raise ConfigError(f"expected {self.points.shape[1]} features, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise ConfigError("non-finite input")
        if self.normalization is not None:
            x = apply_normalization(self.normalization, x)
        d2 = (np.sum(x * x, axis=1)[:, None] - 2.0 * x @ self.points.T
              + np.sum(self.points * self.points, axis=1)[None, :])
        # first minimum wins, i.e. the earliest stored point
        return self.point_labels[np.argmin(d2, axis=1)]

    def posterior(self, x) -> np.ndarray:
        idx = self._nearest(x)
        out = np.zeros((idx.size, len(self.classes)))
        out[np.arange(idx.size), idx] = 1.0
        return out

    def predict(self, x) -> np.ndarray:
        return np.asarray(self.classes)[self._nearest(x)]


def fit_knn(data: Dataset, normalize: bool = True) -> KnnModel:
    if len(data) == 0:
        raise ConfigError("kNN needs a nonempty training set")
    stats = fit_normalization(data) if normalize else None
    x = apply_normalization(stats, data.features) if normalize else data.features
    classes = tuple(data.classes)
    index = {c: i for i, c in enumerate(classes)}
    return KnnModel(
        classes=classes,
        points=np.array(x),
        point_labels=np.array([index[c] for c in data.labels]),
        normalization=stats,
        config_digest=data.config.digest() if data.config is not None else None,
    )
