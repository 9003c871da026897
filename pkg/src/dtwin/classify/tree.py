"""Binary classification tree grown best-first on Gini impurity."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, NormalizationStats, apply_normalization, fit_normalization
from ..errors import ConfigError

MAX_SPLITS = 100


def gini(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n[..., None]
    return np.where(n > 0, 1.0 - np.sum(p * p, axis=-1), 0.0)


def best_split(x: np.ndarray, y: np.ndarray, n_classes: int):
    """Best axis-aligned split of one node.

    Returns ``(gain, feature, threshold)`` where gain is the decrease in
    ``n * gini``; ``None`` if no split separates distinct values. Thresholds
    sit midway between consecutive distinct sorted values; ties keep the
    lowest feature and the lowest threshold.
    """
    n = y.size
    total = np.bincount(y, minlength=n_classes).astype(float)
    parent = n * gini(total)
    best = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        nl = np.arange(1, n, dtype=float)
        child = nl * gini(left) + (n - nl) * gini(right)
        gain = np.where(valid, parent - child, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            best = (float(gain[i]), j, 0.5 * (xs[i] + xs[i + 1]))
    return best


@dataclass(frozen=True)
class TreeModel:
    classes: tuple[str, ...]
    feature: np.ndarray  # -1 for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (nodes, K) training class counts per node
    normalization: NormalizationStats | None
    config_digest: str | None = None
    kind = "tree"

    @property
    def split_count(self) -> int:
        return int(np.sum(self.feature >= 0))

    def _leaves(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise ConfigError("non-finite input")
        if self.normalization is not None:
            x = apply_normalization(self.normalization, x)
        node = np.zeros(x.shape[0], dtype=int)
        while True:
            inner = self.feature[node] >= 0
            if not np.any(inner):
                return node
            rows = np.flatnonzero(inner)
            n = node[rows]
            go_left = x[rows, self.feature[n]] < self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])

    def posterior(self, x) -> np.ndarray:
        c = self.counts[self._leaves(x)]
        return c / c.sum(axis=1, keepdims=True)

    def predict(self, x) -> np.ndarray:
        return np.asarray(self.classes)[np.argmax(self.counts[self._leaves(x)], axis=1)]


def fit_tree(data: Dataset, normalize: bool = True, max_splits: int = MAX_SPLITS) -> TreeModel:
    if len(data) == 0:
        raise ConfigError("tree needs a nonempty training set")
    stats = fit_normalization(data) if normalize else None
    x = apply_normalization(stats, data.features) if normalize else data.features
    classes = tuple(data.classes)
    k = len(classes)
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[c] for c in data.labels])

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[rows], minlength=k))
        return len(feature) - 1

    heap = []  # (-gain, node id, rows, feature, threshold)

    def consider(node, rows):
        if gini(counts[node]) <= 0:
            return
        found = best_split(x[rows], y[rows], k)
        if found is not None and found[0] > 0:
            gain, j, t = found
            heapq.heappush(heap, (-gain, node, j, t, rows))

    consider(new_node(np.arange(y.size)), np.arange(y.size))
    splits = 0
    while heap and splits < max_splits:
        _, node, j, t, rows = heapq.heappop(heap)
        mask = x[rows, j] < t
        lrows, rrows = rows[mask], rows[~mask]
        feature[node], threshold[node] = j, t
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        splits += 1
        consider(left[node], lrows)
        consider(right[node], rrows)

    return TreeModel(
        classes=classes,
        feature=np.array(feature),
        threshold=np.array(threshold),
        left=np.array(left),
        right=np.array(right),
        counts=np.array(counts),
        normalization=stats,
        config_digest=data.config.digest() if data.config is not None else None,
    )
