"""Gaussian discriminant classifiers (quadratic and linear)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.special import logsumexp

from ..dataset import Dataset, NormalizationStats, apply_normalization, fit_normalization
from ..errors import ConfigError

log = logging.getLogger(__name__)

RIDGE = 1e-8
MAX_CONDITION = 1e12


def regularize(cov: np.ndarray) -> np.ndarray:
    """Add a trace-scaled ridge only when ``cov`` is numerically degenerate."""
    eig = np.linalg.eigvalsh(cov)
    if eig[0] > 0 and eig[-1] / eig[0] <= MAX_CONDITION:
        return cov
    l = cov.shape[0]
    log.info("covariance degenerate (min eig %.3g); adding ridge", eig[0])
    scale = np.trace(cov) / l
    if not scale > 0:
        scale = 1.0
    return cov + RIDGE * scale * np.eye(l)


def gaussian_logpdf(x: np.ndarray, mean: np.ndarray, cov_chol: np.ndarray) -> np.ndarray:
    """Row-wise log N(x; mean, L L^T) given the lower Cholesky factor ``L``."""
    l = mean.shape[0]
    z = la.solve_triangular(cov_chol, (x - mean).T, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(cov_chol)))
    return -0.5 * (maha + logdet + l * np.log(2.0 * np.pi))


@dataclass(frozen=True)
class _Discriminant:
    classes: tuple[str, ...]
    priors: np.ndarray
    means: np.ndarray  # (K, l)
    normalization: NormalizationStats | None
    config_digest: str | None

    def _prepare(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.means.shape[1]:
            raise ConfigError(f"expected {self.means.shape[1]} features, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise ConfigError("non-finite input")
        if self.normalization is not None:
            x = apply_normalization(self.normalization, x)
        return x

    def _covariance(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def log_joint(self, x) -> np.ndarray:
        """``log(pi_k f_k(x))`` for every row and class, shape (n, K)."""
        x = self._prepare(x)
        out = np.empty((x.shape[0], len(self.classes)))
        for k in range(len(self.classes)):
            chol = la.cholesky(self._covariance(k), lower=True)
            out[:, k] = np.log(self.priors[k]) + gaussian_logpdf(x, self.means[k], chol)
        return out

    def posterior(self, x) -> np.ndarray:
        lj = self.log_joint(x)
        return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))

    def predict(self, x) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest class index
        return np.asarray(self.classes)[np.argmax(self.log_joint(x), axis=1)]


@dataclass(frozen=True)
class QdaModel(_Discriminant):
    covariances: np.ndarray  # (K, l, l)
    kind = "qda"

    def _covariance(self, k):
        return self.covariances[k]


@dataclass(frozen=True)
class LdaModel(_Discriminant):
    covariance: np.ndarray  # (l, l), pooled
    kind = "lda"

    def _covariance(self, k):
        return self.covariance


def _class_stats(data: Dataset, normalize: bool):
    stats = fit_normalization(data) if normalize else None
    x = apply_normalization(stats, data.features) if normalize else data.features
    classes = tuple(data.classes)
    l = x.shape[1]
    counts, means, covs = [], [], []
    for c in classes:
        xc = x[data.labels == c]
        if xc.shape[0] < l + 1:
            raise ConfigError(f"insufficient samples for class {c!r}: {xc.shape[0]} < {l + 1}")
        counts.append(xc.shape[0])
        means.append(xc.mean(axis=0))
        covs.append(np.atleast_2d(np.cov(xc, rowvar=False, ddof=1)))
    counts = np.array(counts, dtype=float)
    digest = data.config.digest() if data.config is not None else None
    return classes, counts, np.array(means), np.array(covs), stats, digest


def _pooled(counts, covs):
    weights = counts - 1.0
    return np.tensordot(weights, covs, axes=1) / weights.sum()


def fit_qda(data: Dataset, normalize: bool = True, pooled_covariance: bool = False) -> QdaModel:
    """Per-class priors, means and unbiased covariances.

    With ``normalize`` the model stores z-score statistics of ``data`` and
    works in standardized space; ``predict`` then takes raw features.
    ``pooled_covariance`` forces one shared covariance (the LDA special case).
    """
    classes, counts, means, covs, stats, digest = _class_stats(data, normalize)
    if pooled_covariance:
        covs = np.repeat(_pooled(counts, covs)[None], len(classes), axis=0)
    covs = np.array([regularize(c) for c in covs])
    return QdaModel(classes=classes, priors=counts / counts.sum(), means=means,
                    normalization=stats, config_digest=digest, covariances=covs)


def fit_lda(data: Dataset, normalize: bool = True) -> LdaModel:
    classes, counts, means, covs, stats, digest = _class_stats(data, normalize)
    pooled = _pooled(counts, covs)
    return LdaModel(classes=classes, priors=counts / counts.sum(), means=means,
                    normalization=stats, config_digest=digest, covariance=regularize(pooled))

