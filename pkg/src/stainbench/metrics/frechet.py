"""Gaussian fits of feature sets and the Fréchet distance between them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericalError


@dataclass
class FeatureGaussian:
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_feature_gaussian(features) -> FeatureGaussian:
    """Sample mean and unbiased covariance (symmetrised) of an ``(N, d)`` matrix."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise DataError(f"features must be a 2-D (N, d) matrix, got shape {f.shape}")
    if f.shape[0] < 2:
        raise DataError("need at least two feature rows to fit a Gaussian")
    if not np.all(np.isfinite(f)):
        raise NumericalError("features contain non-finite values")
    mean = f.mean(axis=0)
    centred = f - mean
    cov = centred.T @ centred / (f.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    return FeatureGaussian(mean, cov, f.shape[0])


def _check_symmetric(m, tol=1e-8) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > tol * scale:
        raise NumericalError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def sqrtm_psd(m) -> np.ndarray:
    """Square root of a symmetric PSD matrix; negative eigenvalues are clamped to 0."""
    m = _check_symmetric(m)
    evals, evecs = np.linalg.eigh(m)
    root = np.sqrt(np.maximum(evals, 0.0))
    return (evecs * root) @ evecs.T


def frechet_distance(g1: FeatureGaussian, g2: FeatureGaussian) -> float:
    """``|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)``, clamped at 0."""
    if g1.dim != g2.dim:
        raise DataError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    diff = g1.mean - g2.mean
    s1 = _check_symmetric(g1.cov)
    s2 = _check_symmetric(g2.cov)
    root1 = sqrtm_psd(s1)
    middle = root1 @ s2 @ root1
    cross = np.sqrt(np.maximum(np.linalg.eigvalsh(0.5 * (middle + middle.T)), 0.0)).sum()
    value = float(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * cross)
    if not np.isfinite(value):
        raise NumericalError("Fréchet distance is not finite")
    return max(value, 0.0)
