"""Scikit-learn style wrappers around the stain transfer functions.

``fit`` takes a target-domain corpus (one image, an ``(N, H, W, 3)`` stack or
a sequence of images) and learns the dataset-averaged profile; ``transform``
maps source images to the target appearance. Outputs mirror the input
container: one image in, one image out; a stack in, a stack out.
"""
from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_collection, is_single_image
from .colorstat import apply_colorstat, fit_colorstat
from .profiles import ColorStatProfile, StainProfile
from .transfer import StainParams, apply_stain_transfer, fit_stain_profile

logger = logging.getLogger(__name__)


def _pack_like(X, images):
    if is_single_image(X):
        return images[0]
    if isinstance(X, np.ndarray):
        return np.stack(images)
    return images


class ColorStatNormalizer(TransformerMixin, BaseEstimator):
    """Match per-channel Lab mean and standard deviation to a target corpus.

    Parameters
    ----------
    eps : float
        Floor on the source standard deviation; a constant channel maps to
        the target mean.
    """

    def __init__(self, eps=1e-6):
        self.eps = eps

    def fit(self, X, y=None):
        profile = fit_colorstat(check_collection(X))
        self.mean_ = profile.mean
        self.std_ = profile.std
        self.n_images_ = profile.meta["corpus_size"]
        return self

    def to_profile(self) -> ColorStatProfile:
        check_is_fitted(self, ["mean_", "std_"])
        return ColorStatProfile(self.mean_, self.std_, meta={"corpus_size": self.n_images_, "skipped": 0})

    @classmethod
    def from_profile(cls, profile: ColorStatProfile, **params):
        est = cls(**params)
        est.mean_, est.std_ = profile.mean.copy(), profile.std.copy()
        est.n_images_ = profile.meta.get("corpus_size", 0)
        return est

    def transform(self, X):
        profile = self.to_profile()
        out = [apply_colorstat(img, profile, self.eps) for img in check_collection(X)]
        return _pack_like(X, out)


class _StainNormalizer(TransformerMixin, BaseEstimator):
    method = ""

    def _stain_params(self) -> StainParams:
        return StainParams(**self.get_params())

    def fit(self, X, y=None):
        profile = fit_stain_profile(check_collection(X), self.method, self._stain_params())
        self.stain_matrix_ = profile.stain_matrix
        self.max_concentration_ = profile.max_concentration
        self.n_images_ = profile.meta["corpus_size"]
        self.n_skipped_ = profile.meta["skipped"]
        return self

    def to_profile(self) -> StainProfile:
        check_is_fitted(self, ["stain_matrix_", "max_concentration_"])
        meta = {
            "corpus_size": self.n_images_,
            "skipped": self.n_skipped_,
            "params": self._stain_params().as_dict(self.method),
        }
        return StainProfile(self.method, self.stain_matrix_, self.max_concentration_, meta=meta)

    @classmethod
    def from_profile(cls, profile: StainProfile, **params):
        est = cls(**params)
        est.stain_matrix_ = profile.stain_matrix.copy()
        est.max_concentration_ = profile.max_concentration.copy()
        est.n_images_ = profile.meta.get("corpus_size", 0)
        est.n_skipped_ = profile.meta.get("skipped", 0)
        return est

    def transform_with_flags(self, X):
        """Like :meth:`transform` but also returns one pass-through flag per image."""
        profile = self.to_profile()
        params = self._stain_params()
        results = [apply_stain_transfer(img, profile, params) for img in check_collection(X)]
        images = [r[0] for r in results]
        flags = [r[1] for r in results]
        for i, flag in enumerate(flags):
            if flag:
                logger.warning("image %d passed through unchanged (%s)", i, flag)
        return _pack_like(X, images), flags

    def transform(self, X):
        return self.transform_with_flags(X)[0]


class MacenkoNormalizer(_StainNormalizer):
    """Stain transfer using the principal-plane (SVD) stain estimate.

    Parameters
    ----------
    alpha_percentile : float
        Percentile used for the robust angular extremes.
    beta_od_threshold : float
        Pixels whose OD is at or below this in every channel are background.
    max_percentile : float
        Percentile used as the pseudo-maximum concentration.
    min_pixels : int
        Minimum tissue pixels for an estimate.
    solver : {"nnls", "lstsq"}
        Concentration solver.
    """

    method = "macenko"

    def __init__(
        self,
        alpha_percentile=1.0,
        beta_od_threshold=0.15,
        max_percentile=99.0,
        min_pixels=100,
        solver="nnls",
    ):
        self.alpha_percentile = alpha_percentile
        self.beta_od_threshold = beta_od_threshold
        self.max_percentile = max_percentile
        self.min_pixels = min_pixels
        self.solver = solver


class VahadaneNormalizer(_StainNormalizer):
    """Stain transfer using a sparse non-negative stain dictionary.

    Takes the same parameters as :class:`MacenkoNormalizer` (except
    ``alpha_percentile``, used only for initialisation) plus the sparsity
    weight and iteration controls of the dictionary fit.
    """

    method = "vahadane"

    def __init__(
        self,
        sparsity_lambda=0.1,
        max_iters=200,
        tol=1e-6,
        beta_od_threshold=0.15,
        max_percentile=99.0,
        min_pixels=100,
        solver="nnls",
    ):
        self.sparsity_lambda = sparsity_lambda
        self.max_iters = max_iters
        self.tol = tol
        self.beta_od_threshold = beta_od_threshold
        self.max_percentile = max_percentile
        self.min_pixels = min_pixels
        self.solver = solver


NORMALIZERS = {
    "colorstat": ColorStatNormalizer,
    "macenko": MacenkoNormalizer,
    "vahadane": VahadaneNormalizer,
}
