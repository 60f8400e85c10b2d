"""Per-image stain estimation, corpus fitting and stain transfer."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import imagecore
from .._validation import check_rgb, collection_items, load_rgb
from ..errors import DataError, NoUsableTiles, StainEstimationError
from .deconvolution import compute_concentrations, pseudo_max_concentration
from .macenko import MIN_TISSUE_PIXELS, estimate_stain_matrix_macenko
from .profiles import STAIN_METHODS, StainProfile
from .vahadane import fit_vahadane_dictionary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StainParams:
    """Estimation parameters shared by Macenko and Vahadane."""

    alpha_percentile: float = 1.0
    beta_od_threshold: float = 0.15
    max_percentile: float = 99.0
    min_pixels: int = MIN_TISSUE_PIXELS
    solver: str = "nnls"
    sparsity_lambda: float = 0.1
    max_iters: int = 200
    tol: float = 1e-6

    def as_dict(self, method: str) -> dict:
        keys = ["beta_od_threshold", "max_percentile", "min_pixels", "solver"]
        if method == "macenko":
            keys.append("alpha_percentile")
        else:
            keys += ["sparsity_lambda", "max_iters", "tol"]
        return {k: getattr(self, k) for k in sorted(keys)}


def estimate_stain_matrix(od, method: str, params: StainParams = StainParams()) -> np.ndarray:
    if method == "macenko":
        return estimate_stain_matrix_macenko(
            od, params.alpha_percentile, params.beta_od_threshold, params.min_pixels
        )
    if method == "vahadane":
        return fit_vahadane_dictionary(
            od,
            sparsity_lambda=params.sparsity_lambda,
            max_iters=params.max_iters,
            tol=params.tol,
            beta_od_threshold=params.beta_od_threshold,
            min_pixels=params.min_pixels,
        )
    raise DataError(f"unknown stain method {method!r}; expected one of {STAIN_METHODS}")


def estimate_stain_profile(image, method: str, params: StainParams = StainParams()) -> StainProfile:
    """Stain matrix and pseudo-maximum concentrations of a single image."""
    od = imagecore.rgb_to_od(image)
    return _profile_from_od(od, method, params)


def _profile_from_od(od, method, params):
    matrix = estimate_stain_matrix(od, method, params)
    conc = compute_concentrations(od, matrix, params.solver)
    return StainProfile(method, matrix, pseudo_max_concentration(conc, params.max_percentile))


def _try_estimate(item, method, params):
    try:
        return estimate_stain_profile(load_rgb(item), method, params)
    except StainEstimationError as exc:
        return f"{type(exc).__name__}: {exc}"


def fit_stain_profile(
    corpus, method: str = "macenko", params: StainParams = StainParams(), map_fn=map
) -> StainProfile:
    """Average per-image stain matrices and pseudo-maxima over a corpus.

    Tiles whose estimation fails are skipped and counted. The averaged matrix
    columns are renormalised to unit length. ``corpus`` items may be arrays,
    tiles or image paths; ``map_fn`` may be a pool's ``map``.
    """
    method = method.lower()
    if method not in STAIN_METHODS:
        raise DataError(f"unknown stain method {method!r}; expected one of {STAIN_METHODS}")
    images = collection_items(corpus)
    if not images:
        raise DataError("cannot fit a stain profile on an empty corpus")
    fitted, skipped = [], []
    results = map_fn(lambda item: _try_estimate(item, method, params), images)
    for idx, res in enumerate(results):
        if isinstance(res, str):
            skipped.append((idx, res))
        else:
            fitted.append(res)
    if not fitted:
        raise NoUsableTiles(skipped)
    if skipped:
        logger.info("skipped %d of %d tiles during %s fit", len(skipped), len(images), method)

    # Coordinate-wise sort before summing keeps the result independent of
    # corpus order.
    matrix = np.sort(np.stack([p.stain_matrix for p in fitted]), axis=0).mean(axis=0)
    matrix /= np.linalg.norm(matrix, axis=0)
    max_conc = np.sort(np.stack([p.max_concentration for p in fitted]), axis=0).mean(axis=0)
    meta = {
        "corpus_size": len(images),
        "skipped": len(skipped),
        "params": params.as_dict(method),
    }
    return StainProfile(method, matrix, max_conc, meta=meta)


def transfer_od(od, target: StainProfile, params: StainParams = StainParams()) -> np.ndarray:
    """Re-express ``od`` with the target stains; returns unquantised OD rows."""
    source = _profile_from_od(od, target.method, params)
    conc = compute_concentrations(od, source.stain_matrix, params.solver)
    scale = np.divide(
        target.max_concentration,
        source.max_concentration,
        out=np.ones(2),
        where=source.max_concentration > 0,
    )
    conc *= scale
    return conc @ target.stain_matrix.T


def apply_stain_transfer(image, target: StainProfile, params: StainParams = StainParams()):
    """Transfer one image to the target stain appearance.

    Returns ``(rgb, flag)``. When the image itself cannot be decomposed
    (blank, or only one stain present) it is passed through unchanged and
    ``flag`` names the reason; otherwise ``flag`` is ``None``.
    """
    rgb = check_rgb(image)
    od = imagecore.rgb_to_od(rgb)
    try:
        out_od = transfer_od(od, target, params)
    except StainEstimationError as exc:
        return rgb.copy(), f"passthrough:{type(exc).__name__}"
    h, w = rgb.shape[:2]
    return imagecore.od_to_rgb(out_od, w, h), None
