"""Stain matrix estimation from the principal OD plane (Macenko et al.)."""
from __future__ import annotations

import numpy as np

from .._validation import check_od
from ..errors import DegenerateStainPlane, InsufficientTissue
from .deconvolution import canonical_stain_matrix

MIN_TISSUE_PIXELS = 100

# Second/first eigenvalue ratio of the OD Gram matrix below which the tile is
# treated as single-stain. 8-bit quantisation alone yields ratios around 1e-6
# to 1e-5; a second stain at 5% strength already gives about 1.5e-4.
DEGENERATE_EIGEN_RATIO = 3e-5


def tissue_rows(od, beta: float = 0.15, min_pixels: int = MIN_TISSUE_PIXELS) -> np.ndarray:
    """Rows with OD above ``beta`` in at least one channel; raises if too few.

    Only pixels that are transparent in every channel are dropped. Requiring
    all channels would discard most eosin-only pixels, whose red and blue
    densities are small.
    """
    od = check_od(od)
    keep = od[(od > beta).any(axis=1)]
    if len(keep) < min_pixels:
        raise InsufficientTissue(len(keep), min_pixels)
    return keep


def principal_plane(od: np.ndarray) -> np.ndarray:
    """The two leading right-singular vectors of ``od`` as a 3x2 matrix."""
    gram = od.T @ od
    evals, evecs = np.linalg.eigh(gram)
    evals = np.maximum(evals, 0.0)
    if evals[1] <= DEGENERATE_EIGEN_RATIO * evals[2]:
        raise DegenerateStainPlane("optical densities are rank one; only one stain present")
    plane = evecs[:, [2, 1]]
    # Orient both axes towards the positive octant.
    plane *= np.where(plane.sum(axis=0) < 0, -1.0, 1.0)
    return plane


def estimate_stain_matrix_macenko(
    od,
    alpha_percentile: float = 1.0,
    beta_od_threshold: float = 0.15,
    min_pixels: int = MIN_TISSUE_PIXELS,
) -> np.ndarray:
    """Estimate the 3x2 stain matrix of an OD matrix.

    Tissue rows are projected on their principal plane; the robust angular
    extremes (``alpha`` and ``100 - alpha`` percentiles) give the stain
    directions.
    """
    tissue = tissue_rows(od, beta_od_threshold, min_pixels)
    plane = principal_plane(tissue)
    proj = tissue @ plane
    phi = np.arctan2(proj[:, 1], proj[:, 0])
    lo, hi = np.percentile(phi, [alpha_percentile, 100.0 - alpha_percentile])
    if hi - lo <= 1e-9:
        raise DegenerateStainPlane("angular spread of tissue pixels is zero")
    ends = np.array([[np.cos(lo), np.cos(hi)], [np.sin(lo), np.sin(hi)]])
    return canonical_stain_matrix(plane @ ends)
