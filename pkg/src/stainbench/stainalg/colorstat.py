"""Colour-statistics transfer in Lab space (Reinhard-style)."""
from __future__ import annotations

import numpy as np

from .. import imagecore
from .._validation import check_rgb, collection_items, load_rgb
from ..errors import DataError
from .profiles import ColorStatProfile

STD_EPS = 1e-6

# Rows per block; keeps the float64 temporaries cache resident.
_BLOCK = 8192


def _lab_rows(rgb: np.ndarray) -> np.ndarray:
    rows = rgb.reshape(-1, 3)
    lab = np.empty(rows.shape, dtype=np.float64)
    for i in range(0, len(rows), _BLOCK):
        lab[i : i + _BLOCK] = imagecore.rgb_rows_to_lab(rows[i : i + _BLOCK])
    return lab


def _mean_std(lab: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Column sums through a matrix-vector product; axis-0 reductions over
    # (N, 3) arrays are several times slower.
    ones = np.ones(len(lab))
    mean = ones @ lab / len(lab)
    centred = lab - mean
    centred *= centred
    std = np.sqrt(ones @ centred / len(lab))
    return mean, std


def stats_lab(image) -> ColorStatProfile:
    """Lab mean and population standard deviation of one image."""
    mean, std = _mean_std(_lab_rows(check_rgb(image)))
    return ColorStatProfile(mean, std)


def fit_colorstat(corpus, map_fn=map) -> ColorStatProfile:
    """Unweighted average of per-image Lab means and standard deviations.

    ``corpus`` items may be arrays, tiles or image paths; ``map_fn`` can be
    swapped for a pool's ``map`` to compute per-image statistics in parallel.
    """
    items = collection_items(corpus)
    if not items:
        raise DataError("cannot fit colour statistics on an empty corpus")
    stats = list(map_fn(lambda item: stats_lab(load_rgb(item)), items))
    return ColorStatProfile(
        _order_free_mean([s.mean for s in stats]),
        _order_free_mean([s.std for s in stats]),
        meta={"corpus_size": len(items), "skipped": 0},
    )


def _order_free_mean(vectors) -> np.ndarray:
    # Sorting each coordinate first makes the sum independent of corpus order.
    return np.sort(np.stack(vectors), axis=0).mean(axis=0)


def apply_colorstat(image, target: ColorStatProfile, eps: float = STD_EPS) -> np.ndarray:
    """Map each Lab channel to the target mean/std, then back to 8-bit RGB.

    Per channel ``out = (lab - mean_src) * std_tgt / max(std_src, eps) + mean_tgt``.
    Lab is affine in the cube-root XYZ values ``f``, so the whole transfer is
    done as one affine map on ``f`` and Lab is never materialised.
    """
    rgb = check_rgb(image)
    rows = rgb.reshape(-1, 3)
    n = len(rows)
    f = np.empty((n, 3), dtype=np.float64)
    for i in range(0, n, _BLOCK):
        f[i : i + _BLOCK] = imagecore.rgb_rows_to_f(rows[i : i + _BLOCK])

    ones = np.ones(min(n, _BLOCK))
    f_mean = sum(ones[: len(b)] @ b for b in _blocks(f)) / n
    cov = np.zeros((3, 3))
    for b in _blocks(f):
        c = b - f_mean
        cov += c.T @ c
    cov /= n
    to_lab = imagecore.F_TO_LAB
    mean = f_mean @ to_lab + imagecore.LAB_OFFSET
    std = np.sqrt(np.maximum(np.einsum("ic,ij,jc->c", to_lab, cov, to_lab), 0.0))

    scale = target.std / np.maximum(std, eps)
    shift = target.mean - mean * scale
    # lab' = lab * scale + shift, expressed on f.
    lin = to_lab * scale @ imagecore.LAB_TO_F
    const = (imagecore.LAB_OFFSET * scale + shift - imagecore.LAB_OFFSET) @ imagecore.LAB_TO_F

    out = np.empty((n, 3), dtype=np.uint8)
    for i in range(0, n, _BLOCK):
        g = f[i : i + _BLOCK] @ lin
        g += const
        out[i : i + _BLOCK] = imagecore.f_rows_to_rgb(g)
    return out.reshape(rgb.shape)


def _blocks(a):
    for i in range(0, len(a), _BLOCK):
        yield a[i : i + _BLOCK]
