"""Synthetic two-stain tiles with tissue-like texture.

Used by the test-suite and the demo pipeline in place of real slides. Tiles
are built in optical density space from a known stain matrix, so stain
estimates can be checked against the truth.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import imagecore
from .stainalg.deconvolution import canonical_stain_matrix

HE_STAINS = canonical_stain_matrix([[0.650, 0.072], [0.704, 0.990], [0.286, 0.105]])
MT_STAINS = canonical_stain_matrix([[0.560, 0.830], [0.780, 0.250], [0.280, 0.500]])


def _smooth_field(rng, shape, sigma):
    field = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    field -= field.min()
    peak = field.max()
    return field / peak if peak > 0 else field


def concentration_maps(rng, size, background=0.25, nuclei=30):
    """Two non-negative concentration maps of shape ``(size, size)``.

    Stain 0 carries round nuclei on a faint texture, stain 1 a smooth stroma
    field. A ``background`` fraction of the area is left empty.
    """
    h = 0.15 * _smooth_field(rng, (size, size), size / 24)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(nuclei):
        cy, cx = rng.uniform(0, size, 2)
        r = rng.uniform(size / 60, size / 25)
        h += 1.2 * np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r)) ** 2)
    e = 0.2 + 0.9 * _smooth_field(rng, (size, size), size / 16)
    mask_field = _smooth_field(rng, (size, size), size / 8)
    tissue = mask_field >= np.quantile(mask_field, background)
    return np.stack([h * tissue, e * tissue], axis=-1)


def synthetic_tile(seed=0, size=256, stains=HE_STAINS, background=0.25, noise=0.01, strength=1.0):
    """Render an 8-bit RGB tile from random concentration maps and ``stains``."""
    rng = np.random.default_rng(seed)
    conc = concentration_maps(rng, size, background) * strength
    od = conc.reshape(-1, 2) @ np.asarray(stains, dtype=np.float64).T
    od += noise * rng.standard_normal(od.shape)
    np.maximum(od, 0.0, out=od)
    return imagecore.od_to_rgb(od, size, size)


def synthetic_corpus(n, seed=0, size=256, stains=HE_STAINS, **kwargs):
    seeds = np.random.SeedSequence(seed).generate_state(n)
    return [synthetic_tile(int(s), size, stains, **kwargs) for s in seeds]


def planted_concentrations(rng, n, pure_fraction=0.5, low=0.1, high=1.5):
    """Sparse ``(n, 2)`` concentrations: a ``pure_fraction`` of rows holds a single stain.

    Pure rows of both stains make the non-negative factorisation identifiable.
    """
    c = rng.uniform(low, high, (n, 2))
    pure = rng.random(n) < pure_fraction
    which = rng.integers(0, 2, n)
    c[pure, which[pure]] = 0.0
    return c


def random_stain_matrix(rng, min_angle_deg=20.0):
    """Two random non-negative unit columns at least ``min_angle_deg`` apart, canonical order."""
    while True:
        m = rng.uniform(0.05, 1.0, (3, 2))
        m /= np.linalg.norm(m, axis=0)
        if np.degrees(np.arccos(np.clip(m[:, 0] @ m[:, 1], -1, 1))) >= min_angle_deg:
            return canonical_stain_matrix(m)
