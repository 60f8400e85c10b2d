"""One-dimensional Wasserstein-1 distance and the Lab colour distance built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import imagecore
from .._validation import check_rgb
from ..errors import DataError

WD_SAMPLE_CAP = 10**6

# Fixed affine map of the a/b channels from [-128, 127] onto [0, 1].
AB_LOW, AB_HIGH = -128.0, 127.0


@dataclass
class EmpiricalDistribution:
    """Sorted samples of one scalar channel."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise DataError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(v)):
            raise DataError("samples must be finite")
        self.values = np.sort(v)

    @property
    def count(self) -> int:
        return self.values.size


def _as_distribution(a) -> EmpiricalDistribution:
    return a if isinstance(a, EmpiricalDistribution) else EmpiricalDistribution(a)


def wasserstein_1d(a, b) -> float:
    """Exact W1 distance: the integral of ``|F_a - F_b|`` over the merged support."""
    u = _as_distribution(a).values
    v = _as_distribution(b).values
    support = np.concatenate([u, v])
    support.sort(kind="mergesort")
    widths = np.diff(support)
    cdf_u = np.searchsorted(u, support[:-1], side="right") / u.size
    cdf_v = np.searchsorted(v, support[:-1], side="right") / v.size
    return float(np.dot(np.abs(cdf_u - cdf_v), widths))


def _pixel_count(tile) -> int:
    if isinstance(tile, (str, bytes)) or hasattr(tile, "__fspath__"):
        from PIL import Image

        with Image.open(tile) as img:
            return img.size[0] * img.size[1]
    rgb = check_rgb(tile)
    return rgb.shape[0] * rgb.shape[1]


def _load(tile):
    if isinstance(tile, (str, bytes)) or hasattr(tile, "__fspath__"):
        return imagecore.read_image(tile)
    return check_rgb(tile)


def pooled_ab(tiles, cap: int = WD_SAMPLE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Pool normalised a and b values over a tile set.

    If the set holds more than ``cap`` pixels, every ``ceil(total / cap)``-th
    pixel is kept, counting across tiles in the given order.
    """
    tiles = list(tiles)
    if not tiles:
        raise DataError("tile set is empty")
    total = sum(_pixel_count(t) for t in tiles)
    stride = max(1, math.ceil(total / cap))
    a_parts, b_parts = [], []
    offset = 0
    for tile in tiles:
        rgb = _load(tile)
        rows = rgb.reshape(-1, 3)
        first = (-offset) % stride
        picked = rows[first::stride]
        offset += len(rows)
        if len(picked) == 0:
            continue
        lab = imagecore.rgb_rows_to_lab(picked)
        a_parts.append(lab[:, 1])
        b_parts.append(lab[:, 2])
    scale = AB_HIGH - AB_LOW
    a = (np.concatenate(a_parts) - AB_LOW) / scale
    b = (np.concatenate(b_parts) - AB_LOW) / scale
    return a, b


def wd_color(generated, target, cap: int = WD_SAMPLE_CAP) -> float:
    """Mean of the a- and b-channel W1 distances between two tile sets."""
    ga, gb = pooled_ab(generated, cap)
    ta, tb = pooled_ab(target, cap)
    return 0.5 * (wasserstein_1d(ga, ta) + wasserstein_1d(gb, tb))
