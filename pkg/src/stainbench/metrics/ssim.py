"""Mean structural similarity with a uniform square window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._validation import check_gray
from ..errors import DataError

K1, K2 = 0.01, 0.03


@dataclass
class SsimResult:
    mean_ssim: float
    window_size: int
    ssim_map: np.ndarray | None = None


def _box_sums(a: np.ndarray, win: int) -> np.ndarray:
    """Sums over every fully interior ``win x win`` window."""
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=c[1:, 1:])
    return c[win:, win:] - c[:-win, win:] - c[win:, :-win] + c[:-win, :-win]


def ssim(
    x,
    y,
    window: int = 7,
    data_range: float = 255.0,
    sample_covariance: bool = True,
    full: bool = False,
) -> SsimResult:
    """Mean SSIM of two gray images over all fully interior windows.

    Window statistics are unweighted. ``sample_covariance`` applies the
    ``n / (n - 1)`` correction to variances and covariance, as scikit-image
    does by default.
    """
    x = check_gray(x).astype(np.float64)
    y = check_gray(y).astype(np.float64)
    if x.shape != y.shape:
        raise DataError(f"image shapes differ: {x.shape} vs {y.shape}")
    if window < 1 or window % 2 == 0:
        raise DataError("window must be a positive odd integer")
    if min(x.shape) < window:
        raise DataError(f"images of shape {x.shape} are smaller than the {window}x{window} window")

    n = window * window
    # With 8-bit inputs every box sum is an exact integer in float64.
    sx, sy = _box_sums(x, window), _box_sums(y, window)
    sxx, syy, sxy = _box_sums(x * x, window), _box_sums(y * y, window), _box_sums(x * y, window)
    mx, my = sx / n, sy / n
    norm = n / (n - 1) if sample_covariance and n > 1 else 1.0
    vx = norm * (sxx / n - mx * mx)
    vy = norm * (syy / n - my * my)
    cxy = norm * (sxy / n - mx * my)

    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    smap = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return SsimResult(float(smap.mean()), window, smap if full else None)


def ssim_stats(pairs, window: int = 7, data_range: float = 255.0) -> tuple[float, float, int]:
    """Mean SSIM over image pairs with its standard error ``std / sqrt(N)``."""
    return mean_stderr([ssim(x, y, window, data_range).mean_ssim for x, y in pairs])


def mean_stderr(values) -> tuple[float, float, int]:
    """Mean, standard error (sample std over sqrt N) and count of per-pair scores."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        raise DataError("no image pairs to score")
    stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), stderr, len(values)
