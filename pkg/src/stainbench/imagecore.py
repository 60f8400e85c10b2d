"""Pixel math shared by the rest of the package.

Colour conversions assume 8-bit sRGB input and CIELAB under a D65 white
point. Optical density uses a +1 offset so that background pixels map to
exactly zero and the 8-bit round trip is lossless. All floating point work
is done in float64; results are only quantised to uint8 at output.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ._validation import check_od, check_rgb
from .errors import DataError

logger = logging.getLogger(__name__)

STAIN_LABELS = ("HE", "MT")

# sRGB (D65) -> XYZ. The reference white is taken as the row sums so that any
# neutral gray lands on a = b = 0 up to rounding.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0

# Lab is affine in f = cbrt(XYZ / white): lab = f @ F_TO_LAB + LAB_OFFSET.
F_TO_LAB = np.array(
    [
        [0.0, 500.0, 0.0],
        [116.0, -500.0, 200.0],
        [0.0, 0.0, -200.0],
    ]
)
LAB_OFFSET = np.array([-16.0, 0.0, 0.0])
LAB_TO_F = np.linalg.inv(F_TO_LAB)
_RGB_TO_XYZN = np.ascontiguousarray((_RGB_TO_XYZ / _WHITE[:, None]).T)
_XYZN_TO_RGB = np.ascontiguousarray((_XYZ_TO_RGB * _WHITE).T)


def _srgb_to_linear(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(v):
    v = np.asarray(v, dtype=np.float64)
    out = 1.055 * np.power(v, 1.0 / 2.4) - 0.055
    low = v <= 0.0031308
    if low.any():
        out[low] = 12.92 * v[low]
    return out


# Linear value of every 8-bit code.
_LINEAR_LUT = _srgb_to_linear(np.arange(256) / 255.0)


@dataclass
class ImageTile:
    """An 8-bit RGB tile plus the bookkeeping that travels with it."""

    pixels: np.ndarray
    id: str = ""
    stain_label: str = "other"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pixels = check_rgb(self.pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


# -- CIELAB -----------------------------------------------------------------


def _lab_f(t):
    low = t <= _DELTA**3
    has_low = low.any()
    if has_low:
        t_low = t[low]
    out = np.cbrt(t, out=t)
    if has_low:
        out[low] = t_low / (3 * _DELTA**2) + 4.0 / 29.0
    return out


def _lab_finv(f):
    low = f <= _DELTA
    has_low = low.any()
    if has_low:
        f_low = f[low]
    out = f * f
    out *= f
    if has_low:
        out[low] = 3 * _DELTA**2 * (f_low - 4.0 / 29.0)
    return out


def rgb_rows_to_f(rgb_rows: np.ndarray) -> np.ndarray:
    """``(N, 3)`` uint8 rows -> ``cbrt``-compressed normalised XYZ (Lab before the affine step)."""
    return _lab_f(_LINEAR_LUT[rgb_rows] @ _RGB_TO_XYZN)


def f_rows_to_rgb(f_rows: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_rows_to_f` with clamping and 8-bit rounding."""
    lin = _lab_finv(f_rows) @ _XYZN_TO_RGB
    if not np.isfinite(lin).all():
        raise DataError("LAB image contains non-finite values")
    np.clip(lin, 0.0, 1.0, out=lin)
    low = lin <= 0.0031308
    has_low = low.any()
    if has_low:
        lin_low = lin[low]
    srgb = np.power(lin, 1.0 / 2.4, out=lin)
    srgb *= 1.055 * 255.0
    srgb += 0.5 - 0.055 * 255.0
    if has_low:
        srgb[low] = 12.92 * 255.0 * lin_low + 0.5
    # Values are non-negative here, so truncation rounds half up.
    return srgb.astype(np.uint8)


def rgb_rows_to_lab(rgb_rows: np.ndarray) -> np.ndarray:
    """``(N, 3)`` uint8 rows -> ``(N, 3)`` float64 Lab rows."""
    lab = rgb_rows_to_f(rgb_rows) @ F_TO_LAB
    lab += LAB_OFFSET
    return lab


def lab_rows_to_rgb(lab_rows: np.ndarray) -> np.ndarray:
    """``(N, 3)`` Lab rows -> clamped ``(N, 3)`` uint8 rows."""
    return f_rows_to_rgb((lab_rows - LAB_OFFSET) @ LAB_TO_F)


def rgb_to_lab(image) -> np.ndarray:
    """Convert an 8-bit sRGB image to CIELAB (D65), returned as float64 ``(H, W, 3)``."""
    rgb = check_rgb(image)
    return rgb_rows_to_lab(rgb.reshape(-1, 3)).reshape(rgb.shape)


def lab_to_rgb(lab) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`; out-of-gamut colours are clamped."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim < 1 or lab.shape[-1] != 3:
        raise DataError(f"expected a trailing LAB axis of size 3, got {lab.shape}")
    return lab_rows_to_rgb(lab.reshape(-1, 3)).reshape(lab.shape)


def lightness(image) -> np.ndarray:
    """The L channel of an RGB image (``L()`` in colourisation setups)."""
    return rgb_to_lab(image)[..., 0]


def ab_channels(image) -> np.ndarray:
    """The two colour channels ``(a, b)`` of an RGB image, shape ``(H, W, 2)``."""
    return rgb_to_lab(image)[..., 1:]


def merge_lab(lightness_channel, ab) -> np.ndarray:
    """Recombine a lightness channel with predicted colour channels into RGB."""
    lightness_channel = np.asarray(lightness_channel, dtype=np.float64)
    ab = np.asarray(ab, dtype=np.float64)
    if ab.shape != lightness_channel.shape + (2,):
        raise DataError(f"shape mismatch: L {lightness_channel.shape} vs ab {ab.shape}")
    return lab_to_rgb(np.concatenate([lightness_channel[..., None], ab], axis=-1))


# -- grayscale --------------------------------------------------------------

_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


def rgb_to_gray(image) -> np.ndarray:
    """BT.601 luma, rounded half up, as uint8 ``(H, W)``."""
    rgb = check_rgb(image)
    y = rgb @ _GRAY_WEIGHTS
    # The weights sum to 1 only up to rounding; the guard keeps grays fixed.
    return np.floor(y + 0.5 + 1e-9).clip(0, 255).astype(np.uint8)


# -- optical density --------------------------------------------------------


def rgb_to_od(image, background_intensity: float = 255) -> np.ndarray:
    """Optical density ``-log10((I + 1) / (I0 + 1))`` as an ``(H*W, 3)`` matrix."""
    if background_intensity <= 0:
        raise DataError("background_intensity must be positive")
    rgb = check_rgb(image)
    od = -np.log10((rgb.reshape(-1, 3).astype(np.float64) + 1.0) / (background_intensity + 1.0))
    return np.maximum(od, 0.0)


def od_to_intensity(od, background_intensity: float = 255) -> np.ndarray:
    """Unquantised inverse of :func:`rgb_to_od`."""
    return (background_intensity + 1.0) * np.power(10.0, -np.asarray(od, dtype=np.float64)) - 1.0


def od_to_rgb(od, width: int, height: int, background_intensity: float = 255) -> np.ndarray:
    """Rebuild an ``(height, width, 3)`` uint8 image from an optical density matrix."""
    od = check_od(od)
    if od.shape[0] != width * height:
        raise DataError(
            f"optical density has {od.shape[0]} rows, expected {width}x{height}={width * height}"
        )
    intensity = od_to_intensity(od, background_intensity)
    return np.rint(intensity).clip(0, 255).astype(np.uint8).reshape(height, width, 3)


# -- file I/O ---------------------------------------------------------------


def read_image(path) -> np.ndarray:
    """Load a PNG/TIFF file as an 8-bit RGB array. Alpha is dropped with a warning."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"image not found: {path}")
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
            raise DataError(f"{path}: only 8-bit images are supported (mode {img.mode})")
        if img.mode in ("RGBA", "LA", "PA") or "transparency" in img.info:
            warnings.warn(f"{path}: dropping alpha channel", stacklevel=2)
        arr = np.asarray(img.convert("RGB"))
    return np.ascontiguousarray(arr, dtype=np.uint8)


def write_image(path, image) -> None:
    rgb = check_rgb(image)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb).save(path)


def load_tile(path, id: str = "", stain_label: str = "other") -> ImageTile:
    return ImageTile(read_image(path), id=id or Path(path).stem, stain_label=stain_label)
