"""Input validation helpers used by the public functions and estimators."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DataError


def check_rgb(image) -> np.ndarray:
    """Return ``image`` as an ``(H, W, 3)`` uint8 array.

    Accepts an :class:`~stainbench.imagecore.ImageTile`, a uint8 array, or an
    integer/float array whose values already lie in ``[0, 255]``.
    """
    pixels = getattr(image, "pixels", image)
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DataError("image has zero width or height")
    if arr.dtype == np.uint8:
        return arr
    if not np.all(np.isfinite(arr)):
        raise DataError("image contains non-finite values")
    if arr.min() < 0 or arr.max() > 255:
        raise DataError("channel values must lie in [0, 255]")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
        raise DataError("floating RGB input must hold integral 8-bit values")
    return arr.astype(np.uint8)


def check_gray(image) -> np.ndarray:
    arr = np.asarray(getattr(image, "pixels", image))
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D gray image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("image contains non-finite values")
    return arr


def is_single_image(X) -> bool:
    if hasattr(X, "pixels"):
        return True
    return isinstance(X, np.ndarray) and X.ndim == 3


def check_collection(X) -> list[np.ndarray]:
    """Normalise a single image, a stack ``(N, H, W, 3)`` or a sequence of images."""
    if is_single_image(X):
        return [check_rgb(X)]
    if isinstance(X, np.ndarray):
        if X.ndim != 4:
            raise DataError(f"expected an image or a (N, H, W, 3) stack, got {X.shape}")
        return [check_rgb(x) for x in X]
    if isinstance(X, Sequence) or hasattr(X, "__iter__"):
        images = [check_rgb(x) for x in X]
        return images
    raise DataError(f"cannot interpret {type(X).__name__} as an image collection")


def collection_items(X) -> list:
    """Like :func:`check_collection` but leaves items unvalidated; paths are allowed."""
    if is_single_image(X):
        return [X]
    if isinstance(X, np.ndarray):
        if X.ndim != 4:
            raise DataError(f"expected an image or a (N, H, W, 3) stack, got {X.shape}")
        return list(X)
    if isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
        return [X]
    if hasattr(X, "__iter__"):
        return list(X)
    raise DataError(f"cannot interpret {type(X).__name__} as an image collection")


def load_rgb(item) -> np.ndarray:
    """Validate an in-memory image or decode an image file."""
    if isinstance(item, (str, bytes)) or hasattr(item, "__fspath__"):
        from .imagecore import read_image

        return read_image(item)
    return check_rgb(item)


def check_od(od) -> np.ndarray:
    arr = np.asarray(od, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataError(f"expected an (N, 3) optical density matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("optical density matrix contains non-finite values")
    return arr


def check_stain_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (3, 2):
        raise DataError(f"stain matrix must be 3x2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("stain matrix contains non-finite values")
    return arr
