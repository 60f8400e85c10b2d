"""Grid tiling of large rasters with an optical-density tissue filter."""
from __future__ import annotations

import numpy as np
from PIL import Image

from .. import imagecore
from .._validation import check_rgb
from ..errors import DataError

TILE_NAME_SEP = "__"


def tissue_fraction(tile, od_threshold: float = 0.15) -> float:
    """Fraction of pixels whose mean-channel optical density exceeds the threshold."""
    od = imagecore.rgb_to_od(tile)
    return float((od.mean(axis=1) > od_threshold).mean())


def downsample2(image) -> np.ndarray:
    """Bicubic downscale by a factor of two."""
    rgb = check_rgb(image)
    h, w = rgb.shape[:2]
    return np.asarray(Image.fromarray(rgb).resize((max(1, w // 2), max(1, h // 2)), Image.Resampling.BICUBIC))


def grid_positions(height: int, width: int, tile_size: int, stride: int):
    ys = range(0, height - tile_size + 1, stride)
    xs = range(0, width - tile_size + 1, stride)
    return [(y, x) for y in ys for x in xs]


def extract_tiles(
    image,
    tile_size: int = 256,
    stride: int = 256,
    min_tissue_fraction: float = 0.5,
    od_threshold: float = 0.15,
    downsample: bool = False,
    source_id: str = "image",
    stain_label: str = "other",
) -> list[imagecore.ImageTile]:
    """Cut ``image`` into a row-major grid of tiles, dropping background tiles.

    Tile ids are ``{source_id}__y{y}_x{x}`` with pixel offsets in the
    (optionally downsampled) image.
    """
    if tile_size < 1 or stride < 1:
        raise DataError("tile_size and stride must be positive")
    rgb = check_rgb(image)
    if downsample:
        rgb = downsample2(rgb)
    h, w = rgb.shape[:2]
    if h < tile_size or w < tile_size:
        raise DataError(f"image of {w}x{h} pixels is smaller than one {tile_size}px tile")
    tiles = []
    for y, x in grid_positions(h, w, tile_size, stride):
        crop = np.ascontiguousarray(rgb[y : y + tile_size, x : x + tile_size])
        frac = tissue_fraction(crop, od_threshold)
        if frac < min_tissue_fraction:
            continue
        tiles.append(
            imagecore.ImageTile(
                crop,
                id=f"{source_id}{TILE_NAME_SEP}y{y}_x{x}",
                stain_label=stain_label,
                meta={"y": y, "x": x, "tissue_fraction": frac, "source_image_id": source_id},
            )
        )
    return tiles
