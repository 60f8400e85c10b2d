"""Stain transfer benchmark toolkit for histology tiles.

Subpackages: :mod:`stainbench.imagecore` (colour spaces, optical density, I/O),
:mod:`stainbench.stainalg` (ColorStat, Macenko, Vahadane),
:mod:`stainbench.metrics` (SSIM, Lab Wasserstein, FID),
:mod:`stainbench.datapipe` (tiling, manifests, blind mix) and the
``stainbench`` command line in :mod:`stainbench.cli`.
"""
from . import datapipe, imagecore, metrics, stainalg
from .errors import (
    DataError,
    DegenerateStainPlane,
    InsufficientTissue,
    NoUsableTiles,
    NumericalError,
    StainBenchError,
    StainEstimationError,
)
from .imagecore import ImageTile

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DegenerateStainPlane",
    "ImageTile",
    "InsufficientTissue",
    "NoUsableTiles",
    "NumericalError",
    "StainBenchError",
    "StainEstimationError",
    "datapipe",
    "imagecore",
    "metrics",
    "stainalg",
]
