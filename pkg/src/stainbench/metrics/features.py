"""Feature extractors for the Fréchet distance, plus an on-disk feature cache.

The built-in :class:`RandomProjectionExtractor` needs no model download and
is what the test-suite uses. :class:`TorchScriptExtractor` loads a serialised
network (for example an Inception v3 export) for runs that must match
published FID values.
"""
from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from PIL import Image

from .. import imagecore
from .._validation import check_rgb
from ..errors import DataError, StainBenchError
from .frechet import fit_feature_gaussian, frechet_distance

logger = logging.getLogger(__name__)


@runtime_checkable
class FeatureExtractor(Protocol):
    name: str
    dim: int
    input_size: int
    deterministic: bool

    def extract(self, batch: np.ndarray) -> np.ndarray:
        """Map a ``(B, S, S, 3)`` uint8 batch to ``(B, dim)`` features."""


def resize_bicubic(rgb: np.ndarray, size: int) -> np.ndarray:
    if rgb.shape[0] == size and rgb.shape[1] == size:
        return rgb
    return np.asarray(Image.fromarray(rgb).resize((size, size), Image.Resampling.BICUBIC))


class RandomProjectionExtractor:
    """Fixed-seed random projection of a bicubic thumbnail followed by ``tanh``.

    Cheap and deterministic; sensitive to both colour and coarse texture.
    """

    deterministic = True

    def __init__(self, dim: int = 64, input_size: int = 32, seed: int = 0, gain: float = 4.0):
        self.dim = dim
        self.input_size = input_size
        self.seed = seed
        self.gain = gain
        n_in = input_size * input_size * 3
        rng = np.random.default_rng(seed)
        self._weights = rng.standard_normal((n_in, dim)) / np.sqrt(n_in)
        self._bias = rng.uniform(-0.5, 0.5, dim)

    @property
    def name(self) -> str:
        return f"randproj-d{self.dim}-s{self.input_size}-seed{self.seed}"

    def extract(self, batch: np.ndarray) -> np.ndarray:
        x = batch.reshape(len(batch), -1).astype(np.float64) / 255.0 - 0.5
        return np.tanh(self.gain * (x @ self._weights) + self._bias)


class TorchScriptExtractor:
    """Features from a TorchScript model file.

    The model receives a float tensor of shape ``(B, 3, S, S)``; ``scale``
    selects whether pixel values are passed as ``[0, 1]`` (``"unit"``) or
    ``[0, 255]`` (``"byte"``). Outputs are flattened per image and must have
    ``dim`` columns.
    """

    deterministic = True

    def __init__(self, path, dim: int, input_size: int = 299, scale: str = "unit", name: str | None = None):
        try:
            import torch
        except ImportError as exc:  # pragma: no cover - torch is optional
            raise StainBenchError("TorchScriptExtractor requires PyTorch") from exc
        path = Path(path)
        if not path.exists():
            raise DataError(f"feature model not found: {path}")
        if scale not in ("unit", "byte"):
            raise DataError("scale must be 'unit' or 'byte'")
        self._torch = torch
        self._model = torch.jit.load(str(path), map_location="cpu").eval()
        self.dim = dim
        self.input_size = input_size
        self.scale = scale
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
        self.name = name or f"torchscript-{path.stem}-{digest}"

    def extract(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = torch.from_numpy(np.ascontiguousarray(batch.transpose(0, 3, 1, 2))).to(torch.float32)
        if self.scale == "unit":
            x = x / 255.0
        with torch.no_grad():
            out = self._model(x)
        feats = out.reshape(out.shape[0], -1).double().numpy()
        if feats.shape[1] != self.dim:
            raise DataError(f"{self.name}: model returned {feats.shape[1]} features, declared {self.dim}")
        return feats


def _tile_label(tile, index):
    if isinstance(tile, (str, Path)):
        return str(tile)
    return getattr(tile, "id", None) or f"tile #{index}"


def extract_features(tiles, extractor: FeatureExtractor, batch_size: int = 64) -> np.ndarray:
    """One feature row per tile, in input order. Tiles may be arrays, ImageTiles or paths."""
    tiles = list(tiles)
    rows = []
    for start in range(0, len(tiles), batch_size):
        chunk = tiles[start : start + batch_size]
        batch = []
        for i, tile in enumerate(chunk, start):
            try:
                rgb = imagecore.read_image(tile) if isinstance(tile, (str, Path)) else check_rgb(tile)
            except StainBenchError as exc:
                raise DataError(f"cannot decode {_tile_label(tile, i)}: {exc}") from exc
            batch.append(resize_bicubic(rgb, extractor.input_size))
        try:
            feats = np.asarray(extractor.extract(np.stack(batch)), dtype=np.float64)
        except StainBenchError:
            raise
        except Exception as exc:
            raise StainBenchError(
                f"{extractor.name} failed on batch starting at {_tile_label(chunk[0], start)}: {exc}"
            ) from exc
        rows.append(feats)
    if not rows:
        return np.zeros((0, extractor.dim))
    return np.concatenate(rows)


class FeatureCache:
    """Feature matrices stored as ``.npy`` files keyed by (set hash, extractor name)."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, set_hash: str, extractor_name: str) -> Path:
        key = hashlib.sha256(f"{set_hash}\0{extractor_name}".encode()).hexdigest()[:32]
        return self.directory / f"features-{key}.npy"

    def get_or_compute(self, set_hash: str, extractor: FeatureExtractor, tiles) -> np.ndarray:
        path = self.path_for(set_hash, extractor.name)
        if path.exists():
            feats = np.load(path)
            if feats.ndim == 2 and feats.shape[1] == extractor.dim:
                return feats
            logger.warning("ignoring malformed feature cache %s", path)
        feats = extract_features(tiles, extractor)
        self.directory.mkdir(parents=True, exist_ok=True)
        np.save(path, feats)
        return feats


def fid_from_features(f1, f2) -> float:
    return frechet_distance(fit_feature_gaussian(f1), fit_feature_gaussian(f2))


def fid(generated, target, extractor: FeatureExtractor | None = None) -> float:
    """Fréchet distance between feature Gaussians of two tile sets."""
    extractor = extractor or RandomProjectionExtractor()
    generated, target = list(generated), list(target)
    if len(generated) < 2 or len(target) < 2:
        raise DataError("FID needs at least two tiles in each set")
    return fid_from_features(extract_features(generated, extractor), extract_features(target, extractor))
