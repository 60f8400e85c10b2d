"""Fitted stain-transfer parameters and their JSON serialisation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

PROFILE_FORMAT = "stainbench.profile"
PROFILE_VERSION = 1

STAIN_METHODS = ("macenko", "vahadane")


@dataclass
class ColorStatProfile:
    """Per-channel Lab mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray
    meta: dict = field(default_factory=dict)

    method = "colorstat"

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.std))):
            raise DataError("colour statistics must be finite")
        if np.any(self.std < 0):
            raise DataError("standard deviations must be non-negative")

    def to_dict(self) -> dict:
        return {
            "format": PROFILE_FORMAT,
            "version": PROFILE_VERSION,
            "method": self.method,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "fit": self.meta,
        }


@dataclass
class StainProfile:
    """Stain matrix (3x2, unit columns) plus pseudo-maximum concentrations."""

    method: str
    stain_matrix: np.ndarray
    max_concentration: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = self.method.lower()
        if self.method not in STAIN_METHODS:
            raise DataError(f"unknown stain method {self.method!r}")
        self.stain_matrix = np.asarray(self.stain_matrix, dtype=np.float64).reshape(3, 2)
        self.max_concentration = np.asarray(self.max_concentration, dtype=np.float64).reshape(2)
        if not np.all(np.isfinite(self.stain_matrix)):
            raise DataError("stain matrix must be finite")
        if np.any(self.max_concentration < 0):
            raise DataError("max_concentration must be non-negative")

    @property
    def usable(self) -> bool:
        return bool(np.all(self.max_concentration > 0))

    def to_dict(self) -> dict:
        return {
            "format": PROFILE_FORMAT,
            "version": PROFILE_VERSION,
            "method": self.method,
            "matrix": self.stain_matrix.ravel().tolist(),
            "max_concentration": self.max_concentration.tolist(),
            "fit": self.meta,
        }


def profile_from_dict(doc: dict):
    if doc.get("format") != PROFILE_FORMAT:
        raise DataError(f"not a stain profile document (format={doc.get('format')!r})")
    if doc.get("version") != PROFILE_VERSION:
        raise DataError(f"unsupported profile version {doc.get('version')!r}")
    meta = doc.get("fit", {})
    method = doc.get("method")
    if method == "colorstat":
        return ColorStatProfile(doc["mean"], doc["std"], meta=meta)
    if method in STAIN_METHODS:
        matrix = np.asarray(doc["matrix"], dtype=np.float64)
        if matrix.size != 6:
            raise DataError("stain matrix must have 6 entries (3x2, row-major)")
        return StainProfile(method, matrix.reshape(3, 2), doc["max_concentration"], meta=meta)
    raise DataError(f"unknown profile method {method!r}")


def dumps_profile(profile) -> str:
    # json writes floats with repr(), which round-trips bit-exactly.
    return json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n"


def save_profile(profile, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps_profile(profile), encoding="utf-8")


def load_profile(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"profile not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return profile_from_dict(doc)
