"""Tile manifests: line-delimited JSON records with a content hash."""
from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import DataError
from .tiling import TILE_NAME_SEP

SPLITS = ("train", "val", "test")
IMAGE_SUFFIXES = (".png", ".tif", ".tiff")


@dataclass(frozen=True)
class TileRecord:
    tile_path: str
    id: str
    stain_label: str
    split: str
    source_image_id: str | None = None
    flags: tuple[str, ...] = ()

    def to_json(self) -> str:
        doc = asdict(self)
        doc["flags"] = list(self.flags)
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TileRecord":
        try:
            return cls(
                tile_path=str(doc["tile_path"]),
                id=str(doc["id"]),
                stain_label=str(doc["stain_label"]),
                split=str(doc["split"]),
                source_image_id=doc.get("source_image_id"),
                flags=tuple(doc.get("flags", ())),
            )
        except KeyError as exc:
            raise DataError(f"manifest record missing field {exc}") from None


@dataclass
class Manifest:
    """Ordered tile records. Relative ``tile_path`` values resolve against ``root``."""

    records: list[TileRecord]
    root: Path = field(default_factory=Path)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def hash(self) -> str:
        """SHA-256 over the records in canonical (id-sorted) order."""
        h = hashlib.sha256()
        for rec in sorted(self.records, key=lambda r: r.id):
            h.update(rec.to_json().encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    def resolve(self, record: TileRecord) -> Path:
        p = Path(record.tile_path)
        return p if p.is_absolute() else self.root / p

    def paths(self) -> list[Path]:
        return [self.resolve(r) for r in self.records]

    def by_id(self) -> dict[str, TileRecord]:
        return {r.id: r for r in self.records}

    def subset(self, split: str | None = None, stain_label: str | None = None) -> "Manifest":
        recs = [
            r
            for r in self.records
            if (split is None or r.split == split) and (stain_label is None or r.stain_label == stain_label)
        ]
        return Manifest(recs, self.root)

    def validate(self, check_paths: bool = True) -> "Manifest":
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            seen, dups = set(), []
            for i in ids:
                if i in seen:
                    dups.append(i)
                seen.add(i)
            raise DataError(f"duplicate tile ids: {sorted(set(dups))[:10]}")
        bad = [r.split for r in self.records if r.split not in SPLITS]
        if bad:
            raise DataError(f"unknown split {bad[0]!r}; expected one of {SPLITS}")
        check_split_leakage(self.records)
        if check_paths:
            missing = [str(self.resolve(r)) for r in self.records if not self.resolve(r).exists()]
            if missing:
                raise DataError(f"{len(missing)} tile files missing, e.g. {missing[:3]}")
        return self

    def dumps(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        if not path.exists():
            raise DataError(f"manifest not found: {path}")
        records = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(TileRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        return cls(records, path.parent)

    def with_root(self, root) -> "Manifest":
        """Re-express relative paths against a new root directory."""
        root = Path(root)
        recs = []
        for r in self.records:
            p = self.resolve(r)
            try:
                rel = Path(p).resolve().relative_to(root.resolve())
                recs.append(replace(r, tile_path=rel.as_posix()))
            except ValueError:
                recs.append(replace(r, tile_path=str(Path(p).resolve())))
        return Manifest(recs, root)


def check_split_leakage(records: Iterable[TileRecord]) -> None:
    """Test tiles must not share a source image with train/val tiles."""
    fit_sources, test_sources = set(), set()
    for r in records:
        if r.source_image_id is None:
            continue
        (test_sources if r.split == "test" else fit_sources).add(r.source_image_id)
    leaked = sorted(fit_sources & test_sources)
    if leaked:
        raise DataError(f"source images present in both test and train/val: {leaked[:10]}")


def source_id_from_name(stem: str) -> str | None:
    if TILE_NAME_SEP in stem:
        return stem.split(TILE_NAME_SEP, 1)[0]
    return None


def assign_splits_by_source(source_ids: Sequence[str], fractions: Mapping[str, float], seed: int = 0) -> dict:
    """Randomly assign whole source images to splits in the given proportions."""
    unique = sorted(set(source_ids))
    total = sum(fractions.values())
    if total <= 0:
        raise DataError("split fractions must sum to a positive value")
    order = np.random.default_rng(seed).permutation(len(unique))
    names = [s for s in SPLITS if fractions.get(s, 0) > 0]
    bounds = np.cumsum([fractions[s] / total for s in names]) * len(unique)
    out = {}
    for rank, idx in enumerate(order):
        k = int(np.searchsorted(bounds, rank, side="right"))
        out[unique[idx]] = names[min(k, len(names) - 1)]
    return out


def build_manifest(
    sources: Sequence[tuple[str | Path, str]],
    split: str = "train",
    source_splits: Mapping[str, str] | None = None,
    root=None,
) -> Manifest:
    """Manifest from ``(directory, stain_label)`` pairs.

    Every image file becomes one record; its id is the file stem and its
    source image id is the part before ``__`` (as written by the tiler).
    ``source_splits`` overrides ``split`` per source image. Paths are stored
    relative to ``root`` (default: the current directory).
    """
    root = Path(root) if root is not None else Path.cwd()
    source_splits = dict(source_splits or {})
    records = []
    for directory, label in sources:
        directory = Path(directory)
        if not directory.is_dir():
            raise DataError(f"not a directory: {directory}")
        files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        for p in files:
            src = source_id_from_name(p.stem)
            try:
                rel = p.resolve().relative_to(root.resolve()).as_posix()
            except ValueError:
                rel = str(p.resolve())
            records.append(
                TileRecord(
                    tile_path=rel,
                    id=p.stem,
                    stain_label=label,
                    split=source_splits.get(src, split) if src is not None else split,
                    source_image_id=src,
                )
            )
    return Manifest(records, root).validate(check_paths=False)
