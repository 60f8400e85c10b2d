"""Shuffled real/artificial presentation sheets with a sealed answer key."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError

REAL, ARTIFICIAL = "real", "artificial"


@dataclass
class BlindMixSheet:
    presentation: list[tuple[str, str]]
    key: dict[str, str]
    seed: int

    def write(self, presentation_csv, key_csv) -> None:
        presentation_csv, key_csv = Path(presentation_csv), Path(key_csv)
        if presentation_csv.resolve() == key_csv.resolve():
            raise DataError("presentation sheet and key must be separate files")
        for p in (presentation_csv, key_csv):
            p.parent.mkdir(parents=True, exist_ok=True)
        with presentation_csv.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["display_id", "path"])
            w.writerows(self.presentation)
        with key_csv.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["display_id", "truth"])
            w.writerows((d, self.key[d]) for d, _ in self.presentation)


def blind_mix(real_paths, artificial_paths, n_each: int = 200, seed: int = 0) -> BlindMixSheet:
    """Sample ``n_each`` tiles from each pool and shuffle them together."""
    real_paths = [str(p) for p in real_paths]
    artificial_paths = [str(p) for p in artificial_paths]
    for name, pool in (("real", real_paths), ("artificial", artificial_paths)):
        if len(pool) < n_each:
            raise DataError(f"need {n_each} {name} tiles, only {len(pool)} available")
    rng = np.random.default_rng(seed)
    picked = [(p, REAL) for p in (real_paths[i] for i in rng.choice(len(real_paths), n_each, replace=False))]
    picked += [
        (p, ARTIFICIAL) for p in (artificial_paths[i] for i in rng.choice(len(artificial_paths), n_each, replace=False))
    ]
    order = rng.permutation(len(picked))
    width = len(str(len(picked)))
    presentation, key = [], {}
    for slot, idx in enumerate(order, 1):
        display_id = f"img{slot:0{width}d}"
        path, truth = picked[idx]
        presentation.append((display_id, path))
        key[display_id] = truth
    return BlindMixSheet(presentation, key, seed)


def read_key(path) -> dict[str, str]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return {row["display_id"]: row["truth"] for row in csv.DictReader(fh)}


def score_answers(answers: dict[str, str], key: dict[str, str]) -> float:
    """Fraction of displayed images whose real/artificial label was answered correctly."""
    if not key:
        raise DataError("empty answer key")
    unknown = set(answers) - set(key)
    if unknown:
        raise DataError(f"answers for unknown display ids: {sorted(unknown)[:10]}")
    return sum(answers.get(d) == truth for d, truth in key.items()) / len(key)
