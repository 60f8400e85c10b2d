"""Dataset construction: tiling, manifests and blind-mix sheets."""
from .blindmix import BlindMixSheet, blind_mix, read_key, score_answers
from .manifest import (
    Manifest,
    TileRecord,
    assign_splits_by_source,
    build_manifest,
    check_split_leakage,
    source_id_from_name,
)
from .tiling import extract_tiles, tissue_fraction

__all__ = [
    "BlindMixSheet",
    "Manifest",
    "TileRecord",
    "assign_splits_by_source",
    "blind_mix",
    "build_manifest",
    "check_split_leakage",
    "extract_tiles",
    "read_key",
    "score_answers",
    "source_id_from_name",
    "tissue_fraction",
]
