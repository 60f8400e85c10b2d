"""Batch command-line tool: ``stainbench {tile|fit|transfer|evaluate|report|blindmix}``.

Every command takes long-form flags, optionally preceded by ``--config FILE``
(a flat JSON object with the same keys as the flags, dashes replaced by
underscores). Flags override the file, the file overrides the defaults.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures print one JSON line ``{"error", "exit_code", "message"}`` to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import imagecore
from .datapipe import Manifest, TileRecord, assign_splits_by_source, blind_mix, extract_tiles, read_key, score_answers
from .errors import DataError, NumericalError, StainBenchError
from .metrics import (
    FeatureCache,
    RandomProjectionExtractor,
    TorchScriptExtractor,
    extract_features,
    fid_from_features,
    mean_stderr,
    ssim,
    wd_color,
)
from .metrics.wasserstein import WD_SAMPLE_CAP
from .report import (
    HE_MT,
    MT_HE,
    EvaluationReport,
    ReportRow,
    average_rows,
    config_hash,
    merge_reports,
    render_csv,
    render_markdown,
    render_text,
)
from .stainalg import (
    ColorStatProfile,
    StainParams,
    apply_colorstat,
    apply_stain_transfer,
    fit_colorstat,
    fit_stain_profile,
    load_profile,
    save_profile,
)
from .stainalg.colorstat import STD_EPS

logger = logging.getLogger("stainbench")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
WORKERS_ENV = "STAINBENCH_WORKERS"
METHODS = ("colorstat", "macenko", "vahadane")
REQUIRED = "<required>"

_STAIN_DEFAULTS = {k: getattr(StainParams(), k) for k in StainParams.__dataclass_fields__}

DEFAULTS = {
    "tile": {
        "input": REQUIRED,
        "out": REQUIRED,
        "manifest": None,
        "size": 256,
        "stride": 256,
        "min_tissue": 0.5,
        "od_threshold": 0.15,
        "downsample": False,
        "label": "other",
        "split": "train",
        "split_fractions": None,
        "seed": 0,
    },
    "fit": {
        "method": REQUIRED,
        "manifest": REQUIRED,
        "out": REQUIRED,
        "label": None,
        "split": None,
        "eps": STD_EPS,
        **_STAIN_DEFAULTS,
    },
    "transfer": {
        "profile": REQUIRED,
        "manifest": REQUIRED,
        "out": REQUIRED,
        "label": None,
        "split": None,
        "out_label": "generated",
        "timing_out": None,
        "eps": STD_EPS,
        # None means: take the value the profile was fitted with.
        **{k: None for k in _STAIN_DEFAULTS},
    },
    "evaluate": {
        "method_name": REQUIRED,
        "out": REQUIRED,
        "he_mt": None,
        "mt_he": None,
        "split": "val",
        "extractor": "builtin",
        "extractor_dim": 64,
        "extractor_input_size": None,
        "extractor_scale": "unit",
        "seed": 0,
        "wd_cap": WD_SAMPLE_CAP,
        "batch_size": 64,
        "feature_cache": None,
    },
    "report": {
        "reports": REQUIRED,
        "out": None,
        "csv": None,
        "format": "markdown",
        "per_direction": False,
    },
    "blindmix": {
        "real": None,
        "artificial": None,
        "sheet": None,
        "key": None,
        "n_each": 200,
        "seed": 0,
        "split": None,
        "score": None,
    },
}


class UsageError(StainBenchError):
    """Invalid command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- helpers -----------------------------------------------------------------


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be positive")
    return n


@contextmanager
def worker_map(workers: int):
    """Order-preserving map over a bounded thread pool (plain ``map`` for one worker)."""
    if workers <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield pool.map


def _relpath(path, start) -> str:
    return Path(os.path.relpath(Path(path).resolve(), Path(start).resolve())).as_posix()


def _parse_fractions(value):
    if value is None or isinstance(value, dict):
        return value
    out = {}
    for part in str(value).split(","):
        name, _, frac = part.partition("=")
        try:
            out[name.strip()] = float(frac)
        except ValueError:
            raise UsageError(f"bad split fraction {part!r}; expected NAME=FRACTION") from None
    return out


def resolve_config(command: str, given: dict, config_path=None) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(doc, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        unknown = sorted(set(doc) - set(cfg))
        if unknown:
            raise UsageError(f"{path}: unknown keys for {command}: {unknown}")
        cfg.update(doc)
    cfg.update(given)
    missing = [k for k, v in cfg.items() if v == REQUIRED]
    if missing:
        raise UsageError(f"{command}: missing required option(s) " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return cfg


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True, ensure_ascii=False))


def _load_subset(path, split=None, label=None) -> Manifest:
    manifest = Manifest.load(path).validate()
    sub = manifest.subset(split=split, stain_label=label)
    if not len(sub):
        raise DataError(f"{path}: no tiles with split={split!r} label={label!r}")
    return sub


def _stain_params(cfg: dict, base: dict | None = None) -> StainParams:
    values = dict(_STAIN_DEFAULTS)
    values.update({k: v for k, v in (base or {}).items() if k in values})
    values.update({k: cfg[k] for k in _STAIN_DEFAULTS if cfg.get(k) is not None})
    return StainParams(**values)


# -- commands ----------------------------------------------------------------


def cmd_tile(cfg: dict, workers: int) -> dict:
    inputs = cfg["input"] if isinstance(cfg["input"], list) else [cfg["input"]]
    out = Path(cfg["out"])
    manifest_path = Path(cfg["manifest"]) if cfg["manifest"] else out / "manifest.jsonl"
    stems = [Path(p).stem for p in inputs]
    if len(set(stems)) != len(stems):
        raise DataError(f"input images must have distinct file names: {stems}")
    fractions = _parse_fractions(cfg["split_fractions"])
    splits = assign_splits_by_source(stems, fractions, cfg["seed"]) if fractions else {}

    tiles = []
    for path, stem in zip(inputs, stems):
        image = imagecore.read_image(path)
        tiles += extract_tiles(
            image,
            tile_size=int(cfg["size"]),
            stride=int(cfg["stride"]),
            min_tissue_fraction=float(cfg["min_tissue"]),
            od_threshold=float(cfg["od_threshold"]),
            downsample=bool(cfg["downsample"]),
            source_id=stem,
            stain_label=cfg["label"],
        )
    out.mkdir(parents=True, exist_ok=True)
    with worker_map(workers) as pmap:
        list(pmap(lambda t: imagecore.write_image(out / f"{t.id}.png", t.pixels), tiles))
    records = [
        TileRecord(
            tile_path=_relpath(out / f"{t.id}.png", manifest_path.parent),
            id=t.id,
            stain_label=cfg["label"],
            split=splits.get(t.meta["source_image_id"], cfg["split"]),
            source_image_id=t.meta["source_image_id"],
        )
        for t in tiles
    ]
    manifest = Manifest(records, manifest_path.parent).validate()
    manifest.save(manifest_path)
    return {"command": "tile", "tiles": len(records), "manifest": str(manifest_path), "manifest_hash": manifest.hash}


def cmd_fit(cfg: dict, workers: int) -> dict:
    method = str(cfg["method"]).lower()
    if method not in METHODS:
        raise UsageError(f"--method must be one of {METHODS}, got {method!r}")
    subset = _load_subset(cfg["manifest"], cfg["split"], cfg["label"])
    paths = subset.paths()
    with worker_map(workers) as pmap:
        if method == "colorstat":
            profile = fit_colorstat(paths, map_fn=pmap)
        else:
            profile = fit_stain_profile(paths, method, _stain_params(cfg), map_fn=pmap)
    profile.meta["source"] = {"manifest_hash": subset.hash, "label": cfg["label"], "split": cfg["split"]}
    save_profile(profile, cfg["out"])
    return {
        "command": "fit",
        "method": method,
        "profile": str(cfg["out"]),
        "corpus_size": profile.meta.get("corpus_size"),
        "skipped": profile.meta.get("skipped"),
    }


def cmd_transfer(cfg: dict, workers: int) -> dict:
    profile = load_profile(cfg["profile"])
    subset = _load_subset(cfg["manifest"], cfg["split"], cfg["label"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(profile, ColorStatProfile):
        eps = float(cfg["eps"])

        def convert(rgb):
            return apply_colorstat(rgb, profile, eps), None

    else:
        params = _stain_params(cfg, profile.meta.get("params"))

        def convert(rgb):
            return apply_stain_transfer(rgb, profile, params)

    def run(record):
        rgb = imagecore.read_image(subset.resolve(record))
        start = time.perf_counter()
        result, flag = convert(rgb)
        elapsed = time.perf_counter() - start
        imagecore.write_image(out / f"{record.id}.png", result)
        return flag, elapsed

    with worker_map(workers) as pmap:
        results = list(pmap(run, subset.records))
    records = [
        TileRecord(
            tile_path=f"{r.id}.png",
            id=r.id,
            stain_label=cfg["out_label"],
            split=r.split,
            source_image_id=r.source_image_id,
            flags=(flag,) if flag else (),
        )
        for r, (flag, _) in zip(subset.records, results)
    ]
    manifest = Manifest(records, out)
    manifest.save(out / "manifest.jsonl")
    times = np.array([t for _, t in results])
    timing = {
        "command": "transfer",
        "method": profile.method,
        "tiles": len(records),
        "flagged": sum(1 for r in records if r.flags),
        "mean_tile_seconds": float(times.mean()),
        "manifest": str(out / "manifest.jsonl"),
    }
    if cfg["timing_out"]:
        Path(cfg["timing_out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg["timing_out"]).write_text(json.dumps(timing, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return timing


def _make_extractor(cfg: dict):
    spec = str(cfg["extractor"])
    if spec == "builtin":
        return RandomProjectionExtractor(
            dim=int(cfg["extractor_dim"]), input_size=int(cfg["extractor_input_size"] or 32), seed=int(cfg["seed"])
        )
    if spec.startswith("torchscript:"):
        return TorchScriptExtractor(
            spec.split(":", 1)[1],
            dim=int(cfg["extractor_dim"]),
            input_size=int(cfg["extractor_input_size"] or 299),
            scale=cfg["extractor_scale"],
        )
    raise UsageError(f"--extractor must be 'builtin' or 'torchscript:PATH', got {spec!r}")


def _gray(path) -> np.ndarray:
    return imagecore.rgb_to_gray(imagecore.read_image(path))


def _evaluate_direction(direction, triple, cfg, extractor, pmap) -> tuple[dict, tuple]:
    split = cfg["split"]
    source, generated, target = (_load_subset(p, split) for p in triple)
    src_ids, gen_ids = source.by_id(), generated.by_id()
    unpaired = sorted(set(src_ids) ^ set(gen_ids))
    if unpaired:
        raise DataError(
            f"{direction}: {len(unpaired)} tile ids are not paired between source and generated manifests, "
            f"first offenders: {unpaired[:10]}"
        )
    ids = sorted(src_ids)
    scores = list(
        pmap(lambda i: ssim(_gray(source.resolve(src_ids[i])), _gray(generated.resolve(gen_ids[i]))).mean_ssim, ids)
    )
    ssim_mean, ssim_se, n_pairs = mean_stderr(scores)

    gen_paths = [generated.resolve(gen_ids[i]) for i in ids]
    tgt_paths = [target.resolve(r) for r in sorted(target.records, key=lambda r: r.id)]
    wd = wd_color(gen_paths, tgt_paths, int(cfg["wd_cap"]))

    cache = FeatureCache(cfg["feature_cache"]) if cfg["feature_cache"] else None
    batch = int(cfg["batch_size"])

    def features(manifest, paths):
        if cache is not None:
            return cache.get_or_compute(manifest.hash, extractor, paths)
        return extract_features(paths, extractor, batch)

    f_gen, f_tgt = pmap(lambda job: features(*job), [(generated, gen_paths), (target, tgt_paths)])
    if len(f_gen) < 2 or len(f_tgt) < 2:
        raise DataError(f"{direction}: FID needs at least two tiles in each set")
    fid = fid_from_features(f_gen, f_tgt)
    hashes = {"source": source.hash, "generated": generated.hash, "target": target.hash}
    return hashes, (fid, wd, ssim_mean, ssim_se, n_pairs)


def cmd_evaluate(cfg: dict, workers: int) -> dict:
    directions = [(d, cfg[k]) for d, k in ((HE_MT, "he_mt"), (MT_HE, "mt_he")) if cfg[k]]
    if not directions:
        raise UsageError("evaluate needs --he-mt and/or --mt-he SOURCE GENERATED TARGET")
    for d, triple in directions:
        if not isinstance(triple, (list, tuple)) or len(triple) != 3:
            raise UsageError(f"{d}: expected three manifests SOURCE GENERATED TARGET")
    out = Path(cfg["out"])
    extractor = _make_extractor(cfg)

    # Paths are stored relative to the report so reruns elsewhere stay byte-identical.
    materialized = dict(cfg)
    for key in ("he_mt", "mt_he"):
        if cfg[key]:
            materialized[key] = [_relpath(p, out.parent) for p in cfg[key]]
    for key in ("out", "feature_cache"):
        if cfg[key]:
            materialized[key] = _relpath(cfg[key], out.parent)
    if str(cfg["extractor"]).startswith("torchscript:"):
        materialized["extractor"] = "torchscript:" + _relpath(cfg["extractor"].split(":", 1)[1], out.parent)
    materialized["extractor_name"] = extractor.name
    materialized["inputs"] = {}

    metrics = {}
    with worker_map(workers) as pmap:
        for direction, triple in directions:
            hashes, metrics[direction] = _evaluate_direction(direction, triple, cfg, extractor, pmap)
            materialized["inputs"][direction] = hashes
    chash = config_hash(materialized)
    rows = [
        ReportRow(
            cfg["method_name"], d, cfg["split"], fid, wd, sm, se, n, extractor.name, chash
        )
        for d, (fid, wd, sm, se, n) in metrics.items()
    ]
    if len(rows) == 2:
        rows.append(average_rows(rows[0], rows[1]))
    for r in rows:
        if not all(np.isfinite([r.fid, r.wd, r.ssim_mean, r.ssim_stderr])):
            raise NumericalError(f"{r.direction}: non-finite metric value")
    report = EvaluationReport(rows, materialized)
    report.check_averages()
    report.save(out)
    return {
        "command": "evaluate",
        "report": str(out),
        "config_hash": chash,
        "rows": [{"direction": r.direction, "fid": r.fid, "wd": r.wd, "ssim": r.ssim_mean} for r in rows],
    }


def cmd_report(cfg: dict, workers: int) -> dict:
    paths = cfg["reports"] if isinstance(cfg["reports"], list) else [cfg["reports"]]
    report = merge_reports(EvaluationReport.load(p) for p in paths)
    per_direction = bool(cfg["per_direction"])
    fmt = cfg["format"]
    if fmt == "markdown":
        table = render_markdown(report, per_direction)
        table += "\n## Configurations\n\n```json\n"
        table += json.dumps(report.config, sort_keys=True, ensure_ascii=False, indent=2) + "\n```\n"
    elif fmt == "text":
        table = render_text(report, per_direction)
    else:
        raise UsageError(f"--format must be 'markdown' or 'text', got {fmt!r}")
    if cfg["csv"]:
        Path(cfg["csv"]).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg["csv"]).write_text(render_csv(report, per_direction), encoding="utf-8")
    if cfg["out"]:
        Path(cfg["out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg["out"]).write_text(table, encoding="utf-8")
        return {"command": "report", "out": str(cfg["out"]), "csv": cfg["csv"], "rows": len(report.rows)}
    sys.stdout.write(table)
    return {}


def cmd_blindmix(cfg: dict, workers: int) -> dict:
    if cfg["score"]:
        if not cfg["key"]:
            raise UsageError("--score needs --key")
        key = read_key(cfg["key"])
        answers = read_key(cfg["score"])
        return {"command": "blindmix", "accuracy": score_answers(answers, key), "n": len(key)}
    missing = [k for k in ("real", "artificial", "sheet", "key") if not cfg[k]]
    if missing:
        raise UsageError("blindmix: missing required option(s) " + ", ".join("--" + k for k in missing))
    sheet_dir = Path(cfg["sheet"]).parent
    pools = []
    for name in ("real", "artificial"):
        subset = _load_subset(cfg[name], cfg["split"])
        pools.append([_relpath(p, sheet_dir) for p in subset.paths()])
    sheet = blind_mix(pools[0], pools[1], int(cfg["n_each"]), int(cfg["seed"]))
    sheet.write(cfg["sheet"], cfg["key"])
    return {"command": "blindmix", "sheet": str(cfg["sheet"]), "key": str(cfg["key"]), "n": len(sheet.presentation)}


COMMANDS = {
    "tile": cmd_tile,
    "fit": cmd_fit,
    "transfer": cmd_transfer,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "blindmix": cmd_blindmix,
}


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--workers", type=int, help=f"worker threads (default: ${WORKERS_ENV} or 1)")
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="stainbench", description="Stain transfer benchmark toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    p = sub.add_parser("tile", parents=[common], help="cut large images into tiles and write a manifest")
    p.add_argument("--input", nargs="+", default=S, help="one or more PNG/TIFF images")
    p.add_argument("--out", default=S, help="output directory for tiles")
    p.add_argument("--manifest", default=S, help="manifest path (default OUT/manifest.jsonl)")
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--stride", type=int, default=S)
    p.add_argument("--min-tissue", type=float, default=S, help="minimum tissue fraction per tile")
    p.add_argument("--od-threshold", type=float, default=S)
    p.add_argument("--downsample", action="store_true", default=S, help="bicubic 1:2 downscale first")
    p.add_argument("--label", default=S, help="stain label for all tiles")
    p.add_argument("--split", default=S, choices=("train", "val", "test"))
    p.add_argument("--split-fractions", default=S, help="e.g. train=0.8,val=0.1,test=0.1 (by source image)")
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("fit", parents=[common], help="fit a target profile on a tile corpus")
    p.add_argument("--method", default=S, choices=METHODS)
    p.add_argument("--manifest", default=S)
    p.add_argument("--label", default=S, help="only tiles with this stain label")
    p.add_argument("--split", default=S, help="only tiles in this split")
    p.add_argument("--out", default=S, help="profile JSON path")
    _add_stain_flags(p)

    p = sub.add_parser("transfer", parents=[common], help="apply a profile to every tile of a manifest")
    p.add_argument("--profile", default=S)
    p.add_argument("--manifest", default=S)
    p.add_argument("--label", default=S)
    p.add_argument("--split", default=S)
    p.add_argument("--out", default=S, help="output directory (tiles and manifest.jsonl)")
    p.add_argument("--out-label", default=S, help="stain label written to the output manifest")
    p.add_argument("--timing-out", default=S, help="write timing JSON here")
    _add_stain_flags(p)

    p = sub.add_parser("evaluate", parents=[common], help="compute FID, WD and SSIM for one method")
    p.add_argument("--method-name", default=S)
    p.add_argument("--he-mt", nargs=3, metavar=("SOURCE", "GENERATED", "TARGET"), default=S)
    p.add_argument("--mt-he", nargs=3, metavar=("SOURCE", "GENERATED", "TARGET"), default=S)
    p.add_argument("--split", default=S)
    p.add_argument("--extractor", default=S, help="'builtin' or 'torchscript:PATH'")
    p.add_argument("--extractor-dim", type=int, default=S)
    p.add_argument("--extractor-input-size", type=int, default=S)
    p.add_argument("--extractor-scale", choices=("unit", "byte"), default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--wd-cap", type=int, default=S)
    p.add_argument("--batch-size", type=int, default=S)
    p.add_argument("--feature-cache", default=S)
    p.add_argument("--out", default=S, help="report JSON path")

    p = sub.add_parser("report", parents=[common], help="render evaluation reports as tables")
    p.add_argument("--reports", nargs="+", default=S)
    p.add_argument("--out", default=S, help="table output (default stdout)")
    p.add_argument("--csv", default=S, help="also write CSV here")
    p.add_argument("--format", choices=("markdown", "text"), default=S)
    p.add_argument("--per-direction", action="store_true", default=S)

    p = sub.add_parser("blindmix", parents=[common], help="build or score a real/artificial blind test")
    p.add_argument("--real", default=S, help="manifest of real tiles")
    p.add_argument("--artificial", default=S, help="manifest of generated tiles")
    p.add_argument("--split", default=S)
    p.add_argument("--n-each", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--sheet", default=S, help="presentation CSV")
    p.add_argument("--key", default=S, help="answer key CSV")
    p.add_argument("--score", default=S, help="answers CSV (display_id,truth) to score against --key")
    return parser


def _add_stain_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--alpha-percentile", type=float, default=S)
    p.add_argument("--beta-od-threshold", type=float, default=S)
    p.add_argument("--max-percentile", type=float, default=S)
    p.add_argument("--min-pixels", type=int, default=S)
    p.add_argument("--solver", choices=("nnls", "lstsq"), default=S)
    p.add_argument("--sparsity-lambda", type=float, default=S)
    p.add_argument("--max-iters", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--eps", type=float, default=S, help="ColorStat std floor")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (NumericalError, FloatingPointError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        given = vars(ns).copy()
        command = given.pop("command")
        config_path = given.pop("config", None)
        workers = given.pop("workers", None)
        if given.pop("verbose", False):
            logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
        workers = default_workers() if workers is None else workers
        if workers < 1:
            raise UsageError("--workers must be positive")
        cfg = resolve_config(command, given, config_path)
        summary = COMMANDS[command](cfg, workers)
    except (StainBenchError, OSError, FloatingPointError, np.linalg.LinAlgError) as exc:
        code = _exit_code(exc)
        line = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
        print(json.dumps(line, ensure_ascii=False), file=sys.stderr)
        return code
    if summary:
        _emit(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
