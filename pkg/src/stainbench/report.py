"""Evaluation reports: per-direction metric rows, averaging and table rendering."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import DataError, NumericalError

HE_MT, MT_HE, AVERAGED = "HE→MT", "MT→HE", "averaged"
DIRECTIONS = (HE_MT, MT_HE, AVERAGED)
SPLIT_ORDER = ("val", "test", "train")
METRICS = ("fid", "wd", "ssim_mean", "ssim_stderr")
WD_FACTOR = 1e4
REPORT_FORMAT = "stainbench.report"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ReportRow:
    method_name: str
    direction: str
    split: str
    fid: float
    wd: float
    ssim_mean: float
    ssim_stderr: float
    n_pairs: int
    extractor_name: str
    config_hash: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise DataError(f"unknown direction {self.direction!r}")


def average_rows(a: ReportRow, b: ReportRow) -> ReportRow:
    """Averaged row: arithmetic mean of every metric over the two directions."""
    if {a.direction, b.direction} != {HE_MT, MT_HE}:
        raise DataError("averaging needs one HE→MT and one MT→HE row")
    if (a.method_name, a.split) != (b.method_name, b.split):
        raise DataError("averaged rows must share method and split")
    means = {m: 0.5 * (getattr(a, m) + getattr(b, m)) for m in METRICS}
    return ReportRow(
        method_name=a.method_name,
        direction=AVERAGED,
        split=a.split,
        n_pairs=a.n_pairs + b.n_pairs,
        extractor_name=a.extractor_name,
        config_hash=a.config_hash,
        **means,
    )


@dataclass
class EvaluationReport:
    rows: list[ReportRow]
    config: dict

    def check_averages(self, tol: float = 1e-9) -> None:
        """Raise if an averaged row is not the mean of its direction rows."""
        index = {(r.method_name, r.split, r.direction): r for r in self.rows}
        for r in self.rows:
            if r.direction != AVERAGED:
                continue
            he = index.get((r.method_name, r.split, HE_MT))
            mt = index.get((r.method_name, r.split, MT_HE))
            if he is None or mt is None:
                raise DataError(f"averaged row for {r.method_name}/{r.split} lacks a direction row")
            expected = average_rows(he, mt)
            for m in METRICS:
                if abs(getattr(expected, m) - getattr(r, m)) > tol * max(1.0, abs(getattr(expected, m))):
                    raise NumericalError(f"{r.method_name}/{r.split}: averaged {m} is not the direction mean")

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": 1,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EvaluationReport":
        path = Path(path)
        if not path.exists():
            raise DataError(f"report not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc.msg})") from None
        if doc.get("format") != REPORT_FORMAT:
            raise DataError(f"{path}: not a stainbench report")
        names = {f.name for f in fields(ReportRow)}
        rows = [ReportRow(**{k: v for k, v in r.items() if k in names}) for r in doc["rows"]]
        return cls(rows, doc.get("config", {}))


def merge_reports(reports) -> EvaluationReport:
    rows, configs = [], {}
    seen = set()
    for rep in reports:
        for r in rep.rows:
            key = (r.method_name, r.split, r.direction)
            if key in seen:
                raise DataError(f"duplicate report row {key}")
            seen.add(key)
            rows.append(r)
            configs[r.config_hash] = rep.config
    return EvaluationReport(rows, {h: configs[h] for h in sorted(configs)})


def _sort_key_by_method(rows):
    """Methods ordered by validation FID (averaged row if present), ties by name."""
    best = {}
    for r in rows:
        if r.split != "val":
            continue
        rank = 0 if r.direction == AVERAGED else 1
        cur = best.get(r.method_name)
        if cur is None or (rank, r.fid) < cur:
            best[r.method_name] = (rank, r.fid)
    inf = float("inf")
    return lambda name: (best.get(name, (2, inf))[1], name)


def table_rows(report: EvaluationReport, per_direction: bool = False) -> tuple[list[str], list[list[str]]]:
    """Wide table: one line per method (or per method and direction), metric columns per split."""
    report.check_averages()
    directions = (HE_MT, MT_HE) if per_direction else (AVERAGED,)
    present = [r for r in report.rows if r.direction in directions]
    if not present and not per_direction:
        # Single-direction evaluations have no averaged row; show what exists.
        present = list(report.rows)
        directions = (HE_MT, MT_HE)
    splits = [s for s in SPLIT_ORDER if any(r.split == s for r in present)]
    index = {(r.method_name, r.direction, r.split): r for r in present}
    methods = sorted({r.method_name for r in present}, key=_sort_key_by_method(report.rows))
    header = ["Method"] + (["Direction"] if len(directions) > 1 else [])
    for s in splits:
        header += [f"FID ({s})", f"WD ×10⁻⁴ ({s})", f"SSIM ({s})"]
    body = []
    for m in methods:
        for d in directions:
            if not any((m, d, s) in index for s in splits):
                continue
            line = [m] + ([d] if len(directions) > 1 else [])
            for s in splits:
                r = index.get((m, d, s))
                if r is None:
                    line += ["-", "-", "-"]
                else:
                    line += [f"{r.fid:.2f}", f"{r.wd * WD_FACTOR:.2f}", f"{r.ssim_mean:.3f} ± {r.ssim_stderr:.3f}"]
            body.append(line)
    return header, body


def render_markdown(report: EvaluationReport, per_direction: bool = False) -> str:
    header, body = table_rows(report, per_direction)
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(line) + " |" for line in body]
    out.append("")
    out.append("WD values carry a factor of 10⁻⁴. Methods are ordered by validation FID.")
    return "\n".join(out) + "\n"


def render_text(report: EvaluationReport, per_direction: bool = False) -> str:
    header, body = table_rows(report, per_direction)
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header] + body]
    return "\n".join(lines) + "\n"


def render_csv(report: EvaluationReport, per_direction: bool = False) -> str:
    """Long-format CSV with full-precision values (WD unscaled)."""
    report.check_averages()
    directions = (HE_MT, MT_HE) if per_direction else (AVERAGED,)
    rows = [r for r in report.rows if r.direction in directions] or list(report.rows)
    order = _sort_key_by_method(report.rows)
    rows.sort(key=lambda r: (order(r.method_name), DIRECTIONS.index(r.direction), SPLIT_ORDER.index(r.split)))
    buf = io.StringIO()
    names = [f.name for f in fields(ReportRow)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(r, n) for n in names)])
    return buf.getvalue()
