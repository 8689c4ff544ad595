"""Reading dose-response CSV files and building fit reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .curve import curve_from_fit, evaluate_many
from .errors import NoIntervalError, NotEstimableError
from .estimator_core import DoseResponseData, cir, pava
from .intervals import forward_band, method_tag, sequential_inflation
from .inverse_intervals import global_inverse, local_inverse
from .curve import invert

SCHEMA_VERSION = 1
REQUIRED_COLUMNS = ("dose", "events", "trials")
REPORT_COLUMNS = ("dose", "events", "trials", "y", "ir", "cir", "lower", "upper")


class InputError(ValueError):
    """Malformed input file; carries a 1-based line and column."""

    def __init__(self, path, line: int, column: int, message: str):
        self.path, self.line, self.column = str(path), line, column
        super().__init__(f"{path}:{line}:{column}: {message}")


@dataclass
class ParsedInput:
    data: DoseResponseData
    reordered: bool = False


def _number(text, path, line, col, name, integer=False):
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        raise InputError(path, line, col, f"{name} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise InputError(path, line, col, f"{name} must be finite")
    if integer:
        if value != int(value):
            raise InputError(path, line, col, f"{name} must be a whole number: {text!r}")
        return int(value)
    return value


def parse_counts_csv(text: str, path="<input>") -> ParsedInput:
    """Parse ``dose,events,trials`` rows.

    Lines starting with ``#`` and blank lines are skipped; extra columns are
    ignored, so a CSV report reads back as its own input. Rows out of dose
    order are sorted (``reordered`` is set).
    """
    rows = []
    header = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = [f.strip().lower() for f in fields]
            for name in REQUIRED_COLUMNS:
                if name not in header:
                    raise InputError(path, lineno, 1, f"header lacks column {name!r}")
            idx = {name: header.index(name) for name in REQUIRED_COLUMNS}
            continue
        if len(fields) != len(header):
            raise InputError(path, lineno, min(len(fields), len(header)) + 1,
                             f"expected {len(header)} fields, found {len(fields)}")
        dose = _number(fields[idx["dose"]], path, lineno, idx["dose"] + 1, "dose")
        events = _number(fields[idx["events"]], path, lineno, idx["events"] + 1, "events", True)
        trials = _number(fields[idx["trials"]], path, lineno, idx["trials"] + 1, "trials", True)
        if trials < 1:
            raise InputError(path, lineno, idx["trials"] + 1, "trials must be >= 1")
        if not 0 <= events <= trials:
            raise InputError(path, lineno, idx["events"] + 1, "events must lie in 0..trials")
        rows.append((dose, events, trials, lineno))
    if header is None:
        raise InputError(path, 1, 1, "empty input: expected header 'dose,events,trials'")
    if not rows:
        raise InputError(path, 2, 1, "no data rows")
    ordered = sorted(rows, key=lambda r: r[0])
    for a, b in zip(ordered, ordered[1:]):
        if a[0] == b[0]:
            raise InputError(path, max(a[3], b[3]), idx["dose"] + 1,
                             f"dose {b[0]!r} appears on lines {a[3]} and {b[3]}")
    data = DoseResponseData.from_counts(
        [r[0] for r in ordered], [r[1] for r in ordered], [r[2] for r in ordered]
    )
    return ParsedInput(data, reordered=ordered != rows)


def read_counts_csv(path) -> ParsedInput:
    path = Path(path)
    return parse_counts_csv(path.read_text(encoding="utf-8"), path)


@dataclass(frozen=True)
class FitRequest:
    percentiles: Sequence[float] = (0.25, 0.5, 0.75)
    level: float = 0.9
    interval_method: str = "Combined"
    pointwise_method: str = "Wilson"
    inverse_method: str = "local"
    local_anchor: str = "design"
    sequential: bool = False
    grid: int = 101

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        for p in self.percentiles:
            if not 0.0 < p < 1.0:
                raise ValueError(f"percentile must lie in (0, 1), got {p}")
        if self.inverse_method not in ("local", "global"):
            raise ValueError("inverse method must be 'local' or 'global'")
        if self.local_anchor not in ("design", "estimate"):
            raise ValueError("local anchor must be 'design' or 'estimate'")
        if self.grid < 2:
            raise ValueError("grid needs at least 2 points")
        method_tag(self.interval_method)
        method_tag(self.pointwise_method)


def _num(v):
    # JSON-safe number: non-finite values become null
    v = float(v)
    return v if math.isfinite(v) else None


def build_report(data: DoseResponseData, req: FitRequest, source: str = "", reordered=False) -> dict:
    ir_fit, cir_fit = pava(data), cir(data)
    ir_curve, cir_curve = curve_from_fit(ir_fit), curve_from_fit(cir_fit)
    center = evaluate_many(cir_curve, data.x)
    band = forward_band(data, req.level, req.interval_method, req.pointwise_method, center)
    if req.sequential:
        band = sequential_inflation(band, data.total, center)

    design = [
        {
            "dose": float(x), "events": int(k), "trials": int(n), "y": float(y),
            "ir": float(fi), "cir": float(fc), "lower": float(lo), "upper": float(up),
        }
        for x, k, n, y, fi, fc, lo, up in zip(
            data.x, data.events, data.n, data.y, ir_fit.fs, center, band.lower, band.upper
        )
    ]
    shrinkage = [
        {"dose": float(x), "estimate": float(f), "weight": float(w), "synthetic": bool(s)}
        for x, f, w, s in zip(cir_fit.xs, cir_fit.fs, cir_fit.ns, cir_fit.synthetic_boundary)
    ]
    grid = np.linspace(data.x[0], data.x[-1], req.grid) if data.m > 1 else data.x.copy()
    curves = {
        "ir_knots": [[float(x), float(y)] for x, y in zip(ir_curve.xs, ir_curve.ys)],
        "cir_knots": [[float(x), float(y)] for x, y in zip(cir_curve.xs, cir_curve.ys)],
        "band_lower": [[float(x), float(y)] for x, y in zip(band.x, band.lower)],
        "band_upper": [[float(x), float(y)] for x, y in zip(band.x, band.upper)],
        "grid": {
            "dose": [float(v) for v in grid],
            "ir": [float(v) for v in evaluate_many(ir_curve, grid)],
            "cir": [float(v) for v in evaluate_many(cir_curve, grid)],
            "lower": [float(v) for v in np.interp(grid, band.x, band.lower)],
            "upper": [float(v) for v in np.interp(grid, band.x, band.upper)],
        },
    }
    inverse = [_inverse_entry(cir_curve, ir_curve, band, p, req) for p in req.percentiles]
    return {
        "schema_version": SCHEMA_VERSION,
        "source": source,
        "reordered_on_input": bool(reordered),
        "settings": {
            "level": req.level,
            "interval_method": method_tag(req.interval_method),
            "pointwise_method": method_tag(req.pointwise_method),
            "inverse_method": req.inverse_method,
            "local_anchor": req.local_anchor,
            "sequential": req.sequential,
            "grid": req.grid,
        },
        "design_points": design,
        "shrinkage_points": shrinkage,
        "curves": curves,
        "inverse": inverse,
    }


def _inverse_entry(cir_curve, ir_curve, band, p, req) -> dict:
    entry = {"p": float(p), "estimate": None, "ir_estimate": None, "ambiguous": False,
             "lower": None, "upper": None, "finite": False, "status": "ok"}
    try:
        entry["ir_estimate"] = invert(ir_curve, p).x
    except NotEstimableError:
        pass
    try:
        entry["estimate"] = invert(cir_curve, p).x
    except NotEstimableError:
        entry["status"] = "not_estimable"
        if req.inverse_method == "local":
            return entry
    try:
        if req.inverse_method == "local":
            iv = local_inverse(cir_curve, band, p, req.local_anchor)
        else:
            iv = global_inverse(band, p)
    except NoIntervalError:
        entry["status"] = "no_interval"
        return entry
    entry.update(lower=_num(iv.lower), upper=_num(iv.upper), finite=bool(iv.finite))
    if not iv.finite and entry["status"] == "ok":
        entry["status"] = "unbounded"
    return entry


# ---------------------------------------------------------------------------
# output formats


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    s = report["settings"]
    buf.write(f"# isodose fit report schema_version={report['schema_version']}\n")
    buf.write("# settings " + " ".join(f"{k}={_fmt(v) if not isinstance(v, str) else v}"
                                      for k, v in s.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in report["design_points"]:
        w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    buf.write("# shrinkage_points dose,estimate,weight,synthetic\n")
    for sp in report["shrinkage_points"]:
        buf.write("# " + ",".join(_fmt(sp[k]) for k in ("dose", "estimate", "weight", "synthetic")) + "\n")
    buf.write("# inverse p,estimate,ir_estimate,ambiguous,lower,upper,finite,status\n")
    for e in report["inverse"]:
        buf.write("# " + ",".join(
            _fmt(e[k]) if k != "status" else e[k]
            for k in ("p", "estimate", "ir_estimate", "ambiguous", "lower", "upper", "finite", "status")
        ) + "\n")
    return buf.getvalue()


def to_text(report: dict) -> str:
    s = report["settings"]
    lines = [
        f"Monotone dose-response fit ({s['interval_method']} {s['level']:g} band"
        + (", sequential correction" if s["sequential"] else "") + ")",
        "",
        f"{'dose':>10} {'events':>7} {'trials':>7} {'y':>8} {'IR':>8} {'CIR':>8} {'lower':>8} {'upper':>8}",
    ]
    for r in report["design_points"]:
        lines.append(
            f"{r['dose']:>10.4g} {r['events']:>7d} {r['trials']:>7d} {r['y']:>8.4f} "
            f"{r['ir']:>8.4f} {r['cir']:>8.4f} {r['lower']:>8.4f} {r['upper']:>8.4f}"
        )
    lines += ["", "CIR shrinkage points:", f"{'dose':>10} {'estimate':>9} {'weight':>7}"]
    for sp in report["shrinkage_points"]:
        tag = "  (boundary)" if sp["synthetic"] else ""
        lines.append(f"{sp['dose']:>10.4g} {sp['estimate']:>9.4f} {sp['weight']:>7g}{tag}")
    lines += ["", f"Inverse estimates ({s['inverse_method']} intervals):",
              f"{'p':>6} {'CIR':>9} {'IR':>9} {'lower':>9} {'upper':>9}  status"]

    def cell(v):
        return f"{'NA':>9}" if v is None else f"{v:>9.4f}"

    for e in report["inverse"]:
        lines.append(f"{e['p']:>6g} {cell(e['estimate'])} {cell(e['ir_estimate'])} "
                     f"{cell(e['lower'])} {cell(e['upper'])}  {e['status']}")
    return "\n".join(lines) + "\n"


FORMATTERS = {"json": to_json, "csv": to_csv, "text": to_text}
