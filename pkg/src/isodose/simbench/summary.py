"""Ensemble statistics and the tabular output format."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

NA = "NA"
DIFF_TOL = 1e-12


@dataclass(frozen=True)
class TargetStats:
    target: str
    n_runs: int
    found_ir: int
    found_cir: int
    rmse_ir: float
    rmse_cir: float
    bias_ir: float
    bias_cir: float
    unequal: float  # fraction of runs (both estimates present) where IR != CIR
    n_differing: int
    mse_ratio: Optional[float]  # None when no run differs


@dataclass(frozen=True)
class IntervalStats:
    method: str
    target: str
    n_runs: int
    found_rate: float
    coverage: float  # among runs with a found interval
    mean_width: float


@dataclass
class EnsembleSummary:
    n_runs: int
    targets: dict
    intervals: dict
    pct_unequal: float  # per-target differing fraction, averaged over targets, in %
    pct_unequal_any: float  # runs differing at any target, in %
    mse_ratio: Optional[float]  # mean over targets of the per-target ratio

    def interval_mean(self, method: str, targets: Sequence[str], attr: str) -> float:
        """Pool interval statistics over several targets (weighted by runs)."""
        stats = [self.intervals[(method, t)] for t in targets if (method, t) in self.intervals]
        if attr == "found_rate":
            return _wmean([s.found_rate for s in stats], [s.n_runs for s in stats])
        weights = [s.found_rate * s.n_runs for s in stats]
        return _wmean([getattr(s, attr) for s in stats], weights)


def _wmean(values, weights) -> float:
    pairs = [(v, w) for v, w in zip(values, weights) if w > 0 and not math.isnan(v)]
    if not pairs:
        return math.nan
    return sum(v * w for v, w in pairs) / sum(w for _, w in pairs)


def _differs(a: float, b: float) -> bool:
    return abs(a - b) > DIFF_TOL


def _rmse(errors) -> float:
    return float(np.sqrt(np.mean(np.square(errors)))) if len(errors) else math.nan


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else math.nan


def target_stats(results, target: str) -> TargetStats:
    err_ir, err_cir, diff_ir, diff_cir = [], [], [], []
    both = 0
    for r in results:
        rec = r.points[target]
        ir, ci = rec["IR"], rec["CIR"]
        if ir.found:
            err_ir.append(ir.error)
        if ci.found:
            err_cir.append(ci.error)
        if ir.found and ci.found:
            both += 1
            if _differs(ir.estimate, ci.estimate):
                diff_ir.append(ir.error)
                diff_cir.append(ci.error)
    ratio = None
    if diff_ir:
        mse_cir = float(np.mean(np.square(diff_cir)))
        if mse_cir > 0:
            ratio = float(np.mean(np.square(diff_ir))) / mse_cir
    return TargetStats(
        target=target,
        n_runs=len(results),
        found_ir=len(err_ir),
        found_cir=len(err_cir),
        rmse_ir=_rmse(err_ir),
        rmse_cir=_rmse(err_cir),
        bias_ir=_mean(err_ir),
        bias_cir=_mean(err_cir),
        unequal=len(diff_ir) / both if both else math.nan,
        n_differing=len(diff_ir),
        mse_ratio=ratio,
    )


def interval_stats(results, method: str, target: str) -> IntervalStats:
    recs = [r.intervals[(method, target)] for r in results if (method, target) in r.intervals]
    found = [rec for rec in recs if rec.found]
    return IntervalStats(
        method=method,
        target=target,
        n_runs=len(recs),
        found_rate=len(found) / len(recs) if recs else math.nan,
        coverage=_mean([rec.covered for rec in found]),
        mean_width=_mean([rec.width for rec in found]),
    )


def paired_widths(results, methods: Sequence[str], targets: Sequence[str]) -> dict:
    """Mean widths per method over (run, target) pairs where every method
    produced an interval."""
    widths = {m: [] for m in methods}
    for r in results:
        for t in targets:
            recs = [r.intervals.get((m, t)) for m in methods]
            if all(rec is not None and rec.found for rec in recs):
                for m, rec in zip(methods, recs):
                    widths[m].append(rec.width)
    return {m: _mean(w) for m, w in widths.items()}


def summarize(results: Sequence, targets: Iterable[str]) -> EnsembleSummary:
    """Point-estimate statistics for ``targets`` and statistics for every
    interval record present in the results."""
    results = list(results)
    if not results:
        raise ValueError("summarize needs at least one run")
    targets = list(targets)
    per_target = {t: target_stats(results, t) for t in targets}
    any_diff = 0
    for r in results:
        for t in targets:
            ir, ci = r.points[t]["IR"], r.points[t]["CIR"]
            if ir.found and ci.found and _differs(ir.estimate, ci.estimate):
                any_diff += 1
                break
    fractions = [s.unequal for s in per_target.values() if not math.isnan(s.unequal)]
    ratios = [s.mse_ratio for s in per_target.values() if s.mse_ratio is not None]
    keys = sorted({k for r in results for k in r.intervals})
    return EnsembleSummary(
        n_runs=len(results),
        targets=per_target,
        intervals={k: interval_stats(results, *k) for k in keys},
        pct_unequal=100.0 * float(np.mean(fractions)) if fractions else math.nan,
        pct_unequal_any=100.0 * any_diff / len(results),
        mse_ratio=float(np.mean(ratios)) if ratios else None,
    )


# ---------------------------------------------------------------------------
# output


def format_cell(value, spec: str = ".4f") -> str:
    if value is None:
        return NA
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if math.isnan(value):
        return NA
    return format(float(value), spec)


@dataclass
class SummaryTable:
    """Rows of cells under named columns; floats are formatted on output."""

    table_id: str
    title: str
    columns: list
    rows: list = field(default_factory=list)
    formats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add_row(self, **cells):
        unknown = set(cells) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append([cells.get(c) for c in self.columns])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def find(self, **match) -> dict:
        """The single row whose cells equal ``match``, as a column->value dict."""
        hits = [
            dict(zip(self.columns, row))
            for row in self.rows
            if all(row[self.columns.index(k)] == v for k, v in match.items())
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {match}")
        return hits[0]

    def formatted_rows(self) -> list:
        return [
            [format_cell(v, self.formats.get(c, ".4f")) for c, v in zip(self.columns, row)]
            for row in self.rows
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.formatted_rows())
        return buf.getvalue()

    def to_text(self) -> str:
        body = [list(self.columns)] + self.formatted_rows()
        widths = [max(len(r[i]) for r in body) for i in range(len(self.columns))]
        lines = [self.title, ""]
        for k, row in enumerate(body):
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        lines.extend(f"# {note}" for note in self.notes)
        return "\n".join(lines) + "\n"
