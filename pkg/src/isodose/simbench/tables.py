"""Ensembles of runs and the summary tables built from them."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError
from .designs import DesignSpec
from .runs import (
    DESIGN_TARGETS,
    FIXED_PERCENTILES,
    FORWARD_METHODS,
    FORWARD_TARGETS,
    INTERP_TARGETS,
    SEQUENTIAL_PERCENTILE,
    percentile_name,
    run_fixed,
    run_k_in_a_row,
)
from .scenarios import FAMILIES, draw_scenario, family_tag
from .summary import SummaryTable, paired_widths, summarize

TABLE_IDS = (
    "T1-forward",
    "T2-inverse-fixed",
    "T3-inverse-sequential",
    "T4-fwd-cov-design",
    "T5-fwd-cov-interp",
    "T6-inv-cov",
    "T7-inv-cov-seq",
    "S-bias",
)
N_VALUES = (20, 40, 80)
_DESIGN_CODES = {"FixedEqual": 0, "KInARow": 1}
_SEQUENTIAL_TABLES = {"T3-inverse-sequential", "T7-inv-cov-seq"}


@dataclass(frozen=True)
class EnsembleKey:
    kind: str
    family: str
    n: int
    size: int
    master_seed: int
    level: float = 0.9


def run_seeds(master_seed: int, kind: str, family: str, n: int, index: int):
    """Scenario and experiment seeds for one run, derived from its coordinates
    alone so results do not depend on execution order."""
    ss = np.random.SeedSequence(
        int(master_seed),
        spawn_key=(_DESIGN_CODES[kind], FAMILIES.index(family), int(n), int(index)),
    )
    return ss.spawn(2)


def _one_run(key: EnsembleKey, index: int):
    scen_seed, exp_seed = run_seeds(key.master_seed, key.kind, key.family, key.n, index)
    scenario = draw_scenario(key.family, scen_seed)
    if key.kind == "FixedEqual":
        return run_fixed(scenario, DesignSpec.fixed(key.n), exp_seed, level=key.level)
    return run_k_in_a_row(scenario, DesignSpec.k_in_a_row(key.n), exp_seed, level=key.level)


def _run_block(key: EnsembleKey, start: int, stop: int):
    return [_one_run(key, i) for i in range(start, stop)]


def run_ensemble(key: EnsembleKey, workers: int = 1) -> list:
    """All runs of an ensemble, ordered by run index."""
    if key.size < 1:
        raise ConfigError("ensemble_size must be >= 1")
    if workers <= 1:
        return _run_block(key, 0, key.size)
    step = max(1, -(-key.size // (4 * workers)))
    bounds = [(s, min(s + step, key.size)) for s in range(0, key.size, step)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        blocks = pool.map(_run_block, [key] * len(bounds), *zip(*bounds))
        return [r for block in blocks for r in block]


class EnsembleCache:
    """Memoizes ensembles so tables built from the same runs share them."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._store = {}

    def get(self, key: EnsembleKey) -> list:
        if key not in self._store:
            self._store[key] = run_ensemble(key, self.workers)
        return self._store[key]


# ---------------------------------------------------------------------------
# table layouts

_COLUMNS = {
    "T1-forward": ["Family", "n", "Method", "%Unequal", "MSE Ratio", *FORWARD_TARGETS, "%UnequalAny"],
    "T2-inverse-fixed": ["Family", "n", "Method", "%Unequal", "MSE Ratio",
                         *[percentile_name(p) for p in FIXED_PERCENTILES], "%UnequalAny"],
    "T3-inverse-sequential": ["Family", "n", "%Unequal", "MSE Ratio", "RMSE IR", "RMSE CIR", "Found"],
    "T4-fwd-cov-design": ["Family", "n"] + [f"{m} {s}" for m in FORWARD_METHODS for s in ("Coverage", "Width")],
    "T5-fwd-cov-interp": ["Family", "n"] + [f"{m} {s}" for m in FORWARD_METHODS for s in ("Coverage", "Width")],
    "T6-inv-cov": ["Family", "n", "Local Found", "Global Found", "Local Coverage", "Local Width",
                   "Global Coverage", "Global Width"],
    "T7-inv-cov-seq": ["Family", "n", "Local Coverage", "Local Width",
                       "Local+Seq Coverage", "Local+Seq Width", "Found"],
    "S-bias": ["Family", "n", "Method", *FORWARD_TARGETS],
}

_TITLES = {
    "T1-forward": "Forward point estimation: RMSE by target, fixed design",
    "T2-inverse-fixed": "Inverse point estimation: RMSE by percentile, fixed design",
    "T3-inverse-sequential": "Inverse point estimation of the 30th percentile, k-in-a-row design",
    "T4-fwd-cov-design": "Forward interval coverage (width) at design points",
    "T5-fwd-cov-interp": "Forward interval coverage (width) at interpolation points",
    "T6-inv-cov": "Inverse interval found rate and coverage (width), fixed design",
    "T7-inv-cov-seq": "Local inverse interval coverage (width), k-in-a-row design",
    "S-bias": "Forward point estimation: mean error by target, fixed design",
}


def _formats(table_id: str) -> dict:
    fmt = {c: ".4f" for c in _COLUMNS[table_id]}
    for c in ("%Unequal", "%UnequalAny"):
        fmt[c] = ".1f"
    for c in ("Local Found", "Global Found", "Found"):
        fmt[c] = ".3f"
    return fmt


def _fill(table: SummaryTable, table_id: str, family: str, n: int, runs: list):
    if table_id in ("T1-forward", "T2-inverse-fixed", "S-bias"):
        targets = list(FORWARD_TARGETS) if table_id != "T2-inverse-fixed" else [
            percentile_name(p) for p in FIXED_PERCENTILES]
        s = summarize(runs, targets)
        for method in ("IR", "CIR"):
            attr = "bias" if table_id == "S-bias" else "rmse"
            cells = {t: getattr(s.targets[t], f"{attr}_{method.lower()}") for t in targets}
            if table_id != "S-bias":
                cells.update({"%Unequal": s.pct_unequal, "MSE Ratio": s.mse_ratio,
                              "%UnequalAny": s.pct_unequal_any})
            table.add_row(Family=family, n=n, Method=method, **cells)
    elif table_id == "T3-inverse-sequential":
        t = percentile_name(SEQUENTIAL_PERCENTILE)
        s = summarize(runs, [t])
        st = s.targets[t]
        table.add_row(Family=family, n=n, **{
            "%Unequal": s.pct_unequal, "MSE Ratio": s.mse_ratio, "RMSE IR": st.rmse_ir,
            "RMSE CIR": st.rmse_cir, "Found": st.found_cir / st.n_runs})
    elif table_id in ("T4-fwd-cov-design", "T5-fwd-cov-interp"):
        targets = list(DESIGN_TARGETS if table_id == "T4-fwd-cov-design" else INTERP_TARGETS)
        s = summarize(runs, [])
        cells = {}
        for m in FORWARD_METHODS:
            cells[f"{m} Coverage"] = s.interval_mean(m, targets, "coverage")
            cells[f"{m} Width"] = s.interval_mean(m, targets, "mean_width")
        table.add_row(Family=family, n=n, **cells)
    elif table_id == "T6-inv-cov":
        targets = [percentile_name(p) for p in FIXED_PERCENTILES]
        s = summarize(runs, [])
        widths = paired_widths(runs, ("local", "global"), targets)
        table.add_row(Family=family, n=n, **{
            "Local Found": s.interval_mean("local", targets, "found_rate"),
            "Global Found": s.interval_mean("global", targets, "found_rate"),
            "Local Coverage": s.interval_mean("local", targets, "coverage"),
            "Global Coverage": s.interval_mean("global", targets, "coverage"),
            "Local Width": widths["local"],
            "Global Width": widths["global"],
        })
    elif table_id == "T7-inv-cov-seq":
        t = [percentile_name(SEQUENTIAL_PERCENTILE)]
        s = summarize(runs, [])
        table.add_row(Family=family, n=n, **{
            "Local Coverage": s.interval_mean("local", t, "coverage"),
            "Local Width": s.interval_mean("local", t, "mean_width"),
            "Local+Seq Coverage": s.interval_mean("local+inflation", t, "coverage"),
            "Local+Seq Width": s.interval_mean("local+inflation", t, "mean_width"),
            "Found": s.interval_mean("local", t, "found_rate"),
        })


def reproduce_table(
    table_id: str,
    ensemble_size: int,
    master_seed: int,
    *,
    families: Optional[Sequence[str]] = None,
    n_values: Sequence[int] = N_VALUES,
    level: float = 0.9,
    workers: int = 1,
    cache: Optional[EnsembleCache] = None,
) -> SummaryTable:
    """Run (or reuse) the ensembles behind ``table_id`` and lay out the table."""
    if table_id not in TABLE_IDS:
        raise ConfigError(f"unknown table id {table_id!r}; expected one of {', '.join(TABLE_IDS)}")
    families = [family_tag(f) for f in (families or FAMILIES)]
    cache = cache or EnsembleCache(workers)
    kind = "KInARow" if table_id in _SEQUENTIAL_TABLES else "FixedEqual"
    table = SummaryTable(table_id, _TITLES[table_id], list(_COLUMNS[table_id]),
                         formats=_formats(table_id))
    table.notes.append(f"ensemble_size={ensemble_size} master_seed={master_seed} level={level:g}")
    for family in families:
        for n in n_values:
            runs = cache.get(EnsembleKey(kind, family, int(n), int(ensemble_size),
                                         int(master_seed), float(level)))
            _fill(table, table_id, family, int(n), runs)
    return table
