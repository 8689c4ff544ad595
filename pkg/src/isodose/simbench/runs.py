"""A single simulated experiment and its analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..curve import curve_from_fit, evaluate_many, invert
from ..errors import NoIntervalError, NotEstimableError
from ..estimator_core import DoseResponseData, MonotoneFit, cir, pava
from ..intervals import band_at_x, forward_bands, sequential_inflation
from ..inverse_intervals import global_inverse, local_inverse
from .designs import DesignSpec, equal_allocation, k_in_a_row_path, tally
from .scenarios import ScenarioSpec, SeedLike, make_rng

# forward targets: name -> dose
FORWARD_TARGETS = {"x2": 2.0, "x3": 3.0, "x4": 4.0, "x2.5": 2.5, "x3.75": 3.75}
DESIGN_TARGETS = {f"x{j}": float(j) for j in range(1, 6)}
INTERP_TARGETS = {"x2.5": 2.5, "x3.75": 3.75}
FIXED_PERCENTILES = (0.25, 0.5)
SEQUENTIAL_PERCENTILE = 0.3
FORWARD_METHODS = ("Combined", "Morris", "Wilson")


def percentile_name(p: float) -> str:
    return f"q{p:g}"


@dataclass(frozen=True)
class PointRecord:
    estimate: float  # NaN when the estimate does not exist
    truth: float

    @property
    def found(self) -> bool:
        return not math.isnan(self.estimate)

    @property
    def error(self) -> float:
        return self.estimate - self.truth


@dataclass(frozen=True)
class IntervalRecord:
    lower: float
    upper: float
    truth: float
    found: bool = True

    @property
    def covered(self) -> bool:
        return self.found and self.lower <= self.truth <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower if self.found else math.nan


MISSING = IntervalRecord(math.nan, math.nan, math.nan, False)


@dataclass
class RunResult:
    """Outcome of one experiment.

    ``points[target][estimator]`` holds point estimates for ``"IR"`` and
    ``"CIR"``; ``intervals[(method, target)]`` holds interval records.
    ``allocation`` is per design point over the full grid, including doses a
    sequential design never visited; ``tallies`` keeps visited doses only.
    """

    points: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)
    scenario: Optional[ScenarioSpec] = None
    design: Optional[DesignSpec] = None
    tallies: Optional[DoseResponseData] = None
    ir_fit: Optional[MonotoneFit] = None
    cir_fit: Optional[MonotoneFit] = None
    allocation: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = None


def _invert_or_nan(curve, p):
    try:
        return invert(curve, p).x
    except NotEstimableError:
        return math.nan


LOCAL_ANCHOR = "design"


def _local(curve, band, p, truth):
    try:
        iv = local_inverse(curve, band, p, LOCAL_ANCHOR)
    except (NotEstimableError, NoIntervalError):
        return IntervalRecord(math.nan, math.nan, truth, False)
    return IntervalRecord(iv.lower, iv.upper, truth)


def _global(band, p, truth):
    iv = global_inverse(band, p)
    if not iv.finite:
        return IntervalRecord(iv.lower, iv.upper, truth, False)
    return IntervalRecord(iv.lower, iv.upper, truth)


def analyze(
    scenario: ScenarioSpec,
    data: DoseResponseData,
    forward_targets: dict,
    percentiles,
    *,
    level: float = 0.9,
    intervals: str = "fixed",
) -> RunResult:
    """Fit IR and CIR and record estimates and intervals against the truth.

    ``intervals`` is ``"fixed"`` (forward bands at design and interpolation
    points plus local/global inverse intervals), ``"sequential"`` (local
    inverse intervals with and without the allocation inflation) or
    ``"none"``.
    """
    ir_fit, cir_fit = pava(data), cir(data)
    ir_curve, cir_curve = curve_from_fit(ir_fit), curve_from_fit(cir_fit)
    lo_x, hi_x = float(data.x[0]), float(data.x[-1])
    res = RunResult(scenario=scenario, tallies=data, ir_fit=ir_fit, cir_fit=cir_fit)

    for name, x in forward_targets.items():
        if not lo_x <= x <= hi_x:
            continue
        truth = float(scenario.cdf(x))
        res.points[name] = {
            "IR": PointRecord(float(evaluate_many(ir_curve, x)), truth),
            "CIR": PointRecord(float(evaluate_many(cir_curve, x)), truth),
        }
    for p in percentiles:
        truth = scenario.quantile(p)
        res.points[percentile_name(p)] = {
            "IR": PointRecord(_invert_or_nan(ir_curve, p), truth),
            "CIR": PointRecord(_invert_or_nan(cir_curve, p), truth),
        }

    if intervals == "none":
        return res
    center = evaluate_many(cir_curve, data.x)
    bands = forward_bands(data, level, "Wilson", center)
    combined = bands["Combined"]
    if intervals == "fixed":
        for name, x in {**DESIGN_TARGETS, **INTERP_TARGETS}.items():
            if not lo_x <= x <= hi_x:
                continue
            truth = float(scenario.cdf(x))
            for method in FORWARD_METHODS:
                lo, up = band_at_x(bands[method], x)
                res.intervals[(method, name)] = IntervalRecord(lo, up, truth)
        for p in percentiles:
            truth = scenario.quantile(p)
            name = percentile_name(p)
            res.intervals[("local", name)] = _local(cir_curve, combined, p, truth)
            res.intervals[("global", name)] = _global(combined, p, truth)
    elif intervals == "sequential":
        inflated = sequential_inflation(combined, data.total, center)
        for p in percentiles:
            truth = scenario.quantile(p)
            name = percentile_name(p)
            res.intervals[("local", name)] = _local(cir_curve, combined, p, truth)
            res.intervals[("local+inflation", name)] = _local(cir_curve, inflated, p, truth)
    else:
        raise ValueError(f"unknown interval mode {intervals!r}")
    return res


def run_fixed(
    scenario: ScenarioSpec,
    design: DesignSpec,
    rng_seed: SeedLike,
    *,
    level: float = 0.9,
    percentiles=FIXED_PERCENTILES,
    intervals: bool = True,
) -> RunResult:
    """Equal allocation, Binomial responses at each design point."""
    if design.kind != "FixedEqual":
        raise ValueError("run_fixed needs a FixedEqual design")
    rng = make_rng(rng_seed)
    x = np.asarray(scenario.doses[: design.m], dtype=float)
    trials = equal_allocation(design.n, design.m)
    events = rng.binomial(trials, scenario.cdf(x))
    data = DoseResponseData.from_counts(x, events, trials)
    res = analyze(scenario, data, FORWARD_TARGETS, percentiles, level=level,
                  intervals="fixed" if intervals else "none")
    res.design = design
    res.allocation = trials
    return res


def run_k_in_a_row(
    scenario: ScenarioSpec,
    design: DesignSpec,
    rng_seed: SeedLike,
    *,
    level: float = 0.9,
    percentiles=(SEQUENTIAL_PERCENTILE,),
    intervals: bool = True,
) -> RunResult:
    """Up-and-down allocation; only visited doses enter the analysis."""
    if design.kind != "KInARow":
        raise ValueError("run_k_in_a_row needs a KInARow design")
    rng = make_rng(rng_seed)
    x = np.asarray(scenario.doses[: design.m], dtype=float)
    doses, resp = k_in_a_row_path(scenario.cdf(x), design.n, design.k, design.start_index, rng)
    events, trials = tally(doses, resp, design.m)
    seen = trials > 0
    data = DoseResponseData.from_counts(x[seen], events[seen], trials[seen])
    res = analyze(scenario, data, {}, percentiles, level=level,
                  intervals="sequential" if intervals else "none")
    res.design = design
    res.allocation = trials
    res.trajectory = doses
    return res
