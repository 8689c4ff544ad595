"""Piecewise-linear monotone curves: evaluation, inversion and local slope."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NotEstimableError, ValidationError, ZeroSlopeError
from .estimator_core import MonotoneFit


@dataclass(frozen=True, eq=False)
class PiecewiseLinearCurve:
    """Linear interpolation between ordered knots, no extrapolation."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).ravel()
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.size == 0 or xs.size != ys.size:
            raise ValidationError("knots", "need matching, non-empty x and y")
        if np.any(np.diff(xs) <= 0):
            raise ValidationError("knots", "knot x must be strictly increasing")
        if np.any(np.diff(ys) < 0):
            raise ValidationError("knots", "knot y must be nondecreasing")
        if np.any(ys < 0) or np.any(ys > 1):
            raise ValidationError("knots", "knot y must lie in [0, 1]")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def knots(self):
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    @property
    def domain(self):
        return float(self.xs[0]), float(self.xs[-1])

    def evaluate(self, x):
        return evaluate(self, x)

    def invert(self, p):
        return invert(self, p)

    def slope_at(self, x, min_slope=0.0):
        return slope_at(self, x, min_slope)


class InverseResult(NamedTuple):
    x: float
    ambiguous: bool


def curve_from_fit(fit: MonotoneFit) -> PiecewiseLinearCurve:
    return PiecewiseLinearCurve(fit.xs, fit.fs)


def _check_domain(curve, x):
    lo, hi = curve.domain
    if not (lo <= x <= hi):
        raise DomainError(f"dose {x} outside curve domain [{lo}, {hi}]")


def evaluate(curve: PiecewiseLinearCurve, x: float) -> float:
    """Curve value at dose ``x``; knot locations return knot values exactly."""
    x = float(x)
    _check_domain(curve, x)
    xs, ys = curve.xs, curve.ys
    j = int(np.searchsorted(xs, x, side="left"))
    if xs[j] == x:
        return float(ys[j])
    x0, x1, y0, y1 = xs[j - 1], xs[j], ys[j - 1], ys[j]
    return float(y0 + (y1 - y0) * (x - x0) / (x1 - x0))


def evaluate_many(curve: PiecewiseLinearCurve, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lo, hi = curve.domain
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError(f"doses outside curve domain [{lo}, {hi}]")
    return np.interp(x, curve.xs, curve.ys)


def _cross_left(xs, ys, p):
    # smallest x with curve(x) >= p
    j = int(np.searchsorted(ys, p, side="left"))
    if j == 0 or ys[j] == p:
        return float(xs[j])
    return float(xs[j - 1] + (p - ys[j - 1]) * (xs[j] - xs[j - 1]) / (ys[j] - ys[j - 1]))


def _cross_right(xs, ys, p):
    # largest x with curve(x) <= p
    k = int(np.searchsorted(ys, p, side="right")) - 1
    if k == len(xs) - 1 or ys[k] == p:
        return float(xs[k])
    return float(xs[k] + (p - ys[k]) * (xs[k + 1] - xs[k]) / (ys[k + 1] - ys[k]))


def invert(curve: PiecewiseLinearCurve, p: float) -> InverseResult:
    """Dose at which the curve reaches ``p``.

    On a flat stretch at level ``p`` the solution set is an interval; the
    midpoint is returned and ``ambiguous`` is set.
    """
    p = float(p)
    xs, ys = curve.xs, curve.ys
    if not (ys[0] <= p <= ys[-1]):
        raise NotEstimableError(f"target {p} outside attained range [{ys[0]}, {ys[-1]}]")
    left = _cross_left(xs, ys, p)
    right = _cross_right(xs, ys, p)
    if right > left:
        return InverseResult(0.5 * (left + right), True)
    return InverseResult(left, False)


def _chord(xs, ys, lo, hi):
    return float((ys[hi] - ys[lo]) / (xs[hi] - xs[lo]))


def slope_at(curve: PiecewiseLinearCurve, x: float, min_slope: float = 0.0) -> float:
    """Local slope of the curve at ``x``.

    Inside a segment this is the segment slope; on an interior knot it is the
    mean of the two adjoining segment slopes. If the result does not exceed
    ``min_slope`` the window grows by one knot on each side (clipped at the
    domain ends) and the chord slope across it is used instead.
    """
    x = float(x)
    if min_slope < 0:
        raise ValueError("min_slope must be >= 0")
    _check_domain(curve, x)
    xs, ys = curve.xs, curve.ys
    last = len(xs) - 1
    if last == 0 or ys[0] == ys[-1]:
        raise ZeroSlopeError("all knot values are identical")
    j = int(np.searchsorted(xs, x, side="left"))
    if xs[j] == x:
        if j == 0:
            lo, hi = 0, 1
            slope = _chord(xs, ys, lo, hi)
        elif j == last:
            lo, hi = last - 1, last
            slope = _chord(xs, ys, lo, hi)
        else:
            lo, hi = j - 1, j + 1
            slope = 0.5 * (_chord(xs, ys, j - 1, j) + _chord(xs, ys, j, j + 1))
    else:
        lo, hi = j - 1, j
        slope = _chord(xs, ys, lo, hi)
    while slope <= min_slope and (lo > 0 or hi < last):
        lo, hi = max(lo - 1, 0), min(hi + 1, last)
        slope = _chord(xs, ys, lo, hi)
    return slope
