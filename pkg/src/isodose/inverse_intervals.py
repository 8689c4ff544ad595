"""Confidence intervals for the dose achieving a target response rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import PiecewiseLinearCurve, evaluate, evaluate_many, invert, slope_at
from .errors import NoIntervalError, NotEstimableError, ZeroSlopeError
from .intervals import IntervalBand, band_at_x


@dataclass(frozen=True)
class InverseInterval:
    target_p: float
    point: float
    lower: float
    upper: float
    finite: bool
    method: str
    clipped: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _design_half_widths(curve, band):
    # horizontal half-widths at every design point: the forward bound's
    # distance from the fitted value, divided by the fitted curve's slope
    # there (mean of the two adjoining chords between design points)
    fitted = evaluate_many(curve, band.x)
    if band.x.size < 2 or fitted[0] == fitted[-1]:
        raise NoIntervalError("fitted values are identical at every design point")
    poly = PiecewiseLinearCurve(band.x, fitted)
    slopes = np.array([slope_at(poly, x, 0.0) for x in band.x])
    to_left = np.maximum(band.upper - fitted, 0.0) / slopes
    to_right = np.maximum(fitted - band.lower, 0.0) / slopes
    return to_left, to_right


def local_inverse(curve: PiecewiseLinearCurve, band: IntervalBand, p: float,
                  anchor: str = "estimate") -> InverseInterval:
    """Delta-method interval: forward half-widths divided by the fitted curve's
    local slope.

    The distance from the estimate up to the upper forward bound sets how far
    the interval reaches to lower doses, and vice versa. With
    ``anchor="estimate"`` both the half-widths and the slope are taken at the
    inverse estimate itself. With ``anchor="design"`` the conversion is done
    at every design point (slope = mean of the adjoining chords of the fitted
    values) and the resulting horizontal half-widths are interpolated to the
    estimate. The result is clipped to the design range.
    """
    est = invert(curve, p)
    x_star = est.x
    if anchor == "estimate":
        f_star = evaluate(curve, x_star)
        try:
            slope = slope_at(curve, x_star, 0.0)
        except ZeroSlopeError as exc:
            raise NoIntervalError(str(exc)) from exc
        lo_f, up_f = band_at_x(band, x_star)
        lower = x_star - max(up_f - f_star, 0.0) / slope
        upper = x_star + max(f_star - lo_f, 0.0) / slope
    elif anchor == "design":
        to_left, to_right = _design_half_widths(curve, band)
        lower = x_star - float(np.interp(x_star, band.x, to_left))
        upper = x_star + float(np.interp(x_star, band.x, to_right))
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    x_lo, x_hi = float(band.x[0]), float(band.x[-1])
    clipped = lower < x_lo or upper > x_hi
    lower = max(lower, x_lo)
    upper = min(upper, x_hi)
    return InverseInterval(float(p), x_star, lower, upper, True, "local", clipped)


def _first_reach(xs, ys, p):
    """Smallest x with the interpolated boundary >= p, or None."""
    if ys[0] >= p:
        return float(xs[0])
    idx = np.nonzero(ys >= p)[0]
    if idx.size == 0:
        return None
    j = int(idx[0])
    if ys[j] == p:
        return float(xs[j])
    return float(xs[j - 1] + (p - ys[j - 1]) * (xs[j] - xs[j - 1]) / (ys[j] - ys[j - 1]))


def global_inverse(band: IntervalBand, p: float, point: float = math.nan) -> InverseInterval:
    """Interval from where the forward band boundaries meet the line ``y = p``.

    The lower dose limit is where the upper boundary first reaches ``p``; the
    upper dose limit is the last dose at which the lower boundary is still at
    or below ``p``. A boundary that never reaches ``p`` inside the design
    range leaves that side infinite and ``finite`` false.
    """
    p = float(p)
    xs = band.x
    lower = _first_reach(xs, band.upper, p)
    if lower is None:
        lower = -math.inf
    # mirror of _first_reach on the reflected lower boundary
    lo_rev = _first_reach(-xs[::-1], -band.lower[::-1], -p)
    if band.lower[-1] < p:
        upper = math.inf
    elif lo_rev is None:
        upper = float(xs[0])
    else:
        upper = -lo_rev
    finite = math.isfinite(lower) and math.isfinite(upper)
    return InverseInterval(p, float(point), float(lower), float(upper), finite, "global")


def inverse_interval(curve, band, p, method="local", anchor="estimate") -> InverseInterval:
    if method == "local":
        return local_inverse(curve, band, p, anchor)
    if method == "global":
        try:
            point = invert(curve, p).x
        except NotEstimableError:
            point = math.nan
        return global_inverse(band, p, point)
    raise ValueError(f"unknown inverse method {method!r}")
