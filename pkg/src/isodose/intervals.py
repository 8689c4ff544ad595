"""Forward confidence bounds for monotone Binomial dose-response data.

Pointwise single-proportion bounds (Clopper-Pearson, Wilson, Jeffreys,
Agresti-Coull), Morris's ordered-Binomial recursion, the combined band that
takes the tighter of the two and then enforces monotone ordering, linear
interpolation of a band between design points, and a variance-inflation
correction for designs with random allocation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import betainc

from .errors import DomainError, ValidationError
from .estimator_core import DoseResponseData

ROOT_TOL = 1e-8

_METHODS = {
    "clopperpearson": "ClopperPearson",
    "cp": "ClopperPearson",
    "exact": "ClopperPearson",
    "wilson": "Wilson",
    "jeffreys": "Jeffreys",
    "agresticoull": "AgrestiCoull",
    "ac": "AgrestiCoull",
    "morris": "Morris",
    "combined": "Combined",
}


def method_tag(name: str) -> str:
    """Canonical method tag from a loose spelling (``"clopper-pearson"``...)."""
    key = "".join(ch for ch in name.lower() if ch.isalnum())
    try:
        return _METHODS[key]
    except KeyError:
        raise ValueError(f"unknown interval method {name!r}") from None


@dataclass(frozen=True, eq=False)
class IntervalBand:
    """Lower/upper confidence bounds at the design points ``x``.

    ``n`` carries the per-point sample sizes when the band was built from
    data; the sequential correction needs them.
    """

    x: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    method: str
    n: Optional[np.ndarray] = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if np.any(lower < 0) or np.any(upper > 1) or np.any(lower > upper):
            raise ValidationError("band", "need 0 <= lower <= upper <= 1")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def _check_level(level):
    if not (0.0 < level < 1.0):
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")


# ---------------------------------------------------------------------------
# pointwise bounds


def _z(level):
    return float(stats.norm.ppf(1.0 - (1.0 - level) / 2.0))


def pointwise_bound(y: float, n: int, level: float, method: str, side: str) -> float:
    """One-sided bound of a two-sided ``level`` interval for one proportion.

    Each side uses tail probability ``(1 - level) / 2``. At zero responses the
    lower bound is 0, at all responses the upper bound is 1. ``n * y`` need
    not be whole: a fitted proportion can stand in for the raw one, in which
    case the formulas are applied to the fractional count.
    """
    _check_level(level)
    if n < 1:
        raise ValueError("n must be >= 1")
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"proportion must lie in [0, 1], got {y}")
    tag = method_tag(method)
    k = n * y
    if abs(k - round(k)) <= 1e-9 * max(1.0, n):
        k = float(round(k))
    if side == "lower" and k == 0:
        return 0.0
    if side == "upper" and k == n:
        return 1.0
    alpha2 = (1.0 - level) / 2.0
    phat = k / n
    if tag == "ClopperPearson":
        if side == "lower":
            val = stats.beta.ppf(alpha2, k, n - k + 1)
        else:
            val = stats.beta.ppf(1.0 - alpha2, k + 1, n - k)
    elif tag == "Jeffreys":
        q = alpha2 if side == "lower" else 1.0 - alpha2
        val = stats.beta.ppf(q, k + 0.5, n - k + 0.5)
    elif tag == "Wilson":
        z = _z(level)
        z2 = z * z
        denom = 1.0 + z2 / n
        center = (phat + z2 / (2 * n)) / denom
        half = z / denom * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n))
        val = center - half if side == "lower" else center + half
    elif tag == "AgrestiCoull":
        z = _z(level)
        z2 = z * z
        n_adj = n + z2
        p_adj = (k + z2 / 2.0) / n_adj
        half = z * math.sqrt(p_adj * (1 - p_adj) / n_adj)
        val = p_adj - half if side == "lower" else p_adj + half
    else:
        raise ValueError(f"{tag} is not a pointwise method")
    return float(min(1.0, max(0.0, val)))


def pointwise_band(data: DoseResponseData, level: float = 0.9, method: str = "Wilson",
                   center=None) -> IntervalBand:
    """Independent per-point intervals, no ordering information used.

    ``center`` optionally replaces the observed proportions with point
    estimates at the design points (for instance the fitted CIR curve).
    """
    data.require_counts()
    tag = method_tag(method)
    ys = data.y if center is None else np.clip(np.asarray(center, dtype=float), 0.0, 1.0)
    if len(ys) != data.m:
        raise ValidationError("center", "needs one value per design point")
    lo = [pointwise_bound(y, n, level, tag, "lower") for y, n in zip(ys, data.n)]
    up = [pointwise_bound(y, n, level, tag, "upper") for y, n in zip(ys, data.n)]
    return IntervalBand(data.x.copy(), np.array(lo), np.array(up), level, tag, data.n.copy())


# ---------------------------------------------------------------------------
# Morris ordered-Binomial bounds


def binom_cdf(k: int, n: int, theta: float) -> float:
    """P(X <= k) for X ~ Binomial(n, theta), via the regularized incomplete Beta."""
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    return float(betainc(n - k, k + 1, 1.0 - theta))


def binom_pmf(k: int, n: int, theta: float) -> float:
    if k < 0 or k > n:
        return 0.0
    return math.comb(n, k) * theta**k * (1.0 - theta) ** (n - k)


def morris_upper_function(events, n, j: int, theta: float) -> float:
    """The recursion function whose root at alpha/2 is the UCL at index ``j``.

    ``G_m = BinF(k_m)``; ``G_i = BinF(k_i - 1) + G_{i+1} * Binf(k_i)`` with
    every term evaluated at the same ``theta``.
    """
    m = len(n)
    g = binom_cdf(int(events[m - 1]), int(n[m - 1]), theta)
    for i in range(m - 2, j - 1, -1):
        k, ni = int(events[i]), int(n[i])
        g = binom_cdf(k - 1, ni, theta) + g * binom_pmf(k, ni, theta)
    return g


def _bisect_decreasing(func, target, tol=ROOT_TOL):
    # root of a nonincreasing function on [0, 1]; unbracketed -> boundary
    if func(1.0) >= target:
        return 1.0
    if func(0.0) <= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if func(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _morris_upper(events, n, level):
    alpha2 = (1.0 - level) / 2.0
    return np.array([
        _bisect_decreasing(lambda t, j=j: morris_upper_function(events, n, j, t), alpha2)
        for j in range(len(n))
    ])


def _morris_raw(data: DoseResponseData, level: float):
    data.require_counts()
    events, n = data.events, data.n
    upper = _morris_upper(events, n, level)
    # lower bounds: the upper recursion applied to non-responses, doses reversed
    lower = 1.0 - _morris_upper((n - events)[::-1], n[::-1], level)[::-1]
    return np.clip(lower, 0.0, 1.0), np.clip(upper, 0.0, 1.0)


def tighten(lower, upper):
    """Enforce nondecreasing bounds.

    Upper bounds take the running minimum from the right (so a lowered
    ``UCL_3`` also caps ``UCL_2``); lower bounds take the running maximum from
    the left. Where contradictory data make the tightened bounds cross, the
    two values are swapped so the interval still covers both.
    """
    up = np.minimum.accumulate(np.asarray(upper, float)[::-1])[::-1]
    lo = np.maximum.accumulate(np.asarray(lower, float))
    return np.minimum(lo, up), np.maximum(lo, up)


def morris_band(data: DoseResponseData, level: float = 0.9) -> IntervalBand:
    _check_level(level)
    lower, upper = tighten(*_morris_raw(data, level))
    return IntervalBand(data.x.copy(), lower, upper, level, "Morris", data.n.copy())


def combined_band(
    data: DoseResponseData, level: float = 0.9, pointwise_method: str = "Wilson", center=None
) -> IntervalBand:
    """Morris bounds, replaced pointwise where ``pointwise_method`` is tighter,
    then tightened to monotone order.

    Morris always works from the observed counts. The pointwise bounds are
    built around ``center`` when given (see :func:`pointwise_band`).
    """
    _check_level(level)
    m_lo, m_up = _morris_raw(data, level)
    pw = pointwise_band(data, level, pointwise_method, center)
    lower = np.maximum(m_lo, pw.lower)
    upper = np.minimum(m_up, pw.upper)
    lower, upper = tighten(lower, upper)
    return IntervalBand(data.x.copy(), lower, upper, level, "Combined", data.n.copy())


def forward_bands(data: DoseResponseData, level: float = 0.9,
                  pointwise_method: str = "Wilson", center=None) -> dict[str, IntervalBand]:
    """Combined, Morris-only and pointwise-only bands sharing one Morris pass.

    The pointwise band is left untightened.
    """
    _check_level(level)
    m_lo, m_up = _morris_raw(data, level)
    pw = pointwise_band(data, level, pointwise_method, center)
    c_lo, c_up = tighten(np.maximum(m_lo, pw.lower), np.minimum(m_up, pw.upper))
    mo_lo, mo_up = tighten(m_lo, m_up)
    x, n = data.x.copy(), data.n.copy()
    return {
        "Combined": IntervalBand(x, c_lo, c_up, level, "Combined", n),
        "Morris": IntervalBand(x, mo_lo, mo_up, level, "Morris", n),
        pw.method: pw,
    }


def forward_band(data: DoseResponseData, level: float = 0.9, method: str = "Combined",
                 pointwise_method: str = "Wilson", center=None) -> IntervalBand:
    tag = method_tag(method)
    if tag == "Combined":
        return combined_band(data, level, pointwise_method, center)
    if tag == "Morris":
        return morris_band(data, level)
    return pointwise_band(data, level, tag, center)


# ---------------------------------------------------------------------------
# interpolation and sequential correction


def band_at_x(band: IntervalBand, x: float) -> tuple[float, float]:
    """Band boundaries at dose ``x``, linearly interpolated between design points."""
    x = float(x)
    if not (band.x[0] <= x <= band.x[-1]):
        raise DomainError(f"dose {x} outside band range [{band.x[0]}, {band.x[-1]}]")
    return (float(np.interp(x, band.x, band.lower)), float(np.interp(x, band.x, band.upper)))


def inflation_factor(n_j: int, n_total: int) -> float:
    """Variance inflation ``1 + (1 - pi) / (n pi)`` with ``pi = n_j / n``."""
    if n_j < 1:
        raise ValueError("n_j must be >= 1")
    if n_total < n_j:
        raise ValueError("n_total must be >= n_j")
    return float(1 + Fraction(int(n_total) - int(n_j), int(n_total) * int(n_j)))


def sequential_inflation(band: IntervalBand, n_total: int, center, n=None) -> IntervalBand:
    """Widen each bound's distance from ``center`` by ``sqrt(c_j)``.

    Points with no observations are left unchanged. Bounds are clipped to
    [0, 1]; a bound lying on the wrong side of ``center`` is kept as is, so
    the interval never shrinks.
    """
    n = band.n if n is None else np.asarray(n)
    if n is None:
        raise ValueError("per-point sample sizes are required")
    if int(np.sum(n)) != int(n_total):
        raise ValueError(f"n_total={n_total} does not match sum of n ({int(np.sum(n))})")
    center = np.asarray(center, dtype=float)
    lower = band.lower.copy()
    upper = band.upper.copy()
    for j, nj in enumerate(n):
        if nj < 1:
            continue
        s = math.sqrt(inflation_factor(int(nj), int(n_total)))
        du = upper[j] - center[j]
        dl = center[j] - lower[j]
        if du > 0:
            upper[j] = min(1.0, center[j] + s * du)
        if dl > 0:
            lower[j] = max(0.0, center[j] - s * dl)
    return replace(band, lower=lower, upper=upper)
