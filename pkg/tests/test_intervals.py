import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from isodose.errors import DomainError, ValidationError
from isodose.estimator_core import DoseResponseData, as_data
from isodose.intervals import (
    IntervalBand,
    band_at_x,
    binom_cdf,
    combined_band,
    forward_bands,
    inflation_factor,
    morris_band,
    morris_upper_function,
    pointwise_band,
    pointwise_bound,
    sequential_inflation,
    tighten,
)

from oracles import score_test_bound

METHODS = ["ClopperPearson", "Wilson", "Jeffreys", "AgrestiCoull"]


@st.composite
def tallies(draw, m_max=6, n_max=12):
    m = draw(st.integers(1, m_max))
    n = draw(st.lists(st.integers(1, n_max), min_size=m, max_size=m))
    events = [draw(st.integers(0, nj)) for nj in n]
    return DoseResponseData.from_counts(np.arange(1.0, m + 1), events, n)


def test_clopper_pearson_zero_successes():
    up = pointwise_bound(0, 10, 0.90, "ClopperPearson", "upper")
    assert up == pytest.approx(1 - 0.05 ** 0.1, abs=1e-12)
    assert up == pytest.approx(stats.beta.ppf(0.95, 1, 10))
    assert up == pytest.approx(0.2589, abs=1e-4)


def test_wilson_against_score_inversion():
    z = stats.norm.ppf(0.95)
    lo = pointwise_bound(0.5, 10, 0.90, "Wilson", "lower")
    up = pointwise_bound(0.5, 10, 0.90, "Wilson", "upper")
    assert (lo, up) == pytest.approx((0.2693, 0.7307), abs=1e-4)
    assert lo == pytest.approx(score_test_bound(5, 10, z, "lower"), abs=1e-10)
    assert up == pytest.approx(score_test_bound(5, 10, z, "upper"), abs=1e-10)


@pytest.mark.parametrize("k, n", [(1, 7), (3, 4), (11, 12), (0, 5)])
def test_wilson_score_inversion_general(k, n):
    z = stats.norm.ppf(0.95)
    for side in ("lower", "upper"):
        got = pointwise_bound(k / n, n, 0.9, "Wilson", side)
        assert got == pytest.approx(score_test_bound(k, n, z, side), abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("n", [1, 4, 17])
def test_zero_successes_lower_is_zero(method, n):
    assert pointwise_bound(0, n, 0.9, method, "lower") == 0.0
    assert pointwise_bound(1.0, n, 0.9, method, "upper") == 1.0


def test_jeffreys_and_agresti_coull_values():
    # Jeffreys: Beta(k + 1/2, n - k + 1/2) quantiles
    assert pointwise_bound(0.3, 10, 0.9, "Jeffreys", "lower") == pytest.approx(
        stats.beta.ppf(0.05, 3.5, 7.5)
    )
    # Agresti-Coull: z^2/2 added to successes, z^2 to trials
    z = stats.norm.ppf(0.95)
    nt = 10 + z * z
    pt = (3 + z * z / 2) / nt
    assert pointwise_bound(0.3, 10, 0.9, "AgrestiCoull", "upper") == pytest.approx(
        pt + z * math.sqrt(pt * (1 - pt) / nt)
    )


def test_unknown_method():
    with pytest.raises(ValueError):
        pointwise_bound(0.5, 10, 0.9, "bootstrap", "upper")


def test_intervals_need_counts():
    with pytest.raises(ValidationError):
        combined_band(as_data([1, 2], [0.25, 0.5], [10, 10]))


# -- Morris ------------------------------------------------------------------


def test_morris_single_point_is_clopper_pearson():
    b = morris_band(as_data([1], [0], [10]), 0.90)
    assert b.upper[0] == pytest.approx(0.2589, abs=1e-4)
    assert b.lower[0] == 0.0


def test_morris_two_zero_points():
    b = morris_band(as_data([1, 2], [0, 0], [10, 10]), 0.90)
    # G_1(theta) = (1 - theta)^10 * (1 - theta)^10
    assert b.upper[0] == pytest.approx(1 - 0.05 ** (1 / 20), abs=1e-8)
    assert b.upper[0] < 0.2589
    assert b.upper[1] == pytest.approx(1 - 0.05 ** 0.1, abs=1e-8)


@pytest.mark.parametrize("n", range(1, 13))
def test_morris_base_case_exhaustive(n):
    for k in range(n + 1):
        b = morris_band(DoseResponseData.from_counts([1.0], [k], [n]), 0.9)
        assert b.lower[0] == pytest.approx(pointwise_bound(k / n, n, 0.9, "cp", "lower"), abs=1e-8)
        assert b.upper[0] == pytest.approx(pointwise_bound(k / n, n, 0.9, "cp", "upper"), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(tallies())
def test_morris_recursion_nonincreasing(d):
    grid = np.linspace(0, 1, 41)
    for j in range(d.m):
        vals = [morris_upper_function(d.events, d.n, j, t) for t in grid]
        assert np.all(np.diff(vals) <= 1e-12)


@settings(max_examples=60, deadline=None)
@given(tallies())
def test_morris_ordering_only_narrows(d):
    from isodose.intervals import _morris_raw

    _, upper = _morris_raw(d, 0.9)
    for j in range(d.m - 1):
        cp = pointwise_bound(d.y[j], int(d.n[j]), 0.9, "cp", "upper")
        assert upper[j] <= cp + 1e-8


@settings(max_examples=60, deadline=None)
@given(tallies())
def test_bands_ordered_and_valid(d):
    for band in (morris_band(d), combined_band(d)):
        assert np.all(band.lower >= 0) and np.all(band.upper <= 1)
        assert np.all(band.lower <= band.upper)
        assert np.all(np.diff(band.lower) >= 0)
        assert np.all(np.diff(band.upper) >= 0)


@settings(max_examples=60, deadline=None)
@given(tallies())
def test_combined_before_tightening_contains_y(d):
    # Morris bounds borrow strength from neighbours, so only order-consistent
    # data are guaranteed to sit inside them
    from isodose.intervals import _morris_raw

    assume(np.all(np.diff(d.y) >= 0))
    lo, up = _morris_raw(d, 0.9)
    pw = pointwise_band(d, 0.9, "Wilson")
    assert np.all(pw.lower <= d.y) and np.all(pw.upper >= d.y)
    assert np.all(np.maximum(lo, pw.lower) <= d.y + 1e-12)
    assert np.all(np.minimum(up, pw.upper) >= d.y - 1e-12)


def test_tighten_passes_lowered_ucl_left():
    lo, up = tighten([0.0, 0.1, 0.2], [0.5, 0.6, 0.4])
    assert up.tolist() == [0.4, 0.4, 0.4]
    lo, up = tighten([0.3, 0.1, 0.2], [0.5, 0.6, 0.7])
    assert lo.tolist() == [0.3, 0.3, 0.3]


def test_tighten_identity_when_ordered():
    lo, up = tighten([0.0, 0.1, 0.2], [0.4, 0.5, 0.6])
    assert lo.tolist() == [0.0, 0.1, 0.2] and up.tolist() == [0.4, 0.5, 0.6]


def test_combined_single_point():
    d = as_data([1], [0.3], [10])
    b = combined_band(d, 0.9)
    cp = [pointwise_bound(0.3, 10, 0.9, "cp", s) for s in ("lower", "upper")]
    wi = [pointwise_bound(0.3, 10, 0.9, "wilson", s) for s in ("lower", "upper")]
    assert b.lower[0] == pytest.approx(max(cp[0], wi[0]), abs=1e-8)
    assert b.upper[0] == pytest.approx(min(cp[1], wi[1]), abs=1e-8)


def test_binom_cdf_negative_k():
    assert binom_cdf(-1, 5, 0.3) == 0.0
    assert binom_cdf(2, 5, 0.3) == pytest.approx(stats.binom.cdf(2, 5, 0.3))


# -- interpolation -----------------------------------------------------------


def test_band_at_x():
    b = IntervalBand([1, 2, 3], [0.0, 0.2, 0.2], [0.4, 0.6, 0.8], 0.9, "Combined")
    assert band_at_x(b, 2) == (0.2, 0.6)
    assert band_at_x(b, 1.5) == pytest.approx((0.1, 0.5))
    assert band_at_x(b, 2.5)[0] == pytest.approx(0.2)
    with pytest.raises(DomainError):
        band_at_x(b, 3.5)


@settings(max_examples=60, deadline=None)
@given(tallies(), st.floats(0, 1))
def test_band_at_x_keeps_order(d, u):
    b = combined_band(d)
    x = d.x[0] + u * (d.x[-1] - d.x[0])
    lo, up = band_at_x(b, x)
    assert 0 <= lo <= up <= 1


# -- sequential inflation ----------------------------------------------------


def test_inflation_factor_values():
    assert inflation_factor(5, 20) == 1.15
    assert inflation_factor(20, 40) == 1.025
    assert inflation_factor(20, 20) == 1.0
    assert math.sqrt(inflation_factor(5, 20)) == pytest.approx(1.0724, abs=1e-4)
    gaps = [inflation_factor(nj, 100) - 1 for nj in (10, 50, 90, 99)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_sequential_inflation_scales_half_widths():
    band = IntervalBand([1, 2], [0.1, 0.3], [0.5, 0.7], 0.9, "Combined", np.array([5, 15]))
    out = sequential_inflation(band, 20, [0.3, 0.5])
    s1 = math.sqrt(1.15)
    assert out.lower[0] == pytest.approx(0.3 - 0.2 * s1)
    assert out.upper[0] == pytest.approx(0.3 + 0.2 * s1)
    s2 = math.sqrt(1 + 5 / (20 * 15))
    assert out.upper[1] == pytest.approx(0.5 + 0.2 * s2)


def test_sequential_inflation_all_mass_unchanged():
    band = IntervalBand([1], [0.1], [0.5], 0.9, "Combined", np.array([20]))
    out = sequential_inflation(band, 20, [0.3])
    assert out.lower.tolist() == [0.1] and out.upper.tolist() == [0.5]


@settings(max_examples=60, deadline=None)
@given(tallies())
def test_sequential_inflation_never_shrinks(d):
    b = combined_band(d)
    out = sequential_inflation(b, d.total, d.y)
    assert np.all(out.lower <= b.lower) and np.all(out.upper >= b.upper)
    assert np.all(out.lower >= 0) and np.all(out.upper <= 1)


# -- estimate-centered pointwise bounds ---------------------------------------


def test_center_equal_to_y_is_default():
    d = as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10])
    a, b = pointwise_band(d), pointwise_band(d, center=d.y)
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)


@pytest.mark.parametrize("phat", [0.05, 0.35, 0.5, 0.93])
def test_fractional_wilson_matches_score_inversion(phat):
    n = 10
    z = stats.norm.ppf(0.95)
    for side in ("lower", "upper"):
        got = pointwise_bound(phat, n, 0.9, "Wilson", side)
        assert got == pytest.approx(score_test_bound(phat * n, n, z, side), abs=1e-10)


def test_center_changes_band_and_is_clipped():
    d = as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10])
    band = pointwise_band(d, center=[0.2, 0.35, 1.2])
    assert band.upper[2] == 1.0
    assert band.lower[1] < 0.35 < band.upper[1]
    with pytest.raises(ValidationError):
        pointwise_band(d, center=[0.2, 0.35])


def test_combined_center_only_moves_pointwise_part():
    d = as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10])
    center = [0.2, 0.35, 0.35]
    bands = forward_bands(d, center=center)
    assert np.array_equal(bands["Morris"].lower, morris_band(d).lower)
    pw = pointwise_band(d, center=center)
    assert np.all(bands["Combined"].upper <= np.minimum.accumulate(pw.upper[::-1])[::-1] + 1e-15)
    assert np.array_equal(bands["Combined"].lower, combined_band(d, center=center).lower)
