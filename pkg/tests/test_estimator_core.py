from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isodose.errors import DegenerateVarianceError, ValidationError
from isodose.estimator_core import (
    DoseResponseData,
    as_data,
    bias_optimal_weights,
    cir,
    cir_reweighted,
    pava,
)

from oracles import isotonic_bruteforce


@st.composite
def tallies(draw, m_max=6, n_max=8):
    m = draw(st.integers(1, m_max))
    n = draw(st.lists(st.integers(1, n_max), min_size=m, max_size=m))
    events = [draw(st.integers(0, nj)) for nj in n]
    gaps = draw(st.lists(st.floats(0.1, 3.0), min_size=m, max_size=m))
    x = np.cumsum(gaps)
    return DoseResponseData.from_counts(x, events, n)


# -- validation --------------------------------------------------------------


@pytest.mark.parametrize(
    "x, y, n, field",
    [
        ([1, 1, 2], [0.1, 0.2, 0.3], [10, 10, 10], "x"),
        ([1, 2], [0.1, 1.2], [10, 10], "y"),
        ([1, 2], [0.1, 0.2], [10, 0], "n"),
        ([1, 2], [0.1, 0.2], [10, 2.5], "n"),
        ([], [], [], "x"),
    ],
)
def test_validation_names_field(x, y, n, field):
    with pytest.raises(ValidationError) as err:
        as_data(x, y, n)
    assert err.value.field == field


def test_non_count_proportions_use_float_mode():
    d = as_data([1, 2, 3], [0.1, 0.25, 0.2], [10, 10, 10])
    assert not d.is_count_data
    fit = pava(d)
    assert fit.fs_exact is None
    np.testing.assert_allclose(fit.fs, [0.1, 0.225, 0.225])
    with pytest.raises(ValidationError):
        d.require_counts()


def test_from_counts_divides():
    d = DoseResponseData.from_counts([1, 2, 3], [1, 2, 3], [10, 10, 10])
    assert d.y.tolist() == [0.1, 0.2, 0.3]
    assert d.events.tolist() == [1, 2, 3]


# -- pava --------------------------------------------------------------------


def test_pava_identity_when_monotone():
    fit = pava(as_data([1, 2, 3], [0.1, 0.2, 0.3], [5, 5, 5]))
    assert fit.fs.tolist() == [0.1, 0.2, 0.3]


def test_pava_weighted_pair():
    d = as_data([1, 2], [0.6, 0.2], [10, 30])
    fit = pava(d)
    oracle = isotonic_bruteforce(d.events, d.n)
    assert oracle == [Fraction(3, 10)] * 2
    np.testing.assert_allclose(fit.fs, [0.3, 0.3], atol=1e-12)


def test_pava_pools_last_two():
    d = as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10])
    oracle = [float(v) for v in isotonic_bruteforce(d.events, d.n)]
    np.testing.assert_allclose(oracle, [0.2, 0.35, 0.35])
    np.testing.assert_allclose(pava(d).fs, oracle, atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(tallies())
def test_pava_matches_bruteforce(d):
    oracle = isotonic_bruteforce(d.events, d.n)
    np.testing.assert_allclose(pava(d).fs, [float(v) for v in oracle], atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(tallies())
def test_pava_violation_order_irrelevant(d):
    a = pava(d, pick="first").fs
    b = pava(d, pick="last").fs
    np.testing.assert_allclose(a, b, atol=1e-12)


# -- cir ---------------------------------------------------------------------


def test_cir_pooled_boundary():
    fit = cir(as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10]))
    np.testing.assert_allclose(fit.xs, [1, 2.5, 3])
    np.testing.assert_allclose(fit.fs, [0.2, 0.35, 0.35])
    assert fit.ns.tolist() == [10, 20, 0]
    assert fit.synthetic_boundary.tolist() == [False, False, True]


def test_cir_keeps_zero_run():
    d = as_data([1, 2, 3], [0, 0, 0.3], [5, 5, 5])
    fit = cir(d)
    assert fit.xs.tolist() == [1, 2, 3]
    assert fit.fs.tolist() == [0, 0, 0.3]


def test_cir_interior_tie_pooled():
    d = as_data([1, 2, 3], [0.1, 0.3, 0.3], [10, 10, 10])
    fit = cir(d)
    np.testing.assert_allclose(fit.xs, [1, 2.5, 3])
    np.testing.assert_allclose(fit.fs, [0.1, 0.3, 0.3])
    assert fit.ns.tolist() == [10, 20, 0]
    assert sorted(set(fit.fs)) == sorted(set(pava(d, strict=True).fs))


def test_cir_not_strict_keeps_tie():
    d = as_data([1, 2, 3], [0.1, 0.3, 0.3], [10, 10, 10])
    assert cir(d, strict=False).xs.tolist() == [1, 2, 3]


def test_cir_everything_pooled_spans_range():
    fit = cir(as_data([1, 2, 3], [0.9, 0.5, 0.1], [10, 10, 10]))
    np.testing.assert_allclose(fit.xs, [1, 2, 3])
    np.testing.assert_allclose(fit.fs, [0.5, 0.5, 0.5])
    assert fit.synthetic_boundary.tolist() == [True, False, True]
    assert fit.ns.tolist() == [0, 30, 0]


def test_single_point_unchanged():
    d = as_data([2.0], [0.4], [5])
    for fit in (pava(d), cir(d), cir_reweighted(d)):
        assert fit.xs.tolist() == [2.0] and fit.fs.tolist() == [0.4]


@settings(max_examples=300, deadline=None)
@given(tallies())
def test_cir_invariants(d):
    fit = cir(d)
    ir = pava(d)
    assert sorted(set(fit.fs.tolist())) == sorted(set(ir.fs.tolist()))
    assert np.all(np.diff(fit.xs) > 0)
    assert np.all(np.diff(fit.fs) >= 0)
    assert fit.xs[0] == d.x[0] and fit.xs[-1] == d.x[-1]
    real = ~fit.synthetic_boundary
    assert np.all(fit.ns[fit.synthetic_boundary] == 0)
    assert np.all(fit.ns[real] >= 1)
    assert fit.ns[real].sum() == d.n.sum()
    # exact mass conservation
    total = sum(int(w) * v for w, v, r in zip(fit.ns, fit.fs_exact, real) if r)
    assert total == int(d.events.sum())
    # strict increase away from synthetic points and exact 0/1 runs
    fr = fit.fs[real]
    for a, b in zip(fr[:-1], fr[1:]):
        assert a < b or a == b in (0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(tallies())
def test_pooled_dose_inside_hull(d):
    fit = cir(d)
    blocks = []
    # recover members of each real shrinkage point from cumulative weights
    cum = np.concatenate([[0], np.cumsum(d.n)])
    acc = 0
    for xs, w, syn in zip(fit.xs, fit.ns, fit.synthetic_boundary):
        if syn:
            continue
        a = int(np.searchsorted(cum, acc))
        acc += int(w)
        b = int(np.searchsorted(cum, acc))
        blocks.append((xs, a, b))
    for xs, a, b in blocks:
        if b - a > 1:
            assert d.x[a] < xs < d.x[b - 1]
        else:
            assert xs == d.x[a]


def test_strictly_increasing_bit_identical():
    y = [0.0, 1 / 7, 3 / 7, 1.0]
    d = as_data([1, 2, 3, 4], y, [7, 7, 7, 7])
    assert pava(d).fs.tolist() == d.y.tolist()
    assert cir(d).fs.tolist() == d.y.tolist()
    assert cir(d).xs.tolist() == [1, 2, 3, 4]


# -- bias-optimal weights ----------------------------------------------------


def test_weights_symmetric():
    assert bias_optimal_weights(0.5, 0.5, 10, 10) == pytest.approx((0.5, 0.5))


def test_weights_reduce_to_sample_size():
    assert bias_optimal_weights(0.5, 0.5, 10, 30) == pytest.approx((0.25, 0.75))


def test_weights_unequal_variance():
    a, b = bias_optimal_weights(0.2, 0.5, 10, 10)
    assert b / a == pytest.approx(0.64)
    assert (a, b) == pytest.approx((1 / 1.64, 0.64 / 1.64))
    assert a == pytest.approx(0.6098, abs=1e-4)


@pytest.mark.parametrize("f1, f2", [(0.0, 0.5), (0.5, 1.0)])
def test_weights_degenerate(f1, f2):
    with pytest.raises(DegenerateVarianceError):
        bias_optimal_weights(f1, f2, 10, 10)


# -- reweighted --------------------------------------------------------------


def test_reweighted_monotone_is_cir():
    d = as_data([1, 2, 3], [0.1, 0.2, 0.3], [5, 5, 5])
    fit = cir_reweighted(d)
    assert fit.fs.tolist() == cir(d).fs.tolist()
    assert fit.converged and fit.iterations == 1


def test_reweighted_all_binary_is_cir():
    d = as_data([1, 2, 3, 4], [0, 1, 0, 1], [3, 3, 3, 3])
    base, fit = cir(d), cir_reweighted(d)
    assert fit.xs.tolist() == base.xs.tolist()
    assert fit.fs.tolist() == base.fs.tolist()


def _hand_fixed_point(iters):
    # three-point example: pooled pair (2, 3), first point untouched at (1, 0.2)
    F, xt = 0.35, 2.5
    for _ in range(iters):
        f2 = 0.2 + (F - 0.2) * (2 - 1) / (xt - 1)
        w2 = 10 / (f2 * (1 - f2))
        w3 = 10 / (F * (1 - F))
        F = (w2 * 0.4 + w3 * 0.3) / (w2 + w3)
        xt = (w2 * 2 + w3 * 3) / (w2 + w3)
    return F, xt


def test_reweighted_shifts_pooled_value():
    d = as_data([1, 2, 3], [0.2, 0.4, 0.3], [10, 10, 10])
    two = _hand_fixed_point(2)
    assert two[0] > 0.35  # dose 2 has smaller F(1 - F) than dose 3
    fit2 = cir_reweighted(d, max_iter=2, tol=1e-15)
    assert fit2.fs[1] == pytest.approx(two[0], abs=1e-12)
    assert not fit2.converged
    fixed = _hand_fixed_point(200)
    fit = cir_reweighted(d, tol=1e-12, max_iter=200)
    assert fit.converged
    assert fit.fs[1] == pytest.approx(fixed[0], abs=1e-10)
    assert fit.xs[1] == pytest.approx(fixed[1], abs=1e-10)
    assert fit.fs[1] == pytest.approx(0.3519399, abs=1e-6)
    assert fit.ns.tolist() == [10, 20, 0]


@settings(max_examples=100, deadline=None)
@given(tallies())
def test_reweighted_fit_invariants(d):
    fit = cir_reweighted(d)
    assert np.all(np.diff(fit.xs) > 0)
    assert np.all(np.diff(fit.fs) >= -1e-12)
    assert fit.xs[0] == d.x[0] and fit.xs[-1] == d.x[-1]
    assert fit.ns[~fit.synthetic_boundary].sum() == d.n.sum()
