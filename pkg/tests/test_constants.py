import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cknlab.constants import (
    cubic_landmarks,
    g_derivative,
    g_function,
    hup_constant,
    lemma_region,
    lp_constant,
    lp_signed,
    lp_sum_constant,
    mode_factor,
    mode_infimum,
    thm21_constant,
)
from cknlab.parameters import SQRT2, SQRT5, make_params

reals = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


def test_thm21_constant_examples():
    assert thm21_constant(make_params(1, 2, 2, -0.8, 0)) == pytest.approx(0.4, abs=1e-15)
    assert thm21_constant(make_params(1, 2, 3, -0.8, -1)) == pytest.approx(2.8 / 3, abs=1e-15)
    # N = t(N + gamma - 1) with N=2, t=2: gamma = 0, e.g. alpha=-1, beta=0
    assert thm21_constant(make_params(2, 2, 2, -1.0, 0.0)) == 0.0


@pytest.mark.parametrize(
    "args, c, csum",
    [((1, 2, -0.8, 0), 0.4, 0.8), ((1, 2, -0.8, -0.2), 0.5, 1.0), ((1, 2, 0, 0), 0.0, 0.0)],
)
def test_lp_constants(args, c, csum):
    assert lp_constant(*args) == pytest.approx(c, abs=1e-15)
    assert lp_sum_constant(*args) == pytest.approx(csum, abs=1e-15)


def test_lp_sign_marks_branch():
    assert lp_signed(1, 2, -0.8, 0) < 0


@pytest.mark.parametrize("N, a, c", [(4, 0, 3.0), (5, 0.5, 4.5), (1, -0.67, 0.16)])
def test_hup_constant(N, a, c):
    assert hup_constant(N, a) == pytest.approx(c, abs=1e-14)


@settings(max_examples=1000, deadline=None)
@given(N=st.integers(1, 10), p=st.floats(1.01, 6.0), a=reals, b=reals)
def test_thm21_equals_lp_when_p_equals_t(N, p, a, b):
    assert thm21_constant(make_params(N, p, p, a, b)) == pytest.approx(lp_constant(N, p, a, b), abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(N=st.integers(1, 10), p=st.floats(1.01, 6.0), a=reals, b=reals)
def test_sum_is_p_times_product(N, p, a, b):
    assert lp_sum_constant(N, p, a, b) == pytest.approx(p * lp_constant(N, p, a, b), rel=1e-15, abs=0)


def test_mode_factor_examples():
    assert mode_factor(4, 0, 0) == 9.0
    assert mode_factor(1, -0.67, 0) == pytest.approx(0.0256, rel=1e-12)
    expected = (1 - 4 * 0.66 / 1.66**2) * 2.32**2 / 4
    assert mode_factor(1, -0.67, 1) == pytest.approx(expected, rel=1e-12)
    assert mode_factor(1, -0.67, 1) == pytest.approx(0.0565, abs=1e-4)


def test_mode_factor_rejects_zero_denominator():
    with pytest.raises(ValueError):
        mode_factor(1, -1.5, 1)


def test_g_function_examples():
    assert g_function(4, 0, 4) == pytest.approx(96.0, rel=1e-14)
    # rho = (alpha+1)/(N+2alpha) = x3 makes G vanish at y = N + 2alpha
    x3 = (SQRT5 - 1) / 4
    N = 3.0
    alpha = (x3 * N - 1) / (1 - 2 * x3)
    assert g_function(N, alpha, N + 2 * alpha) == pytest.approx(0.0, abs=1e-10)
    assert g_function(2, 0.3, 1e4) > 0


def test_g_derivative_is_derivative():
    for N, a, y in [(4, 0, 2.0), (1, -0.6, 0.7), (7, 1.3, 5.0)]:
        h = 1e-6
        fd = (g_function(N, a, y + h) - g_function(N, a, y - h)) / (2 * h)
        assert g_derivative(N, a, y) == pytest.approx(fd, rel=1e-6)


def test_cubic_landmarks():
    y0, x1, x2, x3 = cubic_landmarks()
    assert y0 == pytest.approx(-0.565197717, abs=1e-8)
    assert x1 == pytest.approx((-SQRT5 - 1) / 4, abs=1e-12)
    assert x2 == pytest.approx(-0.5, abs=1e-12)
    assert x3 == pytest.approx((SQRT5 - 1) / 4, abs=1e-12)
    # independent oracle
    assert y0 == pytest.approx(float(mpmath.findroot(lambda y: 2 * y**3 - 2 * y**2 + 1, -0.56)), abs=1e-13)


@pytest.mark.parametrize(
    "N, a, inf, k_expected",
    [(4, 0.0, 9.0, 0), (1, -0.67, 0.0256, 0), (3, -1.2, 0.01, 0)],
)
def test_mode_infimum_examples(N, a, inf, k_expected):
    tab = mode_infimum(N, a)
    assert tab.infimum == pytest.approx(inf, rel=1e-9)
    assert tab.argmin_k == k_expected
    assert tab.matches_lemma


def test_mode_infimum_case2_second_mode_larger():
    tab = mode_infimum(1, -0.67)
    assert tab.entries[1][1] > tab.entries[0][1]


def test_mode_infimum_uses_clipped_form_below_minus_one():
    assert mode_infimum(3, -1.2).lemma36_form
    assert not mode_infimum(4, 0).lemma36_form


def test_mode_table_structure():
    tab = mode_infimum(5, 0.3, k_max=50)
    ks = [k for k, _ in tab.entries]
    assert ks == list(range(len(ks)))
    vals = [f for _, f in tab.entries]
    assert tab.infimum == min(vals) and vals[tab.argmin_k] == tab.infimum
    js = tab.to_json()
    assert js["argmin_k"] == tab.argmin_k and len(js["entries"]) == len(ks)


def test_early_stop_recorded():
    tab = mode_infimum(4, 0.0, k_max=1000)
    assert tab.early_stop and tab.monotone_from_k is not None
    assert len(tab.entries) < 1001


def test_singular_rows():
    with pytest.raises(ValueError):
        mode_infimum(1, -1.5, k_max=5)
    tab = mode_infimum(1, -1.5, k_max=5, allow_singular=True)
    assert tab.singular_k == [1]


def _sample_region(name, rng, n):
    out = []
    while len(out) < n:
        N = int(rng.integers(1, 11))
        a = float(rng.uniform(-2.0, 2.0))
        if lemma_region(N, a) == name and (N + 2 * a) != 0:
            out.append((N, a))
    return out


def _sample_negative_shift(rng, n):
    # the only integer-N points are the N=1 sliver
    out = []
    while len(out) < n:
        a = float(rng.uniform(-0.691, -0.646))
        if lemma_region(1, a) == "negative-shift":
            out.append((1, a))
    return out


@pytest.mark.parametrize("region", ["monotone-modes", "negative-shift", "alpha-below-minus-one"])
def test_lemma_regions_match_infimum(region):
    rng = np.random.default_rng(11)
    pts = _sample_negative_shift(rng, 50) if region == "negative-shift" else _sample_region(region, rng, 50)
    for N, a in pts:
        tab = mode_infimum(N, a)
        assert tab.matches_lemma, (N, a, tab.infimum, tab.target)
        assert abs(tab.infimum - tab.target) <= 1e-9 * tab.target


def test_monotone_modes_region():
    rng = np.random.default_rng(5)
    for N, a in _sample_region("monotone-modes", rng, 30):
        vals = np.array([f for _, f in mode_infimum(N, a, k_max=200).entries])
        assert np.all(np.diff(vals) >= -1e-12 * vals[1:])


def _lemma36_numerator(N, a, k):
    return (N + 2 * a) ** 2 + 4 * k * (k - 1) + 4 * k * (N - 1)


@settings(max_examples=500, deadline=None)
@given(N=st.integers(1, 10), a=st.floats(-3.0, 3.0), k=st.integers(0, 1000))
def test_clipped_factor_positive(N, a, k):
    if N + 2 * k + 2 * a == 0 or N + 2 * k + 4 * a + 2 == 0 or _lemma36_numerator(N, a, k) == 0:
        return
    assert mode_factor(N, a, k, lemma36=True) > 0


@settings(max_examples=300, deadline=None)
@given(N=st.integers(1, 10), a=st.floats(-3.0, 3.0), k=st.integers(0, 1000))
def test_unclipped_correction_matches_expanded_numerator(N, a, k):
    y = N + 2 * k + 2 * a
    if y == 0:
        return
    corr = 1 - 4 * k * (2 * a + 2) / y**2
    assert corr == pytest.approx(_lemma36_numerator(N, a, k) / y**2, abs=1e-12 * (1 + abs(corr)))


def test_clipped_factor_isolated_zero():
    # N=1, k=1, alpha=-1/2 zeroes the expanded numerator while N+2k+2alpha = 2
    assert mode_factor(1, -0.5, 1, lemma36=True) == 0.0


def test_sqrt_constants():
    assert SQRT2 == math.sqrt(2) and SQRT5 == math.sqrt(5)
