import json
import math

import mpmath
import numpy as np
import pytest
from helpers import admissible_reports
from hypothesis import given, settings
from hypothesis import strategies as st

from cknlab.constants import hup_constant, lp_constant, lp_sum_constant, thm21_constant
from cknlab.functionals import (
    DENSITY_NOTE,
    closed_form_norms_hup,
    closed_form_norms_lp,
    identity_residual_general,
    identity_residual_radial,
    kp_value,
    ratio_hup,
    ratio_lp_product,
    ratio_lp_sum,
    ratio_thm21,
    seminorm_gradient,
    seminorm_laplacian,
)
from cknlab.numerics import sphere_area
from cknlab.parameters import make_params
from cknlab.profiles import (
    dilate,
    gaussian_linear_nd,
    make_exp_extremizer,
    make_hup_extremizer,
    make_powerlaw_extremizer,
    make_trial,
    nd_from_radial,
    scale,
)

PI2 = math.pi**2
U5 = make_exp_extremizer(1, -0.8, 0.0)


def test_seminorm_examples():
    assert seminorm_laplacian(U5, 1, 2.0, -0.8) == pytest.approx(0.0024, rel=1e-10)
    assert seminorm_gradient(U5, 1, 2.0, 0.0) == pytest.approx(0.0024, rel=1e-10)
    hup, _ = make_hup_extremizer(4, 0.0)
    assert seminorm_laplacian(hup, 4, 2.0, 0.0) == pytest.approx(6 * PI2, rel=1e-9)
    assert seminorm_gradient(hup, 4, 2.0, -1.0) == pytest.approx(6 * PI2, rel=1e-9)
    assert seminorm_gradient(hup, 4, 2.0, 0.0) == pytest.approx(2 * PI2, rel=1e-9)
    g = make_trial("gen-exp", a=0.5, s=1.2)
    assert seminorm_laplacian(scale(g, 2.0), 3, 2.0, 0.2) == pytest.approx(4 * seminorm_laplacian(g, 3, 2.0, 0.2),
                                                                             rel=1e-12)


def test_thm21_u3_against_mpmath():
    prm = make_params(1, 2, 3, -0.8, -1)
    rep = ratio_thm21(make_powerlaw_extremizer(1, 2, 3, -0.8, -1), prm)
    assert rep.passed and rep.measured == pytest.approx(2.8 / 3, abs=1e-6)
    # independent oracle: mpmath quadrature of the three integrals at N = 1
    mpmath.mp.dps = 30
    du = lambda r: -1 / (1 + r**2.2 / 2.2)  # noqa: E731
    d2u = lambda r: r**1.2 / (1 + r**2.2 / 2.2) ** 2  # noqa: E731
    A = 2 * mpmath.quad(lambda r: d2u(r) ** 2 * r**1.6, [0, 1, mpmath.inf])
    B = 2 * mpmath.quad(lambda r: abs(du(r)) ** prm.q * r ** (-prm.q * prm.beta), [0, 1, mpmath.inf])
    R = 2 * mpmath.quad(lambda r: abs(du(r)) ** 3 * r ** (-3 * prm.gamma), [0, 1, mpmath.inf])
    oracle = float(mpmath.sqrt(A * B) / R)
    assert rep.measured == pytest.approx(oracle, rel=1e-8)


def test_thm21_u5_and_bump():
    prm = make_params(1, 2, 2, -0.8, 0)
    assert ratio_thm21(U5, prm).measured == pytest.approx(0.4, abs=1e-6)
    rep = ratio_thm21(make_trial("bump", r0=1, r1=2), prm)
    assert rep.mode == "bound" and rep.passed and rep.measured > 0.4 + 1e-3


@pytest.mark.parametrize("lam", [0.5, 1.0, 7.0])
def test_lp_product_lambda_invariant(lam):
    rep = ratio_lp_product(make_exp_extremizer(1, -0.8, 0.0, lam=lam), 1, 2.0, -0.8, 0.0)
    assert rep.passed and abs(rep.measured - 0.4) <= 1e-6


def test_lp_product_nonextremal():
    rep = ratio_lp_product(make_trial("gen-exp", s=0.3, **{"lambda": 2.0}), 1, 2.0, -0.8, 0.0)
    assert rep.measured > 0.4 + 1e-4


def test_lp_sum_examples():
    assert ratio_lp_sum(U5, 1, 2.0, -0.8, 0.0).measured == pytest.approx(0.8, abs=1e-6)
    rep = ratio_lp_sum(make_exp_extremizer(1, -0.8, 0.0, lam=2.0), 1, 2.0, -0.8, 0.0)
    assert rep.mode == "bound" and rep.measured > 0.8 + 1e-3


@pytest.mark.parametrize("N, a, c", [(4, 0.0, 3.0), (5, 0.5, 4.5)])
def test_hup_ratio_extremizer(N, a, c):
    rep = ratio_hup(make_hup_extremizer(N, a)[0], N, a)
    assert rep.passed and abs(rep.measured - c) <= 1e-6


def test_hup_bump_bound():
    rep = ratio_hup(make_trial("bump", r0=1, r1=2), 4, 0.0)
    assert rep.passed and rep.measured >= 3.0
    assert "function_class" not in rep.details


def test_density_note_on_smooth_profiles():
    assert ratio_hup(make_hup_extremizer(4, 0.0)[0], 4, 0.0).details["function_class"] == DENSITY_NOTE


def test_report_json_fields():
    js = ratio_lp_product(U5, 1, 2.0, -0.8, 0.0).to_json()
    assert {"theorem", "case", "params", "target", "measured", "tolerance", "passed", "quad_errors",
            "profile_spec", "seed"} <= set(js)
    json.dumps(js)


def test_degenerate_denominator_rejected():
    zero = make_trial("bump", r0=1, r1=2, amp=1e-200)
    with pytest.raises(ValueError, match="degenerate"):
        ratio_hup(zero, 4, 0.0)


# -- closed forms -------------------------------------------------------------

def test_closed_form_lp_examples():
    A, B, R = closed_form_norms_lp(1, 2, -0.8, 0.0)
    assert A == pytest.approx(0.0024, rel=1e-12) and B == pytest.approx(0.0024, rel=1e-12)
    assert math.sqrt(A * B) / R == pytest.approx(0.4, rel=1e-12)
    A, B, R = closed_form_norms_lp(1, 2, -0.8, -0.2)
    assert math.sqrt(A * B) / R == pytest.approx(0.5, rel=1e-12) == lp_constant(1, 2, -0.8, -0.2)


@pytest.mark.parametrize("N, a, ratio", [(4, 0.0, 3.0), (5, 0.5, 4.5), (3, 0.0, 2.5)])
def test_closed_form_hup(N, a, ratio):
    A, C, D = closed_form_norms_hup(N, a)
    assert math.sqrt(A * C) / D == pytest.approx(ratio, rel=1e-12)
    if N == 4:
        assert (A, C, D) == pytest.approx((6 * PI2, 6 * PI2, 2 * PI2), rel=1e-12)


def test_closed_forms_reject_bad_gamma_arguments():
    with pytest.raises(ValueError):
        closed_form_norms_lp(3, 2, 0.0, 1.0)
    with pytest.raises(ValueError):
        closed_form_norms_hup(1, -0.7)


def _lp_closed_points():
    rng = np.random.default_rng(8)
    pts = []
    while len(pts) < 20:
        N = int(rng.integers(1, 6))
        p = float(rng.uniform(1.3, 4.0))
        a = float(rng.uniform(-3.0, 1.0))
        b = float(rng.uniform(-2.0, 1.0))
        sigma = a - b + 1
        if sigma < 0.2:
            continue
        z = (N + p - p * N - p * b) / sigma
        if z - 1 > 0.3:
            pts.append((N, p, a, b))
    return pts


@pytest.mark.parametrize("N, p, a, b", _lp_closed_points())
def test_quadrature_matches_lp_closed_forms(N, p, a, b):
    lam = 1.7
    prof = make_exp_extremizer(N, a, b, lam=lam)
    A, B, R = closed_form_norms_lp(N, p, a, b, lam=lam)
    assert seminorm_laplacian(prof, N, p, a) == pytest.approx(A, rel=1e-8)
    assert seminorm_gradient(prof, N, p, b) == pytest.approx(B, rel=1e-8)
    assert seminorm_gradient(prof, N, p, (a + (p - 1) * b + 1) / p) == pytest.approx(R, rel=1e-8)
    # the ratio identity for the Gamma forms
    sigma = a - b + 1
    z = (N - p * b + p - p * N) / sigma
    assert A ** (1 / p) * B ** ((p - 1) / p) / R == pytest.approx(
        (sigma / p) * math.gamma(z) / math.gamma(z - 1), rel=1e-10)


@pytest.mark.parametrize("N, a", [(1, 0.0), (2, 0.3), (3, -0.3), (4, 0.0), (5, 0.5), (6, 1.5), (3, -1.6), (1, -1.4)])
def test_quadrature_matches_hup_closed_forms(N, a):
    prof, _ = make_hup_extremizer(N, a, sign=1 if a + 1 > 0 else -1)
    A, C, D = closed_form_norms_hup(N, a)
    assert seminorm_laplacian(prof, N, 2.0, a) == pytest.approx(A, rel=1e-8)
    assert seminorm_gradient(prof, N, 2.0, -(a + 1)) == pytest.approx(C, rel=1e-8)
    assert seminorm_gradient(prof, N, 2.0, 0.0) == pytest.approx(D, rel=1e-8)


# -- K_p ----------------------------------------------------------------------

def test_kp_examples():
    assert kp_value(3, [1, 0], [0, 1]) == pytest.approx(3.0, abs=1e-15)
    assert kp_value(1.5, [0, 0], [1, 2]) == pytest.approx(5**0.75, rel=1e-14)
    with pytest.raises(ValueError):
        kp_value(1.0, [1], [1])


vec = st.lists(st.floats(-10, 10), min_size=3, max_size=3)


@settings(max_examples=500, deadline=None)
@given(p=st.floats(1.0001, 6.0), X=vec, Y=vec)
def test_kp_nonnegative_and_zero_on_diagonal(p, X, Y):
    scale_ = 1 + np.linalg.norm(X) ** p + np.linalg.norm(Y) ** p
    assert kp_value(p, X, Y) >= -1e-12 * scale_
    assert abs(kp_value(p, X, X)) <= 1e-12 * scale_


@settings(max_examples=200, deadline=None)
@given(X=vec, Y=vec)
def test_kp_p2_is_squared_distance(X, Y):
    d = np.subtract(X, Y)
    assert kp_value(2.0, X, Y) == pytest.approx(float(d @ d), abs=1e-9 * (1 + float(np.dot(X, X) + np.dot(Y, Y))))


# -- invariances and bounds ----------------------------------------------------

def _ratios(prof):
    return (
        ratio_thm21(prof, make_params(2, 2, 2.5, -1.5, -0.8)).measured,
        ratio_lp_product(prof, 1, 2.0, -0.8, 0.0).measured,
        ratio_lp_sum(prof, 1, 2.0, -0.8, 0.0).measured,
        ratio_hup(prof, 4, 0.0).measured,
    )


@pytest.mark.parametrize("prof", [make_trial("gen-exp", a=0.4, s=1.3), make_trial("bump", r0=0.5, r1=2.0),
                                  make_trial("rational", a=0.5, s=2.0, m=3.0)], ids=lambda p: p.family)
def test_dilation_and_lambda_invariance(prof):
    base = _ratios(prof)
    for s in (0.5, 2.0, 5.0):
        moved = _ratios(dilate(prof, s))
        # the sum form is not dilation invariant: only the three ratios with balanced weights are
        for i in (0, 1, 3):
            assert moved[i] == pytest.approx(base[i], rel=1e-8)
    for lam in (-3.0, 0.25):
        for b, v in zip(base, _ratios(scale(prof, lam))):
            assert v == pytest.approx(b, rel=1e-10)


def test_sum_form_not_dilation_invariant():
    prof = make_trial("gen-exp", a=0.4, s=1.3)
    a = ratio_lp_sum(prof, 1, 2.0, -0.8, 0.0).measured
    b = ratio_lp_sum(dilate(prof, 2.0), 1, 2.0, -0.8, 0.0).measured
    assert abs(a - b) > 1e-3


def test_am_gm_bridge_on_random_profiles():
    def both(prof):
        return ratio_lp_sum(prof, 3, 2.5, -2.0, -1.2).measured, ratio_lp_product(prof, 3, 2.5, -2.0, -1.2).measured

    for _, (s, prod) in admissible_reports(both, 20, seed=4):
        assert s >= 2.5 * prod - 1e-10 * s


@pytest.mark.parametrize(
    "name, evaluate, target",
    [
        ("thm21-1a", lambda f: ratio_thm21(f, make_params(1, 2, 2, -0.8, 0)), thm21_constant(make_params(1, 2, 2, -0.8, 0))),
        ("thm21-2a", lambda f: ratio_thm21(f, make_params(1, 2, 3, -0.8, -1)), 2.8 / 3),
        ("lp", lambda f: ratio_lp_product(f, 3, 2.0, -2.0, -1.5), lp_constant(3, 2.0, -2.0, -1.5)),
        ("lp-sum", lambda f: ratio_lp_sum(f, 1, 2.0, -0.8, 0.0), lp_sum_constant(1, 2.0, -0.8, 0.0)),
        ("hup", lambda f: ratio_hup(f, 4, 0.0), hup_constant(4, 0.0)),
    ],
)
def test_random_profiles_respect_bounds(name, evaluate, target):
    for prof, rep in admissible_reports(evaluate, 15, seed=hash(name) % 1000):
        assert rep.measured >= target - 1e-8, prof.label


# -- identities ---------------------------------------------------------------

def test_identity_gen_exp_example():
    rep = identity_residual_radial(make_trial("gen-exp", s=0.2, **{"lambda": 5}), 1, 2.0, -0.8, 0.0)
    assert rep.passed and abs(rep.details["relative_residual_scaled"]) <= 1e-6


def test_identity_u5_equality_case():
    rep = identity_residual_radial(U5, 1, 2.0, -0.8, 0.0)
    assert rep.passed
    assert abs(rep.details["rhs_relative"]) <= 1e-6
    assert rep.details["normalized_argument_gap"] <= 1e-6


def test_identity_rational_three_dimensions():
    # m = 3 keeps every weighted integral finite at N = 3
    rep = identity_residual_radial(make_trial("rational", a=0, s=2.2, m=3), 3, 2.0, -2.0, -1.5)
    assert rep.passed, rep.details


def test_identity_increasing_branch():
    # alpha - beta + 1 < 0 and p alpha + (p-1) N > 0
    rep = identity_residual_radial(make_trial("bump", r0=0.5, r1=2.0), 3, 2.0, 0.5, 2.0, branch=1)
    assert rep.passed, rep.details


def test_identity_hypotheses_enforced():
    with pytest.raises(ValueError, match="alpha-beta\\+1 > 0"):
        identity_residual_radial(U5, 1, 2.0, -0.8, 0.5)
    with pytest.raises(ValueError, match="p\\*alpha"):
        identity_residual_radial(U5, 3, 2.0, 0.0, -0.5)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_identity_random_profiles(p):
    N = 2
    a = -(p - 1) * N / p - 0.3
    b = a - 0.5
    for prof, rep in admissible_reports(lambda f: identity_residual_radial(f, N, p, a, b), 5, seed=int(p * 10)):
        assert rep.passed, (prof.label, rep.details["relative_residual"], rep.details["relative_residual_scaled"])


def test_identity_general_smoke():
    rep = identity_residual_general(gaussian_linear_nd(3), 2.0, -2.0, -1.5, samples=200_000, seed=1)
    assert rep.passed, rep.details


def test_identity_general_radial_angular_term_vanishes():
    f = nd_from_radial(make_hup_extremizer(3, 0.0)[0], 3)
    rep = identity_residual_general(f, 2.0, -2.0, -1.5, samples=100_000, seed=2)
    assert abs(rep.details["angular"]) <= 1e-12 * (rep.details["A"] + rep.details["B"])
    assert rep.passed


def test_lp_product_monte_carlo_path():
    f = nd_from_radial(make_exp_extremizer(3, -2.0, -1.5), 3)
    rep = ratio_lp_product(f, 3, 2.0, -2.0, -1.5, samples=200_000, seed=3, sampler_scale=1.0)
    assert rep.measured == pytest.approx(lp_constant(3, 2.0, -2.0, -1.5), rel=0.05)
    assert sphere_area(3) > 0
