import json

import numpy as np
import pytest

from cknlab.profiles import make_exp_extremizer, make_hup_extremizer
from cknlab.search import (
    PENALTY_FACTOR,
    build_family_member,
    make_inequality,
    sharpness_search,
    stability_probe,
)

LP = make_inequality("lp-product", N=1, p=2, alpha=-0.8, beta=0)
HUP = make_inequality("hup", N=4, alpha=0)
THM = make_inequality("thm21", N=1, p=2, t=3, alpha=-0.8, beta=-1)


def test_inequality_targets():
    assert LP.target == pytest.approx(0.4)
    assert HUP.target == 3.0
    assert THM.target == pytest.approx(2.8 / 3)
    assert make_inequality("lp-sum", N=1, p=2, alpha=-0.8, beta=0).target == pytest.approx(0.8)
    with pytest.raises(ValueError):
        make_inequality("hup", N=4)
    with pytest.raises(ValueError):
        make_inequality("poincare", N=4)


def test_exp_power_member():
    prof = build_family_member("exp-power", {"s": 2.0, "lambda": 0.5})
    r = np.linspace(0.1, 3, 7)
    np.testing.assert_allclose(prof.value(r), np.exp(-0.5 * r**2), rtol=1e-12)
    with pytest.raises(ValueError):
        build_family_member("exp-power", {"m": 1.0})


def test_lp_search_finds_exponent():
    res = sharpness_search(LP, "gen-exp", {"lambda": 1.0, "s": 1.0}, fixed={"a": 0.0})
    assert -1e-8 <= res.gap <= 1e-3
    assert res.best_params["s"] == pytest.approx(0.2, rel=0.05)


def test_hup_search_finds_gaussian():
    res = sharpness_search(HUP, "exp-power", {"s": 1.0}, fixed={"lambda": 1.0})
    assert -1e-8 <= res.gap <= 1e-3
    assert res.best_params["s"] == pytest.approx(2.0, rel=0.05)


def test_thm21_search_finds_rational_shape():
    res = sharpness_search(THM, "rational", {"s": 1.0, "m": 2.0}, fixed={"a": 0.0})
    assert -1e-8 <= res.gap <= 1e-3
    assert res.best_params["s"] == pytest.approx(2.2, rel=0.05)
    assert res.best_params["m"] == pytest.approx(1.0, rel=0.05)


def test_search_is_deterministic_and_serializable():
    a = sharpness_search(LP, "gen-exp", {"lambda": 1.0, "s": 1.0}, fixed={"a": 0.0}, restarts=2, seed=3)
    b = sharpness_search(LP, "gen-exp", {"lambda": 1.0, "s": 1.0}, fixed={"a": 0.0}, restarts=2, seed=3)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)
    assert len(a.restarts) == 3
    assert all(r["best_ratio"] >= a.target_constant - 1e-8 for r in a.restarts)


def test_inadmissible_proposals_penalized():
    # at N = 1 a Laplacian ~ r^-1.95 is not square integrable at the origin
    ineq = make_inequality("hup", N=1, alpha=0)
    res = sharpness_search(ineq, "gen-exp", {"a": -0.95}, fixed={"s": 2.0, "lambda": 1.0}, budget=30)
    assert res.rejected and res.rejected[0][0] == 0
    penalised = [r for _, r in res.trace if r == PENALTY_FACTOR * ineq.target]
    assert len(penalised) == len(res.rejected)


def test_search_needs_free_parameter_and_box():
    with pytest.raises(ValueError):
        sharpness_search(LP, "gen-exp", {})
    with pytest.raises(ValueError):
        sharpness_search(LP, "gen-exp", {"r0": 1.0})


def test_trace_best_bounded_below():
    res = sharpness_search(LP, "gen-exp", {"lambda": 2.0, "s": 0.5}, fixed={"a": 0.0}, budget=300)
    assert min(r for _, r in res.trace) >= LP.target - 1e-8
    assert res.iterations == len(res.trace) <= 300


def test_stability_probe_u5():
    rep = stability_probe(make_exp_extremizer(1, -0.8, 0.0), LP, n_directions=8, seed=1)
    assert rep.passed and rep.min_gap >= -1e-9
    assert abs(rep.base_ratio - 0.4) <= 1e-6
    spreads = [s for s in rep.quadratic_spread if s is not None]
    assert spreads and max(spreads) < 1.5


def test_stability_probe_zero_eps():
    rep = stability_probe(make_hup_extremizer(4, 0.0)[0], HUP, n_directions=3, eps_grid=(0.0,), seed=0)
    assert rep.min_gap == 0.0 and rep.passed
