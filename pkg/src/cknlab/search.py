"""Derivative-free minimisation of inequality ratios over trial families.

Used to confirm empirically that a constant cannot be improved: the minimum
over a family that contains (or approaches) the extremizer should land on
the constant, and small perturbations of the extremizer should only raise
the ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .constants import hup_constant, lp_constant, lp_sum_constant, thm21_constant
from .functionals import ratio_hup, ratio_lp_product, ratio_lp_sum, ratio_thm21
from .numerics import QuadratureError
from .parameters import make_params
from .profiles import InadmissibleProfile, RadialProfile, make_trial, perturb

__all__ = [
    "Inequality",
    "make_inequality",
    "SearchResult",
    "sharpness_search",
    "StabilityReport",
    "stability_probe",
    "PARAM_BOXES",
    "PENALTY_FACTOR",
]

# search coordinates: lambda and Lambda move on a log10 scale
PARAM_BOXES = {
    "lambda": (-3.0, 3.0),
    "Lambda": (-3.0, 3.0),
    "s": (0.05, 6.0),
    "m": (0.3, 5.0),
    "a": (-0.99, 6.0),
}
LOG_KEYS = ("lambda", "Lambda")
PENALTY_FACTOR = 1e3
REJECTED = (InadmissibleProfile, QuadratureError, ValueError, ZeroDivisionError, OverflowError)


@dataclass(frozen=True)
class Inequality:
    """A ratio functional with its constant, for one parameter point."""

    kind: str
    params: dict

    @property
    def target(self) -> float:
        P = self.params
        if self.kind == "thm21":
            return thm21_constant(make_params(P["N"], P["p"], P["t"], P["alpha"], P["beta"]))
        if self.kind == "lp-product":
            return lp_constant(P["N"], P["p"], P["alpha"], P["beta"])
        if self.kind == "lp-sum":
            return lp_sum_constant(P["N"], P["p"], P["alpha"], P["beta"])
        return hup_constant(P["N"], P["alpha"])

    def report(self, profile: RadialProfile, mode="bound"):
        P = self.params
        if self.kind == "thm21":
            prm = make_params(P["N"], P["p"], P["t"], P["alpha"], P["beta"])
            return ratio_thm21(profile, prm, mode=mode)
        if self.kind == "lp-product":
            return ratio_lp_product(profile, P["N"], P["p"], P["alpha"], P["beta"], mode=mode)
        if self.kind == "lp-sum":
            return ratio_lp_sum(profile, P["N"], P["p"], P["alpha"], P["beta"], mode=mode)
        return ratio_hup(profile, P["N"], P["alpha"], mode=mode)

    def ratio(self, profile: RadialProfile) -> float:
        return float(self.report(profile).measured)


_REQUIRED = {
    "thm21": ("N", "p", "t", "alpha", "beta"),
    "lp-product": ("N", "p", "alpha", "beta"),
    "lp-sum": ("N", "p", "alpha", "beta"),
    "hup": ("N", "alpha"),
}


def make_inequality(kind: str, **params) -> Inequality:
    if kind not in _REQUIRED:
        raise ValueError(f"unknown inequality {kind!r}; expected one of {sorted(_REQUIRED)}")
    missing = [k for k in _REQUIRED[kind] if k not in params]
    if missing:
        raise ValueError(f"{kind} needs parameters {missing}")
    return Inequality(kind, {k: float(params[k]) for k in _REQUIRED[kind]})


# ---------------------------------------------------------------------------
# Trial families
# ---------------------------------------------------------------------------

def _exp_power(s, lam=1.0):
    """u = exp(-lam r^s): gen-exp with a = s - 1 and amplitude lam s."""
    return make_trial("gen-exp", a=s - 1.0, s=s, **{"lambda": lam, "Lambda": lam * s})


def build_family_member(family: str, values: dict) -> RadialProfile:
    if family == "exp-power":
        unknown = set(values) - {"s", "lambda"}
        if unknown:
            raise ValueError(f"exp-power takes s and lambda, got {sorted(unknown)}")
        return _exp_power(values["s"], values.get("lambda", 1.0))
    return make_trial(family, **values)


@dataclass
class SearchResult:
    best_params: dict
    best_ratio: float
    target_constant: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    inequality: str = ""
    family: str = ""
    seed: int | None = None

    @property
    def gap(self):
        return self.best_ratio - self.target_constant

    def to_json(self):
        return {
            "inequality": self.inequality,
            "family": self.family,
            "best_params": self.best_params,
            "best_ratio": self.best_ratio,
            "target_constant": self.target_constant,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "restarts": self.restarts,
            "rejected": self.rejected,
            "trace": [[i, r] for i, r in self.trace],
        }


def _to_coord(key, value):
    return math.log10(value) if key in LOG_KEYS else float(value)


def _from_coord(key, x):
    return float(10.0**x) if key in LOG_KEYS else float(x)


def _box(key):
    if key not in PARAM_BOXES:
        raise ValueError(f"no search box for parameter {key!r}")
    return PARAM_BOXES[key]


def sharpness_search(ineq: Inequality, family: str, init: dict, fixed: dict | None = None,
                     budget=2000, restarts=0, seed=0, xatol=1e-6, fatol=1e-12) -> SearchResult:
    """Minimise the ratio of ``ineq`` over the free parameters ``init`` of ``family``.

    Nelder-Mead runs inside the parameter boxes and is restarted from its own
    best point with a fresh simplex until a restart no longer improves.
    ``restarts`` extra runs start from random points of the box (drawn with
    ``seed``, redrawn until admissible); the overall best is returned and
    every run's end point is kept.
    Proposals the profile layer rejects score ``PENALTY_FACTOR * target``.
    """
    fixed = dict(fixed or {})
    keys = list(init)
    if not keys:
        raise ValueError("at least one free parameter is required")
    bounds = [_box(k) for k in keys]
    target = ineq.target
    penalty = PENALTY_FACTOR * target if target > 0.0 else PENALTY_FACTOR
    trace, rejected = [], []

    def values_of(x):
        vals = dict(fixed)
        vals.update({k: _from_coord(k, xi) for k, xi in zip(keys, x)})
        return vals

    def objective(x):
        i = len(trace)
        try:
            with np.errstate(all="ignore"):
                ratio = ineq.ratio(build_family_member(family, values_of(x)))
            if not math.isfinite(ratio):
                raise ValueError("non-finite ratio")
        except REJECTED as exc:
            rejected.append([i, values_of(x), f"{type(exc).__name__}: {exc}"])
            ratio = penalty
        trace.append((i, ratio))
        return ratio

    def run(x0):
        best_x, best_f = np.asarray(x0, float), math.inf
        converged = False
        for _ in range(20):
            left = budget - len(trace)
            if left <= len(keys) + 1:
                break
            res = optimize.minimize(
                objective, best_x, method="Nelder-Mead", bounds=bounds,
                options={"xatol": xatol, "fatol": fatol, "maxfev": left, "adaptive": len(keys) > 2},
            )
            improved = res.fun < best_f - fatol
            if res.fun < best_f:
                best_x, best_f = res.x, float(res.fun)
            converged = bool(res.success)
            if not improved:
                break
        return best_x, best_f, converged

    starts = [[_to_coord(k, v) for k, v in init.items()]]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        # the penalty is flat, so a start must itself be admissible
        for _ in range(100):
            x0 = [rng.uniform(lo, hi) for lo, hi in bounds]
            if objective(np.asarray(x0)) < penalty:
                break
        starts.append(x0)

    best = None
    runs = []
    for x0 in starts:
        x, f, conv = run(np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds]))
        runs.append({"start": values_of(x0), "best_params": values_of(x), "best_ratio": f, "converged": conv})
        if best is None or f < best[1]:
            best = (x, f, conv)
    x, f, conv = best
    return SearchResult(
        best_params=values_of(x),
        best_ratio=f,
        target_constant=target,
        iterations=len(trace),
        converged=conv,
        trace=trace,
        rejected=rejected,
        restarts=runs,
        inequality=ineq.kind,
        family=family,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Local minimality of extremizers
# ---------------------------------------------------------------------------

@dataclass
class StabilityReport:
    base_ratio: float
    eps_grid: list
    gaps: list            # gaps[d][j] for direction d and eps_grid[j]; None when skipped
    directions: list
    skipped: list
    min_gap: float
    quadratic_spread: list  # max/min of gap/eps^2 per direction
    passed: bool

    def to_json(self):
        return {
            "base_ratio": self.base_ratio,
            "eps_grid": self.eps_grid,
            "gaps": self.gaps,
            "directions": self.directions,
            "skipped": self.skipped,
            "min_gap": self.min_gap,
            "quadratic_spread": self.quadratic_spread,
            "passed": self.passed,
        }


def _random_bump(base: RadialProfile, rng):
    """A compactly supported bump near the profile's natural radius, sized like |u'| there."""
    r0 = base.scale * rng.uniform(0.2, 1.5)
    r1 = r0 + base.scale * rng.uniform(0.3, 1.5)
    mid = np.array([0.5 * (r0 + r1)])
    size = float(abs(base.du(mid)[0])) or 1.0
    # the bump's peak is exp(-1) * amp
    amp = size * math.e * rng.choice([-1.0, 1.0])
    return make_trial("bump", r0=r0, r1=r1, amp=amp)


def stability_probe(extremizer: RadialProfile, ineq: Inequality, n_directions=20,
                    eps_grid=(1e-2, 1e-3), seed=0, slack=1e-9) -> StabilityReport:
    """Ratios of extremizer + eps * bump for random bumps; every gap should be >= -slack."""
    rng = np.random.default_rng(seed)
    base = ineq.ratio(extremizer)
    eps_grid = [float(e) for e in eps_grid]
    gaps, dirs, skipped, spreads = [], [], [], []
    for d in range(n_directions):
        bump = _random_bump(extremizer, rng)
        dirs.append(bump.label)
        row = []
        try:
            for eps in eps_grid:
                row.append(ineq.ratio(perturb(extremizer, bump, eps)) - base)
        except REJECTED as exc:
            skipped.append([d, f"{type(exc).__name__}: {exc}"])
            gaps.append(None)
            continue
        gaps.append(row)
        curv = [g / e**2 for g, e in zip(row, eps_grid) if e != 0.0 and g > 0.0]
        spreads.append(max(curv) / min(curv) if len(curv) == sum(e != 0.0 for e in eps_grid) and curv else None)
    finite = [g for row in gaps if row is not None for g in row]
    min_gap = min(finite) if finite else math.nan
    return StabilityReport(
        base_ratio=base,
        eps_grid=eps_grid,
        gaps=gaps,
        directions=dirs,
        skipped=skipped,
        min_gap=min_gap,
        quadratic_spread=spreads,
        passed=bool(finite) and min_gap >= -slack,
    )
