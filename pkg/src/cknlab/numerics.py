"""Special functions, half-line quadrature, polynomial roots and Monte Carlo.

The half-line integrator splits (0, inf) at the integrand's natural radius and
any declared breakpoints, removes the algebraic behaviour at the ends with a
power (or, for stretched-exponential tails, an exponential) substitution read
from the :class:`IntegrandSpec` metadata, and then runs double-exponential
trapezoidal rules with step halving until successive levels agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import kernels

__all__ = [
    "gamma_fn",
    "sphere_area",
    "Decay",
    "IntegrandSpec",
    "QuadratureResult",
    "QuadratureError",
    "integrate_halfline",
    "find_poly_root",
    "GaussianSampler",
    "MCResult",
    "mc_integrate",
]

DEFAULT_REL_TOL = 1e-9

_TINY = 1e-300
_HUGE = 1e300


class QuadratureError(RuntimeError):
    """Raised by callers that require a converged quadrature."""


def gamma_fn(x: float) -> float:
    """Gamma function for real x > 0."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"gamma_fn needs a positive argument, got {x!r}")
    return math.gamma(x)


def sphere_area(N: float) -> float:
    """Surface measure of the unit sphere S^{N-1} in R^N."""
    if N < 1:
        raise ValueError(f"dimension must be >= 1, got {N!r}")
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


# ---------------------------------------------------------------------------
# Integrand metadata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decay:
    """Behaviour of an integrand as r -> inf.

    ``stretched``: ~ r^power * exp(-coef * r^rate);
    ``power``: ~ r^exponent;
    ``compact``: identically zero beyond ``end``.
    """

    kind: str
    rate: float = math.nan
    coef: float = math.nan
    exponent: float = math.nan
    end: float = math.nan

    @classmethod
    def stretched(cls, rate, coef, power=0.0):
        return cls("stretched", rate=float(rate), coef=float(coef), exponent=float(power))

    @classmethod
    def power(cls, exponent):
        return cls("power", exponent=float(exponent))

    @classmethod
    def compact(cls, end):
        return cls("compact", end=float(end))

    def integrable(self):
        if self.kind == "stretched":
            return self.rate > 0 and self.coef > 0
        if self.kind == "power":
            return self.exponent < -1.0
        if self.kind == "compact":
            return math.isfinite(self.end) and self.end > 0
        return False

    def describe(self):
        if self.kind == "stretched":
            return f"r^{self.exponent:g}*exp(-{self.coef:g}*r^{self.rate:g})"
        if self.kind == "power":
            return f"r^{self.exponent:g}"
        return f"compact(end={self.end:g})"


@dataclass(frozen=True)
class IntegrandSpec:
    """A vectorised integrand on (0, inf) plus its endpoint behaviour.

    ``power_at_zero`` is the leading exponent a with core(r) ~ C r^a as r -> 0+
    (``math.inf`` for integrands that vanish faster than any power there).
    ``scale`` is the natural radius used as the default split point.
    """

    core: Callable[[np.ndarray], np.ndarray]
    power_at_zero: float
    decay: Decay
    scale: float = 1.0
    breakpoints: tuple = ()
    label: str = ""

    def __post_init__(self):
        if not self.power_at_zero > -1.0:
            raise ValueError(
                f"integrand {self.label or ''} is not integrable at the origin: "
                f"power_at_zero={self.power_at_zero!r} <= -1"
            )
        if not self.decay.integrable():
            raise ValueError(
                f"integrand {self.label or ''} is not integrable at infinity: "
                f"decay {self.decay.describe()}"
            )
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale!r}")


@dataclass
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool
    rel_tol: float = DEFAULT_REL_TOL
    label: str = ""

    def summary(self):
        return {
            "label": self.label,
            "value": self.value,
            "abs_error_estimate": self.abs_error_estimate,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# Double-exponential node sets
# ---------------------------------------------------------------------------

_H0 = 0.5
_MAX_LEVEL = 8
_TS_TMAX = 4.0            # tanh-sinh on [0, 1]
_ES_TMIN, _ES_TMAX = -4.5, 3.6   # exp-sinh on (0, inf)


def _level_t(level, tmin, tmax):
    h = _H0 / 2**level
    if level == 0:
        k = np.arange(math.ceil(tmin / h), math.floor(tmax / h) + 1)
    else:
        lo = math.ceil((tmin / h - 1) / 2)
        hi = math.floor((tmax / h - 1) / 2)
        k = 2 * np.arange(lo, hi + 1) + 1
    return k * h, h


@lru_cache(maxsize=None)
def _tanh_sinh_nodes(level):
    """Nodes x in (0, 1) and dx/dt weights for the tanh-sinh map at ``level``."""
    t, h = _level_t(level, -_TS_TMAX, _TS_TMAX)
    u = 0.5 * math.pi * np.sinh(t)
    x = 1.0 / (1.0 + np.exp(-2.0 * u))
    w = 0.25 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    return x, w, h


@lru_cache(maxsize=None)
def _exp_sinh_nodes(level):
    t, h = _level_t(level, _ES_TMIN, _ES_TMAX)
    v = np.exp(0.5 * math.pi * np.sinh(t))
    w = 0.5 * math.pi * np.cosh(t) * v
    return v, w, h


class _Piece:
    """One sub-integral after substitution, evaluated on DE nodes.

    ``g`` returns (values, valid, far): ``far`` marks nodes at the asymptotic
    end of the piece (r below 1e-30 of the split radius, or far in the tail),
    where failed evaluations are either extrapolated from the nearest valid
    node (the substituted integrand tends to a constant there) or dropped.
    Extrapolating pieces replace every far node, valid or not.
    Failed evaluations anywhere else make the level sum NaN.
    """

    def __init__(self, rule, g, extrapolate_far=False):
        self.rule = rule
        self.g = g
        self.extrapolate_far = extrapolate_far

    def level_sum(self, level):
        if self.rule == "ts":
            x, w, h = _tanh_sinh_nodes(level)
        else:
            x, w, h = _exp_sinh_nodes(level)
        with np.errstate(all="ignore"):
            vals, valid, far = self.g(x)
        if (~valid & ~far).any():
            return math.nan, x.size, h
        # far values may have underflowed to a finite but wrong number
        lost = (~valid | far) if self.extrapolate_far else ~valid
        if lost.any():
            vals = np.where(lost, 0.0, vals)
            if self.extrapolate_far and not lost.all():
                # far nodes sit at small x for every extrapolating piece
                first = int(np.argmax(~lost))
                vals = np.where(lost & (np.arange(x.size) < first), vals[first], vals)
        return float(np.dot(vals, w)), x.size, h


_FAR = 1e30


def _eval_core(core, r):
    ok = (r > _TINY) & (r < _HUGE) & np.isfinite(r)
    out = np.zeros_like(r)
    if ok.any():
        out[ok] = core(r[ok])
    return out, ok & np.isfinite(out)


def _head_piece(core, a, b):
    m = 1.0 / (a + 1.0) if (math.isfinite(a) and a < 0.0) else 1.0

    def g(x):
        r = b * x**m
        f, valid = _eval_core(core, r)
        far = ~(r >= b / _FAR)
        return b * m * x ** (m - 1.0) * f, valid, far

    return _Piece("ts", g, extrapolate_far=m != 1.0)


def _interval_piece(core, lo, hi):
    span = hi - lo

    def g(x):
        r = lo + span * x
        f, valid = _eval_core(core, r)
        return span * f, valid, np.zeros_like(valid)

    return _Piece("ts", g)


def _power_tail_piece(core, d, b):
    mp = -1.0 / (d + 1.0)

    def g(x):
        r = b * x ** (-mp)
        f, valid = _eval_core(core, r)
        far = ~(r <= b * _FAR)
        return b * mp * x ** (-mp - 1.0) * f, valid, far

    return _Piece("ts", g, extrapolate_far=True)


def _stretched_tail_piece(core, s, c, b):
    cb = c * b**s

    def g(v):
        z = 1.0 + v / cb
        r = b * z ** (1.0 / s)
        f, valid = _eval_core(core, r)
        jac = (b / (s * cb)) * z ** (1.0 / s - 1.0)
        out = f * jac
        valid = valid & np.isfinite(out)
        # beyond v ~ 700 the exponential factor is below double precision
        far = ~(v <= 700.0)
        return out, valid, far

    return _Piece("es", g)


def _pieces(spec):
    decay = spec.decay
    end = decay.end if decay.kind == "compact" else math.inf
    pts = {float(spec.scale)} | {float(p) for p in spec.breakpoints}
    pts = sorted(p for p in pts if 0.0 < p < end)
    if decay.kind == "compact":
        pts.append(end)
    if not pts:
        pts = [end]
    pieces = [_head_piece(spec.core, spec.power_at_zero, pts[0])]
    for lo, hi in zip(pts[:-1], pts[1:]):
        pieces.append(_interval_piece(spec.core, lo, hi))
    if decay.kind == "power":
        pieces.append(_power_tail_piece(spec.core, decay.exponent, pts[-1]))
    elif decay.kind == "stretched":
        pieces.append(_stretched_tail_piece(spec.core, decay.rate, decay.coef, pts[-1]))
    return pieces


def integrate_halfline(
    spec: IntegrandSpec,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = 0.0,
    max_level: int = _MAX_LEVEL,
) -> QuadratureResult:
    """Approximate the integral of ``spec.core`` over (0, inf).

    Converged means two successive step-halvings agree to
    ``max(rel_tol * |value|, abs_tol)``; that difference is returned as the
    (conservative) error estimate.
    """
    pieces = _pieces(spec)
    sums = [0.0] * len(pieces)
    evals = 0
    prev = None
    value = math.nan
    err = math.inf
    for level in range(max_level + 1):
        for i, piece in enumerate(pieces):
            s, n, h = piece.level_sum(level)
            evals += n
            sums[i] = s * h if level == 0 else 0.5 * sums[i] + s * h
        value = math.fsum(sums)
        if not math.isfinite(value):
            return QuadratureResult(math.nan, math.inf, evals, False, rel_tol, spec.label)
        if prev is not None:
            err = abs(value - prev)
            if level >= 3 and err <= max(rel_tol * abs(value), abs_tol):
                return QuadratureResult(value, err, evals, True, rel_tol, spec.label)
        prev = value
    return QuadratureResult(value, err, evals, False, rel_tol, spec.label)


# ---------------------------------------------------------------------------
# Polynomial roots
# ---------------------------------------------------------------------------

def _horner(coefficients, x):
    p = 0.0
    dp = 0.0
    for c in coefficients:
        dp = dp * x + p
        p = p * x + c
    return p, dp


def find_poly_root(coefficients: Sequence[float], bracket, tol: float = 1e-15) -> float:
    """Root of a polynomial (coefficients highest degree first) inside ``bracket``.

    Newton steps are accepted only while they stay inside the current sign
    bracket; otherwise the step falls back to bisection.
    """
    coeffs = [float(c) for c in coefficients]
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    flo, _ = _horner(coeffs, lo)
    fhi, _ = _horner(coeffs, hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: P={flo:g}, {fhi:g}")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx, dfx = _horner(coeffs, x)
        if fx == 0.0:
            return x
        if (fx < 0.0) == (flo < 0.0):
            lo, flo = x, fx
        else:
            hi = x
        step_ok = False
        if dfx != 0.0:
            xn = x - fx / dfx
            if lo < xn < hi:
                step_ok = True
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)) and hi - lo <= 4 * tol * max(1.0, abs(x)) or abs(xn - x) <= 0.5 * tol:
            return xn
        x = xn
    return x


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSampler:
    """Isotropic Gaussian proposal N(0, scale^2 I) on R^N."""

    scale: float = 1.0

    def draw(self, rng, n, N):
        return rng.standard_normal((n, N)) * self.scale

    def density(self, x):
        N = x.shape[1]
        r2 = np.einsum("ij,ij->i", x, x)
        norm = (2.0 * math.pi * self.scale**2) ** (-N / 2.0)
        return norm * np.exp(-0.5 * r2 / self.scale**2)


@dataclass
class MCResult:
    value: np.ndarray
    std_error: np.ndarray
    samples: int
    nonfinite: np.ndarray
    failed: bool
    seed: int
    per_sample_std: np.ndarray = field(default=None, repr=False)

    def scalar(self):
        return float(self.value[0]), float(self.std_error[0])


MAX_NONFINITE_FRACTION = 1e-3


def mc_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    N: int,
    sampler: GaussianSampler | None = None,
    samples: int = 1_000_000,
    seed: int = 0,
    block: int = 100_000,
) -> MCResult:
    """Importance-sampling estimate of the integral of ``f`` over R^N.

    ``f`` maps an (n, N) array of points to (n,) or (n, m) values; every column
    is estimated from the same draws.  Blocks use child streams spawned from
    ``seed``, so results are bit-for-bit reproducible.
    """
    sampler = sampler or GaussianSampler()
    n_blocks = max(1, math.ceil(samples / block))
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    total_n = None
    total_mean = None
    total_m2 = None
    total_bad = None
    remaining = samples
    for child in children:
        n = min(block, remaining)
        remaining -= n
        rng = np.random.Generator(np.random.PCG64(child))
        x = sampler.draw(rng, n, N)
        with np.errstate(all="ignore"):
            vals = np.asarray(f(x), dtype=float)
            if vals.ndim == 1:
                vals = vals[:, None]
            vals = vals / sampler.density(x)[:, None]
        cnt, mean, m2, bad = kernels.block_moments(vals)
        if total_n is None:
            total_n, total_mean, total_m2, total_bad = cnt.astype(float), mean, m2, bad
            continue
        # Chan et al. pairwise merge
        n_ab = total_n + cnt
        delta = mean - total_mean
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(n_ab > 0, cnt / n_ab, 0.0)
        total_mean = total_mean + delta * w
        total_m2 = total_m2 + m2 + delta**2 * total_n * w
        total_n = n_ab
        total_bad = total_bad + bad
    with np.errstate(invalid="ignore", divide="ignore"):
        var = total_m2 / np.maximum(total_n - 1, 1)
        stderr = np.sqrt(var / np.maximum(total_n, 1))
    failed = bool(np.any(total_bad > MAX_NONFINITE_FRACTION * samples))
    return MCResult(
        value=total_mean,
        std_error=stderr,
        samples=samples,
        nonfinite=total_bad,
        failed=failed,
        seed=seed,
        per_sample_std=np.sqrt(var),
    )
