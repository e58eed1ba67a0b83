"""Radial profiles (extremizer families and trial functions) and smooth functions on R^N.

A radial profile is carried by its derivatives u'(r) and u''(r); every
functional of interest depends only on the gradient and the Laplacian.  Each
profile also declares how |u'| behaves at both ends of (0, inf), which is
what admissibility checks and the quadrature substitutions are built from.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special

from .numerics import Decay, IntegrandSpec, integrate_halfline

__all__ = [
    "Endpoint",
    "RadialProfile",
    "NDFunction",
    "InadmissibleProfile",
    "ProfileSpecError",
    "make_exp_extremizer",
    "make_powerlaw_extremizer",
    "make_hup_extremizer",
    "make_trial",
    "make_hardy_cutoff",
    "perturb",
    "dilate",
    "scale",
    "nd_from_radial",
    "gaussian_linear_nd",
    "parse_profile",
    "build_profile",
    "integrand_spec",
    "sign_changes",
]


class InadmissibleProfile(ValueError):
    """A weighted integral of the profile diverges (decided by exponent arithmetic)."""


class ProfileSpecError(ValueError):
    """Malformed profile spec string; ``position`` is a 0-based column."""

    def __init__(self, text, position, message):
        self.text = text
        self.position = position
        caret = " " * position + "^"
        super().__init__(f"profile spec column {position + 1}: {message}\n  {text}\n  {caret}")


# ---------------------------------------------------------------------------
# Endpoint metadata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Endpoint:
    """Asymptotics of a radial quantity f at r -> 0+ or r -> inf.

    kind ``power``: |f| ~ C r^power (1 + O(r^{+-correction}));
    kind ``stretched``: |f| ~ C r^power exp(-coef r^{+-rate}) (vanishes faster than any power);
    kind ``compact``: f == 0 beyond ``edge`` (below it at the origin);
    kind ``growth``: |f| grows faster than any power (never admissible).
    """

    kind: str
    power: float = 0.0
    correction: float = math.inf
    rate: float = math.nan
    coef: float = math.nan
    edge: float = math.nan

    @classmethod
    def pw(cls, power, correction=math.inf):
        return cls("power", power=float(power), correction=float(correction))

    @classmethod
    def stretched(cls, power, rate, coef):
        return cls("stretched", power=float(power), rate=float(rate), coef=float(coef))

    @classmethod
    def compact(cls, edge):
        return cls("compact", edge=float(edge))

    @classmethod
    def growth(cls):
        return cls("growth")

    def describe(self):
        if self.kind == "power":
            return f"r^{self.power:g}"
        if self.kind == "stretched":
            return f"r^{self.power:g}*exp(-{self.coef:g}*r^(+-{self.rate:g}))"
        if self.kind == "compact":
            return f"zero beyond {self.edge:g}"
        return "super-polynomial growth"


def _slower_origin(e1, e2):
    """Endpoint of f1 + f2 at the origin (the more singular one wins)."""
    order = {"growth": 0, "power": 1, "stretched": 2, "compact": 3}
    if order[e1.kind] != order[e2.kind]:
        return e1 if order[e1.kind] < order[e2.kind] else e2
    if e1.kind == "power":
        if e1.power != e2.power:
            return e1 if e1.power < e2.power else e2
        return Endpoint.pw(e1.power, min(e1.correction, e2.correction))
    if e1.kind == "stretched":
        return e1 if (e1.rate, -e1.coef) < (e2.rate, -e2.coef) else e2
    if e1.kind == "compact":
        return e1 if e1.edge < e2.edge else e2
    return e1


def _slower_tail(e1, e2):
    order = {"growth": 0, "power": 1, "stretched": 2, "compact": 3}
    if order[e1.kind] != order[e2.kind]:
        return e1 if order[e1.kind] < order[e2.kind] else e2
    if e1.kind == "power":
        if e1.power != e2.power:
            return e1 if e1.power > e2.power else e2
        return Endpoint.pw(e1.power, min(e1.correction, e2.correction))
    if e1.kind == "stretched":
        if e1.rate != e2.rate:
            return e1 if e1.rate < e2.rate else e2
        if e1.coef != e2.coef:
            return e1 if e1.coef < e2.coef else e2
        return e1 if e1.power > e2.power else e2
    if e1.kind == "compact":
        return e1 if e1.edge > e2.edge else e2
    return e1


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """u'(r), u''(r), optional u(r), and endpoint metadata for |u'|.

    ``origin``/``tail`` describe |u'|; ``scale`` is the family's natural
    radius and ``breakpoints`` are radii where u'' may jump or the support
    starts/ends.

    Families of the form u' = -Lambda r^lead_power h(r) also carry
    ``dlog_rest`` = h'/h; the Laplacian is then formed as
    u' ((lead_power + N - 1)/r + h'/h), which avoids the cancellation between
    u'' and (N-1)u'/r when lead_power = 1 - N.
    """

    du: Callable[[np.ndarray], np.ndarray]
    d2u: Callable[[np.ndarray], np.ndarray]
    origin: Endpoint
    tail: Endpoint
    label: str
    u: Callable[[np.ndarray], np.ndarray] | None = None
    scale: float = 1.0
    breakpoints: tuple = ()
    params: dict = field(default_factory=dict)
    family: str = ""
    lead_power: float = math.nan
    dlog_rest: Callable[[np.ndarray], np.ndarray] | None = None

    # -- exponent arithmetic ------------------------------------------------

    @property
    def origin_exponent(self):
        if self.origin.kind == "power":
            return self.origin.power
        return math.inf if self.origin.kind in ("stretched", "compact") else -math.inf

    def lap_origin(self, N):
        """Endpoint of Delta u = u'' + (N-1) u'/r at the origin."""
        o = self.origin
        if o.kind in ("compact", "growth"):
            return o
        if o.kind == "stretched":
            # differentiation multiplies by r^(-rate-1): still flat
            return Endpoint.stretched(o.power - o.rate - 1.0, o.rate, o.coef)
        if o.power + N - 1.0 == 0.0:
            # leading terms cancel; the first correction decides
            if not math.isfinite(o.correction):
                return Endpoint.compact(0.0)
            return Endpoint.pw(o.power - 1.0 + o.correction)
        return Endpoint.pw(o.power - 1.0, o.correction)

    def lap_tail(self, N):
        e = self.tail
        if e.kind in ("compact", "growth"):
            return e
        if e.kind == "stretched":
            return Endpoint.stretched(e.power + e.rate - 1.0, e.rate, e.coef)
        if e.power + N - 1.0 == 0.0:
            if not math.isfinite(e.correction):
                return Endpoint.compact(math.inf)
            return Endpoint.pw(e.power - 1.0 - e.correction)
        return Endpoint.pw(e.power - 1.0, e.correction)

    def value_origin(self):
        """Endpoint of u (with u(inf) = 0) at the origin."""
        o = self.origin
        if o.kind == "power" and o.power < -1.0:
            return Endpoint.pw(o.power + 1.0, o.correction)
        if o.kind == "growth":
            return o
        return Endpoint.pw(0.0)

    def value_tail(self):
        e = self.tail
        if e.kind == "power":
            if e.power >= -1.0:
                return Endpoint.growth()
            return Endpoint.pw(e.power + 1.0, e.correction)
        if e.kind == "stretched":
            return Endpoint.stretched(e.power + 1.0 - e.rate, e.rate, e.coef)
        return e

    # -- evaluation ---------------------------------------------------------

    def laplacian(self, r, N):
        r = np.asarray(r, dtype=float)
        if self.dlog_rest is not None:
            return self.du(r) * ((self.lead_power + N - 1.0) / r + self.dlog_rest(r))
        return self.d2u(r) + (N - 1.0) * self.du(r) / r

    def value(self, r):
        """u(r); families without a closed form use the tail integral of u'."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.u is not None:
            return self.u(r)
        if self.value_tail().kind == "growth":
            raise InadmissibleProfile(f"{self.label}: u' is not integrable at infinity, u(r) undefined")
        out = np.empty_like(r)
        for i, r0 in enumerate(r):
            out[i] = -self._tail_integral(r0)
        return out

    def _tail_integral(self, r0):
        tail = self.tail
        du = self.du
        if tail.kind == "compact":
            if r0 >= tail.edge:
                return 0.0
            decay = Decay.compact(tail.edge - r0)
        elif tail.kind == "power":
            decay = Decay.power(tail.power)
        else:
            decay = Decay.stretched(tail.rate, tail.coef, tail.power)
        bps = tuple(b - r0 for b in self.breakpoints if b > r0)
        spec = IntegrandSpec(
            core=lambda x: du(r0 + x),
            power_at_zero=0.0,
            decay=decay,
            scale=max(abs(self.scale - r0), 0.5 * r0) or 1.0,
            breakpoints=bps,
            label=f"tail integral of {self.label}",
        )
        return integrate_halfline(spec, rel_tol=1e-11).value

    def fd_consistency(self, n=20, lo=1e-2, hi=1e2):
        """Max scaled gap between a central difference of u' and u'' on a log grid.

        The grid spans [lo, hi] natural radii, cut back where a stretched
        endpoint has already decayed by e^-50 (there the difference quotient
        only measures its own truncation error).
        """
        r_lo, r_hi = lo * self.scale, hi * self.scale
        if self.origin.kind == "stretched":
            r_lo = max(r_lo, (self.origin.coef / 50.0) ** (1.0 / self.origin.rate))
        if self.tail.kind == "stretched":
            r_hi = min(r_hi, (50.0 / self.tail.coef) ** (1.0 / self.tail.rate))
        r = np.logspace(math.log10(r_lo), math.log10(r_hi), n)
        h = 1e-5 * r
        fd = (self.du(r + h) - self.du(r - h)) / (2.0 * h)
        exact = self.d2u(r)
        ref = np.maximum(np.abs(exact), np.abs(self.du(r)) / r)
        ref = np.where(ref > 0.0, ref, 1.0)
        return float(np.max(np.abs(fd - exact) / ref))


def _ensure_nonzero(Lambda):
    Lambda = float(Lambda)
    if Lambda == 0.0 or not math.isfinite(Lambda):
        raise ValueError("Lambda must be a nonzero finite number (Lambda = 0 is the trivial function)")
    return Lambda


def _ensure_sign(sign):
    if sign not in (1, -1, 1.0, -1.0):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


def _fmt(x):
    return format(float(x), "g")


def make_exp_extremizer(N, alpha, beta, Lambda=1.0, lam=1.0, sign=-1) -> RadialProfile:
    """u'(r) = -Lambda r^(1-N) exp(sign*lam*r^sigma/sigma), sigma = alpha - beta + 1."""
    sigma = alpha - beta + 1.0
    if sigma == 0.0:
        raise ValueError("alpha - beta + 1 = 0 is excluded for the exponential family")
    Lambda = _ensure_nonzero(Lambda)
    sign = _ensure_sign(sign)
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    kappa = sign * lam / sigma
    a = 1.0 - N

    def du(r):
        r = np.asarray(r, dtype=float)
        return -Lambda * r**a * np.exp(kappa * r**sigma)

    def d2u(r):
        r = np.asarray(r, dtype=float)
        return du(r) * ((1.0 - N) / r + sign * lam * r ** (sigma - 1.0))

    if sigma > 0.0:
        origin = Endpoint.pw(a, sigma)
        tail = Endpoint.stretched(a, sigma, -kappa) if kappa < 0.0 else Endpoint.growth()
    else:
        origin = Endpoint.stretched(a, -sigma, -kappa) if kappa < 0.0 else Endpoint.growth()
        tail = Endpoint.pw(a, -sigma)
    label = f"u5:Lambda={_fmt(Lambda)},lambda={_fmt(lam)},sign={sign}"
    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=origin,
        tail=tail,
        label=label,
        scale=abs(kappa) ** (-1.0 / sigma),
        params={"N": N, "alpha": alpha, "beta": beta, "Lambda": Lambda, "lambda": lam, "sign": sign},
        family="u5",
        lead_power=a,
        dlog_rest=lambda r: sign * lam * np.asarray(r, dtype=float) ** (sigma - 1.0),
    )


def powerlaw_exponent(N, p, t, alpha, beta):
    """E = (p-1)(alpha+1) - (t-1)beta - (N-1)(t-p)."""
    return (p - 1.0) * (alpha + 1.0) - (t - 1.0) * beta - (N - 1.0) * (t - p)


def make_powerlaw_extremizer(N, p, t, alpha, beta, Lambda=1.0, lam=1.0, sign=1) -> RadialProfile:
    """u'(r) = -Lambda r^(1-N) [1 + sign (t-p) lam r^(E/(p-1)) / E]^((p-1)/(p-t))."""
    if not t > p:
        raise ValueError(f"the power-law family needs p < t, got p={p}, t={t}")
    E = powerlaw_exponent(N, p, t, alpha, beta)
    if E == 0.0:
        raise ValueError("(p-1)(alpha+1)-(t-1)beta-(N-1)(t-p) = 0 is excluded")
    Lambda = _ensure_nonzero(Lambda)
    sign = _ensure_sign(sign)
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    kappa = E / (p - 1.0)
    expo = (p - 1.0) / (p - t)
    c = sign * (t - p) * lam / E
    if c < 0.0:
        r_bad = (-1.0 / c) ** (1.0 / kappa)
        raise ValueError(f"bracket 1 + c r^{kappa:g} vanishes at r = {r_bad:.6g} (c = {c:.6g})")
    a = 1.0 - N

    def du(r):
        r = np.asarray(r, dtype=float)
        return -Lambda * r**a * (1.0 + c * r**kappa) ** expo

    def d2u(r):
        r = np.asarray(r, dtype=float)
        rk = r**kappa
        return du(r) * ((1.0 - N) / r + expo * c * kappa * r ** (kappa - 1.0) / (1.0 + c * rk))

    if kappa > 0.0:
        origin = Endpoint.pw(a, kappa)
        tail = Endpoint.pw(a + kappa * expo, kappa)
    else:
        origin = Endpoint.pw(a + kappa * expo, -kappa)
        tail = Endpoint.pw(a, -kappa)
    label = f"u3:Lambda={_fmt(Lambda)},lambda={_fmt(lam)},sign={sign}"
    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=origin,
        tail=tail,
        label=label,
        scale=c ** (-1.0 / kappa),
        params={"N": N, "p": p, "t": t, "alpha": alpha, "beta": beta,
                "Lambda": Lambda, "lambda": lam, "sign": sign},
        family="u3",
        lead_power=a,
        dlog_rest=lambda r: expo * c * kappa * np.asarray(r, dtype=float) ** (kappa - 1.0)
        / (1.0 + c * np.asarray(r, dtype=float) ** kappa),
    )


@dataclass(frozen=True)
class NDFunction:
    """A function on R^N with vectorised value, gradient and Laplacian on (n, N) arrays."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    N: int
    label: str = ""


def nd_from_radial(profile: RadialProfile, N: int) -> NDFunction:
    """Lift a radial profile to R^N."""

    def _r(x):
        return np.sqrt(np.einsum("ij,ij->i", x, x))

    def value(x):
        return profile.value(_r(x))

    def gradient(x):
        r = _r(x)
        return (profile.du(r) / r)[:, None] * x

    def laplacian(x):
        return profile.laplacian(_r(x), N)

    return NDFunction(value, gradient, laplacian, N, label=profile.label)


def make_hup_extremizer(N, alpha, sign=1, Lambda=1.0):
    """u(r) = Lambda exp(-sign r^tau / tau), tau = 2(alpha+1); returns (profile, NDFunction)."""
    if alpha + 1.0 == 0.0:
        raise ValueError("alpha = -1 is excluded")
    sign = _ensure_sign(sign)
    Lambda = _ensure_nonzero(Lambda)
    tau = 2.0 * (alpha + 1.0)
    rate = sign / tau  # u = exp(-rate r^tau)

    def u(r):
        r = np.asarray(r, dtype=float)
        return Lambda * np.exp(-rate * r**tau)

    def du(r):
        r = np.asarray(r, dtype=float)
        return -sign * r ** (tau - 1.0) * u(r)

    def d2u(r):
        r = np.asarray(r, dtype=float)
        return du(r) * ((tau - 1.0) / r - sign * r ** (tau - 1.0))

    if tau > 0.0:
        origin = Endpoint.pw(tau - 1.0, tau)
        tail = Endpoint.stretched(tau - 1.0, tau, rate) if rate > 0.0 else Endpoint.growth()
    else:
        origin = Endpoint.stretched(tau - 1.0, -tau, rate) if rate > 0.0 else Endpoint.growth()
        tail = Endpoint.pw(tau - 1.0, -tau)
    profile = RadialProfile(
        du=du,
        d2u=d2u,
        origin=origin,
        tail=tail,
        label=f"hup:sign={sign}" + ("" if Lambda == 1.0 else f",Lambda={_fmt(Lambda)}"),
        u=u,
        scale=abs(tau) ** (1.0 / tau),
        params={"N": N, "alpha": alpha, "sign": sign, "Lambda": Lambda},
        family="hup",
        lead_power=tau - 1.0,
        dlog_rest=lambda r: -sign * np.asarray(r, dtype=float) ** (tau - 1.0),
    )
    return profile, nd_from_radial(profile, N)


# ---------------------------------------------------------------------------
# Trial families
# ---------------------------------------------------------------------------

def _gen_exp(a=0.0, lam=1.0, s=1.0, Lambda=1.0):
    if not lam > 0.0:
        raise ValueError(f"gen-exp needs lambda > 0, got {lam!r}")
    if not s > 0.0:
        raise ValueError(f"gen-exp needs s > 0, got {s!r}")
    Lambda = _ensure_nonzero(Lambda)

    def du(r):
        r = np.asarray(r, dtype=float)
        return -Lambda * r**a * np.exp(-lam * r**s)

    def d2u(r):
        r = np.asarray(r, dtype=float)
        return du(r) * (a / r - lam * s * r ** (s - 1.0))

    u = None
    if a > -1.0:
        z = (a + 1.0) / s
        pref = Lambda * lam ** (-z) * special.gamma(z) / s

        def u(r):
            r = np.asarray(r, dtype=float)
            return pref * special.gammaincc(z, lam * r**s)

    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=Endpoint.pw(a, s),
        tail=Endpoint.stretched(a, s, lam),
        label=f"gen-exp:a={_fmt(a)},lambda={_fmt(lam)},s={_fmt(s)}"
        + ("" if Lambda == 1.0 else f",Lambda={_fmt(Lambda)}"),
        u=u,
        scale=lam ** (-1.0 / s),
        params={"a": a, "lambda": lam, "s": s, "Lambda": Lambda},
        family="gen-exp",
        lead_power=a,
        dlog_rest=lambda r: -lam * s * np.asarray(r, dtype=float) ** (s - 1.0),
    )


def _rational(a=0.0, s=1.0, m=1.0, Lambda=1.0):
    if not s > 0.0:
        raise ValueError(f"rational needs s > 0, got {s!r}")
    if not m > 0.0:
        raise ValueError(f"rational needs m > 0, got {m!r}")
    Lambda = _ensure_nonzero(Lambda)

    def du(r):
        r = np.asarray(r, dtype=float)
        return -Lambda * r**a * (1.0 + r**s) ** (-m)

    def d2u(r):
        r = np.asarray(r, dtype=float)
        rs = r**s
        return du(r) * (a / r - m * s * r ** (s - 1.0) / (1.0 + rs))

    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=Endpoint.pw(a, s),
        tail=Endpoint.pw(a - s * m, s),
        label=f"rational:a={_fmt(a)},s={_fmt(s)},m={_fmt(m)}"
        + ("" if Lambda == 1.0 else f",Lambda={_fmt(Lambda)}"),
        params={"a": a, "s": s, "m": m, "Lambda": Lambda},
        family="rational",
        lead_power=a,
        dlog_rest=lambda r: -m * s * np.asarray(r, dtype=float) ** (s - 1.0) / (1.0 + np.asarray(r, dtype=float) ** s),
    )


def _bump(r0=1.0, r1=2.0, amp=1.0):
    if not (0.0 < r0 < r1 and math.isfinite(r1)):
        raise ValueError(f"bump needs 0 < r0 < r1, got r0={r0!r}, r1={r1!r}")
    if amp == 0.0:
        raise ValueError("bump amplitude must be nonzero")
    mid = 0.5 * (r0 + r1)
    half = 0.5 * (r1 - r0)

    def _z(r):
        return (np.asarray(r, dtype=float) - mid) / half

    def du(r):
        z = _z(r)
        inside = np.abs(z) < 1.0
        out = np.zeros_like(z)
        zi = z[inside]
        out[inside] = -amp * np.exp(-1.0 / (1.0 - zi * zi))
        return out

    def d2u(r):
        z = _z(r)
        inside = np.abs(z) < 1.0
        out = np.zeros_like(z)
        zi = z[inside]
        w = 1.0 - zi * zi
        out[inside] = -amp * np.exp(-1.0 / w) * (-2.0 * zi / (w * w)) / half
        return out

    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=Endpoint.compact(r0),
        tail=Endpoint.compact(r1),
        label=f"bump:r0={_fmt(r0)},r1={_fmt(r1)},amp={_fmt(amp)}",
        scale=mid,
        breakpoints=(r0, r1),
        params={"r0": r0, "r1": r1, "amp": amp},
        family="bump",
    )


_TRIAL_BUILDERS = {
    "gen-exp": (_gen_exp, {"a": "a", "lambda": "lam", "s": "s", "Lambda": "Lambda"}),
    "rational": (_rational, {"a": "a", "s": "s", "m": "m", "Lambda": "Lambda"}),
    "bump": (_bump, {"r0": "r0", "r1": "r1", "amp": "amp"}),
}


def make_trial(kind: str, **params) -> RadialProfile:
    """Trial profile from a family tag and keyword parameters (grammar key names)."""
    if kind not in _TRIAL_BUILDERS:
        raise ValueError(f"unknown trial family {kind!r}; expected one of {sorted(_TRIAL_BUILDERS)}")
    builder, keymap = _TRIAL_BUILDERS[kind]
    unknown = set(params) - set(keymap)
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for {kind}; allowed {sorted(keymap)}")
    return builder(**{keymap[k]: float(v) for k, v in params.items()})


def make_hardy_cutoff(s, eps) -> RadialProfile:
    """w = r^(-s/2+eps) on (0,1], r^(-s/2-eps) beyond: near-extremal for the 1-D Hardy ratio.

    The ratio of int r^(s+1)|w'|^2 to int r^(s-1)|w|^2 equals s^2/4 + eps^2.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    lo = -0.5 * s + eps
    hi = -0.5 * s - eps

    def u(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 1.0, r**lo, r**hi)

    def du(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 1.0, lo * r ** (lo - 1.0), hi * r ** (hi - 1.0))

    def d2u(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 1.0, lo * (lo - 1.0) * r ** (lo - 2.0), hi * (hi - 1.0) * r ** (hi - 2.0))

    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=Endpoint.pw(lo - 1.0),
        tail=Endpoint.pw(hi - 1.0),
        label=f"hardy-cutoff:s={_fmt(s)},eps={_fmt(eps)}",
        u=u,
        scale=1.0,
        breakpoints=(1.0,),
        params={"s": s, "eps": eps},
        family="hardy-cutoff",
    )


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------

def perturb(base: RadialProfile, bump: RadialProfile, eps: float) -> RadialProfile:
    """base + eps * bump, with worst-case endpoint metadata."""
    eps = float(eps)
    if eps == 0.0:
        return replace(base, label=f"{base.label}+(0)*[{bump.label}]")

    def du(r):
        return base.du(r) + eps * bump.du(r)

    def d2u(r):
        return base.d2u(r) + eps * bump.d2u(r)

    u = None
    if base.u is not None and bump.u is not None:
        def u(r):
            return base.u(r) + eps * bump.u(r)

    origin = _slower_origin(base.origin, bump.origin)
    tail = _slower_tail(base.tail, bump.tail)
    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=origin,
        tail=tail,
        label=f"{base.label}+({_fmt(eps)})*[{bump.label}]",
        u=u,
        scale=base.scale,
        breakpoints=tuple(sorted(set(base.breakpoints) | set(bump.breakpoints))),
        params=dict(base.params),
        family=base.family,
    )


def dilate(profile: RadialProfile, s: float) -> RadialProfile:
    """Profile of x -> u(s x)."""
    s = float(s)
    if not s > 0.0:
        raise ValueError("dilation factor must be positive")

    def du(r):
        return s * profile.du(s * np.asarray(r, dtype=float))

    def d2u(r):
        return s * s * profile.d2u(s * np.asarray(r, dtype=float))

    u = None
    if profile.u is not None:
        def u(r):
            return profile.u(s * np.asarray(r, dtype=float))

    def _move(e, at_origin):
        if e.kind == "stretched":
            factor = s ** (-e.rate) if at_origin else s**e.rate
            return replace(e, coef=e.coef * factor)
        if e.kind == "compact":
            return replace(e, edge=e.edge / s)
        return e

    return RadialProfile(
        du=du,
        d2u=d2u,
        origin=_move(profile.origin, True),
        tail=_move(profile.tail, False),
        label=f"dilate({profile.label},{_fmt(s)})",
        u=u,
        scale=profile.scale / s,
        breakpoints=tuple(b / s for b in profile.breakpoints),
        params=dict(profile.params),
        family=profile.family,
        lead_power=profile.lead_power,
        dlog_rest=None if profile.dlog_rest is None else (lambda r: s * profile.dlog_rest(s * np.asarray(r, dtype=float))),
    )


def scale(profile: RadialProfile, Lambda: float) -> RadialProfile:
    """Profile of x -> Lambda u(x)."""
    Lambda = _ensure_nonzero(Lambda)
    u = None
    if profile.u is not None:
        def u(r):
            return Lambda * profile.u(r)

    return replace(
        profile,
        du=lambda r: Lambda * profile.du(r),
        d2u=lambda r: Lambda * profile.d2u(r),
        u=u,
        label=f"{_fmt(Lambda)}*[{profile.label}]",
    )


# ---------------------------------------------------------------------------
# Weighted integrands and admissibility
# ---------------------------------------------------------------------------

def _term_endpoints(profile, N, which):
    if which == "grad":
        return profile.origin, profile.tail
    if which == "lap":
        return profile.lap_origin(N), profile.lap_tail(N)
    if which == "value":
        return profile.value_origin(), profile.value_tail()
    raise ValueError(which)


def _power_at_zero(e, q, w):
    if e.kind == "power":
        return q * e.power + w
    if e.kind == "growth":
        return -math.inf
    return math.inf


def _decay(e, q, w):
    if e.kind == "power":
        return Decay.power(q * e.power + w)
    if e.kind == "stretched":
        return Decay.stretched(e.rate, q * e.coef, q * e.power + w)
    if e.kind == "compact":
        return Decay.compact(e.edge)
    return None


def check_term(profile, N, which, q, w, name):
    """Raise InadmissibleProfile when int |f|^q r^w dr diverges at either end."""
    o, t = _term_endpoints(profile, N, which)
    a = _power_at_zero(o, q, w)
    if not a > -1.0:
        raise InadmissibleProfile(
            f"{name} diverges at r -> 0 for {profile.label}: integrand ~ r^{a:g} "
            f"(|f| ~ {o.describe()})"
        )
    dec = _decay(t, q, w)
    if dec is None or not dec.integrable():
        raise InadmissibleProfile(
            f"{name} diverges at r -> inf for {profile.label}: |f| ~ {t.describe()}, weight r^{w:g}"
        )
    return a, dec


def sign_changes(fn, profile, n=600, span=1e5):
    """Radii where ``fn`` changes sign on a log grid of +-``span`` natural radii.

    |f|^q has a kink at each such zero; putting the zeros at piece boundaries
    keeps the quadrature converging geometrically.
    """
    r = profile.scale * np.logspace(-math.log10(span), math.log10(span), n)
    with np.errstate(all="ignore"):
        v = fn(r)
    sgn = np.sign(np.where(np.isfinite(v), v, 0.0))
    roots = []
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0.0)[0]:
        lo, hi = r[i], r[i + 1]
        flo = v[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = float(fn(np.array([mid]))[0])
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm < 0.0) == (flo < 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return tuple(roots)


def integrand_spec(profile, N, terms, core, label, extra_breakpoints=()):
    """IntegrandSpec for ``core`` whose size is bounded by the listed (which, q, w) terms.

    The leading power at zero is the smallest one among the terms and the
    decay is the slowest one, so the substitutions stay valid for sums.  A
    stretched tail r^P exp(-c r^s) with P > 0 peaks at (P/(c s))^(1/s); that
    radius is added as a breakpoint so the tail substitution starts past it.
    """
    powers = []
    decays = []
    for which, q, w in terms:
        a, dec = check_term(profile, N, which, q, w, label)
        powers.append(a)
        decays.append(dec)
    a = min(powers)
    dec = decays[0]
    for d in decays[1:]:
        dec = _slower_decay(dec, d)
    bps = set(profile.breakpoints) | set(extra_breakpoints)
    if dec.kind == "stretched" and dec.exponent > 0.0:
        bps.add((dec.exponent / (dec.coef * dec.rate)) ** (1.0 / dec.rate))
    return IntegrandSpec(
        core=core,
        power_at_zero=a,
        decay=dec,
        scale=profile.scale,
        breakpoints=tuple(sorted(bps)),
        label=label,
    )


def _slower_decay(d1, d2):
    order = {"power": 0, "stretched": 1, "compact": 2}
    if order[d1.kind] != order[d2.kind]:
        return d1 if order[d1.kind] < order[d2.kind] else d2
    if d1.kind == "power":
        return d1 if d1.exponent > d2.exponent else d2
    if d1.kind == "stretched":
        if d1.rate != d2.rate:
            return d1 if d1.rate < d2.rate else d2
        if d1.coef != d2.coef:
            return d1 if d1.coef < d2.coef else d2
        return d1 if d1.exponent > d2.exponent else d2
    return d1 if d1.end > d2.end else d2


# ---------------------------------------------------------------------------
# Profile string grammar:  kind:key=value,key=value
# ---------------------------------------------------------------------------

_KIND_KEYS = {
    "u5": {"lambda", "Lambda", "sign"},
    "u3": {"lambda", "Lambda", "sign"},
    "hup": {"sign", "Lambda"},
    "gen-exp": {"a", "lambda", "s", "Lambda"},
    "rational": {"a", "s", "m", "Lambda"},
    "bump": {"r0", "r1", "amp"},
}

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_profile(text: str):
    """Parse ``kind:key=value,...`` into (kind, {key: float}) with column-annotated errors."""
    if not isinstance(text, str) or not text.strip():
        raise ProfileSpecError(str(text), 0, "empty profile spec")
    colon = text.find(":")
    kind = text if colon < 0 else text[:colon]
    if kind not in _KIND_KEYS:
        raise ProfileSpecError(text, 0, f"unknown family {kind!r}; expected one of {sorted(_KIND_KEYS)}")
    params = {}
    if colon < 0:
        return kind, params
    pos = colon + 1
    body = text[pos:]
    if body == "":
        return kind, params
    for item in body.split(","):
        if "=" not in item:
            raise ProfileSpecError(text, pos, f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        if key not in _KIND_KEYS[kind]:
            raise ProfileSpecError(
                text, pos, f"unknown key {key!r} for {kind}; allowed {sorted(_KIND_KEYS[kind])}"
            )
        if key in params:
            raise ProfileSpecError(text, pos, f"duplicate key {key!r}")
        if not _NUMBER.match(val):
            raise ProfileSpecError(text, pos + len(key) + 1, f"not a number: {val!r}")
        params[key] = float(val)
        pos += len(item) + 1
    return kind, params


def build_profile(text: str, N, p=2.0, t=None, alpha=0.0, beta=0.0) -> RadialProfile:
    """Construct a profile from a spec string in the context of a parameter point.

    Signs default to the decreasing branch of the region: u5 takes sign -1
    when alpha - beta + 1 > 0, u3 takes +1 when E > 0, hup takes +1 when
    alpha + 1 > 0.
    """
    kind, kv = parse_profile(text)
    if kind == "u5":
        default = -1 if alpha - beta + 1.0 > 0.0 else 1
        return make_exp_extremizer(
            N, alpha, beta, Lambda=kv.get("Lambda", 1.0), lam=kv.get("lambda", 1.0),
            sign=int(kv.get("sign", default)),
        )
    if kind == "u3":
        if t is None:
            raise ValueError("u3 profiles need the exponent t")
        default = 1 if powerlaw_exponent(N, p, t, alpha, beta) > 0.0 else -1
        return make_powerlaw_extremizer(
            N, p, t, alpha, beta, Lambda=kv.get("Lambda", 1.0), lam=kv.get("lambda", 1.0),
            sign=int(kv.get("sign", default)),
        )
    if kind == "hup":
        default = 1 if alpha + 1.0 > 0.0 else -1
        prof, _ = make_hup_extremizer(N, alpha, sign=int(kv.get("sign", default)),
                                      Lambda=kv.get("Lambda", 1.0))
        return prof
    return make_trial(kind, **kv)


def gaussian_linear_nd(N=3, corrupt_gradient=1.0) -> NDFunction:
    """u(x) = exp(-|x|^2/2)(1 + x_1); ``corrupt_gradient`` rescales the gradient (negative controls)."""

    def value(x):
        g = np.exp(-0.5 * np.einsum("ij,ij->i", x, x))
        return g * (1.0 + x[:, 0])

    def gradient(x):
        g = np.exp(-0.5 * np.einsum("ij,ij->i", x, x))
        out = -x * (g * (1.0 + x[:, 0]))[:, None]
        out[:, 0] += g
        return corrupt_gradient * out

    def laplacian(x):
        r2 = np.einsum("ij,ij->i", x, x)
        g = np.exp(-0.5 * r2)
        return g * ((r2 - N) * (1.0 + x[:, 0]) - 2.0 * x[:, 0])

    label = "exp(-|x|^2/2)(1+x1)" + ("" if corrupt_gradient == 1.0 else f" grad*{corrupt_gradient:g}")
    return NDFunction(value, gradient, laplacian, N, label=label)
