"""Closed-form optimal constants and the discrete mode-factor analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import find_poly_root
from .parameters import SQRT2, SQRT5, CknParams

__all__ = [
    "thm21_constant",
    "thm21_signed",
    "lp_constant",
    "lp_signed",
    "lp_sum_constant",
    "hup_constant",
    "mode_factor",
    "g_function",
    "g_derivative",
    "cubic_landmarks",
    "ModeFactorTable",
    "mode_infimum",
    "lemma_region",
]


def thm21_signed(prm: CknParams) -> float:
    """N - t(N + gamma - 1), divided by t, keeping its sign."""
    return (prm.N - prm.t * (prm.N + prm.gamma - 1.0)) / prm.t


def thm21_constant(prm: CknParams) -> float:
    return abs(thm21_signed(prm))


def lp_signed(N, p, alpha, beta) -> float:
    """(alpha + (p-1) beta + (p-1)(N-1)) / p, keeping its sign.

    Negative in the decreasing-profile cases, positive in the increasing ones.
    """
    return (alpha + (p - 1.0) * beta + (p - 1.0) * (N - 1.0)) / p


def lp_constant(N, p, alpha, beta) -> float:
    return abs(lp_signed(N, p, alpha, beta))


def lp_sum_constant(N, p, alpha, beta) -> float:
    return p * lp_constant(N, p, alpha, beta)


def hup_constant(N, alpha) -> float:
    return abs(N + 4.0 * alpha + 2.0) / 2.0


def mode_factor(N, alpha, k, lemma36=False) -> float:
    """F(N, alpha, k); with ``lemma36`` the correction is clipped at zero from above."""
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    y = N + 2.0 * k + 2.0 * alpha
    if y == 0.0:
        raise ValueError(f"N+2k+2alpha = 0 at N={N}, alpha={alpha}, k={k}: factor undefined")
    corr = -4.0 * k * (2.0 * alpha + 2.0) / (y * y)
    if lemma36:
        corr = min(0.0, corr)
    return (1.0 + corr) * (N + 2.0 * k + 4.0 * alpha + 2.0) ** 2 / 4.0


def g_function(N, alpha, y) -> float:
    """Numerator of dF/dx written in y = N + 2x + 2 alpha."""
    c = 2.0 * alpha + 2.0
    m = 2.0 * N + 4.0 * alpha
    return y**4 + c**3 * y - m * c**2 * y - m * c**3


def g_derivative(N, alpha, y) -> float:
    c = 2.0 * alpha + 2.0
    return 4.0 * y**3 + c**3 - (2.0 * N + 4.0 * alpha) * c**2


def cubic_landmarks():
    """Roots (y0, x1, x2, x3) of 2y^3-2y^2+1 and -8x^3-8x^2+1."""
    y0 = find_poly_root([2.0, -2.0, 0.0, 1.0], (-1.0, 0.0))
    cubic = [-8.0, -8.0, 0.0, 1.0]
    x1 = find_poly_root(cubic, (-1.0, -0.6))
    x2 = find_poly_root(cubic, (-0.6, -0.4))
    x3 = find_poly_root(cubic, (0.0, 1.0))
    return y0, x1, x2, x3


def lemma_region(N, alpha):
    """Name of the region where the mode infimum is known, or None."""
    if alpha + 1.0 > 0.0 and N - (SQRT5 - 1.0) * alpha - (SQRT5 + 1.0) > 0.0:
        return "monotone-modes"
    if (
        N + 2.0 * alpha < 0.0
        and N + (SQRT5 + 1.0) * alpha + (SQRT5 - 1.0) > 0.0
        and N - 2.0 * SQRT2 * alpha - 2.0 * SQRT2 > 0.0
    ):
        return "negative-shift"
    if alpha + 1.0 < 0.0 and N + 4.0 * alpha + 2.0 > 0.0:
        return "alpha-below-minus-one"
    return None


@dataclass
class ModeFactorTable:
    N: float
    alpha: float
    entries: list
    infimum: float
    argmin_k: int
    matches_lemma: bool
    lemma36_form: bool
    target: float
    region: str | None
    k_max: int
    monotone_from_k: int | None
    early_stop: bool
    singular_k: list = field(default_factory=list)

    def to_json(self):
        return {
            "N": self.N,
            "alpha": self.alpha,
            "entries": [[k, (None if math.isnan(f) else f)] for k, f in self.entries],
            "infimum": self.infimum,
            "argmin_k": self.argmin_k,
            "matches_lemma": self.matches_lemma,
            "lemma36_form": self.lemma36_form,
            "target": self.target,
            "region": self.region,
            "k_max": self.k_max,
            "monotone_from_k": self.monotone_from_k,
            "early_stop": self.early_stop,
            "singular_k": list(self.singular_k),
        }


EARLY_STOP_RUN = 10


def _monotone_certificate(N, alpha, k, lemma36):
    """True when F is provably increasing for every k' >= k."""
    y = N + 2.0 * k + 2.0 * alpha
    if lemma36:
        return N + 2.0 * k + 4.0 * alpha + 2.0 >= 0.0
    # dF/dx = G(y)/y^3 and G' is increasing in y, so G > 0 and G' > 0 persist
    return y > 0.0 and g_function(N, alpha, y) > 0.0 and g_derivative(N, alpha, y) > 0.0


def mode_infimum(N, alpha, k_max=1000, lemma36=None, allow_singular=False) -> ModeFactorTable:
    """Tabulate F(N, alpha, k) and its minimum over k = 0..k_max.

    ``lemma36=None`` picks the clipped form exactly when alpha + 1 < 0.  The
    scan stops early once the monotonicity certificate holds and F has then
    increased over ``EARLY_STOP_RUN`` consecutive k.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if lemma36 is None:
        lemma36 = alpha + 1.0 < 0.0
    values = kernels.mode_factor_table(N, alpha, int(k_max), bool(lemma36))
    singular = [int(k) for k in np.flatnonzero(np.isnan(values))]
    if singular and not allow_singular:
        raise ValueError(f"N+2k+2alpha = 0 for k in {singular}: factor undefined")

    stop = k_max
    certified_at = None
    run = 0
    for k in range(k_max + 1):
        if certified_at is None and _monotone_certificate(N, alpha, k, lemma36):
            certified_at = k
        if certified_at is not None and k > certified_at:
            run = run + 1 if values[k] > values[k - 1] else 0
            if run >= EARLY_STOP_RUN:
                stop = k
                break
    values = values[: stop + 1]
    finite = np.where(np.isnan(values), np.inf, values)
    argmin = int(np.argmin(finite))
    infimum = float(finite[argmin])
    target = (N + 4.0 * alpha + 2.0) ** 2 / 4.0
    region = lemma_region(N, alpha)
    close = abs(infimum - target) <= 1e-9 * max(abs(target), 1e-300)
    return ModeFactorTable(
        N=N,
        alpha=alpha,
        entries=[(k, float(v)) for k, v in enumerate(values)],
        infimum=infimum,
        argmin_k=argmin,
        matches_lemma=bool(close and region is not None),
        lemma36_form=bool(lemma36),
        target=target,
        region=region,
        k_max=int(k_max),
        monotone_from_k=certified_at,
        early_stop=stop < k_max,
        singular_k=singular,
    )
