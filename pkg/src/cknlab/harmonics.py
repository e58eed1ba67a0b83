"""Spherical-harmonic mode reduction of the second-order uncertainty principle.

Writing u(x) = sum_k r^k w_k(r) phi_k(x/r), with phi_k a degree-k spherical
harmonic (eigenvalue c_k = k(k+N-2)), every quadratic functional splits into
per-mode radial integrals, and mode k behaves like a radial function on
dimension N + 2k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import mode_factor
from .functionals import VerificationReport, _check_denominator, _integrate, _summaries
from .numerics import DEFAULT_REL_TOL, GaussianSampler, mc_integrate, sphere_area
from .profiles import NDFunction, RadialProfile, sign_changes

__all__ = [
    "ModeExpansion",
    "eigenvalue",
    "harmonic_norm2",
    "mode_integrals",
    "mode_inequality_check",
    "hardy_1d_ratio",
    "assemble_modes",
    "lemma36_factor",
    "two_mode_function",
    "mc_mode_check",
]


def eigenvalue(N, k) -> int:
    """Eigenvalue k(k+N-2) of the degree-k spherical harmonics on S^{N-1}."""
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    return int(k) * (int(k) + int(N) - 2)


def harmonic_norm2(N, k) -> float:
    """Squared L^2(S^{N-1}) norm of the elementary harmonics phi_0 = 1 and phi_1 = x_1/r."""
    if k == 0:
        return sphere_area(N)
    if k == 1:
        return sphere_area(N) / N
    raise ValueError("only k = 0 and k = 1 have an elementary harmonic here")


@dataclass
class ModeExpansion:
    """Finitely many modes (k, w_k) of u = sum r^k w_k(r) phi_k.

    ``norms`` holds the squared sphere norm of each phi_k; 1.0 means the
    harmonic is orthonormal.
    """

    N: int
    modes: list
    norms: list = field(default_factory=list)

    def __post_init__(self):
        if not self.norms:
            self.norms = [1.0] * len(self.modes)
        if len(self.norms) != len(self.modes):
            raise ValueError("one norm per mode is required")
        for k, _ in self.modes:
            eigenvalue(self.N, k)

    @property
    def eigenvalues(self):
        return [eigenvalue(self.N, k) for k, _ in self.modes]

    @classmethod
    def elementary(cls, N, w0=None, w1=None):
        """u = w0(r) + w1(r) x_1 expressed with phi_0 = 1 and phi_1 = x_1/r."""
        modes, norms = [], []
        for k, w in ((0, w0), (1, w1)):
            if w is not None:
                modes.append((k, w))
                norms.append(harmonic_norm2(N, k))
        return cls(N=N, modes=modes, norms=norms)


def _value_evaluator(w: RadialProfile, w_value):
    if w_value is not None:
        return w_value
    if w.u is None and w.value_tail().kind == "growth":
        raise ValueError(f"{w.label}: no evaluator for w and w' is not integrable at infinity")
    return w.value


def _value_integral(w, power, w_value, rel_tol):
    ev = _value_evaluator(w, w_value)

    def core(r):
        return (ev(r) * r ** (0.5 * power)) ** 2

    return _integrate(w, 1, [("value", 2.0, power)], core, f"int |w|^2 r^{power:g}", rel_tol)


def _mode_parts(w, N, k, alpha, w_value, rel_tol):
    n = N + 2 * k
    lap = _integrate(
        w, n, [("lap", 2.0, n - 2.0 * alpha - 1.0)],
        lambda r: (w.laplacian(r, n) * r ** (0.5 * (n - 2.0 * alpha - 1.0))) ** 2,
        f"int |w''+{n - 1:g}w'/r|^2 r^{n - 2.0 * alpha - 1.0:g}", rel_tol,
        sign_changes(lambda r: w.laplacian(r, n), w),
    )
    wgt = _integrate(
        w, n, [("grad", 2.0, n + 2.0 * alpha + 1.0)],
        lambda r: (w.du(r) * r ** (0.5 * (n + 2.0 * alpha + 1.0))) ** 2,
        f"int |w'|^2 r^{n + 2.0 * alpha + 1.0:g}", rel_tol,
    )
    grad = _integrate(
        w, n, [("grad", 2.0, n - 1.0)],
        lambda r: (w.du(r) * r ** (0.5 * (n - 1.0))) ** 2,
        f"int |w'|^2 r^{n - 1.0:g}", rel_tol,
    )
    corr = None
    if k > 0 and 2.0 * alpha + 2.0 != 0.0:
        corr = _value_integral(w, n + 2.0 * alpha - 1.0, w_value, rel_tol)
    return lap, wgt, grad, corr


def mode_integrals(w: RadialProfile, N, k, alpha, w_value: Callable | None = None,
                   rel_tol=DEFAULT_REL_TOL):
    """(I_lap, I_weighted, I_grad) of the mode u_k = r^k w(r).

    I_weighted carries the correction -(2 alpha + 2) k int r^{N+2k+2alpha-1} w^2,
    which needs w itself: ``w_value`` if given, else the profile's own
    evaluator (tail quadrature of w' when no closed form exists).
    """
    eigenvalue(N, k)
    lap, wgt, grad, corr = _mode_parts(w, N, k, alpha, w_value, rel_tol)
    weighted = wgt.value
    if corr is not None:
        weighted -= (2.0 * alpha + 2.0) * k * corr.value
    return lap.value, weighted, grad.value


def mode_inequality_check(w: RadialProfile, N, k, alpha, w_value: Callable | None = None,
                          tol=1e-8, rel_tol=DEFAULT_REL_TOL) -> VerificationReport:
    """Per-mode bounds I_lap I_weighted >= F(N, alpha, k) I_grad^2 and its radial form.

    The radial form drops the correction term and compares with
    (N+2k+4alpha+2)^2/4, the squared radial constant on dimension N+2k.
    ``measured`` is the full-mode ratio; both ratios and margins are in
    ``details``.
    """
    eigenvalue(N, k)
    lap, wgt, grad, corr = _mode_parts(w, N, k, alpha, w_value, rel_tol)
    _check_denominator(grad.value, "int |w'|^2 r^{N+2k-1}")
    weighted = wgt.value
    if corr is not None:
        weighted -= (2.0 * alpha + 2.0) * k * corr.value
    ratio = lap.value * weighted / grad.value**2
    radial_ratio = lap.value * wgt.value / grad.value**2
    factor = mode_factor(N, alpha, k, lemma36=alpha + 1.0 < 0.0)
    radial_target = (N + 2.0 * k + 4.0 * alpha + 2.0) ** 2 / 4.0
    passed = ratio >= factor - tol and radial_ratio >= radial_target - tol
    results = [r for r in (lap, wgt, grad, corr) if r is not None]
    return VerificationReport(
        theorem="hup-mode",
        case=f"k={k}",
        mode="bound",
        target_constant=factor,
        measured=ratio,
        abs_tolerance=tol,
        rel_tolerance=rel_tol,
        passed=bool(passed),
        quadrature_errors=_summaries(*results),
        inputs=w.label,
        params={"N": N, "k": k, "alpha": alpha},
        details={
            "I_lap": lap.value,
            "I_weighted": weighted,
            "I_grad": grad.value,
            "mode_ratio": ratio,
            "mode_target": factor,
            "mode_margin": ratio - factor,
            "radial_ratio": radial_ratio,
            "radial_target": radial_target,
            "radial_margin": radial_ratio - radial_target,
        },
    )


def hardy_1d_ratio(w: RadialProfile, s, w_value: Callable | None = None, tol=1e-9,
                   rel_tol=DEFAULT_REL_TOL) -> VerificationReport:
    """int r^{s+1}|w'|^2 / int r^{s-1}|w|^2, bounded below by s^2/4."""
    if s == 0.0:
        raise ValueError("s = 0 gives a trivial Hardy constant")
    num = _integrate(w, 1, [("grad", 2.0, s + 1.0)], lambda r: (w.du(r) * r ** (0.5 * (s + 1.0))) ** 2,
                     f"int |w'|^2 r^{s + 1.0:g}", rel_tol)
    den = _value_integral(w, s - 1.0, w_value, rel_tol)
    _check_denominator(den.value, "int |w|^2 r^{s-1}")
    ratio = num.value / den.value
    target = s * s / 4.0
    return VerificationReport(
        theorem="hardy-1d",
        case="",
        mode="bound",
        target_constant=target,
        measured=ratio,
        abs_tolerance=tol,
        rel_tolerance=rel_tol,
        passed=bool(ratio >= target - tol),
        quadrature_errors=_summaries(num, den),
        inputs=w.label,
        params={"s": s},
        details={"numerator": num.value, "denominator": den.value},
    )


def assemble_modes(expansion: ModeExpansion, alpha, w_values=None, rel_tol=DEFAULT_REL_TOL):
    """(A, C, D) of u from its modes: each mode's integrals times its harmonic norm."""
    w_values = w_values or {}
    A = C = D = 0.0
    # sort so totals do not depend on the order modes were listed in
    order = sorted(range(len(expansion.modes)), key=lambda i: (expansion.modes[i][0], i))
    for i in order:
        k, w = expansion.modes[i]
        a, c, d = mode_integrals(w, expansion.N, k, alpha, w_values.get(k), rel_tol)
        norm = expansion.norms[i]
        A += norm * a
        C += norm * c
        D += norm * d
    return A, C, D


def lemma36_factor(N, alpha, k) -> float:
    """1 + min(0, -4k(2alpha+2)/(N+2k+2alpha)^2).

    Positive everywhere except the isolated zero N=1, k=1, alpha=-1/2, where
    ArithmeticError is raised.
    """
    y = N + 2.0 * k + 2.0 * alpha
    if y == 0.0:
        raise ValueError(f"N+2k+2alpha = 0 at N={N}, alpha={alpha}, k={k}")
    value = 1.0 + min(0.0, -4.0 * k * (2.0 * alpha + 2.0) / (y * y))
    if not value > 0.0:
        raise ArithmeticError(f"factor {value!r} is not positive at N={N}, alpha={alpha}, k={k}")
    return value


def two_mode_function(N, w0: RadialProfile, w1: RadialProfile) -> NDFunction:
    """u(x) = w0(r) + w1(r) x_1 on R^N, with exact gradient and Laplacian."""

    def _r(x):
        return np.sqrt(np.einsum("ij,ij->i", x, x))

    def value(x):
        r = _r(x)
        return w0.value(r) + w1.value(r) * x[:, 0]

    def gradient(x):
        r = _r(x)
        radial = (w0.du(r) + w1.du(r) * x[:, 0]) / r
        out = radial[:, None] * x
        out[:, 0] += w1.value(r)
        return out

    def laplacian(x):
        r = _r(x)
        # Delta(g(r) x_1) = x_1 (g'' + (N+1) g'/r)
        return w0.laplacian(r, N) + x[:, 0] * w1.laplacian(r, N + 2)

    return NDFunction(value, gradient, laplacian, N, label=f"[{w0.label}] + [{w1.label}]*x1")


def mc_mode_check(N, alpha, w0: RadialProfile, w1: RadialProfile, samples=1_000_000, seed=0,
                  sampler_scale=1.2, rel_limit=0.02, sigmas=3.0) -> VerificationReport:
    """Compare mode sums for u = w0 + w1 x_1 with direct Monte Carlo of A, C and D."""
    f = two_mode_function(N, w0, w1)
    sums = assemble_modes(ModeExpansion.elementary(N, w0, w1), alpha)

    def integrand(x):
        r = np.sqrt(np.einsum("ij,ij->i", x, x))
        g = f.gradient(x)
        g2 = np.einsum("ij,ij->i", g, g)
        lap = f.laplacian(x)
        return np.stack([lap**2 * r ** (-2.0 * alpha), g2 * r ** (2.0 * alpha + 2.0), g2], axis=1)

    mc = mc_integrate(integrand, N, GaussianSampler(sampler_scale), samples, seed)
    names = ("A", "C", "D")
    rows = {}
    ok = not mc.failed
    worst = 0.0
    for name, ref, val, se in zip(names, sums, mc.value, mc.std_error):
        rel = abs(val - ref) / abs(ref)
        within = abs(val - ref) <= sigmas * se and rel <= rel_limit
        ok = ok and within
        worst = max(worst, rel)
        rows[name] = {"modes": ref, "mc": float(val), "std_error": float(se),
                      "relative_gap": rel, "within": bool(within)}
    return VerificationReport(
        theorem="hup-modes",
        case="two-mode",
        mode="residual",
        target_constant=0.0,
        measured=worst,
        abs_tolerance=rel_limit,
        rel_tolerance=rel_limit,
        passed=bool(ok),
        inputs=f.label,
        params={"N": N, "alpha": alpha, "samples": samples, "sampler_scale": sampler_scale},
        seed=seed,
        details=rows,
    )
