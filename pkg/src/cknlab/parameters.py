"""Parameter tuples and region classification for the second-order CKN family."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

__all__ = [
    "CknParams",
    "make_params",
    "Condition",
    "RegionReport",
    "classify_thm21",
    "classify_lp",
    "classify_hup",
    "hup_reference_region",
    "EQUALITY_TOL",
]

# |alpha + (p-1) beta + 1| at or below this counts as the codimension-one case
EQUALITY_TOL = 1e-12

SQRT2 = math.sqrt(2.0)
SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class CknParams:
    """Validated exponents; ``gamma`` and ``q`` are always derived."""

    N: int
    p: float
    t: float
    alpha: float
    beta: float
    gamma: float
    q: float

    def as_dict(self):
        return asdict(self)


def _check_dimension(N):
    if isinstance(N, bool):
        raise ValueError("dimension N must be an integer >= 1")
    try:
        as_float = float(N)
    except (TypeError, ValueError):
        raise ValueError(f"dimension N must be an integer >= 1, got {N!r}") from None
    if not as_float.is_integer() or as_float < 1:
        raise ValueError(f"dimension N must be an integer >= 1, got {N!r}")
    return int(as_float)


def _check_real(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def make_params(N, p, t, alpha, beta) -> CknParams:
    """Build a parameter tuple with gamma fixed by the dilation balance."""
    N = _check_dimension(N)
    p = _check_real("p", p)
    t = _check_real("t", t)
    alpha = _check_real("alpha", alpha)
    beta = _check_real("beta", beta)
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    if t < p:
        raise ValueError(f"t must be >= p, got t={t!r} < p={p!r}")
    gamma = (alpha + (t - 1.0) * beta + 1.0) / t
    q = p if t == p else p * (t - 1.0) / (p - 1.0)
    return CknParams(N=N, p=p, t=t, alpha=alpha, beta=beta, gamma=gamma, q=q)


@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    relation: str  # ">0", "<0" or "=0"
    satisfied: bool

    def as_list(self):
        return [self.name, self.value, self.satisfied]


def _gt(name, value):
    return Condition(name, float(value), ">0", bool(value > 0.0))


def _lt(name, value):
    return Condition(name, float(value), "<0", bool(value < 0.0))


def _eq(name, value, tol=EQUALITY_TOL):
    return Condition(name, float(value), "=0", bool(abs(value) <= tol))


@dataclass
class RegionReport:
    theorem_tag: str
    case_tag: str
    condition_values: list
    attainability: str
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    constant: float = math.nan
    identity_hypotheses: dict = field(default_factory=dict)

    @property
    def matched(self):
        return self.case_tag not in ("none", "outside")

    def condition(self, name):
        for c in self.condition_values:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "theorem": self.theorem_tag,
            "case": self.case_tag,
            "attainability": self.attainability,
            "constant": self.constant,
            "params": self.params,
            "conditions": [
                {"name": c.name, "value": c.value, "relation": c.relation, "satisfied": c.satisfied}
                for c in self.condition_values
            ],
            "identity_hypotheses": self.identity_hypotheses,
            "notes": list(self.notes),
        }


def _all(conds):
    return all(c.satisfied for c in conds)


def thm21_conditions(prm: CknParams):
    """Condition list for the radial (p, t) family, in a fixed order."""
    N, p, t, a, b = prm.N, prm.p, prm.t, prm.alpha, prm.beta
    if p == t:
        return [
            _gt("alpha-beta+1", a - b + 1.0),
            _lt("p*alpha+(p-1)*N", p * a + (p - 1.0) * N),
        ]
    q = prm.q
    c1 = (p - 1.0) * (a + 1.0) - (t - 1.0) * b - (t - p)
    c2 = p * ((p - 1.0) * a - (t - 1.0) * b + t - 1.0) / (t - p) - (N - p * a)
    c3 = p * (t - 1.0) * ((p - 1.0) * (a + 1.0) - (t - 1.0) * b) / ((t - p) * (p - 1.0)) - (N - q * b)
    E = (p - 1.0) * (a + 1.0) - (t - 1.0) * b - (N - 1.0) * (t - p)
    return [
        _gt("(p-1)(alpha+1)-(t-1)beta-(t-p)", c1),
        _gt("p[(p-1)alpha-(t-1)beta+t-1]/(t-p)-(N-p*alpha)", c2),
        _gt("p(t-1)[(p-1)(alpha+1)-(t-1)beta]/((t-p)(p-1))-(N-q*beta)", c3),
        Condition("E=(p-1)(alpha+1)-(t-1)beta-(N-1)(t-p)", E, "sign", E != 0.0),
        Condition("p*alpha+(p-1)*N", p * a + (p - 1.0) * N, "sign", p * a + (p - 1.0) * N != 0.0),
    ]


def classify_thm21(prm: CknParams) -> RegionReport:
    from .constants import thm21_constant

    conds = thm21_conditions(prm)
    if prm.p == prm.t:
        ab, pn = conds[0].value, conds[1].value
        if ab > 0.0 and pn < 0.0:
            case = "1a"
        elif ab < 0.0 and pn > 0.0:
            case = "1b"
        else:
            case = "none"
        # report the satisfied flags relative to the matched sub-case
        if case == "1b":
            conds = [
                Condition(conds[0].name, ab, "<0", ab < 0.0),
                Condition(conds[1].name, pn, ">0", pn > 0.0),
            ]
    else:
        strict = conds[:3]
        E, pn = conds[3].value, conds[4].value
        if _all(strict) and E > 0.0 and pn < 0.0:
            case = "2a"
        elif _all(strict) and E < 0.0 and pn > 0.0:
            case = "2b"
        else:
            case = "none"
        if case == "2b":
            conds[3] = Condition(conds[3].name, E, "<0", E < 0.0)
            conds[4] = Condition(conds[4].name, pn, ">0", pn > 0.0)
        else:
            conds[3] = Condition(conds[3].name, E, ">0", E > 0.0)
            conds[4] = Condition(conds[4].name, pn, "<0", pn < 0.0)
    notes = []
    if case == "none":
        notes.append("formula value reported; optimality unknown outside the stated cases")
    return RegionReport(
        theorem_tag="thm21",
        case_tag=case,
        condition_values=conds,
        attainability="attained-by-known-family" if case != "none" else "not-applicable",
        params=prm.as_dict(),
        notes=notes,
        constant=thm21_constant(prm),
    )


def lp_identity_hypotheses(N, p, alpha, beta):
    """Which of the two L^p identities (decreasing / increasing branch) applies."""
    ab = alpha - beta + 1.0
    pn = p * alpha + (p - 1.0) * N
    return {
        "identity_minus": bool(ab > 0.0 and pn < 0.0),
        "identity_plus": bool(ab < 0.0 and pn > 0.0),
    }


def classify_lp(N, p, alpha, beta, theorem_tag="lp-product") -> RegionReport:
    from .constants import lp_constant, lp_sum_constant

    N = _check_dimension(N)
    p = _check_real("p", p)
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    alpha = _check_real("alpha", alpha)
    beta = _check_real("beta", beta)
    s = alpha + (p - 1.0) * beta + 1.0
    ab = alpha - beta + 1.0
    pn = p * alpha + (p - 1.0) * N
    hyp = lp_identity_hypotheses(N, p, alpha, beta)
    if abs(s) <= EQUALITY_TOL:
        conds = [_eq("alpha+(p-1)beta+1", s)]
        if hyp["identity_minus"]:
            case = "3a"
            conds += [_gt("alpha-beta+1", ab), _lt("p*alpha+(p-1)*N", pn)]
        elif hyp["identity_plus"]:
            case = "3b"
            conds += [_lt("alpha-beta+1", ab), _gt("p*alpha+(p-1)*N", pn)]
        else:
            case = "3"
            conds += [_gt("alpha-beta+1", ab), _lt("p*alpha+(p-1)*N", pn)]
    elif s > 0.0:
        conds = [_gt("alpha+(p-1)beta+1", s), _gt("alpha-beta+1", ab), _lt("p*alpha+(p-1)*N", pn)]
        case = "1" if _all(conds) else "none"
    else:
        conds = [_lt("alpha+(p-1)beta+1", s), _lt("alpha-beta+1", ab), _gt("p*alpha+(p-1)*N", pn)]
        case = "2" if _all(conds) else "none"

    notes = []
    if case in ("1", "2", "3a", "3b"):
        attain = "attained-by-known-family"
    elif case == "3":
        # the inequality holds but no sub-case names the optimal constant
        attain = "open"
        notes.append("codimension-one case without a sub-case: constant is a valid bound, optimality unknown")
    else:
        attain = "not-applicable"
        notes.append("formula value reported; optimality unknown outside the stated cases")
    if case == "none" and (hyp["identity_minus"] or hyp["identity_plus"]):
        which = "decreasing" if hyp["identity_minus"] else "increasing"
        notes.append(f"identity hypotheses ({which} branch) hold although no inequality case applies")
    const = lp_sum_constant(N, p, alpha, beta) if theorem_tag == "lp-sum" else lp_constant(N, p, alpha, beta)
    return RegionReport(
        theorem_tag=theorem_tag,
        case_tag=case,
        condition_values=conds,
        attainability=attain,
        params={"N": N, "p": p, "alpha": alpha, "beta": beta},
        notes=notes,
        constant=const,
        identity_hypotheses=hyp,
    )


def hup_case_conditions(N, alpha):
    a = alpha
    return {
        "case1": [
            _gt("alpha+1", a + 1.0),
            _gt("N-2alpha", N - 2.0 * a),
            _gt("N-(sqrt5-1)alpha-(sqrt5+1)", N - (SQRT5 - 1.0) * a - (SQRT5 + 1.0)),
        ],
        "case2": [
            _lt("N+2alpha", N + 2.0 * a),
            _gt("N+(sqrt5+1)alpha+(sqrt5-1)", N + (SQRT5 + 1.0) * a + (SQRT5 - 1.0)),
            _gt("N-2sqrt2*alpha-2sqrt2", N - 2.0 * SQRT2 * a - 2.0 * SQRT2),
        ],
        "case3": [
            _lt("alpha+1", a + 1.0),
            _gt("N+4alpha+2", N + 4.0 * a + 2.0),
        ],
    }


def hup_reference_region(N, alpha):
    """The earlier-known region N-2a>0, N+2a>0, N+4a+2>0."""
    return bool(N - 2.0 * alpha > 0.0 and N + 2.0 * alpha > 0.0 and N + 4.0 * alpha + 2.0 > 0.0)


def classify_hup(N, alpha) -> RegionReport:
    from .constants import hup_constant

    N = _check_dimension(N)
    alpha = _check_real("alpha", alpha)
    groups = hup_case_conditions(N, alpha)
    matched = [name for name, conds in groups.items() if _all(conds)]
    notes = []
    if len(matched) > 1:
        # never observed on scanned grids; surfaced rather than hidden
        notes.append(f"overlapping cases: {','.join(matched)}")
    case = matched[0] if matched else "outside"
    conds = [c for name in ("case1", "case2", "case3") for c in groups[name]]

    attain_1 = alpha + 1.0 > 0.0 and N + 2.0 * alpha > 0.0
    attain_2 = alpha + 1.0 < 0.0 and N + 2.0 * alpha < 0.0
    if case == "outside":
        attain = "not-applicable"
        notes.append("formula value reported; optimality unknown outside the stated cases")
    elif attain_1 or attain_2:
        attain = "attained-by-known-family"
        notes.append("attained by " + ("exp(-r^(2a+2)/(2a+2))" if attain_1 else "exp(r^(2a+2)/(2a+2))"))
    else:
        attain = "open"
        notes.append("existence of optimizers is an open question in this sub-region")
    return RegionReport(
        theorem_tag="hup",
        case_tag=case,
        condition_values=conds,
        attainability=attain,
        params={"N": N, "alpha": alpha},
        notes=notes,
        constant=hup_constant(N, alpha),
        identity_hypotheses={
            "attainment_decreasing": bool(attain_1),
            "attainment_increasing": bool(attain_2),
            "reference_region": hup_reference_region(N, alpha),
        },
    )
