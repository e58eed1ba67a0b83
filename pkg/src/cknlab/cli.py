"""Command-line front end: classify, verify, scan, modes, search.

Exit codes are shared by every command: 0 pass, 1 quantitative failure,
2 no matching case, 64 usage error, 65 inadmissible input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .constants import hup_constant, mode_infimum
from .functionals import (
    identity_residual_radial,
    ratio_hup,
    ratio_lp_product,
    ratio_lp_sum,
    ratio_thm21,
)
from .numerics import QuadratureError
from .parameters import (
    classify_hup,
    classify_lp,
    classify_thm21,
    hup_reference_region,
    lp_identity_hypotheses,
    make_params,
)
from .profiles import InadmissibleProfile, ProfileSpecError, build_profile
from .search import make_inequality, sharpness_search

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_NO_CASE = 2
EXIT_USAGE = 64
EXIT_INADMISSIBLE = 65

SCAN_HEADER = ["alpha", "N", "case", "constant", "attainable"]
SEARCH_SLACK = 1e-3

# default family, free parameters and fixed parameters per search target
SEARCH_DEFAULTS = {
    "lp-product": ("gen-exp", {"lambda": 1.0, "s": 1.0}, {"a": 0.0}),
    "lp-sum": ("gen-exp", {"lambda": 1.0, "s": 1.0}, {"a": 0.0}),
    "hup": ("gen-exp", {"a": 0.5, "s": 1.0}, {"lambda": 1.0}),
    "thm21": ("rational", {"s": 1.0, "m": 2.0}, {"a": 0.0}),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2)


def _emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + ("" if text.endswith("\n") else "\n"))
    sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--theorem {args.theorem} needs {' '.join(missing)}")


def _parse_kv(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"not a number in {item!r}") from None
    return out


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def _classify(args):
    if args.theorem == "thm21":
        _require(args, "N", "p", "t", "alpha", "beta")
        return classify_thm21(make_params(args.N, args.p, args.t, args.alpha, args.beta))
    if args.theorem in ("lp", "lp-sum"):
        _require(args, "N", "p", "alpha", "beta")
        tag = "lp-sum" if args.theorem == "lp-sum" else "lp-product"
        return classify_lp(args.N, args.p, args.alpha, args.beta, theorem_tag=tag)
    _require(args, "N", "alpha")
    return classify_hup(args.N, args.alpha)


def cmd_classify(args):
    report = _classify(args)
    _emit(dump_json(report.to_json()), args.out)
    return EXIT_PASS if report.matched else EXIT_NO_CASE


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args):
    th = args.theorem
    mode = None if args.mode == "auto" else args.mode
    if th == "thm21":
        _require(args, "N", "p", "t", "alpha", "beta")
        prm = make_params(args.N, args.p, args.t, args.alpha, args.beta)
        prof = build_profile(args.profile, args.N, args.p, args.t, args.alpha, args.beta)
        report = ratio_thm21(prof, prm, tol=args.tol, mode=mode)
    elif th in ("lp", "lp-sum"):
        _require(args, "N", "p", "alpha", "beta")
        prof = build_profile(args.profile, args.N, args.p, None, args.alpha, args.beta)
        fn = ratio_lp_sum if th == "lp-sum" else ratio_lp_product
        report = fn(prof, args.N, args.p, args.alpha, args.beta, tol=args.tol, mode=mode)
    elif th == "lp-identity":
        _require(args, "N", "p", "alpha", "beta")
        prof = build_profile(args.profile, args.N, args.p, None, args.alpha, args.beta)
        branch = args.branch
        if branch is None:
            hyp = lp_identity_hypotheses(args.N, args.p, args.alpha, args.beta)
            branch = 1 if hyp["identity_plus"] else -1
        report = identity_residual_radial(prof, args.N, args.p, args.alpha, args.beta,
                                          branch=branch, tol=args.tol)
    else:
        _require(args, "N", "alpha")
        prof = build_profile(args.profile, args.N, 2.0, None, args.alpha, 0.0)
        report = ratio_hup(prof, args.N, args.alpha, tol=args.tol, mode=mode)
    report.seed = args.seed
    _emit(dump_json(report.to_json()), args.out)
    return EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _parse_range(text):
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--alpha-range expects start:stop:step, got {text!r}") from None
    if not step > 0.0 or stop < start:
        raise UsageError(f"--alpha-range needs step > 0 and stop >= start, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps grid points such as -0.67 exact in the output
    return [round(start + i * step, 12) for i in range(n)]


def _parse_n_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"--N-list expects integers or ranges like 1-10, got {part!r}") from None
    if any(n < 1 for n in out):
        raise UsageError("--N-list entries must be positive integers")
    return out


def _fmt_num(x):
    return repr(float(x)) if math.isfinite(x) else str(x)


def scan_rows(alphas, n_list, reference=False, workers=None):
    """Classification rows in (N, alpha) grid order; each N is computed on its own worker."""

    def rows_for(N):
        rows = []
        for a in alphas:
            rep = classify_hup(N, a)
            row = [_fmt_num(a), str(N), rep.case_tag, _fmt_num(hup_constant(N, a)), rep.attainability]
            if reference:
                row.append("inside" if hup_reference_region(N, a) else "outside")
            rows.append(row)
        return rows

    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output does not depend on timing
        chunks = list(pool.map(rows_for, n_list))
    return [row for chunk in chunks for row in chunk]


def cmd_scan(args):
    alphas = _parse_range(args.alpha_range)
    n_list = _parse_n_list(args.N_list)
    if not alphas or not n_list:
        raise UsageError("empty scan grid")
    rows = scan_rows(alphas, n_list, reference=args.reference)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_HEADER + (["reference_region"] if args.reference else []))
    writer.writerows(rows)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------

def cmd_modes(args):
    lemma36 = {"auto": None, "plain": False, "clipped": True}[args.form]
    table = mode_infimum(args.N, args.alpha, k_max=args.kmax, lemma36=lemma36, allow_singular=True)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "F", "singular"])
        for k, f in table.entries:
            sing = math.isnan(f)
            writer.writerow([k, "" if sing else _fmt_num(f), "yes" if sing else "no"])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(dump_json(table.to_json()), args.out)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def cmd_search(args):
    th = "lp-product" if args.theorem == "lp" else args.theorem
    if th == "thm21":
        _require(args, "N", "p", "t", "alpha", "beta")
        ineq = make_inequality(th, N=args.N, p=args.p, t=args.t, alpha=args.alpha, beta=args.beta)
    elif th in ("lp-product", "lp-sum"):
        _require(args, "N", "p", "alpha", "beta")
        ineq = make_inequality(th, N=args.N, p=args.p, alpha=args.alpha, beta=args.beta)
    else:
        _require(args, "N", "alpha")
        ineq = make_inequality(th, N=args.N, alpha=args.alpha)
    family, init, fixed = SEARCH_DEFAULTS[th]
    if args.family is not None and args.family != family:
        family, init, fixed = args.family, {}, {}
    init = {**init, **_parse_kv(args.init)}
    fixed = {**fixed, **_parse_kv(args.fixed)}
    for k in list(fixed):
        init.pop(k, None)
    if not init:
        raise UsageError(f"family {family} needs at least one free parameter (--init key=value)")
    result = sharpness_search(ineq, family, init, fixed, budget=args.budget,
                              restarts=args.restarts, seed=args.seed)
    _emit(dump_json(result.to_json()), args.out)
    ok = -1e-8 <= result.gap <= SEARCH_SLACK
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_point(p, theorems):
    p.add_argument("--theorem", required=True, choices=theorems)
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", help="also write the output to this file")


def build_parser():
    parser = _Parser(prog="cknlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="region classification of a parameter point")
    _add_point(p, ["thm21", "lp", "lp-sum", "hup"])
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="evaluate a ratio or identity residual for a profile")
    _add_point(p, ["thm21", "lp", "lp-sum", "lp-identity", "hup"])
    p.add_argument("--profile", required=True, help="kind:key=value,... e.g. hup:sign=1")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--mode", choices=["auto", "equality", "bound"], default="auto")
    p.add_argument("--branch", type=int, choices=[-1, 1])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="classify the (alpha, N) plane to CSV")
    p.add_argument("--alpha-range", default="-2:2:0.01")
    p.add_argument("--N-list", default="1-10")
    p.add_argument("--reference", action="store_true",
                   help="append a reference_region column for the earlier-known region")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("modes", help="mode-factor table F(N, alpha, k)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kmax", type=int, default=1000)
    p.add_argument("--form", choices=["auto", "plain", "clipped"], default="auto")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("search", help="minimise a ratio over a trial family")
    _add_point(p, ["thm21", "lp", "lp-product", "lp-sum", "hup"])
    p.add_argument("--family", choices=["gen-exp", "exp-power", "rational"])
    p.add_argument("--init", nargs="*", metavar="KEY=VALUE")
    p.add_argument("--fixed", nargs="*", metavar="KEY=VALUE")
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cknlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProfileSpecError as exc:
        print(f"cknlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InadmissibleProfile as exc:
        print(f"cknlab {args.command}: inadmissible: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except QuadratureError as exc:
        print(f"cknlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"cknlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
