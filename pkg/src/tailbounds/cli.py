"""Batch command-line interface.

Subcommands compute envelopes or run validations and write a versioned JSON
report (all realized constants and diagnostics included) plus optional CSV
envelope tables.  Exit codes: 0 success, 1 input error, 2 validation
failure.  Reports are byte-identical across runs for a fixed config and
seed once timestamps are normalized away (--normalize).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .envelope import TailEnvelope
from .errors import InputError, TailboundsError
from .functions import PhiFunction, conjugate
from .integrals import (
    compound_upper_bound,
    cramer_check,
    epsilon_report,
    log_compound_upper_bound,
    log_i_integral,
)
from .lower_bilateral import (
    closure_lower_envelope,
    exact_mgf_sandwich,
    pinched_lower_envelope,
    verify_regularity,
)
from .lower_unilateral import (
    m_surrogate_from_upper,
    unilateral_lower_envelope,
)
from .moments import (
    growth_tail_recovery,
    moment_envelope_from_csv,
    moment_power_growth,
    moment_power_pole,
    power_tail_lower,
)
from .oracles import empirical_tail, gaussian, quadrature, suite
from .tauberian import tauberian_check

SCHEMA_VERSION = 1
SEED_ENV_VAR = "TAILBOUNDS_SEED"
DEFAULT_SEED = 42


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:step`` (inclusive of stop within half a step) or a
    comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise InputError(f"grid spec {spec!r}: expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise InputError(f"grid spec {spec!r}: non-numeric field") from None
        if step <= 0 or stop <= start:
            raise InputError(f"grid spec {spec!r}: need stop > start and step > 0")
        n = int(round((stop - start) / step))
        grid = start + step * np.arange(n + 1)
        grid = grid[grid <= stop + 1e-12 * max(1.0, abs(stop))]
    else:
        try:
            grid = np.array([float(p) for p in spec.split(",") if p.strip()])
        except ValueError:
            raise InputError(f"grid spec {spec!r}: non-numeric entry") from None
    if grid.size == 0 or (grid.size > 1 and not np.all(np.diff(grid) > 0)):
        raise InputError(f"grid spec {spec!r}: must be strictly increasing, nonempty")
    return grid


def build_function(args: argparse.Namespace) -> PhiFunction:
    if getattr(args, "grid_csv", None):
        return PhiFunction.from_csv(args.grid_csv)
    fam = args.family
    lo = args.lambda_min
    hi = args.lambda_max if args.lambda_max is not None else math.inf
    if fam == "quadratic":
        return PhiFunction.quadratic(coeff=args.coeff, lo=lo, hi=hi)
    if fam == "quartic":
        return PhiFunction.power_log(4.0, 0.0, lo=lo, hi=hi)
    if fam == "power-log":
        return PhiFunction.power_log(args.p, args.r, lo=lo, hi=hi)
    if fam == "linear":
        return PhiFunction.linear(slope=args.slope, lo=lo, hi=hi)
    raise InputError(f"unknown family {fam!r} (and no --grid-csv given)")


def add_function_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", default="quadratic",
                   choices=["quadratic", "quartic", "power-log", "linear"],
                   help="named closed form (ignored when --grid-csv is given)")
    p.add_argument("--coeff", type=float, default=0.5, help="quadratic coefficient")
    p.add_argument("--p", type=float, default=2.0, help="power-log exponent p")
    p.add_argument("--r", type=float, default=0.0, help="power-log log-exponent r")
    p.add_argument("--slope", type=float, default=1.0, help="linear slope")
    p.add_argument("--lambda-min", type=float, default=1.0, help="domain lower end")
    p.add_argument("--lambda-max", type=float, default=None, help="domain upper end (open)")
    p.add_argument("--grid-csv", default=None,
                   help="CSV with header lambda,value for a grid-backed function")


def add_io_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--csv", default=None, help="optional CSV envelope table path")
    p.add_argument("--normalize", action="store_true",
                   help="zero out the timestamp for byte-identical reports")
    p.add_argument("--seed", type=int, default=None,
                   help=f"sampling seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})")


def resolve_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else DEFAULT_SEED


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return {k: to_jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    if isinstance(obj, PhiFunction):
        return obj.label
    return obj


def envelope_payload(env: TailEnvelope) -> dict:
    return {
        "x": to_jsonable(env.x),
        "value": to_jsonable(env.values),
        "log_value": to_jsonable(env.log_values),
        "side": env.side,
        "provenance": env.provenance,
        "valid_from": env.valid_from,
    }


def write_report(report: dict, args: argparse.Namespace) -> None:
    report["schema_version"] = SCHEMA_VERSION
    report["generated_at"] = 0 if args.normalize else time.time()
    payload = json.dumps(to_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def write_csv_table(path: Optional[str], rows: list[dict]) -> None:
    if not path or not rows:
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_conjugate(args) -> int:
    f = build_function(args)
    xs = parse_grid(args.x)
    res = conjugate(f, xs)
    rows = [{"x": float(x), "value": float(v), "argmax": float(a)}
            for x, v, a in zip(res.x_grid, res.values, res.argmax)]
    write_csv_table(args.csv, rows)
    write_report({
        "command": "conjugate",
        "config": {"function": f.label, "x": to_jsonable(xs)},
        "results": {"table": to_jsonable(rows)},
        "status": "ok",
    }, args)
    return 0


def cmd_upper(args) -> int:
    f = build_function(args)
    xs = parse_grid(args.x)
    res = conjugate(f, xs)
    log_vals = np.minimum(-res.values, 0.0)
    env = TailEnvelope(x=xs, log_values=log_vals, side="upper",
                       provenance="conjugate-upper", valid_from=float(xs[0]))
    results = {"chernoff": envelope_payload(env)}
    if args.bound_lambda is not None:
        lam_grid = parse_grid(args.bound_lambda)
        bounds = {}
        for lam in lam_grid:
            entry = {}
            try:
                entry["log_compound"] = log_compound_upper_bound(f, float(lam), args.epsilon)
                entry["compound"] = compound_upper_bound(f, float(lam), args.epsilon)
                entry["log_integral"] = log_i_integral(f, float(lam))
            except TailboundsError as exc:
                entry["error"] = str(exc)
            bounds[str(float(lam))] = entry
        results["integral_bounds"] = bounds
        results["epsilon_report"] = to_jsonable(epsilon_report(f, args.epsilon))
    rows = [{"x": float(x), "upper": float(v)} for x, v in zip(env.x, env.values)]
    write_csv_table(args.csv, rows)
    write_report({
        "command": "upper",
        "config": {"function": f.label, "x": to_jsonable(xs), "epsilon": args.epsilon},
        "results": results,
        "status": "ok",
    }, args)
    return 0


def cmd_lower_uni(args) -> int:
    f = build_function(args)
    xs = parse_grid(args.x)
    if args.m_surrogate is not None:
        m_bound = args.m_surrogate
    else:
        m_bound = m_surrogate_from_upper(f, args.epsilon)
    env, cert = unilateral_lower_envelope(
        f, args.epsilon, m_bound, xs, nonnegative=not args.signed,
    )
    chern = _chernoff_envelope(f, env.x)
    rows = [{"x": float(x), "lower": float(v), "chernoff_upper": float(u)}
            for x, v, u in zip(env.x, env.values, chern.values)]
    write_csv_table(args.csv, rows)
    write_report({
        "command": "lower-uni",
        "config": {"function": f.label, "x": to_jsonable(xs),
                   "epsilon": args.epsilon, "m_surrogate": m_bound},
        "results": {"envelope": envelope_payload(env),
                    "chernoff": envelope_payload(chern),
                    "certificate": to_jsonable(cert)},
        "status": "ok",
    }, args)
    return 0


def _chernoff_envelope(f: PhiFunction, xs: np.ndarray) -> TailEnvelope:
    res = conjugate(f, xs)
    return TailEnvelope(x=xs, log_values=np.minimum(-res.values, 0.0),
                        side="upper", provenance="conjugate-upper",
                        valid_from=float(xs[0]))


def cmd_lower_bi(args) -> int:
    f = build_function(args)
    xs = parse_grid(args.x)
    if args.delta is not None:
        env, cert = pinched_lower_envelope(f, args.delta, xs)
        results = {"envelope": envelope_payload(env), "certificate": to_jsonable(cert)}
    else:
        env, diag = closure_lower_envelope(f, f, xs)
        results = {"envelope": envelope_payload(env),
                   "diagnostics": to_jsonable({"all_clamped": diag.all_clamped})}
    results["chernoff"] = envelope_payload(_chernoff_envelope(f, env.x))
    results["regularity"] = to_jsonable(verify_regularity(f))
    rows = [{"x": float(x), "lower": float(v)} for x, v in zip(env.x, env.values)]
    write_csv_table(args.csv, rows)
    write_report({
        "command": "lower-bi",
        "config": {"function": f.label, "x": to_jsonable(xs), "delta": args.delta},
        "results": results,
        "status": "ok",
    }, args)
    return 0


def cmd_richter(args) -> int:
    f = build_function(args)
    xs = parse_grid(args.x)
    lower, upper, c2 = exact_mgf_sandwich(f, xs)
    rows = [{"x": float(x), "lower": float(lv), "upper": float(uv)}
            for x, lv, uv in zip(xs, lower.values, upper.values)]
    write_csv_table(args.csv, rows)
    write_report({
        "command": "richter",
        "config": {"function": f.label, "x": to_jsonable(xs)},
        "results": {"lower": envelope_payload(lower), "upper": envelope_payload(upper),
                    "c2": c2},
        "status": "ok",
    }, args)
    return 0


def cmd_moments(args) -> int:
    xs = parse_grid(args.x)
    if args.moments_csv:
        env = moment_envelope_from_csv(args.moments_csv)
        if env.upper is None:
            raise InputError("CSV route currently needs both lower and upper columns "
                             "for growth recovery; use --mode pole for one-sided input")
        lower, upper, rep = growth_tail_recovery(args.m, env, xs,
                                                 m_surrogate=args.m_surrogate)
        results = {"upper": envelope_payload(upper), "report": to_jsonable(rep)}
        if lower is not None:
            results["lower"] = envelope_payload(lower)
    elif args.mode == "growth":
        env = moment_power_growth(args.m, args.c_low, args.c_high)
        lower, upper, rep = growth_tail_recovery(args.m, env, xs,
                                                 m_surrogate=args.m_surrogate)
        results = {"upper": envelope_payload(upper), "report": to_jsonable(rep)}
        if lower is not None:
            results["lower"] = envelope_payload(lower)
    else:
        env = moment_power_pole(args.c, args.b, args.beta)
        tail_env, rep = power_tail_lower(env, xs, m_surrogate=args.m_surrogate)
        results = {"lower": envelope_payload(tail_env), "report": to_jsonable(rep)}
    rows = []
    for key in ("lower", "upper"):
        if key in results:
            for x, v in zip(results[key]["x"], results[key]["value"]):
                rows.append({"x": x, "side": key, "value": v})
    write_csv_table(args.csv, rows)
    write_report({
        "command": "moments",
        "config": {"mode": args.mode, "x": to_jsonable(xs)},
        "results": results,
        "status": "ok",
    }, args)
    return 0


def cmd_tauber(args) -> int:
    dists = suite()
    dists["gaussian"] = gaussian(args.scale)
    if args.dist not in dists:
        raise InputError(f"unknown distribution {args.dist!r}")
    dist = dists[args.dist]
    phi = PhiFunction.quadratic(lo=0.0) if args.reference == "quadratic" \
        else build_function(args)
    seed = resolve_seed(args)
    rep = tauberian_check(phi, dist, monte_carlo=args.mc,
                          n_samples=args.mc_samples, seed=seed)
    write_report({
        "command": "tauber",
        "config": {"dist": dist.name, "reference": phi.label,
                   "mc": args.mc, "seed": seed},
        "results": to_jsonable(rep),
        "status": "ok",
    }, args)
    return 0


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def _validate_one(name: str, seed: int, mc_samples: int) -> dict:
    """Full sandwich and consistency battery for one reference law."""
    dist = suite()[name]
    checks: dict[str, dict] = {}

    def record(key: str, ok: bool, **info):
        checks[key] = {"pass": bool(ok), **{k: to_jsonable(v) for k, v in info.items()}}

    xs = np.linspace(1.0, 8.0, 15)
    tails = np.array([dist.tail(float(x)) for x in xs])

    # density/tail consistency by quadrature
    if dist.density is not None:
        errs = []
        for x in np.linspace(1.0, 6.0, 6):
            val, _ = quadrature(dist.density, float(x), math.inf)
            errs.append(abs(val - dist.tail(float(x))))
        record("tail_quadrature", max(errs) < 1e-9, max_abs_err=max(errs))

    phi = dist.mgf_exponent
    if phi is not None:
        # MGF consistency at interior points
        lam_probe = [0.5, 1.5] if phi.domain.top() > 2 else [0.3, 0.7]
        errs = []
        for lam in lam_probe:
            if dist.support_lo >= 0:
                val, _ = quadrature(lambda x, l=lam: math.exp(l * x) * dist.density(x),
                                    0.0, math.inf)
            else:
                val, _ = quadrature(lambda x, l=lam: math.exp(l * x) * dist.density(x)
                                    + math.exp(-l * x) * dist.density(-x), 0.0, math.inf)
            errs.append(abs(val - math.exp(phi.value(lam))) / val)
        record("mgf_consistency", max(errs) < 1e-7, max_rel_err=max(errs))

        # Chernoff side
        res = conjugate(phi, xs)
        chern = np.where(np.isfinite(res.values), np.exp(-np.minimum(res.values, 700.0)), 0.0)
        record("chernoff_upper", bool(np.all(chern >= tails - 1e-12)),
               min_margin=float(np.min(chern - tails)))

        # unilateral chain
        try:
            m_bound = m_surrogate_from_upper(phi, 0.2)
            env_u, cert_u = unilateral_lower_envelope(
                phi, 0.2, m_bound, xs, nonnegative=dist.nonnegative)
            t_at = np.array([dist.tail(float(x)) for x in env_u.x])
            record("unilateral_lower", bool(np.all(env_u.values <= t_at + 1e-12)),
                   dilation=cert_u.dilation, c1=cert_u.c1, c2=cert_u.c2,
                   m_surrogate=m_bound,
                   min_margin=float(np.min(t_at - env_u.values)))
        except TailboundsError as exc:
            record("unilateral_lower", False, error=str(exc))

        # bilateral closure with phi1 = phi2 = phi
        try:
            env_b, diag = closure_lower_envelope(phi, phi, xs)
            t_at = np.array([dist.tail(float(x)) for x in env_b.x])
            record("closure_lower", bool(np.all(env_b.values <= t_at + 1e-12)),
                   all_clamped=diag.all_clamped,
                   min_margin=float(np.min(t_at - env_b.values)))
        except TailboundsError as exc:
            record("closure_lower", False, error=str(exc))

        # exact-MGF sandwich
        try:
            xr = np.linspace(2.0, 8.0, 13)
            low_r, up_r, c2 = exact_mgf_sandwich(phi, xr)
            t_at = np.array([dist.tail(float(x)) for x in xr])
            record("exact_mgf_sandwich",
                   bool(np.all(low_r.values <= t_at + 1e-12)
                        and np.all(up_r.values >= t_at - 1e-12)
                        and np.all(np.isfinite(low_r.log_values))),
                   c2=c2)
        except TailboundsError as exc:
            record("exact_mgf_sandwich", False, error=str(exc))

    # damped-integral finiteness of the exponential tail function
    g = dist.exponential_tail_fn()
    cert = cramer_check(g, eps_grid=(0.05, 0.2, 0.5))
    finite_all = all(v is not None for v in cert.k_table.values())
    record("cramer", cert.certified == dist.cramer and (finite_all or not dist.cramer),
           certified=cert.certified, expected=dist.cramer)

    # empirical tail against the exact one
    samples = dist.sample(seed, mc_samples)
    emp = empirical_tail(samples, [1.0, 2.0])
    ok_emp = all(
        abs(emp["fraction"][i] - dist.tail(float(emp["x"][i]))) <= 3.0 * emp["wilson_halfwidth"][i]
        for i in range(2)
    )
    record("empirical_tail", ok_emp,
           fractions=emp["fraction"], halfwidths=emp["wilson_halfwidth"])

    return checks


def cmd_validate(args) -> int:
    seed = resolve_seed(args)
    names = list(suite().keys()) if args.dist == "all" else [args.dist]
    known = suite()
    for n in names:
        if n not in known:
            raise InputError(f"unknown distribution {n!r}; choose from {sorted(known)}")
    all_checks = {}
    for n in names:
        all_checks[n] = _validate_one(n, seed, args.mc_samples)
    ok = all(c["pass"] for per in all_checks.values() for c in per.values())
    write_report({
        "command": "validate",
        "config": {"dist": names, "seed": seed, "mc_samples": args.mc_samples},
        "results": all_checks,
        "status": "ok" if ok else "failed",
    }, args)
    return 0 if ok else 2


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailbounds",
        description="Certified tail-probability envelopes from MGF bounds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conjugate", help="Legendre transform table")
    add_function_args(p); add_io_args(p)
    p.add_argument("--x", default="1:8:0.5", help="x grid, start:stop:step or list")
    p.set_defaults(fn=cmd_conjugate)

    p = sub.add_parser("upper", help="Chernoff envelope and integral upper bounds")
    add_function_args(p); add_io_args(p)
    p.add_argument("--x", default="1:8:0.5")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--bound-lambda", default=None,
                   help="lambda grid for the compound integral bound")
    p.set_defaults(fn=cmd_upper)

    p = sub.add_parser("lower-uni", help="lower envelope from a one-sided MGF floor")
    add_function_args(p); add_io_args(p)
    p.add_argument("--x", default="1:8:0.5")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--m-surrogate", type=float, default=None,
                   help="normalization bound; computed from the function when omitted")
    p.add_argument("--signed", action="store_true",
                   help="variable may be negative (costs ln 2 in the linear branch)")
    p.set_defaults(fn=cmd_lower_uni)

    p = sub.add_parser("lower-bi", help="bilateral closure / pinched envelope")
    add_function_args(p); add_io_args(p)
    p.add_argument("--x", default="2:8:0.5")
    p.add_argument("--delta", type=float, default=None,
                   help="pinch parameter; closure with phi1 = phi2 when omitted")
    p.set_defaults(fn=cmd_lower_bi)

    p = sub.add_parser("richter", help="two-sided sandwich for an exact MGF")
    add_function_args(p); add_io_args(p)
    p.add_argument("--x", default="2:8:0.5")
    p.set_defaults(fn=cmd_richter)

    p = sub.add_parser("moments", help="tail envelopes from moment envelopes")
    add_io_args(p)
    p.add_argument("--mode", choices=["growth", "pole"], default="growth")
    p.add_argument("--x", default="3:10:0.5")
    p.add_argument("--m", type=float, default=2.0, help="growth exponent (p^(1/m))")
    p.add_argument("--c-low", type=float, default=1.0)
    p.add_argument("--c-high", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0, help="pole constant")
    p.add_argument("--b", type=float, default=3.0, help="pole location")
    p.add_argument("--beta", type=float, default=1.0, help="pole order")
    p.add_argument("--m-surrogate", type=float, default=2.0)
    p.add_argument("--moments-csv", default=None, help="CSV p,lower[,upper]")
    p.set_defaults(fn=cmd_moments)

    p = sub.add_parser("tauber", help="two-sided limit diagnostic")
    add_function_args(p); add_io_args(p)
    p.add_argument("--dist", default="gaussian")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--reference", default="quadratic",
                   help="'quadratic' for the subgaussian reference, else the --family")
    p.add_argument("--mc", action="store_true")
    p.add_argument("--mc-samples", type=int, default=1_000_000)
    p.set_defaults(fn=cmd_tauber)

    p = sub.add_parser("validate", help="oracle sandwich suite")
    add_io_args(p)
    p.add_argument("--dist", default="gaussian",
                   help="distribution name or 'all'")
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.set_defaults(fn=cmd_validate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except TailboundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
