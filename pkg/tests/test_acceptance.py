"""Acceptance gate: one test per shipping criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  Tolerances here are the contract; they are not to be
loosened to make a failing criterion pass.
"""

import json
import math

import numpy as np
import pytest

from tailbounds import cli, oracles
from tailbounds.errors import DivergentIntegral
from tailbounds.functions import PhiFunction, biconjugate, conjugate
from tailbounds.integrals import (
    i_integral,
    k_integral,
    log_compound_upper_bound,
    log_i_integral,
)
from tailbounds.lower_bilateral import (
    closure_lower_envelope,
    exact_mgf_sandwich,
    make_geometry,
    tangent_bracket_lower,
    verify_regularity,
)
from tailbounds.lower_unilateral import (
    m_surrogate_from_upper,
    unilateral_lower_envelope,
)
from tailbounds.moments import growth_tail_recovery, moment_power_growth
from tailbounds.tauberian import tauberian_check


def report(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num}: {detail}"


def q_tail(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def test_01_conjugate_golden():
    xs = np.linspace(1.0, 20.0, 39)
    err_quad = np.abs(conjugate(PhiFunction.quadratic(), xs).values
                      - xs ** 2 / 2.0).max()
    err_quart = np.abs(conjugate(PhiFunction.power_log(4.0), xs).values
                       - 0.75 * xs ** (4.0 / 3.0)).max()
    lam = np.arange(1.0, 25.0, 1e-4)
    fv = lam ** 2 * np.log(math.e + lam) / 2.0
    brute = np.array([np.max(lam * x - fv) for x in xs])
    err_pl = np.abs(conjugate(PhiFunction.power_log(2.0, 1.0), xs).values
                    - brute).max()
    worst = max(err_quad, err_quart, err_pl)
    report(1, worst <= 1e-6,
           f"conjugate vs analytic/brute-force, max abs err {worst:.2e} <= 1e-6")


def test_02_fenchel_moreau():
    lams = np.linspace(1.0, 10.0, 19)
    worst = 0.0
    for f in (PhiFunction.quadratic(), PhiFunction.power_log(4.0),
              PhiFunction.power_log(2.0, 1.0)):
        bc = biconjugate(f, lams)
        orig = np.array([f.value(t) for t in lams])
        worst = max(worst, float(np.abs(bc.values - orig).max()))
    ls = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    vs = np.array([0.0, 2.0, 5.5, 8.0, 12.0])
    dented = PhiFunction.from_grid(ls, vs)
    below = bool(np.all(biconjugate(dented, ls).values <= vs + 1e-9))
    report(2, worst <= 1e-6 and below,
           f"biconjugate err {worst:.2e} <= 1e-6 on convex families; "
           f"dented grid stays below original: {below}")


def test_03_compound_dominance():
    zetas = {
        "x": PhiFunction.linear(1.0, lo=0.0),
        "x^2/2": PhiFunction.from_callable(lambda x: 0.5 * x * x, 0.0, math.inf,
                                           deriv=lambda x: x, convex=True,
                                           label="x^2/2", slope_lim=math.inf),
        "x^1.5": PhiFunction.from_callable(lambda x: x ** 1.5, 0.0, math.inf,
                                           deriv=lambda x: 1.5 * x ** 0.5, convex=True,
                                           label="x^1.5", slope_lim=math.inf),
    }
    worst_slack = math.inf
    checked = 0
    for zeta in zetas.values():
        for lam in (1.0, 3.0, 10.0, 30.0):
            for eps in (0.05, 0.2, 0.5):
                log_bound = log_compound_upper_bound(zeta, lam, eps)
                if math.isinf(log_bound):
                    with pytest.raises(DivergentIntegral):
                        log_i_integral(zeta, lam)
                    continue
                slack = log_bound - log_i_integral(zeta, lam)
                worst_slack = min(worst_slack, slack)
                checked += 1
    spot = i_integral(zetas["x^2/2"], 3.0)
    closed = math.exp(4.5) * math.sqrt(2 * math.pi) * (1.0 - q_tail(3.0))
    spot_rel = abs(spot - closed) / closed
    ok = worst_slack >= math.log1p(-1e-9) and spot_rel <= 1e-4
    report(3, ok,
           f"bound >= integral on {checked} finite cells "
           f"(worst log slack {worst_slack:.2e}); I(3) rel err {spot_rel:.2e} <= 1e-4")


def test_04_damped_integral_finiteness():
    eps_grid = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5)
    expect_all_finite = ["gaussian", "exponential", "weibull2", "weibull4"]
    ok = True
    notes = []
    for name in expect_all_finite:
        g = oracles.suite()[name].exponential_tail_fn()
        for eps in eps_grid:
            try:
                k_integral(g, eps)
            except DivergentIntegral:
                ok = False
                notes.append(f"{name}@{eps} diverged")
    # power tail: divergent exactly up to the critical damping 1/3
    g = oracles.pareto(3.0).exponential_tail_fn()
    for eps in eps_grid:
        try:
            k_integral(g, eps)
            finite = True
        except DivergentIntegral:
            finite = False
        if finite != (eps > 1.0 / 3.0):
            ok = False
            notes.append(f"pareto@{eps}: finite={finite}")
    # sub-unit stretching: never divergent despite the failed linear witness
    g = oracles.weibull(0.5).exponential_tail_fn()
    for eps in eps_grid:
        try:
            k_integral(g, eps)
        except DivergentIntegral:
            ok = False
            notes.append(f"weibull(0.5)@{eps} diverged")
    report(4, ok, "finiteness pattern exact across the eps grid"
           + (f"; issues: {notes}" if notes else ""))


def test_05_sandwich_suite():
    ok = True
    notes = []
    xs = np.linspace(1.0, 8.0, 15)
    xr = np.linspace(2.0, 8.0, 13)
    for name in ("gaussian", "exponential", "weibull2", "weibull4"):
        dist = oracles.suite()[name]
        phi = dist.mgf_exponent
        tails = dist.exact_tail(xs)
        res = conjugate(phi, xs)
        chern = np.exp(-np.minimum(res.values, 700.0))
        if not np.all(chern - tails >= -1e-12):
            ok = False
            notes.append(f"{name}: conjugate upper below tail")

        m_bound = m_surrogate_from_upper(phi, 0.2)
        env_u, _ = unilateral_lower_envelope(phi, 0.2, m_bound, xs,
                                             nonnegative=dist.nonnegative)
        t_u = dist.exact_tail(env_u.x)
        if not np.all(t_u - env_u.values >= -1e-12):
            ok = False
            notes.append(f"{name}: one-sided chain above tail")

        env_b, _ = closure_lower_envelope(phi, phi, xs)
        t_b = dist.exact_tail(env_b.x)
        if not np.all(t_b - env_b.values >= -1e-12):
            ok = False
            notes.append(f"{name}: closure above tail")

        low_r, up_r, _ = exact_mgf_sandwich(phi, xr)
        t_r = dist.exact_tail(xr)
        if not (np.all(t_r - low_r.values >= -1e-12)
                and np.all(up_r.values - t_r >= -1e-12)):
            ok = False
            notes.append(f"{name}: exact-MGF sandwich broken")
    report(5, ok, "upper >= tail >= {chain, closure, sandwich} lower for "
           "gaussian/exponential/weibull(2)/weibull(4), slack >= -1e-12"
           + (f"; issues: {notes}" if notes else ""))


def test_06_tangent_bracket_spots():
    quad0 = PhiFunction.quadratic(lo=0.0)
    geo = make_geometry(quad0, 10.0, 0.3)
    val = tangent_bracket_lower(quad0, geo)
    expect = (1.0 - (20.0 / 3.0) * math.exp(-4.5)) * math.exp(-80.0)
    rel = abs(val - expect) / expect
    geo2 = make_geometry(quad0, 4.0, 0.25)
    clamped = tangent_bracket_lower(quad0, geo2)
    ok = rel <= 1e-6 and clamped == 0.0
    report(6, ok, f"bracket at (10, 0.3): rel err {rel:.2e} <= 1e-6; "
           f"(4, 0.25) clamps to {clamped}")


def test_07_exact_mgf_constant():
    quad0 = PhiFunction.quadratic(lo=0.0)
    xs = np.linspace(2.0, 8.0, 25)
    lower, _, c2 = exact_mgf_sandwich(quad0, xs)
    minimal = max((-math.log(q_tail(float(x))) - x * x / 2.0) / x for x in xs)
    tails = np.array([q_tail(float(x)) for x in xs])
    holds = bool(np.all(tails - lower.values >= -1e-12))
    ok = c2 >= minimal and holds
    report(7, ok, f"computed c2 {c2:.3f} >= independent minimum {minimal:.4f}; "
           f"shifted envelope holds on [2, 8]: {holds}")


def test_08_moment_recovery_and_cramer_flip():
    xs = np.geomspace(math.e, 10.0, 15)
    _, _, rep = growth_tail_recovery(2.0, moment_power_growth(2.0, 1.0, 1.0), xs)
    rel = abs(rep.recovered_m - 2.0) / 2.0
    flips = {}
    for m, lo, hi in ((0.5, 1.0, 3.0), (1.0, 0.8, 1.0), (2.0, 1.0, 1.0)):
        _, _, r = growth_tail_recovery(m, moment_power_growth(m, lo, hi), xs)
        flips[m] = r.cramer.certified
    ok = rel <= 0.05 and flips == {0.5: False, 1.0: True, 2.0: True}
    report(8, ok, f"recovered exponent {rep.recovered_m:.4f} within 5% of 2; "
           f"linear-rate certificate by exponent: {flips}")


def test_09_tauberian_reciprocity():
    qref = PhiFunction.quadratic(lo=0.0)
    r1 = tauberian_check(qref, oracles.gaussian())
    r2 = tauberian_check(qref, oracles.gaussian(2.0))
    mc = tauberian_check(qref, oracles.gaussian(), x_ladder=[2.0, 3.0, 4.0, 5.0],
                         monte_carlo=True, n_samples=10_000_000, seed=42)
    ok = (r1.consistency <= 0.02 and r2.consistency <= 0.02
          and abs(mc.k_tail - 1.0) <= 0.10)
    report(9, ok,
           f"products off by {r1.consistency:.4f} and {r2.consistency:.4f} "
           f"(<= 2%); seeded tail constant {mc.k_tail:.4f} within 10% at x=5 "
           f"with 1e7 draws")


def test_10_regularity():
    v_quad = verify_regularity(PhiFunction.quadratic(lo=0.0)).v_value
    v_quart = verify_regularity(PhiFunction.power_log(4.0)).v_value
    v_pl = verify_regularity(PhiFunction.power_log(2.0, 1.0)).v_value
    ok = abs(v_quad - 1.0) <= 1e-6 and v_quart > 0.0 and v_pl > 0.0
    report(10, ok, f"V[quadratic] = {v_quad:.9f} (within 1e-6 of 1); "
           f"V[quartic] = {v_quart:.3f} > 0; V[power-log] = {v_pl:.3f} > 0")


def test_11_determinism(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        code = cli.main(["validate", "--dist", "gaussian", "--seed", "42",
                         "--normalize", "--out", str(p)])
        assert code == 0
    identical = paths[0].read_bytes() == paths[1].read_bytes()
    status = json.loads(paths[0].read_text())["status"]
    ok = identical and status == "ok"
    report(11, ok, f"two seeded validation reports byte-identical: {identical}; "
           f"suite status: {status}")
