"""Auxiliary integrals and the compound upper estimate.

Given a nonnegative exponent ``zeta`` on [0, inf), this module computes

    K(eps) = int_0^inf exp(-eps * zeta(x)) dx
    R(eps) = int_0^inf exp(zeta((1-eps) x) - zeta(x)) dx
    M(eps) = min(K(eps), R(eps))

and the resulting upper bounds on I(lam) = int_0^inf exp(lam*x - zeta(x)) dx:
M(eps) * exp(zeta*(lam/(1-eps))) and its sharper K-variant with the (1-eps)
factor in the exponent.  Divergence is detected by a growth pre-test before
any quadrature is attempted, and carries diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DivergentIntegral,
    InputError,
    NegativeInputError,
    NotConvergedError,
    UnboundedObjectiveError,
)
from .functions import PhiFunction, conjugate_value
from .oracles import log_integral_exp, quadrature

_PROBES = (1e5, 1e6, 1e8, 1e10)


def _require_halfline(zeta: PhiFunction) -> None:
    if zeta.domain.lo > 0.0:
        raise InputError("integrand exponent must be defined from x = 0")
    if zeta.domain.bounded:
        raise InputError(
            "integral over [0, inf) needs an exponent with unbounded domain; "
            "use finite_measure_upper_bound for bounded ranges"
        )


def _pretest_decay(g, label: str, tols: Tolerances) -> None:
    """Declare divergence when g(x) fails to outgrow ln(x) at the probes."""
    ratios = []
    for x in _PROBES:
        try:
            v = g(x)
        except OverflowError:
            return  # super-fast growth: certainly integrable
        if not math.isfinite(v):
            return
        ratios.append(v / math.log(x))
    if max(ratios) <= tols.divergence_log_margin:
        raise DivergentIntegral(
            f"{label}: exponent grows no faster than ln(x) at the probe points",
            diagnostic={"probes": list(_PROBES), "ratios": ratios},
        )


def k_integral(zeta: PhiFunction, eps: float, tols: Tolerances = DEFAULT,
               details: Optional[dict] = None) -> float:
    """K(eps) = int_0^inf exp(-eps*zeta(x)) dx, or DivergentIntegral."""
    if not (0.0 < eps <= 1.0):
        raise InputError(f"eps must be in (0, 1], got {eps}")
    _require_halfline(zeta)

    def g(x: float) -> float:
        v = zeta.value(x)
        if v < 0:
            raise NegativeInputError(f"zeta({x}) = {v} < 0")
        return eps * v

    _pretest_decay(g, f"K({eps})", tols)

    def integrand(x: float) -> float:
        t = g(x)
        return math.exp(-t) if t < 745.0 else 0.0

    try:
        val, _ = quadrature(integrand, 0.0, math.inf, tols=tols, details=details)
    except NotConvergedError as exc:
        raise DivergentIntegral(
            f"K({eps}): tail contribution still above threshold at the window cap",
            diagnostic=exc.diagnostic,
        ) from exc
    return val


def r_integral(zeta: PhiFunction, eps: float, tols: Tolerances = DEFAULT,
               details: Optional[dict] = None) -> float:
    """R(eps) = int_0^inf exp(zeta((1-eps)x) - zeta(x)) dx, or DivergentIntegral."""
    if not (0.0 < eps < 1.0):
        raise InputError(f"eps must be in (0, 1), got {eps}")
    _require_halfline(zeta)

    def g(x: float) -> float:
        a = zeta.value((1.0 - eps) * x)
        b = zeta.value(x)
        if a < 0 or b < 0:
            raise NegativeInputError("zeta must be nonnegative")
        return b - a

    _pretest_decay(g, f"R({eps})", tols)

    def integrand(x: float) -> float:
        t = g(x)
        return math.exp(-t) if t < 745.0 else 0.0

    try:
        val, _ = quadrature(integrand, 0.0, math.inf, tols=tols, details=details)
    except NotConvergedError as exc:
        raise DivergentIntegral(
            f"R({eps}): tail contribution still above threshold at the window cap",
            diagnostic=exc.diagnostic,
        ) from exc
    return val


@dataclass(frozen=True)
class EpsilonReport:
    """K, R and their minimum at one eps; None marks a divergent entry.

    ``diagnostics`` carries, per entry, either the divergence reason or the
    quadrature truncation point and absolute error estimate.
    """

    eps: float
    k: Optional[float]
    r: Optional[float]
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> Optional[float]:
        finite = [v for v in (self.k, self.r) if v is not None]
        return min(finite) if finite else None


def epsilon_report(zeta: PhiFunction, eps: float, tols: Tolerances = DEFAULT) -> EpsilonReport:
    diag = {}
    try:
        kd: dict = {}
        k = k_integral(zeta, eps, tols, details=kd)
        diag["k"] = kd
    except DivergentIntegral as exc:
        k, diag["k"] = None, str(exc)
    try:
        rd: dict = {}
        r = r_integral(zeta, eps, tols, details=rd)
        diag["r"] = rd
    except DivergentIntegral as exc:
        r, diag["r"] = None, str(exc)
    return EpsilonReport(eps=eps, k=k, r=r, diagnostics=diag)


def log_i_integral(zeta: PhiFunction, lam: float, tols: Tolerances = DEFAULT) -> float:
    """ln of I(lam) = int_0^inf exp(lam*x - zeta(x)) dx, by peak-shifted quadrature.

    Stays in log space so exponents in the thousands are handled; divergence
    is detected by the growth pre-test.
    """
    _require_halfline(zeta)

    def g(x: float) -> float:
        return zeta.value(x) - lam * x

    _pretest_decay(g, f"I({lam})", tols)

    def log_f(xs: np.ndarray) -> np.ndarray:
        return np.array([lam * float(x) - zeta.value(float(x)) for x in xs])

    # coarse peak hint
    probe = np.geomspace(1e-3, 1e6, 200)
    pv = log_f(probe)
    peak = float(probe[int(np.argmax(pv))])
    return log_integral_exp(log_f, 0.0, math.inf, peak=peak)


def i_integral(zeta: PhiFunction, lam: float, tols: Tolerances = DEFAULT) -> float:
    """Direct quadrature of I(lam); +inf when the value exceeds float range."""
    lv = log_i_integral(zeta, lam, tols)
    return math.exp(lv) if lv < 709.0 else math.inf


def log_compound_upper_bound(zeta: PhiFunction, lam: float, eps: float,
                             variant: str = "min",
                             tols: Tolerances = DEFAULT) -> float:
    """ln of the compound upper bound on I(lam).

    variant="min":   ln min(K, R) + zeta*(lam/(1-eps))
    variant="sharp": ln K + (1-eps) * zeta*(lam/(1-eps))
    variant="plain": ln K + zeta*(lam/(1-eps))

    Divergent K/R propagates; an unbounded conjugate yields +inf (the bound
    is vacuous there, matching a divergent I).
    """
    if not (0.0 < eps < 1.0):
        raise InputError(f"eps must be in (0, 1), got {eps}")
    rep = epsilon_report(zeta, eps, tols)
    try:
        star, _ = conjugate_value(zeta, lam / (1.0 - eps), tols)
    except UnboundedObjectiveError:
        return math.inf
    if variant == "min":
        if rep.m is None:
            raise DivergentIntegral(f"both K and R divergent at eps={eps}",
                                    diagnostic=rep.diagnostics)
        return math.log(rep.m) + star
    if variant == "sharp":
        if rep.k is None:
            raise DivergentIntegral(f"K divergent at eps={eps}",
                                    diagnostic=rep.diagnostics)
        return math.log(rep.k) + (1.0 - eps) * star
    if variant == "plain":
        if rep.k is None:
            raise DivergentIntegral(f"K divergent at eps={eps}",
                                    diagnostic=rep.diagnostics)
        return math.log(rep.k) + star
    raise InputError(f"unknown variant {variant!r}")


def compound_upper_bound(zeta: PhiFunction, lam: float, eps: float,
                         variant: str = "min",
                         tols: Tolerances = DEFAULT) -> float:
    """Linear-scale compound bound; +inf when it exceeds float range."""
    lb = log_compound_upper_bound(zeta, lam, eps, variant, tols)
    return math.exp(lb) if lb < 709.0 else math.inf


def optimized_upper_bound(zeta: PhiFunction, lam: float,
                          n_eps: int = 33,
                          tols: Tolerances = DEFAULT) -> tuple[float, float]:
    """min over eps of the compound bound; geometric scan plus local refinement.

    Unimodality in eps is not assumed: the scan is exhaustive and golden
    refinement runs only between the best point's neighbours.  Returns
    (bound, eps_at_minimum).
    """
    eps_grid = np.geomspace(0.01, 0.99, n_eps)

    def logbound(e: float) -> float:
        try:
            return log_compound_upper_bound(zeta, lam, float(e), "min", tols)
        except DivergentIntegral:
            return math.inf

    vals = np.array([logbound(e) for e in eps_grid])
    i = int(np.argmin(vals))
    if not math.isfinite(vals[i]):
        raise DivergentIntegral("compound bound divergent for every eps scanned")
    a = eps_grid[max(i - 1, 0)]
    b = eps_grid[min(i + 1, eps_grid.size - 1)]
    # golden-section minimize on [a, b]
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - golden * (b - a)
    d = a + golden * (b - a)
    fc, fd = logbound(c), logbound(d)
    for _ in range(60):
        if (b - a) < 1e-4:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - golden * (b - a)
            fc = logbound(c)
        else:
            a, c, fc = c, d, fd
            d = a + golden * (b - a)
            fd = logbound(d)
    cands = [(vals[i], eps_grid[i]), (fc, c), (fd, d)]
    best = min(cands)
    value = math.exp(best[0]) if best[0] < 709.0 else math.inf
    return value, float(best[1])


def finite_measure_upper_bound(zeta: PhiFunction, lam: float,
                               tols: Tolerances = DEFAULT) -> float:
    """Bounded-range shortcut: measure(X) * exp(zeta*(lam)) for X = [lo, hi)."""
    if not zeta.domain.bounded:
        raise InputError("finite-measure bound needs a bounded domain")
    measure = zeta.domain.hi - zeta.domain.lo
    star, _ = conjugate_value(zeta, lam, tols)
    return measure * math.exp(star)


# --------------------------------------------------------------------------
# Cramer condition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CramerCertificate:
    """Equivalence-based certificate of an exponential tail bound.

    ``certified`` asserts a linear-rate witness mu > 0 with G(x) >= mu*x for
    large x (estimated from the slope of G at the probe ladder).  ``k_table``
    reports finiteness of the damped-integral K(eps) across the tested eps
    grid; a certified exponent always has an all-finite table, the converse
    need not hold.
    """

    certified: bool
    mu: Optional[float]
    k_table: dict
    slope_fit: dict


def cramer_check(g: PhiFunction,
                 eps_grid=(1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5),
                 tols: Tolerances = DEFAULT) -> CramerCertificate:
    """Certify (or refuse to certify) an exponential tail for exponent g.

    Never raises on a negative outcome; the certificate is the result.
    """
    probe = np.geomspace(1.0, 1e8, 33)
    ratios = np.array([g.value(float(x)) / float(x) for x in probe])
    # trend of G(x)/x on the top decades decides the liminf
    top = probe >= 1e4
    with np.errstate(divide="ignore"):
        logr = np.log(np.maximum(ratios[top], 1e-300))
    slope = float(np.polyfit(np.log(probe[top]), logr, 1)[0])
    mu_hat = float(ratios.min())
    certified = bool(slope > -0.01 and mu_hat > 0.0)

    k_table = {}
    for eps in eps_grid:
        try:
            k_table[float(eps)] = k_integral(g, float(eps), tols)
        except DivergentIntegral:
            k_table[float(eps)] = None
    return CramerCertificate(
        certified=certified,
        mu=mu_hat if certified else None,
        k_table=k_table,
        slope_fit={"log_slope": slope, "min_ratio": mu_hat},
    )
