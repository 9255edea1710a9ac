"""Lower tail envelopes from a one-sided (lower) MGF-exponent envelope.

Given phi with E exp(lam*X) >= exp(phi(lam)) on [lo, b), the chain is:

1. the tail transform satisfies int_0^inf e^{lam x} T(x) dx >= (e^phi - 1)/lam,
   whose log is :func:`tail_transform_exponent`;
2. a dilation certificate: phi's tail-transform exponent dominates a dilated
   copy phi(c1*lam) on a verification range (:func:`certify_dilation_dominance`);
3. the compound integral estimate turns step 1 into a lower bound on the
   conjugate of the exponential tail function G, with a computable
   normalization surrogate M;
4. the normalization is absorbed into a further dilation c2 <= c1 above a
   threshold lam1, and biconjugation (Fenchel-Moreau, G convex assumed)
   yields G(x) <= max(mu1 * x, sup_{mu >= mu1} [mu x - phi(c2 (1-eps) mu)]),
   i.e. a certified lower envelope exp(-that) for x >= 1.

The max with the linear branch mu1*x and the restriction of the supremum to
mu >= mu1 = lam1/(1-eps) keep the conclusion honest on the region where the
premises were actually verified; for quadratic-type inputs the linear branch
never binds and the envelope reduces to exp(-phi*(a x)) with a = 1/(c2(1-eps)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .envelope import LOWER, TailEnvelope
from .errors import (
    AbsorptionFailedError,
    InputError,
    NotCertifiedError,
    OutOfDomainError,
    UnboundedObjectiveError,
)
from .functions import PhiFunction, conjugate_value
from .integrals import k_integral


def tail_transform_exponent(phi: PhiFunction, lam: float) -> float:
    """ln[(e^{phi(lam)} - 1)/lam], the certified floor on the tail transform.

    Computed as phi - ln(lam) + ln(1 - e^{-phi}) so large phi never
    overflows.  Returns -inf when phi(lam) == 0 (empty floor).
    """
    lam = float(lam)
    p = phi.value(lam)
    if p == 0.0:
        return -math.inf
    return p - math.log(lam) + math.log(-math.expm1(-p))


@dataclass(frozen=True)
class DilationCertificate:
    """Largest c1 with tail_transform_exponent(lam) >= phi(c1*lam) on a grid."""

    c1: float
    lam_range: tuple[float, float]
    margin: float
    certified: bool
    n_grid: int = 0


def _default_lam_range(phi: PhiFunction, threshold: float = 1.0) -> tuple[float, float]:
    """[smallest lam with phi >= threshold, near the domain top]."""
    lo, hi = phi.domain.lo, phi.domain.top()
    if not math.isfinite(hi):
        hi = max(100.0, 64.0 * max(lo, 1.0))
    probe = np.linspace(max(lo, 1e-12), hi, 4097)
    vals = np.array([phi.value(float(t)) for t in probe])
    idx = np.where(vals >= threshold)[0]
    if idx.size == 0:
        raise NotCertifiedError(
            f"{phi.label}: never reaches {threshold} on [{lo}, {hi}]"
        )
    a, b = (probe[idx[0] - 1], probe[idx[0]]) if idx[0] > 0 else (probe[0], probe[0])
    for _ in range(60):
        if b - a <= 1e-12 * max(1.0, b):
            break
        m = 0.5 * (a + b)
        if phi.value(m) >= threshold:
            b = m
        else:
            a = m
    return float(b), float(hi)


def certify_dilation_dominance(
    phi: PhiFunction,
    lam_range: Optional[tuple[float, float]] = None,
    c_grid: Optional[Sequence[float]] = None,
    n_lambda: int = 200,
    tols: Tolerances = DEFAULT,
) -> DilationCertificate:
    """Find the largest dilation c1 dominated by the tail-transform exponent.

    The default verification range starts at the first lam with
    phi(lam) >= 1 and the default c grid is 200 linear points in (0, 1];
    the winning grid entry is sharpened by bisection against the next
    infeasible one.  A negative outcome is a valid result, not an error.
    """
    if lam_range is None:
        lam_range = _default_lam_range(phi)
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if not (phi.domain.lo <= lo < hi):
        raise InputError(f"bad verification range [{lo}, {hi}]")
    hi = min(hi, phi.domain.top())
    lams = np.geomspace(lo, hi, n_lambda) if lo > 0 else np.linspace(lo, hi, n_lambda)
    aux = np.array([tail_transform_exponent(phi, float(t)) for t in lams])
    tol = tols.abs_tol

    def val_at(c: float, t: float) -> float:
        # c*t is mathematically inside the domain; clamp float rounding
        ct = min(max(c * t, phi.domain.lo), phi.domain.top())
        return phi.value(ct)

    # per-lambda critical dilation: largest c with phi(c*lam) <= aux(lam);
    # phi is nondecreasing on [0, b) for envelope exponents, so bisection
    # applies, and c1 is the worst case over the verification grid
    c1 = 1.0
    for t, a in zip(lams, aux):
        t = float(t)
        slack = tol * max(1.0, abs(a))
        c_hi = min(1.0, phi.domain.top() / t)
        c_lo = phi.domain.lo / t if phi.domain.lo > 0 else 1e-12
        if c_lo >= c_hi:
            return DilationCertificate(c1=0.0, lam_range=(lo, hi), margin=-math.inf,
                                       certified=False, n_grid=lams.size)
        if val_at(c_lo, t) > a + slack:
            return DilationCertificate(c1=0.0, lam_range=(lo, hi), margin=-math.inf,
                                       certified=False, n_grid=lams.size)
        if val_at(c_hi, t) <= a + slack:
            crit = c_hi
        else:
            fa, fb = c_lo, c_hi
            for _ in range(45):
                m = 0.5 * (fa + fb)
                if val_at(m, t) <= a + slack:
                    fa = m
                else:
                    fb = m
            crit = fa
        c1 = min(c1, crit)
        if c1 <= 1e-10:
            return DilationCertificate(c1=0.0, lam_range=(lo, hi), margin=-math.inf,
                                       certified=False, n_grid=lams.size)

    if c_grid is not None:
        # explicit grid requested: snap down to its largest feasible entry
        cs = np.asarray(sorted(c_grid), dtype=float)
        at_most = cs[cs <= c1 + tol]
        if at_most.size == 0:
            return DilationCertificate(c1=0.0, lam_range=(lo, hi), margin=-math.inf,
                                       certified=False, n_grid=lams.size)
        c1 = min(c1, float(at_most.max()))

    margin = float(min(aux[i] - val_at(c1, float(lams[i])) for i in range(lams.size)))
    if margin < -10 * tol:
        return DilationCertificate(c1=0.0, lam_range=(lo, hi), margin=margin,
                                   certified=False, n_grid=lams.size)
    return DilationCertificate(c1=c1, lam_range=(lo, hi), margin=margin,
                               certified=True, n_grid=lams.size)


# --------------------------------------------------------------------------
# Normalization surrogate and absorption
# --------------------------------------------------------------------------


def m_surrogate_from_upper(nu: PhiFunction, eps: float,
                           tols: Tolerances = DEFAULT) -> float:
    """K[nu*](eps): a computable stand-in for the unknown normalization.

    Valid because the exponential tail function dominates the conjugate of
    any upper MGF-exponent envelope nu, so damping nu* damps no less mass.
    Only the K route is monotone in the exponent; R is not used here.

    The conjugate is replaced by its tangent minorant on a fine lambda grid
    (max of the sampled supporting lines).  That only lowers the exponent,
    so the returned value can only be larger than K[nu*] - still a valid,
    marginally looser surrogate - while the integrand becomes a cheap
    vectorized max.  Clipping the minorant at zero is licensed by the
    exponential tail function being nonnegative, so the damped mass never
    exceeds the clipped integral either.
    """
    lo = max(nu.domain.lo, 0.0)
    hi = nu.domain.top()
    if not math.isfinite(hi):
        # grow until the conjugate along the curve comfortably kills the
        # integrand: lam*x(lam) - nu(lam) >= ~60/eps
        hi = max(10.0, 4.0 * max(lo, 1.0))
        target = 80.0 / eps
        while hi < tols.lambda_cap:
            v = hi * _safe_slope_x(nu, hi) - nu.value(hi)
            if v > target:
                break
            hi *= 2.0
    lam_lo = max(lo, 1e-9)
    pieces = [
        np.geomspace(lam_lo, hi, 700),
        np.linspace(lam_lo, hi, 200),
        # approach a finite top dyadically: the large-x shape of the
        # conjugate is carried by slopes just under the domain top
        hi - np.geomspace((hi - lam_lo) * 1e-12, hi - lam_lo, 200)
        if nu.domain.bounded else np.empty(0),
        np.asarray([lo]) if lo > 0 else np.empty(0),
    ]
    lams = np.unique(np.concatenate(pieces))
    lams = lams[(lams >= nu.domain.lo) & (lams < nu.domain.hi)]
    vals = np.array([nu.value(float(t)) for t in lams])

    def minorant(x: float) -> float:
        return max(float(np.max(lams * x - vals)), 0.0)

    zeta = PhiFunction.from_callable(minorant, 0.0, math.inf, convex=True,
                                     label=f"tangent-minorant-conjugate[{nu.label}]")
    return k_integral(zeta, eps, tols)


def _safe_slope_x(nu: PhiFunction, lam: float) -> float:
    if nu.deriv is not None:
        try:
            return float(nu.deriv(lam))
        except Exception:
            pass
    return nu.derivative(lam)


def _lam1_candidates(phi: PhiFunction, w_lo: float) -> list[float]:
    b = phi.domain.hi
    if math.isfinite(b):
        # dyadic approach to the top of a bounded domain
        return [w_lo + (b - w_lo) * (1.0 - 2.0 ** -k) for k in range(1, 15)]
    cands = [2.0 * 2.0 ** k for k in range(14)]
    return [c for c in cands if c >= w_lo] or [w_lo]


def absorb_normalization(phi: PhiFunction, c1: float, m_bound: float,
                         w_lo: float,
                         tols: Tolerances = DEFAULT) -> tuple[float, float]:
    """Find (lam1, c2 <= c1) with phi(c1*lam) - ln(M) >= phi(c2*lam) for lam >= lam1.

    lam1 runs over a geometric ladder (dyadic approach to the top for a
    bounded domain); at the first lam1 admitting a feasible c2 the largest
    one wins (per-lambda bisection on the verification grid).  Larger c2
    means a smaller final dilation, hence a tighter envelope.
    """
    lnM = math.log(m_bound)
    tol = tols.abs_tol
    if lnM <= 0.0:
        return max(w_lo, phi.domain.lo), c1

    b = phi.domain.hi
    for lam1 in _lam1_candidates(phi, w_lo):
        ver_hi = min(phi.domain.top(), max(2.0 ** 20, 4.0 * lam1)) if not math.isfinite(b) \
            else phi.domain.top()
        if lam1 >= ver_hi:
            continue
        lams = np.geomspace(lam1, ver_hi, 128)

        def val_at(c: float, t: float) -> float:
            ct = min(max(c * t, phi.domain.lo), phi.domain.top())
            return phi.value(ct)

        c2 = c1
        ok = True
        for t in lams:
            t = float(t)
            if c1 * t >= phi.domain.hi:
                ok = False
                break
            budget = val_at(c1, t) - lnM
            c_lo = max(phi.domain.lo / t, 1e-12)
            if val_at(c_lo, t) > budget + tol:
                ok = False
                break
            if val_at(min(c2, c1), t) <= budget + tol:
                crit = c2  # current candidate already fine at this lam
            else:
                fa, fb = c_lo, min(c2, c1)
                for _ in range(45):
                    m = 0.5 * (fa + fb)
                    if val_at(m, t) <= budget + tol:
                        fa = m
                    else:
                        fb = m
                crit = fa
            c2 = min(c2, crit)
            if c2 <= 1e-10:
                ok = False
                break
        if not ok:
            continue
        # growth sanity at the top of an unbounded verification window: the
        # slack should not be shrinking toward the cap
        if not math.isfinite(b):
            top = float(lams[-1])
            slack_top = val_at(c1, top) - lnM - val_at(c2, top)
            slack_mid = val_at(c1, top * 0.8) - lnM - val_at(c2, top * 0.8)
            if slack_top < slack_mid - tol:
                continue
        return float(lam1), float(c2)
    raise AbsorptionFailedError(
        f"no (lam1, c2) absorbs ln(M)={lnM:.4g} under c1={c1:.4g}"
    )


# --------------------------------------------------------------------------
# The envelope
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerEnvelopeCertificate:
    """Constants realized by the unilateral chain."""

    eps: float
    m_bound: float
    c1: float
    c2: float
    dilation: float           # a = 1/(c2*(1-eps)) >= 1
    lam1: float
    mu1: float                # lam1/(1-eps): linear-branch slope
    x_valid_from: float
    annotations: tuple = ()
    diagnostics: dict = field(default_factory=dict)


def _exponent_factory(phi: PhiFunction, cert: LowerEnvelopeCertificate,
                      nonneg_offset: float, tols: Tolerances):
    """Build h(x) = max(mu1*x - offset, sup_{mu>=mu1} [mu*x - phi(c_tilde*mu)])."""
    c_tilde = cert.c2 * (1.0 - cert.eps)
    mu_lo = max(cert.mu1, phi.domain.lo / c_tilde if c_tilde > 0 else cert.mu1)
    mu_hi = phi.domain.hi / (1.0 - cert.eps) if math.isfinite(phi.domain.hi) else math.inf

    dilated = PhiFunction.from_callable(
        lambda mu: phi.value(c_tilde * mu),
        mu_lo, mu_hi,
        deriv=(lambda mu: c_tilde * phi.deriv(c_tilde * mu)) if phi.deriv else None,
        convex=phi.convex,
        label=f"dilated[{phi.label}]x{c_tilde:.4g}",
    )

    def exponent(x: float) -> float:
        linear = cert.mu1 * x - nonneg_offset
        try:
            star, _ = conjugate_value(dilated, x, tols)
        except UnboundedObjectiveError:
            # the minorant's conjugate diverges: the chain certifies nothing
            # at this x and the envelope clamps to the trivial bound
            return math.inf
        return max(linear, star)

    return exponent


def unilateral_lower_envelope(
    phi: PhiFunction,
    eps: float,
    m_surrogate: float,
    x_grid: Sequence[float],
    dilation_cert: Optional[DilationCertificate] = None,
    lam_range: Optional[tuple[float, float]] = None,
    nonnegative: bool = True,
    cramer: Optional[bool] = None,
    tols: Tolerances = DEFAULT,
) -> tuple[TailEnvelope, LowerEnvelopeCertificate]:
    """Run the full unilateral chain and emit the lower envelope for x >= 1.

    ``m_surrogate`` is the finite normalization bound (from
    :func:`m_surrogate_from_upper` when an upper envelope is available, a
    caller-supplied constant otherwise).  ``nonnegative`` states whether the
    underlying variable is almost surely nonnegative; when it is not, the
    linear branch pays an additive ln(2) (the tail at 0 may be as large
    as 1/2, not 1).  ``cramer=False`` annotates the result as trivially
    satisfied for a non-Cramer variable.
    """
    if not (0.0 < eps < 1.0):
        raise InputError(f"eps must be in (0, 1), got {eps}")
    if not (m_surrogate > 0 and math.isfinite(m_surrogate)):
        raise InputError("m_surrogate must be finite and positive")

    cert_w = dilation_cert or certify_dilation_dominance(phi, lam_range, tols=tols)
    if not cert_w.certified:
        raise NotCertifiedError(
            f"{phi.label}: dilation dominance not certified on {cert_w.lam_range}"
        )

    annotations = []
    if cramer is False:
        annotations.append("NoCramer")

    lam1, c2 = absorb_normalization(phi, cert_w.c1, m_surrogate,
                                    cert_w.lam_range[0], tols)
    a = 1.0 / (c2 * (1.0 - eps))
    mu1 = lam1 / (1.0 - eps)

    # for a bounded domain the biconjugation step needs the conjugate lower
    # bound to blow up toward the top (phi(lam) -> inf as lam -> b); when phi
    # stays bounded there the chain is vacuous and the envelope clamps
    degenerate = False
    if phi.domain.bounded:
        span = phi.domain.hi - phi.domain.lo
        near = phi.value(phi.domain.lo + span * (1.0 - 1e-6))
        nearer = phi.value(phi.domain.lo + span * (1.0 - 1e-12))
        if nearer < near + 5.0:
            degenerate = True
            annotations.append("DegenerateBoundedTop")

    cert = LowerEnvelopeCertificate(
        eps=eps, m_bound=m_surrogate, c1=cert_w.c1, c2=c2, dilation=a,
        lam1=lam1, mu1=mu1, x_valid_from=1.0,
        annotations=tuple(annotations),
        diagnostics={"w_margin": cert_w.margin, "lam_range": cert_w.lam_range},
    )

    xs = np.asarray(x_grid, dtype=float)
    xs = xs[xs >= cert.x_valid_from]
    if xs.size == 0:
        raise InputError("x_grid has no points at or above x_valid_from = 1")

    offset = 0.0 if nonnegative else math.log(2.0)
    if degenerate:
        log_vals = np.full(xs.size, -math.inf)
    else:
        exponent = _exponent_factory(phi, cert, offset, tols)
        log_vals = np.array([-exponent(float(x)) for x in xs])
        log_vals = np.minimum(log_vals, 0.0)

    env = TailEnvelope(
        x=xs, log_values=log_vals, side=LOWER,
        provenance="unilateral-mgf-floor-chain",
        valid_from=cert.x_valid_from,
        meta={"certificate": cert},
    )
    return env, cert
