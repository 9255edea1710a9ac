"""Lower tail envelopes from two-sided MGF-exponent envelopes.

Given exp(phi1) <= E exp(lam*X) <= exp(phi2), the tangent-line construction
bounds the tail from below at the left saddle abscissa:

    S(lam, x) = lam*x - phi2*(x),       x0(lam) = argmax_x S(lam, x)
    x_minus = x0(lam(1-d1)) < x0 < x_plus = x0(lam(1+d2))

    T(x_minus) >= e^{-lam x_plus} [ e^{phi1(lam)}
                   - lam e^{S(lam,x_minus)} / S'_x(lam,x_minus)
                   - lam e^{S(lam,x_plus)} / |S'_x(lam,x_plus)| ]

clamped at zero when the bracket is nonpositive.  The closure optimizes the
geometry per evaluation point.  On top of it sit the regularity report
(curvature of S along the saddle path), the refined envelope under a
(1-delta^2) pinch of the exponent pair, and the two-sided sandwich for an
exactly known MGF.

All exponential arithmetic is in log space; a naive evaluation overflows
already at lam around 40.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .envelope import LOWER, UPPER, TailEnvelope
from .errors import (
    GeometryInvalidError,
    InputError,
    NonUniqueArgmaxError,
    NotCertifiedError,
    OutOfDomainError,
)
from .functions import PhiFunction, conjugate_value, saddle_point

_LOG_EPS = math.log(2.0) * -1074  # smallest log float


# --------------------------------------------------------------------------
# S and the saddle geometry
# --------------------------------------------------------------------------


def s_value(phi2: PhiFunction, lam: float, x: float,
            tols: Tolerances = DEFAULT) -> tuple[float, float]:
    """S(lam, x) = lam*x - phi2*(x) and its x-derivative lam - (phi2*)'(x).

    The derivative uses the conjugate's maximizer (exact for convex phi2).
    """
    star, arg = conjugate_value(phi2, float(x), tols)
    return float(lam) * float(x) - star, float(lam) - arg


def _x0(phi2: PhiFunction, t: float, tols: Tolerances) -> float:
    """Saddle abscissa x0(t); derivative fast path for convex phi2."""
    if phi2.convex and phi2.deriv is not None:
        return float(phi2.deriv(float(t)))
    return saddle_point(phi2, float(t), tols=tols)


def _x0_inverse(phi2: PhiFunction, z: float, tols: Tolerances) -> float:
    """The t with x0(t) = z; equals the conjugate maximizer at z."""
    if phi2.convex and phi2.deriv is not None:
        lo = max(phi2.domain.lo, 1e-12)
        hi = phi2.domain.top()
        dlo = float(phi2.deriv(lo))
        if dlo > z:
            raise OutOfDomainError(z, dlo, math.inf)
        if math.isfinite(hi):
            b = hi
        else:
            b = max(2.0 * lo, 1.0)
            for _ in range(200):
                if float(phi2.deriv(b)) > z:
                    break
                b *= 2.0
        a = lo
        for _ in range(100):
            m = 0.5 * (a + b)
            if float(phi2.deriv(m)) <= z:
                a = m
            else:
                b = m
            if (b - a) <= 1e-13 * max(1.0, b):
                break
        return 0.5 * (a + b)
    _, arg = conjugate_value(phi2, z, tols)
    return arg


def _phi2_star_at_saddle(phi2: PhiFunction, t: float, x: float,
                         tols: Tolerances) -> float:
    """phi2*(x0(t)) via the touching identity t*x0 - phi2(t) for convex phi2."""
    if phi2.convex and phi2.deriv is not None:
        return float(t) * float(x) - phi2.value(float(t))
    star, _ = conjugate_value(phi2, float(x), tols)
    return star


@dataclass(frozen=True)
class SaddleGeometry:
    """One (lam, x_minus, x0, x_plus) configuration with S data attached."""

    lam: float
    x0: float
    x_minus: float
    x_plus: float
    rule: str                  # "symmetric" | "asymmetric" | "explicit"
    delta1: float
    delta2: float
    s_minus: float
    s_plus: float
    s_x0: float
    ds_minus: float            # > 0 required
    ds_plus: float             # < 0 required

    def validate(self) -> None:
        if not (self.x_minus < self.x0 < self.x_plus):
            raise GeometryInvalidError(
                f"need x_minus < x0 < x_plus, got {self.x_minus}, {self.x0}, {self.x_plus}"
            )
        if not (self.ds_minus > 0.0 and self.ds_plus < 0.0):
            raise GeometryInvalidError(
                f"tangent slopes must straddle zero: {self.ds_minus}, {self.ds_plus}"
            )
        tol = 1e-9 * max(1.0, abs(self.s_x0))
        if self.s_x0 < max(self.s_minus, self.s_plus) - tol:
            raise GeometryInvalidError("S at the saddle below S at the side points")


def make_geometry(phi2: PhiFunction, lam: float, delta1: float,
                  delta2: Optional[float] = None,
                  x_pair: Optional[tuple[float, float]] = None,
                  tols: Tolerances = DEFAULT) -> SaddleGeometry:
    """Build the saddle geometry at lam from dilation offsets or explicit x's."""
    lam = float(lam)
    if x_pair is not None:
        xm, xp = map(float, x_pair)
        x0v = _x0(phi2, lam, tols)
        sm, dsm = s_value(phi2, lam, xm, tols)
        sp, dsp = s_value(phi2, lam, xp, tols)
        s0, _ = s_value(phi2, lam, x0v, tols)
        geo = SaddleGeometry(lam=lam, x0=x0v, x_minus=xm, x_plus=xp, rule="explicit",
                             delta1=math.nan, delta2=math.nan,
                             s_minus=sm, s_plus=sp, s_x0=s0,
                             ds_minus=dsm, ds_plus=dsp)
        geo.validate()
        return geo

    d1 = float(delta1)
    d2 = d1 if delta2 is None else float(delta2)
    rule = "symmetric" if d2 == d1 else "asymmetric"
    if not (0.0 < d1 < 1.0 and 0.0 < d2):
        raise InputError("dilation offsets must be positive, delta1 < 1")
    mu = lam * (1.0 - d1)
    nu = lam * (1.0 + d2)
    for t in (mu, lam, nu):
        if not phi2.domain.contains(t):
            raise OutOfDomainError(t, phi2.domain.lo, phi2.domain.hi)
    xm = _x0(phi2, mu, tols)
    xp = _x0(phi2, nu, tols)
    x0v = _x0(phi2, lam, tols)
    sm = lam * xm - _phi2_star_at_saddle(phi2, mu, xm, tols)
    sp = lam * xp - _phi2_star_at_saddle(phi2, nu, xp, tols)
    s0 = lam * x0v - _phi2_star_at_saddle(phi2, lam, x0v, tols)
    geo = SaddleGeometry(lam=lam, x0=x0v, x_minus=xm, x_plus=xp, rule=rule,
                         delta1=d1, delta2=d2,
                         s_minus=sm, s_plus=sp, s_x0=s0,
                         ds_minus=lam - mu, ds_plus=lam - nu)
    geo.validate()
    return geo


# --------------------------------------------------------------------------
# The tangent-line lower bound and its closure
# --------------------------------------------------------------------------


def tangent_bracket_log(phi1: PhiFunction, geometry: SaddleGeometry) -> float:
    """ln of the tangent-line lower bound on T(x_minus); -inf when clamped.

    Log-sum-exp arithmetic keeps exponents in the thousands exact.
    """
    geometry.validate()
    lam = geometry.lam
    t0 = phi1.value(lam)
    tm = math.log(lam) + geometry.s_minus - math.log(geometry.ds_minus)
    tp = math.log(lam) + geometry.s_plus - math.log(-geometry.ds_plus)
    m = max(t0, tm, tp)
    bracket = math.exp(t0 - m) - math.exp(tm - m) - math.exp(tp - m)
    if bracket <= 0.0:
        return -math.inf
    return -lam * geometry.x_plus + m + math.log(bracket)


def tangent_bracket_lower(phi1: PhiFunction, geometry: SaddleGeometry) -> float:
    """Linear-scale tangent-line lower bound at x_minus, clamped at 0."""
    lv = tangent_bracket_log(phi1, geometry)
    if lv == -math.inf:
        return 0.0
    return math.exp(lv) if lv > _LOG_EPS else 0.0


def default_delta_grid(n: int = 16, lo: float = 1e-3, hi: float = 0.5) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class ClosureDiagnostics:
    all_clamped: bool
    per_z: dict = field(default_factory=dict)


def closure_lower_envelope(
    phi1: PhiFunction,
    phi2: PhiFunction,
    z_grid: Sequence[float],
    delta_grid: Optional[np.ndarray] = None,
    extra_offsets: Optional[Sequence[tuple[float, float]]] = None,
    tols: Tolerances = DEFAULT,
) -> tuple[TailEnvelope, ClosureDiagnostics]:
    """Optimize the tangent-line bound over geometries, per evaluation point.

    For each z the driving parameter is recovered by inverting
    z = x0(lam(1-d1)), then (d1, d2) sweeps a log-spaced grid (plus any
    caller-supplied offset pairs); the envelope records the best bound.
    Points where every geometry clamps carry value 0 and are flagged.
    """
    if phi2.convex is not True:
        raise NotCertifiedError("closure needs a convexity-certified phi2")
    zs = np.asarray(z_grid, dtype=float)
    if zs.ndim != 1 or zs.size == 0 or (zs.size > 1 and not np.all(np.diff(zs) > 0)):
        raise InputError("z_grid must be nonempty strictly increasing")
    dg = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, float)

    log_vals = np.full(zs.size, -math.inf)
    per_z = {}
    for i, z in enumerate(zs):
        try:
            mu = _x0_inverse(phi2, float(z), tols)
        except (OutOfDomainError, InputError):
            per_z[float(z)] = {"status": "no-saddle"}
            continue
        best = -math.inf
        best_geo = None
        pairs = [(float(d1), float(d2)) for d1 in dg for d2 in dg]
        if extra_offsets:
            pairs.extend((float(a), float(b)) for a, b in extra_offsets)
        for d1, d2 in pairs:
            if d1 >= 1.0:
                continue
            lam = mu / (1.0 - d1)
            nu = lam * (1.0 + d2)
            if not (phi2.domain.contains(lam) and phi2.domain.contains(nu)
                    and phi1.domain.contains(lam)):
                continue
            try:
                geo = make_geometry(phi2, lam, d1, d2, tols=tols)
            except (GeometryInvalidError, OutOfDomainError, InputError):
                continue
            lv = tangent_bracket_log(phi1, geo)
            if lv > best:
                best = lv
                best_geo = (d1, d2, lam)
        log_vals[i] = min(best, 0.0)
        per_z[float(z)] = {
            "status": "ok" if best > -math.inf else "clamped",
            "best_offsets": best_geo,
            "log_value": best,
        }

    diag = ClosureDiagnostics(all_clamped=bool(np.all(np.isneginf(log_vals))), per_z=per_z)
    env = TailEnvelope(
        x=zs, log_values=log_vals, side=LOWER,
        provenance="tangent-closure",
        valid_from=max(1.0, float(zs[0])),
        meta={"all_clamped": diag.all_clamped},
    )
    return env, diag


# --------------------------------------------------------------------------
# Regularity of the saddle path
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    """Curvature and absorption diagnostics for the saddle path of phi."""

    v_value: float
    v_argmin: tuple[float, float]     # (lam, delta) attaining the infimum
    c0: float
    c0_argmax: tuple[float, float]
    ok: bool
    grid: dict = field(default_factory=dict)


def verify_regularity(phi: PhiFunction,
                      lam_grid: Optional[np.ndarray] = None,
                      delta_grid: Optional[np.ndarray] = None,
                      tols: Tolerances = DEFAULT) -> RegularityReport:
    """Estimate the normalized saddle-curvature infimum V and a feasible c0.

    V = inf over offsets d != 0 and lam >= e of
        [S(lam, x0(lam)) - S(lam, x0(lam(1+d)))] / [S(lam, x0(lam)) d^2],
    with S(lam, x0(lam)) = phi(lam) for convex phi.  c0 is the smallest
    constant making the saddle-shift absorption inequality hold on the
    (lam, d) grid; both are reports, not hard gates.
    """
    if phi.convex is not True:
        raise NotCertifiedError("regularity check needs convexity-certified phi")
    if lam_grid is None:
        hi = phi.domain.top()
        top = min(100.0, hi * 0.999) if math.isfinite(hi) else 100.0
        lam_grid = np.geomspace(math.e, top, 24)
    if delta_grid is None:
        base = np.array([0.05, 0.1, 0.15, 0.25, 0.35, 0.5])
        delta_grid = np.concatenate([-base[::-1], base])

    v_best, v_arg = math.inf, (math.nan, math.nan)
    c0_best, c0_arg = -math.inf, (math.nan, math.nan)
    evaluated = 0
    for lam in lam_grid:
        lam = float(lam)
        if not phi.domain.contains(lam):
            continue
        s_peak = phi.value(lam)  # S(lam, x0(lam)) by the touching identity
        if s_peak <= 0:
            continue
        for d in delta_grid:
            d = float(d)
            t = lam * (1.0 + d)
            if d == 0.0 or not phi.domain.contains(t):
                continue
            try:
                x_shift = _x0(phi, t, tols)
            except (NonUniqueArgmaxError, OutOfDomainError, InputError):
                continue  # degenerate saddle at this cell; the report decides
            s_shift = lam * x_shift - _phi2_star_at_saddle(phi, t, x_shift, tols)
            ratio = (s_peak - s_shift) / (s_peak * d * d)
            evaluated += 1
            if ratio < v_best:
                v_best, v_arg = ratio, (lam, d)
            # absorption: lam*x0(lam(1+|d|)) - (1-d^2) phi(lam)
            #             <= (1 + c0*|d|) * phi*(x0(lam(1-|d|)))
            ad = abs(d)
            t_up, t_dn = lam * (1.0 + ad), lam * (1.0 - ad)
            if not (phi.domain.contains(t_up) and phi.domain.contains(t_dn)):
                continue
            x_up = _x0(phi, t_up, tols)
            x_dn = _x0(phi, t_dn, tols)
            star_dn = _phi2_star_at_saddle(phi, t_dn, x_dn, tols)
            if star_dn <= 0:
                continue
            c0_here = (lam * x_up - (1.0 - d * d) * phi.value(lam) - star_dn) / (ad * star_dn)
            if c0_here > c0_best:
                c0_best, c0_arg = c0_here, (lam, ad)

    ok = bool(evaluated > 0 and v_best > 0 and math.isfinite(c0_best))
    return RegularityReport(
        v_value=v_best, v_argmin=v_arg, c0=max(c0_best, 0.0), c0_argmax=c0_arg,
        ok=ok, grid={"n_lam": len(lam_grid), "n_delta": len(delta_grid),
                     "evaluated": evaluated},
    )


# --------------------------------------------------------------------------
# Refined envelope under a (1 - delta^2) pinch
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PinchCertificate:
    delta: float
    c: float
    certified_from: float
    ladder_cap: float
    offsets_scale_grid: tuple
    machinery_points: int


def pinched_lower_envelope(
    phi: PhiFunction,
    delta: float,
    z_grid: Sequence[float],
    cert_ladder: Optional[np.ndarray] = None,
    c_steps: int = 400,
    tols: Tolerances = DEFAULT,
) -> tuple[TailEnvelope, PinchCertificate]:
    """Envelope exp(-(1-c*delta) phi*(z/(1-c*delta))) with a machinery-backed c.

    Under the hypothesis exp((1-delta^2) phi) <= MGF <= exp(phi), the
    tangent-line closure with offsets proportional to delta certifies the
    claimed form from some threshold z on.  c is the smallest grid value
    whose envelope is dominated by the machinery bound over the whole upper
    part of a certification ladder; the threshold is recorded.
    """
    if not (0.0 < delta < 0.5):
        raise InputError("delta must be in (0, 1/2)")
    reg = verify_regularity(phi, tols=tols)
    if not reg.ok:
        raise NotCertifiedError("regularity report negative; refined envelope needs V > 0")

    phi1 = PhiFunction.from_callable(
        lambda l: (1.0 - delta * delta) * phi.value(l),
        phi.domain.lo, phi.domain.hi,
        deriv=(lambda l: (1.0 - delta * delta) * phi.deriv(l)) if phi.deriv else None,
        convex=phi.convex, label=f"pinched[{phi.label}]",
        slope_lim=phi.slope_lim,
    )

    if cert_ladder is None:
        cap = max(64.0, 14.0 / delta)
        cert_ladder = np.geomspace(math.e, cap, 40)
    cap = float(cert_ladder[-1])

    # machinery exponent along the ladder with symmetric offsets c2_scale*delta
    scale_hi = min(4.9, 0.49 / delta)
    scales = np.geomspace(0.3, scale_hi, 16)
    neg_log = np.full(cert_ladder.size, math.inf)
    for i, z in enumerate(cert_ladder):
        try:
            mu = _x0_inverse(phi, float(z), tols)
        except (OutOfDomainError, InputError):
            continue
        best = -math.inf
        for s in scales:
            d = float(s) * delta
            if d >= 0.5:
                continue
            lam = mu / (1.0 - d)
            nu = lam * (1.0 + d)
            if not (phi.domain.contains(lam) and phi.domain.contains(nu)):
                continue
            try:
                geo = make_geometry(phi, lam, d, d, tols=tols)
            except (GeometryInvalidError, OutOfDomainError, InputError):
                continue
            lv = tangent_bracket_log(phi1, geo)
            best = max(best, lv)
        if best > -math.inf:
            neg_log[i] = -best

    def envelope_exponent(c: float, z: float) -> float:
        shrink = 1.0 - c * delta
        star, _ = conjugate_value(phi, z / shrink, tols)
        return shrink * star

    c_grid = np.linspace(0.5 / c_steps, (1.0 / (2.0 * delta)) * (1 - 1e-9), c_steps)
    chosen = None
    for c in c_grid:
        ok_from = None
        for z, m in zip(cert_ladder, neg_log):
            if not math.isfinite(m) or envelope_exponent(float(c), float(z)) < m:
                ok_from = None
            elif ok_from is None:
                ok_from = float(z)
        if ok_from is not None and ok_from <= cap / 2.0:
            chosen = (float(c), ok_from)
            break
    if chosen is None:
        raise NotCertifiedError(
            f"no c in (0, {1/(2*delta):.3g}) dominated by the machinery on the ladder"
        )
    c, cert_from = chosen

    zs = np.asarray(z_grid, dtype=float)
    zs = zs[zs >= math.e]
    if zs.size == 0:
        raise InputError("z_grid needs points at or above e")
    log_vals = np.array([-envelope_exponent(c, float(z)) for z in zs])
    cert = PinchCertificate(delta=delta, c=c, certified_from=cert_from,
                            ladder_cap=cap, offsets_scale_grid=tuple(scales.tolist()),
                            machinery_points=int(np.isfinite(neg_log).sum()))
    env = TailEnvelope(
        x=zs, log_values=np.minimum(log_vals, 0.0), side=LOWER,
        provenance="pinched-exponent-envelope",
        valid_from=math.e, meta={"certificate": cert},
    )
    return env, cert


def pinch_rate_diagnostic(phi: PhiFunction, deltas: Sequence[float], z: float,
                          tols: Tolerances = DEFAULT) -> dict:
    """Measure how fast the pinched envelope tightens as delta shrinks.

    Returns the fitted log-log slope of (exponent ratio - 1) against delta.
    Whether the true rate is linear or quadratic in delta is an open
    question; this reports the empirically realized rate of the machinery
    and asserts nothing.
    """
    ds, gaps = [], []
    for delta in sorted(deltas, reverse=True):
        try:
            env, cert = pinched_lower_envelope(phi, float(delta), np.array([z]), tols=tols)
        except (NotCertifiedError, InputError):
            continue
        star, _ = conjugate_value(phi, z, tols)
        ratio = float(env.neg_log()[0]) / star
        if ratio > 1.0:
            ds.append(float(delta))
            gaps.append(ratio - 1.0)
    if len(ds) < 2:
        return {"rate": math.nan, "deltas": ds, "gaps": gaps}
    slope = float(np.polyfit(np.log(ds), np.log(gaps), 1)[0])
    return {"rate": slope, "deltas": ds, "gaps": gaps}


# --------------------------------------------------------------------------
# Exact-MGF two-sided sandwich
# --------------------------------------------------------------------------


def exact_mgf_sandwich(
    phi: PhiFunction,
    x_grid: Sequence[float],
    c1_grid: Optional[Sequence[float]] = None,
    tols: Tolerances = DEFAULT,
) -> tuple[TailEnvelope, TailEnvelope, float]:
    """Two-sided envelopes when E exp(lam*X) = exp(phi(lam)) exactly.

    Upper: exp(-phi*(x)).  Lower: exp(-phi*(x) - c2*x) with c2 extracted
    from the tangent-line closure run at additive saddle offsets
    lam -> lam +- c1 (equivalently d = c1/lam), per-point over a c1 grid.
    Returns (lower, upper, c2); c2 is the worst-case exponent excess per
    unit x over the requested grid.
    """
    if phi.convex is not True:
        raise NotCertifiedError("sandwich needs convexity-certified phi")
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or (xs.size > 1 and not np.all(np.diff(xs) > 0)):
        raise InputError("x_grid must be nonempty strictly increasing")
    if xs[0] < 1.0:
        raise InputError("sandwich asserted for x >= 1")

    stars = np.array([conjugate_value(phi, float(x), tols)[0] for x in xs])

    b = phi.domain.hi
    c2 = 0.0
    clamped = []
    for x, star in zip(xs, stars):
        mu = _x0_inverse(phi, float(x), tols)
        pairs: list[tuple[float, float]] = []
        if c1_grid is not None:
            pairs = [(float(c), float(c)) for c in c1_grid]
        elif math.isfinite(b):
            # bounded exponent domains want a lopsided geometry: the driving
            # parameter close to the top, a thin remaining slice on the plus
            # side
            gap = b - mu
            for f1 in (0.3, 0.6, 0.85, 0.95, 0.98, 0.995):
                for f2 in (0.3, 0.6, 0.9, 0.97):
                    pairs.append((f1 * gap, f2 * gap * (1.0 - f1)))
        else:
            # additive offsets scaled by the saddle-path curvature: the
            # bracket needs roughly c^2 * x0'(mu) to beat ln(mu)
            h = max(1e-6, 1e-4 * max(mu, 1.0))
            try:
                slope = (_x0(phi, mu + h, tols) - _x0(phi, max(mu - h, phi.domain.lo), tols)) / (2 * h)
            except (OutOfDomainError, InputError):
                slope = 1.0
            scale = math.sqrt(2.0 * max(math.log(max(mu, math.e)), 1.0)
                              / max(slope, 1e-12))
            for s in (0.6, 0.85, 1.2, 1.8, 2.7, 4.0):
                pairs.append((s * scale, s * scale))
            pairs.extend([(1.0, 1.0), (2.5, 2.5)])
        best = -math.inf
        for c_minus, c_plus in pairs:
            lam = mu + c_minus
            nu = lam + c_plus
            if not (phi.domain.contains(lam) and phi.domain.contains(nu)):
                continue
            d1 = c_minus / lam
            d2 = c_plus / lam
            try:
                geo = make_geometry(phi, lam, d1, d2, tols=tols)
            except (GeometryInvalidError, OutOfDomainError, InputError):
                continue
            lv = tangent_bracket_log(phi, geo)
            best = max(best, lv)
        if best == -math.inf:
            clamped.append(float(x))
            continue
        c2 = max(c2, (-best - star) / float(x))

    if clamped:
        raise NotCertifiedError(
            f"tangent closure clamped at x = {clamped}; no finite c2 certified there"
        )

    upper = TailEnvelope(
        x=xs, log_values=np.minimum(-stars, 0.0), side=UPPER,
        provenance="conjugate-upper", valid_from=float(xs[0]),
    )
    lower = TailEnvelope(
        x=xs, log_values=np.minimum(-(stars + c2 * xs), 0.0), side=LOWER,
        provenance="exact-mgf-sandwich", valid_from=float(xs[0]),
        meta={"c2": c2},
    )
    return lower, upper, float(c2)
