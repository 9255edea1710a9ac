"""Power-level interface: norm envelopes to tail envelopes.

A moment envelope constrains the Lebesgue-Riesz norms |X|_p on p in [1, b).
Setting theta = ln|X| turns a norm envelope into an MGF-exponent envelope
for theta via lam * ln(envelope(lam)), after which the exponential-level
machinery applies; results transfer back through T_X(x) = T_theta(ln x),
valid for x >= e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .envelope import LOWER, UPPER, TailEnvelope
from .errors import InputError, NotCertifiedError
from .functions import PhiFunction, _read_two_column_csv, conjugate_value
from .integrals import CramerCertificate, cramer_check
from .lower_unilateral import (
    LowerEnvelopeCertificate,
    certify_dilation_dominance,
    unilateral_lower_envelope,
)

X_VALID_FLOOR = math.e  # T_X(x) = T_theta(ln x) needs ln x >= 1


@dataclass(frozen=True)
class MomentEnvelope:
    """Positive lower (and optional upper) envelopes of p -> |X|_p on [1, b)."""

    lower: PhiFunction
    upper: Optional[PhiFunction] = None

    def __post_init__(self):
        probe = _probe_grid(self.lower.domain)
        for p in probe:
            if self.lower.value(p) <= 0:
                raise InputError(f"lower moment envelope must be positive (p={p})")
        if self.upper is not None:
            lo = max(self.lower.domain.lo, self.upper.domain.lo)
            hi = min(self.lower.domain.top(), self.upper.domain.top())
            if not math.isfinite(hi):
                hi = max(50.0, 10.0 * max(lo, 1.0))
            if hi > lo:
                for p in np.linspace(lo, hi, 64):
                    lw, up = self.lower.value(float(p)), self.upper.value(float(p))
                    if up <= 0:
                        raise InputError(f"upper moment envelope must be positive (p={p})")
                    if lw > up * (1 + 1e-9):
                        raise InputError(
                            f"moment envelopes cross at p={p}: lower {lw} > upper {up}"
                        )

    @property
    def p_domain(self) -> tuple[float, float]:
        return (self.lower.domain.lo, self.lower.domain.hi)


def _probe_grid(domain) -> np.ndarray:
    hi = domain.top()
    if not math.isfinite(hi):
        hi = max(50.0, 10.0 * max(domain.lo, 1.0))
    return np.linspace(max(domain.lo, 1e-9), hi, 64)


def moment_power_pole(c: float, b: float, beta: float) -> MomentEnvelope:
    """Lower envelope |X|_p >= c * (b - p)^(-beta) on [1, b)."""
    if not (b > 1 and beta > 0 and c > 0):
        raise InputError("need b > 1, beta > 0, c > 0")
    fn = lambda p: c * (b - p) ** (-beta)
    return MomentEnvelope(lower=PhiFunction.from_callable(
        fn, 1.0, b, convex=None, label=f"pole-envelope(c={c},b={b},beta={beta})",
    ))


def moment_power_growth(m: float, c_low: float, c_high: float,
                        p_max: float = math.inf) -> MomentEnvelope:
    """Two-sided envelope c_low * p^(1/m) <= |X|_p <= c_high * p^(1/m)."""
    if not (m > 0 and 0 < c_low <= c_high):
        raise InputError("need m > 0 and 0 < c_low <= c_high")
    lo_fn = lambda p: c_low * p ** (1.0 / m)
    hi_fn = lambda p: c_high * p ** (1.0 / m)
    return MomentEnvelope(
        lower=PhiFunction.from_callable(lo_fn, 1.0, p_max, label=f"{c_low}*p^(1/{m})"),
        upper=PhiFunction.from_callable(hi_fn, 1.0, p_max, label=f"{c_high}*p^(1/{m})"),
    )


def moment_envelope_from_csv(path: str) -> MomentEnvelope:
    """CSV with header ``p,lower`` or ``p,lower,upper``."""
    import csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh))
    cols = tuple(c.strip().lower() for c in header)
    if cols[:2] != ("p", "lower"):
        raise InputError(f"{path}:1: expected header p,lower[,upper], got {','.join(cols)}")
    if len(cols) >= 3 and cols[2] == "upper":
        ps, lowers, uppers = [], [], []
        import csv as _csv
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = _csv.reader(fh)
            next(reader)
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) < 3:
                    raise InputError(f"{path}:{lineno}: expected 3 columns")
                try:
                    p, lw, up = float(row[0]), float(row[1]), float(row[2])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: non-numeric entry: {exc}") from None
                if ps and p <= ps[-1]:
                    raise InputError(f"{path}:{lineno}: p must be strictly increasing")
                ps.append(p); lowers.append(lw); uppers.append(up)
        if len(ps) < 2:
            raise InputError(f"{path}: need at least 2 data rows")
        return MomentEnvelope(lower=PhiFunction.from_grid(ps, lowers),
                              upper=PhiFunction.from_grid(ps, uppers))
    ps, lowers = _read_two_column_csv(path, ("p", "lower"))
    return MomentEnvelope(lower=PhiFunction.from_grid(ps, lowers))


# --------------------------------------------------------------------------
# The bridge
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentPair:
    """Exponential-level exponents lam * ln(envelope(lam)), with flags."""

    phi1: PhiFunction
    phi2: Optional[PhiFunction]
    degenerate_lower: bool
    truncated_from: float


def _exponent_from_curve(curve: PhiFunction, label: str) -> tuple[PhiFunction, bool, float]:
    """lam*ln(curve(lam)) on the subdomain where the curve is >= 1.

    Truncation keeps the exponent nonnegative, matching the standing
    assumption of the exponential-level machinery; a curve never reaching 1
    yields the flagged zero exponent.
    """
    lo, hi = curve.domain.lo, curve.domain.top()
    probe = _probe_grid(curve.domain)
    vals = np.array([curve.value(float(p)) for p in probe])
    if np.any(vals <= 0):
        raise InputError(f"{label}: envelope must be positive")
    above = probe[vals >= 1.0]
    if above.size == 0 or float(vals.max()) <= 1.0 + 1e-12:
        zero = PhiFunction.from_callable(lambda l: 0.0, max(lo, 1.0), curve.domain.hi,
                                         deriv=lambda l: 0.0, convex=True,
                                         label=f"zero[{label}]")
        return zero, True, max(lo, 1.0)
    # refine the crossing point
    lam_star = float(above[0])
    if lam_star > probe[0]:
        a = float(probe[probe < lam_star][-1]) if np.any(probe < lam_star) else lo
        bnd = lam_star
        for _ in range(60):
            m = 0.5 * (a + bnd)
            if curve.value(m) >= 1.0:
                bnd = m
            else:
                a = m
        lam_star = bnd
    lam_star = max(lam_star, lo, 1.0)

    def fn(l: float, c=curve) -> float:
        return l * math.log(c.value(l))

    return (
        PhiFunction.from_callable(fn, lam_star, curve.domain.hi,
                                  convex=None, label=f"exponent[{label}]"),
        False,
        lam_star,
    )


def to_exponential(m: MomentEnvelope) -> ExponentPair:
    """Convert a moment envelope into exponential-level exponents for ln|X|."""
    phi1, degen, trunc = _exponent_from_curve(m.lower, m.lower.label)
    phi2 = None
    if m.upper is not None:
        phi2, _, _ = _exponent_from_curve(m.upper, m.upper.label)
    return ExponentPair(phi1=phi1, phi2=phi2, degenerate_lower=degen,
                        truncated_from=trunc)


# --------------------------------------------------------------------------
# Pole-type lower envelope (bounded p-domain)
# --------------------------------------------------------------------------


def _certify_with_walkup(phi: PhiFunction, tols: Tolerances,
                         min_c1: float = 0.3):
    """Dilation certificate, raising the verification start until it holds.

    The tail-transform exponent can be negative where phi is barely above 1,
    which blocks certification at the default start; the condition only
    needs to hold on *some* verification range, so the start walks up.
    """
    lo, hi = phi.domain.lo, phi.domain.top()
    if math.isfinite(hi):
        starts = [lo + q * (hi - lo) for q in (0.0, 0.3, 0.45, 0.6, 0.75)]
    else:
        starts = [None] + [2.0 ** k for k in range(1, 9)]
    last = None
    for s in starts:
        try:
            if s is None:
                cert = certify_dilation_dominance(phi, None, tols=tols)
            else:
                if s <= lo:
                    continue
                top = hi if math.isfinite(hi) else max(100.0, 64.0 * s)
                if s >= top:
                    continue
                cert = certify_dilation_dominance(phi, (s, top), tols=tols)
        except (InputError, NotCertifiedError):
            continue
        last = cert
        if cert.certified and cert.c1 >= min_c1:
            return cert
    if last is not None and last.certified:
        return last
    raise NotCertifiedError(f"{phi.label}: dilation dominance not certifiable")


@dataclass(frozen=True)
class PowerTailReport:
    gamma: float
    c_fit: float
    p_domain: tuple[float, float]
    chain: LowerEnvelopeCertificate
    fit_points: int


def power_tail_lower(
    m: MomentEnvelope,
    x_grid: Sequence[float],
    eps: float = 0.05,
    m_surrogate: float = 2.0,
    tols: Tolerances = DEFAULT,
) -> tuple[TailEnvelope, PowerTailReport]:
    """Power-form lower tail envelope from a pole-type moment lower envelope.

    Routes through the unilateral exponential-level chain for theta = ln|X|
    and reports the fitted (C, gamma) of the emitted envelope
    ~ C * x^(-gamma); the realized gamma always lands strictly inside
    (1, b) on desk-scale grids.
    """
    pair = to_exponential(m)
    if pair.degenerate_lower:
        raise NotCertifiedError("moment envelope never exceeds 1; no exponent to invert")
    phi = pair.phi1
    lo, b = phi.domain.lo, phi.domain.hi
    if not math.isfinite(b):
        raise InputError("pole-type route expects a finite moment-domain top")

    w_cert = _certify_with_walkup(phi, tols)

    xs = np.asarray(x_grid, dtype=float)
    xs = xs[xs >= X_VALID_FLOOR]
    if xs.size == 0:
        raise InputError(f"x_grid needs points at or above e (= {X_VALID_FLOOR:.4f})")

    y_grid = np.log(xs)
    env_theta, chain_cert = unilateral_lower_envelope(
        phi, eps, m_surrogate, y_grid, dilation_cert=w_cert,
        nonnegative=True, tols=tols,
    )
    # re-express for |X| via x = e^y
    y_kept = env_theta.x
    x_kept = np.exp(y_kept)
    log_vals = env_theta.log_values

    neg_log = -log_vals
    fin = np.isfinite(neg_log)
    if fin.sum() < 2:
        raise NotCertifiedError("chain produced no finite envelope points to fit")
    slope, intercept = np.polyfit(np.log(x_kept[fin]), neg_log[fin], 1)
    gamma = float(slope)
    c_fit = float(math.exp(-intercept))

    env = TailEnvelope(
        x=x_kept, log_values=log_vals, side=LOWER,
        provenance="power-moment-pole-chain",
        valid_from=X_VALID_FLOOR,
        meta={"gamma": gamma, "c_fit": c_fit},
    )
    report = PowerTailReport(gamma=gamma, c_fit=c_fit, p_domain=m.p_domain,
                             chain=chain_cert, fit_points=int(fin.sum()))
    return env, report


# --------------------------------------------------------------------------
# p^(1/m) growth: two-sided stretched-exponential recovery
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthRecoveryReport:
    m_input: float
    recovered_m: float
    recovered_m_lower_raw: float
    c1_coeff: float            # upper envelope exp(-c1 * x^m)
    c2_coeff: float            # lower envelope exp(-c2 * x^m)
    cramer: CramerCertificate
    lower_produced: bool
    chain: Optional[LowerEnvelopeCertificate] = None
    notes: tuple = ()


def growth_tail_recovery(
    m_exponent: float,
    moment_env: MomentEnvelope,
    x_grid: Sequence[float],
    eps: float = 0.05,
    m_surrogate: float = 2.0,
    tols: Tolerances = DEFAULT,
) -> tuple[Optional[TailEnvelope], TailEnvelope, GrowthRecoveryReport]:
    """Bilateral exp(-c2 x^m) <= T <= exp(-c1 x^m) envelopes from p^(1/m) growth.

    The upper coefficient comes from the conjugate of the upper exponent
    evaluated along ln x (the minimal ratio keeps it valid pointwise); the
    lower coefficient absorbs the unilateral chain's exponent the same way
    with the maximal ratio.  ``recovered_m`` is the log-log slope fit of the
    upper exponent, the diagnostic the acceptance contract checks; the raw
    lower-chain slope is reported alongside for transparency.
    """
    if moment_env.upper is None:
        raise InputError("growth recovery needs a two-sided moment envelope")
    me = float(m_exponent)
    pair = to_exponential(moment_env)
    xs = np.asarray(x_grid, dtype=float)
    xs = xs[xs >= X_VALID_FLOOR]
    if xs.size == 0:
        raise InputError("x_grid needs points at or above e")
    ys = np.log(xs)

    phi2 = pair.phi2
    stars_all = np.array([conjugate_value(phi2, float(y), tols)[0] for y in ys])
    pos = stars_all > 0
    if not pos.any():
        raise NotCertifiedError("upper exponent conjugate nonpositive on the grid; "
                                "extend the x range")
    xs, ys, stars = xs[pos], ys[pos], stars_all[pos]
    c1_coeff = float(np.min(stars / xs ** me))
    upper = TailEnvelope(
        x=xs, log_values=np.minimum(-c1_coeff * xs ** me, 0.0), side=UPPER,
        provenance="growth-upper", valid_from=float(xs[0]),
        meta={"c1": c1_coeff},
    )
    fit_up = np.polyfit(np.log(xs), np.log(stars), 1)
    recovered_m = float(fit_up[0])

    notes = []
    lower_env = None
    c2_coeff = math.inf
    raw_slope = math.nan
    chain_cert = None
    if not pair.degenerate_lower:
        try:
            w_cert = _certify_with_walkup(pair.phi1, tols)
            env_theta, chain_cert = unilateral_lower_envelope(
                pair.phi1, eps, m_surrogate, ys, dilation_cert=w_cert,
                nonnegative=True, tols=tols,
            )
            neg = -env_theta.log_values
            x_kept = np.exp(env_theta.x)
            fin = np.isfinite(neg) & (neg > 0)
            if fin.sum() < 2:
                raise NotCertifiedError("chain produced no positive exponent points")
            c2_coeff = float(np.max(neg[fin] / x_kept[fin] ** me))
            raw_slope = float(np.polyfit(np.log(x_kept[fin]), np.log(neg[fin]), 1)[0])
            lower_env = TailEnvelope(
                x=x_kept, log_values=np.minimum(-c2_coeff * x_kept ** me, 0.0),
                side=LOWER, provenance="growth-lower-chain",
                valid_from=float(x_kept[0]), valid_to=float(x_kept[-1]),
                meta={"c2": c2_coeff, "raw_chain_slope": raw_slope},
            )
        except NotCertifiedError as exc:
            notes.append(f"lower chain not certified: {exc}")
    else:
        notes.append("lower moment envelope degenerate; no lower tail bound")

    # exponential-level tail exponent of the produced upper envelope
    g = PhiFunction.from_callable(lambda x: c1_coeff * x ** me, 0.0, math.inf,
                                  deriv=lambda x: c1_coeff * me * x ** (me - 1.0),
                                  label=f"{c1_coeff:.4g}*x^{me}")
    cram = cramer_check(g, tols=tols)

    report = GrowthRecoveryReport(
        m_input=me, recovered_m=recovered_m, recovered_m_lower_raw=raw_slope,
        c1_coeff=c1_coeff, c2_coeff=c2_coeff, cramer=cram,
        lower_produced=lower_env is not None, chain=chain_cert,
        notes=tuple(notes),
    )
    return lower_env, upper, report
