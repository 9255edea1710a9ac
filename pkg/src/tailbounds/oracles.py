"""Ground truth for validation: reference laws, quadrature, seeded sampling.

Each reference distribution carries an exact tail, an exact (closed-form or
quadrature-backed) log-MGF with its domain, and a deterministic sampler.
Sampling is inverse-transform from Philox4x64-10 counter-based raw output,
so streams are reproducible bit-for-bit for a given seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.random import Philox
from scipy.integrate import IntegrationWarning, quad as _scipy_quad
from scipy.special import erf, erfc, log_ndtr, ndtri

from .config import DEFAULT, Tolerances
from .errors import InputError, NotConvergedError
from .functions import PhiFunction

# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


def quadrature(f: Callable[[float], float], a: float, b: float,
               tol: float = DEFAULT.quad_tol,
               tols: Tolerances = DEFAULT,
               details: Optional[dict] = None) -> tuple[float, float]:
    """Adaptive quadrature of f over [a, b], b may be inf.

    Semi-infinite ranges use geometric window growth until the last window
    contributes less than ``quad_rel_tail`` of the running total.  Returns
    (value, error_estimate); raises NotConvergedError when the estimate
    cannot be brought under max(tol, tol*|value|).  When ``details`` is a
    dict it receives the truncation point and the error estimate.
    """
    if math.isfinite(b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = _scipy_quad(f, a, b, limit=400)
        if err > max(tol, tol * abs(val)) * 10:
            raise NotConvergedError("finite-range quadrature error too large",
                                    partial=val, diagnostic={"err": err})
        if details is not None:
            details.update(truncation=float(b), abs_error=float(err))
        return float(val), float(err)

    total, err_total = 0.0, 0.0
    left = a
    width = max(1.0, abs(a))
    for k in range(tols.quad_max_windows):
        right = left + width
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = _scipy_quad(f, left, right, limit=200)
        total += val
        err_total += err
        scale = max(abs(total), 1e-300)
        if k >= 2 and abs(val) < tols.quad_rel_tail * scale:
            if details is not None:
                details.update(truncation=float(right), abs_error=float(err_total))
            return float(total), float(err_total)
        left = right
        width *= 2.0
    raise NotConvergedError(
        "semi-infinite quadrature: window cap reached with non-negligible tail",
        partial=total,
        diagnostic={"last_window": (left, width), "last_contribution": val},
    )


# composite Gauss-Legendre nodes for the vectorized log-integrals
_GL_NODES, _GL_WEIGHTS = leggauss(24)


def _panel_nodes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    half = 0.5 * (hi - lo)
    xs = (0.5 * (hi + lo) + half * _GL_NODES[None, :]).ravel()
    ws = (half * _GL_WEIGHTS[None, :]).ravel()
    return xs, ws


def log_integral_exp(log_f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     peak: Optional[float] = None) -> float:
    """ln of the integral of exp(log_f) over [a, b] without overflow.

    The integrand is shifted by its peak value before exponentiating, so
    exponents in the thousands are handled exactly in log space.  ``peak``
    is a hint for the maximizer; when absent a coarse scan locates it.
    """
    if not math.isfinite(b):
        # grow the window until log_f at the edge is far below the peak
        hi = max(10.0, 2.0 * (peak or 1.0))
        while True:
            probe = float(log_f(np.array([hi]))[0])
            ref = float(log_f(np.array([peak]))[0]) if peak is not None else 0.0
            if probe < ref - 60.0 or hi > 1e12:
                break
            hi *= 2.0
        b = hi
    if peak is None:
        scan = np.linspace(a, b, 513)
        vals = np.asarray(log_f(scan))
        peak = float(scan[int(np.argmax(vals))])
    # core width from the local curvature of the exponent at the peak
    h = max(1e-6, 1e-4 * max(abs(peak), 1.0))
    probe = np.array([max(a, peak - h), peak, min(b, peak + h)])
    pv = np.asarray(log_f(probe))
    curv = abs(pv[0] - 2.0 * pv[1] + pv[2]) / h ** 2
    w = 1.0 / math.sqrt(curv) if curv > 1e-12 else max((b - a) * 0.05, 1.0)
    w = min(max(w, (b - a) * 1e-4), b - a)
    edges = [a]
    core_lo, core_hi = max(a, peak - 10 * w), min(b, peak + 10 * w)
    if core_lo > a:
        edges.extend(np.linspace(a, core_lo, 9)[1:])
    edges.extend(np.linspace(core_lo, core_hi, 25)[1:])
    if core_hi < b:
        edges.extend(np.geomspace(max(core_hi, 1e-12), b, 13)[1:])
    edges = np.unique(np.asarray(edges, dtype=float))
    xs, ws = _panel_nodes(edges)
    logs = np.asarray(log_f(xs))
    m = float(np.max(logs))
    with np.errstate(under="ignore"):
        total = float(np.sum(ws * np.exp(logs - m)))
    if total <= 0:
        return -math.inf
    return m + math.log(total)


# --------------------------------------------------------------------------
# Seeded uniform stream
# --------------------------------------------------------------------------


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """n uniforms in (0, 1) from Philox4x64-10 keyed by ``seed``.

    Counter-based: the stream is a pure function of (seed, index) and
    identical across platforms.
    """
    raw = Philox(key=int(seed)).random_raw(int(n))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


# --------------------------------------------------------------------------
# Reference distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleDistribution:
    """A reference law with exact tail, exact log-MGF, and seeded sampler."""

    name: str
    tail: Callable[[float], float]  # two-sided tail per max(P(X>=x), P(X<-x))
    inverse_cdf: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    cramer: bool = True
    mgf_exponent: Optional[PhiFunction] = None
    density: Optional[Callable[[float], float]] = field(default=None, compare=False)
    support_lo: float = 0.0
    nonnegative: bool = True
    log_tail: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def exact_tail(self, x) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.tail(float(t)) for t in xs])
        return out if np.ndim(x) else float(out[0])

    def exact_log_tail(self, x: float) -> float:
        """ln(tail), exact far beyond float underflow of the tail itself."""
        if self.log_tail is not None:
            return float(self.log_tail(float(x)))
        t = self.tail(float(x))
        if t <= 0:
            raise InputError(f"{self.name}: tail underflowed at x={x}")
        return math.log(t)

    def sample(self, seed: int, n: int) -> np.ndarray:
        return self.inverse_cdf(uniform_stream(seed, n))

    def exponential_tail_fn(self) -> PhiFunction:
        """-ln(tail) on [0, inf); identically 0 below the support."""

        def g(x: float) -> float:
            return -self.exact_log_tail(float(x))

        return PhiFunction.from_callable(g, 0.0, math.inf, convex=None,
                                         label=f"neglog-tail[{self.name}]")


def _phi_q(x: float) -> float:
    return 0.5 * erfc(x / math.sqrt(2.0))


def _mixture_log_tail(x: float, w: float, a: float, b: float) -> float:
    if x <= 0:
        return 0.0
    t1 = math.log(w) + float(log_ndtr(-x / a))
    t2 = math.log(1 - w) + float(log_ndtr(-x / b))
    m = max(t1, t2)
    return m + math.log(math.exp(t1 - m) + math.exp(t2 - m))


def gaussian(scale: float = 1.0) -> OracleDistribution:
    """Centered normal with standard deviation ``scale``."""
    if scale <= 0:
        raise InputError("scale must be positive")
    s = float(scale)
    return OracleDistribution(
        name=f"gaussian(scale={s})" if s != 1.0 else "gaussian",
        tail=lambda x, s=s: _phi_q(x / s) if x > 0 else (1.0 if x <= 0 else 0.5),
        inverse_cdf=lambda u, s=s: s * ndtri(u),
        cramer=True,
        mgf_exponent=PhiFunction.quadratic(coeff=0.5 * s * s, lo=0.0),
        density=lambda x, s=s: math.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi)),
        support_lo=-math.inf,
        nonnegative=False,
        log_tail=lambda x, s=s: float(log_ndtr(-x / s)) if x > 0 else 0.0,
    )


def exponential_unit() -> OracleDistribution:
    """Exponential(1): tail exp(-x), log-MGF -ln(1-lam) on [0, 1)."""
    return OracleDistribution(
        name="exponential",
        tail=lambda x: math.exp(-x) if x > 0 else 1.0,
        inverse_cdf=lambda u: -np.log1p(-u),
        cramer=True,
        log_tail=lambda x: -x if x > 0 else 0.0,
        mgf_exponent=PhiFunction.from_callable(
            lambda l: -math.log1p(-l), 0.0, 1.0,
            deriv=lambda l: 1.0 / (1.0 - l), convex=True, label="exp-mgf-exponent",
        ),
        density=lambda x: math.exp(-x) if x >= 0 else 0.0,
        support_lo=0.0,
        nonnegative=True,
    )


@lru_cache(maxsize=None)
def _weibull_log_mgf(m: float, lam: float) -> float:
    """ln E exp(lam*X) for X with tail exp(-x^m), via log-space quadrature."""
    if lam == 0.0:
        return 0.0
    # density m x^{m-1} e^{-x^m}; integrand exponent:
    def g(x: np.ndarray) -> np.ndarray:
        x = np.maximum(x, 1e-300)
        return math.log(m) + (m - 1.0) * np.log(x) + lam * x - x ** m

    if m > 1.0:
        peak = (lam / m) ** (1.0 / (m - 1.0)) if lam > 0 else 1.0
    else:
        peak = 1.0
    return log_integral_exp(g, 0.0, math.inf, peak=max(peak, 1e-6))


@lru_cache(maxsize=None)
def _weibull_log_mgf_deriv(m: float, lam: float) -> float:
    """d/dlam ln MGF = E[X e^{lam X}] / E[e^{lam X}] in log space."""
    def g(x: np.ndarray) -> np.ndarray:
        x = np.maximum(x, 1e-300)
        return math.log(m) + (m - 1.0) * np.log(x) + lam * x - x ** m

    def gx(x: np.ndarray) -> np.ndarray:
        x = np.maximum(x, 1e-300)
        return math.log(m) + m * np.log(x) + lam * x - x ** m

    peak = (lam / m) ** (1.0 / (m - 1.0)) if (m > 1.0 and lam > 0) else 1.0
    num = log_integral_exp(gx, 0.0, math.inf, peak=max(peak, 1e-6))
    den = log_integral_exp(g, 0.0, math.inf, peak=max(peak, 1e-6))
    return math.exp(num - den)


def weibull_log_mgf_closed_m2(lam: float) -> float:
    """Closed form of ln E e^{lam X} for tail exp(-x^2); test cross-check."""
    # E e^{lam X} = 1 + lam * (sqrt(pi)/2) e^{lam^2/4} (1 + erf(lam/2))
    if lam == 0.0:
        return 0.0
    t = lam * lam / 4.0 + math.log(lam * math.sqrt(math.pi) / 2.0 * (1.0 + erf(lam / 2.0)))
    return t + math.log1p(math.exp(-t)) if t > 0 else math.log1p(math.exp(t))


def weibull(m: float) -> OracleDistribution:
    """Stretched/compressed exponential: tail exp(-x^m) on x >= 0."""
    if m <= 0:
        raise InputError("weibull shape m must be positive")
    mm = float(m)
    if mm == 1.0:
        return exponential_unit()
    mgf = None
    if mm > 1.0:
        mgf = PhiFunction.from_callable(
            lambda l, mm=mm: _weibull_log_mgf(mm, float(l)), 0.0, math.inf,
            deriv=lambda l, mm=mm: _weibull_log_mgf_deriv(mm, float(l)),
            convex=True, label=f"weibull({mm})-mgf-exponent",
            slope_lim=math.inf,
        )
    return OracleDistribution(
        name=f"weibull({mm})",
        tail=lambda x, mm=mm: math.exp(-x ** mm) if x > 0 else 1.0,
        inverse_cdf=lambda u, mm=mm: (-np.log1p(-u)) ** (1.0 / mm),
        cramer=bool(mm >= 1.0),
        log_tail=lambda x, mm=mm: -(x ** mm) if x > 0 else 0.0,
        mgf_exponent=mgf,
        density=lambda x, mm=mm: mm * x ** (mm - 1.0) * math.exp(-x ** mm) if x > 0 else 0.0,
        support_lo=0.0,
        nonnegative=True,
    )


def pareto(alpha: float) -> OracleDistribution:
    """Pareto with tail x^{-alpha} for x >= 1; no finite MGF (non-Cramer)."""
    if alpha <= 0:
        raise InputError("pareto alpha must be positive")
    a = float(alpha)
    return OracleDistribution(
        name=f"pareto({a})",
        tail=lambda x, a=a: min(1.0, x ** -a) if x > 0 else 1.0,
        inverse_cdf=lambda u, a=a: (1.0 - u) ** (-1.0 / a),
        cramer=False,
        log_tail=lambda x, a=a: min(0.0, -a * math.log(x)) if x > 0 else 0.0,
        mgf_exponent=None,
        density=lambda x, a=a: a * x ** (-a - 1.0) if x >= 1 else 0.0,
        support_lo=1.0,
        nonnegative=True,
    )


def gaussian_scale_mixture(weight: float, s1: float, s2: float) -> OracleDistribution:
    """Two-component centered normal scale mixture.

    MGF exponent ln(w e^{s1^2 l^2/2} + (1-w) e^{s2^2 l^2/2}); always pinched
    between the component exponents.
    """
    if not (0.0 < weight < 1.0):
        raise InputError("mixture weight must be in (0, 1)")
    w, a, b = float(weight), float(s1), float(s2)

    def exponent(l: float) -> float:
        t1 = 0.5 * (a * l) ** 2
        t2 = 0.5 * (b * l) ** 2
        m = max(t1, t2)
        return m + math.log(w * math.exp(t1 - m) + (1 - w) * math.exp(t2 - m))

    def exponent_deriv(l: float) -> float:
        t1 = 0.5 * (a * l) ** 2
        t2 = 0.5 * (b * l) ** 2
        m = max(t1, t2)
        e1, e2 = w * math.exp(t1 - m), (1 - w) * math.exp(t2 - m)
        return (e1 * a * a * l + e2 * b * b * l) / (e1 + e2)

    def icdf(u: np.ndarray) -> np.ndarray:
        # one uniform per draw: split it into component choice + quantile,
        # keeping the stream counter-based
        pick = u < w
        z = np.empty_like(u)
        z[pick] = a * ndtri(np.clip(u[pick] / w, 1e-16, 1 - 1e-16))
        z[~pick] = b * ndtri(np.clip((u[~pick] - w) / (1 - w), 1e-16, 1 - 1e-16))
        return z

    return OracleDistribution(
        name=f"gauss-mixture(w={w},s1={a},s2={b})",
        tail=lambda x: w * _phi_q(x / a) + (1 - w) * _phi_q(x / b) if x > 0 else 1.0,
        inverse_cdf=icdf,
        cramer=True,
        log_tail=lambda x: _mixture_log_tail(x, w, a, b),
        mgf_exponent=PhiFunction.from_callable(
            exponent, 0.0, math.inf, deriv=exponent_deriv, convex=True,
            label="gauss-mixture-exponent", slope_lim=math.inf,
        ),
        density=lambda x: (w * math.exp(-0.5 * (x / a) ** 2) / (a * math.sqrt(2 * math.pi))
                           + (1 - w) * math.exp(-0.5 * (x / b) ** 2) / (b * math.sqrt(2 * math.pi))),
        support_lo=-math.inf,
        nonnegative=False,
    )


def suite() -> dict[str, OracleDistribution]:
    """The validation suite used by the sandwich tests and the CLI."""
    return {
        "gaussian": gaussian(),
        "exponential": exponential_unit(),
        "weibull2": weibull(2.0),
        "weibull4": weibull(4.0),
        "pareto3": pareto(3.0),
    }


# --------------------------------------------------------------------------
# Empirical tails
# --------------------------------------------------------------------------


def empirical_tail(samples: np.ndarray, x_grid) -> dict:
    """Exceedance fractions with Wilson-interval halfwidths (z = 1.96)."""
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise InputError("need at least one sample")
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    n = s.size
    z = 1.959963984540054
    frac = np.empty(xs.size)
    half = np.empty(xs.size)
    for i, x in enumerate(xs):
        k = int(np.count_nonzero(s >= x))
        p = k / n
        denom = 1.0 + z * z / n
        frac[i] = p
        half[i] = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return {"x": xs, "fraction": frac, "wilson_halfwidth": half, "n": n}
