"""Centralized numeric tolerances and search-grid defaults.

Every tolerance used by the numerics lives here so tests and the CLI can
pin or override them in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # generic comparison slack
    abs_tol: float = 1e-9
    rel_tol: float = 1e-8

    # conjugate supremum search
    scan_points: int = 128
    golden_rel_width: float = 1e-10
    lambda_cap: float = 1e8
    unbounded_growth_factor: float = 4.0

    # quadrature over [0, inf)
    quad_tol: float = 1e-10
    quad_rel_tail: float = 1e-16
    quad_max_windows: int = 160

    # integrability pre-test: integrand exp(-g) on [0, inf) is declared
    # divergent when g(x)/ln(x) stays at or below this at the probe points
    divergence_log_margin: float = 1.000001

    # flat-argmax detection for saddle points
    flat_tol: float = 1e-6

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT = Tolerances()
