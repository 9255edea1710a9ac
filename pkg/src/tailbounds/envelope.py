"""Side-tagged tail-probability envelopes.

Envelopes are stored in log space: lower bounds routinely live at
exp(-hundreds), far below float underflow, and several diagnostics operate
directly on the tail exponent -ln(envelope).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InputError

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class TailEnvelope:
    """A pointwise bound on the tail function over an x-grid.

    ``log_values`` <= 0; -inf marks a clamped (trivial) lower bound.
    ``values`` recovers probabilities, underflowing to 0.0 where the
    exponent exceeds float range.
    """

    x: np.ndarray
    log_values: np.ndarray
    side: str
    provenance: str
    valid_from: float
    valid_to: float = np.inf
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        lv = np.asarray(self.log_values, dtype=float)
        if x.ndim != 1 or x.shape != lv.shape or x.size == 0:
            raise InputError("envelope needs matching nonempty 1-d x/log arrays")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise InputError("envelope x grid must be strictly increasing")
        if np.any(lv > 1e-9):
            raise InputError("envelope log values must be <= 0")
        lv = np.minimum(lv, 0.0)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "log_values", lv)
        if self.side not in (UPPER, LOWER):
            raise InputError(f"side must be 'upper' or 'lower', got {self.side!r}")

    @property
    def values(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_values)

    def neg_log(self) -> np.ndarray:
        """The tail exponent -ln(envelope); +inf where clamped."""
        return -self.log_values

    def validate_monotone(self, tol: float = 1e-9) -> None:
        lv = self.log_values
        finite = np.isfinite(lv)
        scale = max(1.0, float(np.abs(lv[finite]).max())) if finite.any() else 1.0
        if np.any(np.diff(lv) > tol * scale):
            raise AssertionError("envelope values must be nonincreasing in x")

    def restrict(self, lo: float, hi: float = np.inf) -> "TailEnvelope":
        mask = (self.x >= lo) & (self.x <= hi)
        if not mask.any():
            raise InputError(f"no envelope points inside [{lo}, {hi}]")
        return TailEnvelope(
            x=self.x[mask], log_values=self.log_values[mask], side=self.side,
            provenance=self.provenance, valid_from=max(self.valid_from, lo),
            valid_to=min(self.valid_to, hi), meta=dict(self.meta),
        )
