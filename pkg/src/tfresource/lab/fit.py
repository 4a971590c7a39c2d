"""Power-law fits by least squares in log-log coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import DomainError

__all__ = ["PowerLawFit", "fit_power_law"]


@dataclass(frozen=True)
class PowerLawFit:
    """value = amplitude * N ** exponent."""

    amplitude: float
    exponent: float
    exponent_stderr: float
    r_squared: float
    points: Tuple[Tuple[float, float], ...]

    def predict(self, n) -> np.ndarray:
        return self.amplitude * np.asarray(n, dtype=float) ** self.exponent

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "exponent": self.exponent,
            "exponent_stderr": self.exponent_stderr,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
        }


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Fit ``log y = log a + b log N`` by ordinary least squares.

    Parameters
    ----------
    points : sequence of (N, value)
        At least three rows with positive N and value.

    Returns
    -------
    PowerLawFit
        ``exponent_stderr`` is the usual OLS standard error of the slope;
        it is zero for an exact fit and for exactly three collinear points.
    """
    pts = tuple((float(n), float(v)) for n, v in points)
    if len(pts) < 3:
        raise DomainError(f"power-law fit needs at least 3 points, got {len(pts)}")
    for i, (n, v) in enumerate(pts):
        if not (n > 0 and v > 0 and math.isfinite(v)):
            raise DomainError(f"row {i} (N={n}, value={v}) is not strictly positive")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    sxx = float(((x - x.mean()) ** 2).sum())
    if sxx == 0.0:
        raise DomainError("all abscissae are equal")
    dof = len(pts) - 2
    stderr = math.sqrt(ss_res / dof / sxx) if dof > 0 else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(math.exp(coef[0])), float(coef[1]), stderr, r2, pts)
