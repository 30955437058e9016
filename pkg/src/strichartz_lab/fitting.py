"""Log-log slope fitting for measured power laws."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

__all__ = ["fit_slope"]


def fit_slope(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """OLS fit of ``log2 value`` against ``log2 parameter``; returns ``(slope, stderr)``."""
    pts = [(float(p), float(v)) for p, v in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(not (p > 0) for p, _ in pts):
        raise ValueError("parameters must be positive")
    if any(not (v > 0) or not math.isfinite(v) for _, v in pts):
        raise ValueError("values must be positive and finite")
    x = np.log2([p for p, _ in pts])
    y = np.log2([v for _, v in pts])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    if sxx == 0.0:
        raise ValueError("parameters must not all coincide")
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    dof = len(pts) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr
