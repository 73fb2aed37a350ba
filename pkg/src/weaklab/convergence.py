"""Limit extraction helpers: log-log slope fits and Richardson extrapolation."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

SLOPE_FLOOR = 1e-15


def loglog_slope(x, y, floor: float = SLOPE_FLOOR) -> float:
    """Least-squares slope of log|y| against log x.

    Points with |y| at or below ``floor`` (already at machine noise) are
    dropped before fitting; at least two usable points are required.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > floor)
    if int(np.sum(keep)) < 2:
        raise DomainError("need at least two points above the noise floor for a slope fit")
    lx = np.log(x[keep])
    ly = np.log(y[keep])
    slope, _intercept = np.polyfit(lx, ly, 1)
    return float(slope)


def richardson_limit(steps, values, power: float = 2.0) -> float:
    """Extrapolate ``values(step) -> limit`` as ``step -> 0``.

    Assumes an expansion in powers of ``step**power`` and evaluates the
    Neville interpolation of the data through ``x = step**power`` at
    ``x = 0``.  With n points the leading surviving error is the n-th
    coefficient times the product of all ``x`` values.
    """
    x = np.asarray(steps, dtype=float) ** power
    t = np.asarray(values, dtype=float).copy()
    n = t.size
    if n == 0 or x.size != n:
        raise DomainError("steps and values must be equal-length and nonempty")
    # in-place Neville tableau: after pass j, t[i] interpolates points i-j..i
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            t[i] = (x[i] * t[i - 1] - x[i - j] * t[i]) / (x[i] - x[i - j])
    return float(t[n - 1])
