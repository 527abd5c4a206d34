"""Monotone piecewise-cubic Hermite interpolation (PCHIP).

Slopes follow the Fritsch-Carlson construction: weighted harmonic means of
adjacent secants in the interior (zeroed on sign change or zero secants) and
the three-point formula with sign/magnitude clipping at the endpoints, so the
interpolant is C^1 and preserves monotone data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonInvertibleError, OrderingError, ShapeError

__all__ = [
    "MonotoneCubic",
    "build_pchip",
    "eval_interp",
    "eval_derivative",
    "invert_monotone",
]


@dataclass(frozen=True)
class MonotoneCubic:
    """Cubic Hermite interpolant with precomputed knot slopes.

    Immutable after construction; evaluation is stateless and thread-safe.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray


def build_pchip(knots, values) -> MonotoneCubic:
    """Build the monotonicity-preserving Hermite interpolant through the data.

    Args:
        knots: strictly increasing abscissae, length >= 2
        values: ordinates, same length as knots

    Returns:
        MonotoneCubic passing through every (knot, value) pair exactly.
    """
    x = np.asarray(knots, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"knots/values shapes differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ShapeError("need at least 2 knots")
    h = np.diff(x)
    if np.any(h <= 0):
        bad = int(np.argmax(h <= 0))
        raise OrderingError(f"knots not strictly increasing at index {bad}")

    delta = np.diff(y) / h
    n_seg = delta.size
    m = np.empty(x.size)

    if n_seg == 1:
        # Single interval: both endpoint slopes equal the secant.
        m[0] = m[1] = delta[0]
        return MonotoneCubic(knots=x, values=y, slopes=m)

    # Interior slopes: weighted harmonic mean of adjacent secants, zeroed
    # whenever the secants change sign or either vanishes.
    for n in range(1, n_seg):
        if delta[n - 1] * delta[n] <= 0.0:
            m[n] = 0.0
        else:
            w1 = 2.0 * h[n] + h[n - 1]
            w2 = h[n] + 2.0 * h[n - 1]
            m[n] = (w1 + w2) / (w1 / delta[n - 1] + w2 / delta[n])

    m[0] = _endpoint_slope(h[0], h[1], delta[0], delta[1])
    m[-1] = _endpoint_slope(h[-1], h[-2], delta[-1], delta[-2])
    return MonotoneCubic(knots=x, values=y, slopes=m)


def _endpoint_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    # Three-point endpoint formula, clipped so monotonicity is preserved.
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if m * d0 <= 0.0:
        return 0.0
    if abs(m) > 3.0 * abs(d0):
        return 3.0 * d0
    return m


def _locate(interp: MonotoneCubic, w):
    x = interp.knots
    w = np.asarray(w, dtype=float)
    if np.any(w < x[0]) or np.any(w > x[-1]):
        raise DomainError(
            f"evaluation point outside knot range [{x[0]}, {x[-1]}]"
        )
    idx = np.clip(np.searchsorted(x, w, side="right") - 1, 0, x.size - 2)
    return w, idx


def eval_interp(interp: MonotoneCubic, w):
    """Evaluate the interpolant at w (scalar or array); exact at knots."""
    wv, idx = _locate(interp, w)
    x, y, m = interp.knots, interp.values, interp.slopes
    h = x[idx + 1] - x[idx]
    t = (wv - x[idx]) / h
    t2 = t * t
    t3 = t2 * t
    out = (
        (2.0 * t3 - 3.0 * t2 + 1.0) * y[idx]
        + (t3 - 2.0 * t2 + t) * h * m[idx]
        + (-2.0 * t3 + 3.0 * t2) * y[idx + 1]
        + (t3 - t2) * h * m[idx + 1]
    )
    return float(out) if np.isscalar(w) or np.ndim(w) == 0 else out


def eval_derivative(interp: MonotoneCubic, w):
    """Analytic derivative of the Hermite cubic; equals the stored slope at knots."""
    wv, idx = _locate(interp, w)
    x, y, m = interp.knots, interp.values, interp.slopes
    h = x[idx + 1] - x[idx]
    t = (wv - x[idx]) / h
    t2 = t * t
    out = (
        (6.0 * t2 - 6.0 * t) * y[idx] / h
        + (3.0 * t2 - 4.0 * t + 1.0) * m[idx]
        + (-6.0 * t2 + 6.0 * t) * y[idx + 1] / h
        + (3.0 * t2 - 2.0 * t) * m[idx + 1]
    )
    return float(out) if np.isscalar(w) or np.ndim(w) == 0 else out


def invert_monotone(
    interp: MonotoneCubic, target: float, tol: float = 1e-12, max_iter: int = 100
) -> float:
    """Solve eval_interp(interp, w) = target by bisection.

    Requires strictly increasing values. Endpoint targets return the exact
    endpoint knots; interior targets are bisected on the containing interval
    until |eval - target| <= tol.
    """
    y = interp.values
    if np.any(np.diff(y) <= 0):
        raise NonInvertibleError("values not strictly increasing")
    if target < y[0] or target > y[-1]:
        raise DomainError(f"target {target} outside value range [{y[0]}, {y[-1]}]")
    if target == y[0]:
        return float(interp.knots[0])
    if target == y[-1]:
        return float(interp.knots[-1])

    i = int(np.searchsorted(y, target, side="right") - 1)
    i = min(max(i, 0), y.size - 2)
    lo, hi = float(interp.knots[i]), float(interp.knots[i + 1])
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f = eval_interp(interp, mid)
        if abs(f - target) <= tol:
            return mid
        if f < target:
            lo = mid
        else:
            hi = mid
    return mid
