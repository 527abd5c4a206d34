"""Pareto-front traversal geometry.

Speed -> arc length -> normalized CDF, plus cumulative chord lengths and a
central-difference speed oracle for validating closed forms. Quadrature is
composite Simpson with adaptive panel doubling; speeds are Lipschitz on the
problems in scope, so convergence is fast and runs stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cdf as cdf_mod
from .errors import (
    DegenerateFrontError,
    EvaluationError,
    InsufficientSamplesError,
    ParameterError,
)

__all__ = [
    "QuadratureConfig",
    "arc_length",
    "cdf_from_speed",
    "chord_cumsum",
    "speed_finite_difference",
]

_MAX_DOUBLINGS = 8
FD_STEP_DEFAULT = 1e-5


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite-Simpson budget: panel count (even) and relative stop tolerance."""

    panels: int = 2048
    refinement_tolerance: float = 1e-10

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2 != 0:
            raise ParameterError(f"panels must be even and >= 2, got {self.panels}")
        if self.refinement_tolerance <= 0:
            raise ParameterError("refinement_tolerance must be positive")


def _sample_speed(speed, xs: np.ndarray) -> np.ndarray:
    ys = np.asarray([float(speed(x)) for x in xs])
    bad = ~np.isfinite(ys)
    if np.any(bad):
        w_bad = xs[bad][0]
        raise EvaluationError(f"speed evaluated to a non-finite value at w={w_bad!r}")
    return ys


def _simpson(ys: np.ndarray, h: float) -> float:
    return (h / 3.0) * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-2:2].sum())


def arc_length(speed, w: float, cfg: QuadratureConfig | None = None) -> float:
    """Integrate the speed over [0, w] by adaptive composite Simpson.

    Panels double until successive estimates agree to the configured relative
    tolerance. Monotone nondecreasing in w; arc_length(speed, 0) == 0.
    """
    if not (0.0 <= w <= 1.0):
        raise ParameterError(f"weight {w} outside [0, 1]")
    if cfg is None:
        cfg = QuadratureConfig()
    if w == 0.0:
        return 0.0
    panels = cfg.panels
    xs = np.linspace(0.0, w, panels + 1)
    est = _simpson(_sample_speed(speed, xs), w / panels)
    for _ in range(_MAX_DOUBLINGS):
        panels *= 2
        xs = np.linspace(0.0, w, panels + 1)
        new = _simpson(_sample_speed(speed, xs), w / panels)
        if abs(new - est) <= cfg.refinement_tolerance * max(1.0, abs(new)):
            return new
        est = new
    return est


def cdf_from_speed(
    speed,
    grid_size: int = cdf_mod.DEFAULT_GRID_SIZE,
    cfg: QuadratureConfig | None = None,
) -> cdf_mod.CdfEstimate:
    """Tabulate Phi(w) = s(w)/s(1) on grid_size equispaced knots.

    The cumulative integral is built per knot interval (Simpson panels split
    across intervals), normalized by the final value, and interpolated
    monotonically with endpoints pinned.
    """
    if grid_size < 2:
        raise ParameterError("grid_size must be >= 2")
    if cfg is None:
        cfg = QuadratureConfig()
    intervals = grid_size - 1
    per_interval = max(2, -(-cfg.panels // intervals))
    if per_interval % 2:
        per_interval += 1
    nodes = np.linspace(0.0, 1.0, intervals * per_interval + 1)
    ys = _sample_speed(speed, nodes)
    h = 1.0 / (intervals * per_interval)
    increments = np.empty(intervals)
    for i in range(intervals):
        seg = ys[i * per_interval : (i + 1) * per_interval + 1]
        increments[i] = _simpson(seg, h)
    cumulative = np.concatenate(([0.0], np.cumsum(increments)))
    total = cumulative[-1]
    if total <= cdf_mod.LENGTH_FLOOR:
        raise DegenerateFrontError(
            f"total arc length {total!r} at or below the numerical floor"
        )
    grid = np.linspace(0.0, 1.0, grid_size)
    return cdf_mod._from_dense_values(grid, cumulative / total, grid_size)


def chord_cumsum(points) -> np.ndarray:
    """Cumulative Euclidean chord lengths of an ordered objective-vector list.

    Zero-length segments (duplicate points from an inexact solver) contribute
    zero and are retained so weight/sample indexing stays aligned.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InsufficientSamplesError(
            f"need at least 2 points for chord lengths, got shape {pts.shape}"
        )
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate(([0.0], np.cumsum(seg)))


def speed_finite_difference(problem, w: float, h: float = FD_STEP_DEFAULT) -> float:
    """Central-difference traversal speed from exact scalarized solutions.

    One-sided at the interval endpoints. Propagates solver failures.
    """
    if not (0.0 <= w <= 1.0):
        raise ParameterError(f"weight {w} outside [0, 1]")
    if h <= 0:
        raise ParameterError("step h must be positive")
    lo = max(w - h, 0.0)
    hi = min(w + h, 1.0)
    f_lo = problem.evaluate_objectives(problem.solve_scalarized_exact(lo))
    f_hi = problem.evaluate_objectives(problem.solve_scalarized_exact(hi))
    return float(np.linalg.norm(np.asarray(f_hi) - np.asarray(f_lo)) / (hi - lo))
