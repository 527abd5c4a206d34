"""Normalized arc-length CDF estimates on [0, 1].

A CdfEstimate is either the identity map or a dense monotone table (PCHIP
over a fixed uniform knot grid). Endpoints are pinned to 0 and 1 exactly and
survive every operation. Estimates are immutable; the damped update returns
a new value resampled onto the dense grid, so nested mixtures never deepen
the representation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import monotone_interp as mi
from .errors import (
    DegenerateFrontError,
    DomainError,
    OrderingError,
    ParameterError,
)

__all__ = [
    "CdfEstimate",
    "DEFAULT_GRID_SIZE",
    "identity_cdf",
    "empirical_cdf",
    "damped_update",
    "invert",
    "sup_distance",
]

DEFAULT_GRID_SIZE = 1025
SCAN_POINTS = 10_001
# Consecutive table values closer than this are treated as a flat spot
# (duplicate front points) and jittered before inversion.
FLAT_EPS = 1e-13
FLAT_JITTER = 1e-12
LENGTH_FLOOR = 1e-13


@dataclass
class CdfEstimate:
    """Monotone normalized map [0,1] -> [0,1]; treat instances as immutable."""

    interp: mi.MonotoneCubic | None  # None encodes the identity map
    grid_size: int
    _invertible: mi.MonotoneCubic | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def is_identity(self) -> bool:
        return self.interp is None

    def eval(self, w):
        """Evaluate the CDF at w (scalar or array)."""
        if self.interp is None:
            wv = np.asarray(w, dtype=float)
            if np.any(wv < 0.0) or np.any(wv > 1.0):
                raise DomainError("weight outside [0, 1]")
            return float(wv) if np.ndim(w) == 0 else wv.copy()
        return mi.eval_interp(self.interp, w)

    def derivative(self, w):
        if self.interp is None:
            return 1.0 if np.ndim(w) == 0 else np.ones_like(np.asarray(w, float))
        return mi.eval_derivative(self.interp, w)

    def invert(self, q: float) -> float:
        return invert(self, q)

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (w, phi) at the internal grid."""
        grid = np.linspace(0.0, 1.0, self.grid_size)
        return grid, np.asarray(self.eval(grid), dtype=float)

    def to_csv(self, path_or_file) -> None:
        """Write the (w, phi) table as a two-column CSV."""
        grid, phi = self.table()
        buf = io.StringIO()
        buf.write("w,phi\n")
        for w, p in zip(grid, phi):
            buf.write(f"{float(w)!r},{float(p)!r}\n")
        data = buf.getvalue()
        if hasattr(path_or_file, "write"):
            path_or_file.write(data)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(data)

    def _invertible_interp(self) -> mi.MonotoneCubic:
        # Lazily build (and cache) a strictly increasing variant: flat spots
        # from duplicate front points get a tiny increasing jitter so the
        # outer loop can always invert.
        if self._invertible is None:
            assert self.interp is not None
            values = self.interp.values
            if np.any(np.diff(values) < FLAT_EPS):
                jittered = values + FLAT_JITTER * np.arange(values.size)
                self._invertible = mi.build_pchip(self.interp.knots, jittered)
            else:
                self._invertible = self.interp
        return self._invertible


def _from_dense_values(grid: np.ndarray, phi: np.ndarray, grid_size: int) -> CdfEstimate:
    phi = np.asarray(phi, dtype=float).copy()
    if np.any(np.diff(phi) < -1e-9):
        raise OrderingError("dense CDF values decrease beyond roundoff noise")
    # Inputs are monotone up to float noise; clip the noise, then pin.
    np.clip(phi, 0.0, 1.0, out=phi)
    np.maximum.accumulate(phi, out=phi)
    phi[0] = 0.0
    phi[-1] = 1.0
    return CdfEstimate(interp=mi.build_pchip(grid, phi), grid_size=grid_size)


def identity_cdf(grid_size: int = DEFAULT_GRID_SIZE) -> CdfEstimate:
    """The initial estimate: the identity map on [0, 1]."""
    return CdfEstimate(interp=None, grid_size=grid_size)


def from_callable(fn, grid_size: int = DEFAULT_GRID_SIZE) -> CdfEstimate:
    """Tabulate a monotone callable on the dense grid and wrap it.

    Used for closed-form CDFs; fn must map [0,1] -> [0,1] nondecreasing with
    fn(0)=0, fn(1)=1.
    """
    grid = np.linspace(0.0, 1.0, grid_size)
    phi = np.asarray([float(fn(w)) for w in grid])
    return _from_dense_values(grid, phi, grid_size)


def empirical_cdf(
    weights,
    cumulative_lengths,
    grid_size: int = DEFAULT_GRID_SIZE,
    coordinate: str = "q",
    coordinate_map: "CdfEstimate | None" = None,
) -> CdfEstimate:
    """Rebuild a CDF estimate from cumulative chord lengths at sampled weights.

    Interpolates the normalized lengths with PCHIP and resamples onto the
    dense internal grid with pinned endpoints. Two interpolation coordinates
    are supported:

    - "q": knots are the uniform quantile levels n/N that generated the
      weights, pulled back to w through ``coordinate_map`` (the estimate the
      weights were inverted from). Knot spacing stays uniform however
      unevenly the weights cluster, which keeps the reconstruction floor at
      its clean N^-2 scaling; this is the default used by the outer loop.
    - "w": knots are the weights themselves. Kept as the plain-coordinate
      mode for experiments.
    """
    w = np.asarray(weights, dtype=float)
    s = np.asarray(cumulative_lengths, dtype=float)
    if w.ndim != 1 or w.shape != s.shape or w.size < 2:
        raise ParameterError("weights and lengths must be 1-d, equal length >= 2")
    if w[0] != 0.0 or w[-1] != 1.0:
        raise ParameterError("weights must start at 0 and end at 1 exactly")
    if np.any(np.diff(w) <= 0):
        raise OrderingError("weights must be strictly increasing (repeats not allowed)")
    if np.any(np.diff(s) < 0):
        raise OrderingError("cumulative lengths must be nondecreasing")
    if coordinate not in ("w", "q"):
        raise ParameterError(f"unknown interpolation coordinate {coordinate!r}")
    total = s[-1] - s[0]
    if not np.isfinite(total) or total <= LENGTH_FLOOR:
        raise DegenerateFrontError(
            f"total chord length {total!r} at or below the numerical floor"
        )
    values = (s - s[0]) / total
    values[0] = 0.0
    values[-1] = 1.0
    grid = np.linspace(0.0, 1.0, grid_size)
    if coordinate == "q" and coordinate_map is not None and not coordinate_map.is_identity:
        # Quantile levels of the generating estimate; exact by construction.
        knots = np.arange(w.size) / (w.size - 1)
        coarse = mi.build_pchip(knots, values)
        pullback = np.clip(np.asarray(coordinate_map.eval(grid)), 0.0, 1.0)
        dense = mi.eval_interp(coarse, pullback)
    else:
        coarse = mi.build_pchip(w, values)
        dense = mi.eval_interp(coarse, grid)
    return _from_dense_values(grid, dense, grid_size)


def damped_update(
    prev: CdfEstimate, empirical: CdfEstimate, alpha: float
) -> CdfEstimate:
    """Mix alpha * empirical + (1 - alpha) * prev, resampled on the dense grid."""
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    grid_size = max(prev.grid_size, empirical.grid_size)
    grid = np.linspace(0.0, 1.0, grid_size)
    mixed = alpha * np.asarray(empirical.eval(grid)) + (1.0 - alpha) * np.asarray(
        prev.eval(grid)
    )
    return _from_dense_values(grid, mixed, grid_size)


def invert(cdf: CdfEstimate, q: float) -> float:
    """Return w with cdf(w) = q (within 1e-10); exact at q in {0, 1}."""
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"quantile {q} outside [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    if cdf.interp is None:
        return float(q)
    return mi.invert_monotone(cdf._invertible_interp(), q, tol=1e-12)


def sup_distance(a: CdfEstimate, b: CdfEstimate, scan_points: int = SCAN_POINTS) -> float:
    """Max |a(w) - b(w)| over a uniform scan (a lower bound on the true sup)."""
    grid = np.linspace(0.0, 1.0, scan_points)
    fa = np.asarray(a.eval(grid), dtype=float)
    fb = np.asarray(b.eval(grid), dtype=float)
    return float(np.max(np.abs(fa - fb)))
