"""Front coverage and quality metrics.

All metrics use the minimization convention. CV uses the population
(divide-by-n) standard deviation of consecutive segment lengths, matching the
uniform weighting of segments in the spacing bound it instantiates. The gap
ratio reports the sentinel -1.0 when a zero-length segment makes the ratio
undefined, so consumers can tell "undefined" apart from "huge".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFrontError,
    DomainError,
    InsufficientSamplesError,
    ParameterError,
)

__all__ = [
    "PfSampleSet",
    "GAP_RATIO_UNDEFINED",
    "cv",
    "gap_ratio",
    "hypervolume_2d",
    "igd",
    "nondominated_filter",
]

GAP_RATIO_UNDEFINED = -1.0


@dataclass(frozen=True)
class PfSampleSet:
    """Ordered (weight, objective-vector) samples from one front sweep."""

    weights: np.ndarray
    objectives: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        f = np.asarray(self.objectives, dtype=float)
        if w.ndim != 1 or f.ndim != 2 or f.shape != (w.size, 2):
            raise ParameterError(
                f"expected weights (n,) and objectives (n, 2), got {w.shape}, {f.shape}"
            )
        if np.any(np.diff(w) < 0):
            raise ParameterError("weights must be nondecreasing")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "objectives", f)

    def __len__(self) -> int:
        return self.weights.size

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.objectives, axis=0), axis=1)


def _require_segments(samples: PfSampleSet) -> np.ndarray:
    if len(samples) < 3:
        raise InsufficientSamplesError("spacing metrics need at least 3 points")
    return samples.segment_lengths()


def cv(samples: PfSampleSet) -> float:
    """Coefficient of variation of consecutive segment lengths (0 = uniform)."""
    seg = _require_segments(samples)
    mean = seg.mean()
    if mean <= 0.0:
        raise DegenerateFrontError("mean segment length is zero")
    return float(seg.std() / mean)


def gap_ratio(samples: PfSampleSet) -> float:
    """Max over min consecutive segment length; -1.0 when a segment has zero length."""
    seg = _require_segments(samples)
    smallest = seg.min()
    if smallest <= 0.0:
        return GAP_RATIO_UNDEFINED
    return float(seg.max() / smallest)


def hypervolume_2d(samples: PfSampleSet, reference) -> float:
    """Exact dominated area against the reference point (minimization).

    Every sample must strictly dominate the reference in both coordinates.
    Dominated samples contribute nothing.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.shape != (2,):
        raise ParameterError("reference must be a 2-vector")
    pts = samples.objectives
    bad = np.nonzero(~((pts[:, 0] < ref[0]) & (pts[:, 1] < ref[1])))[0]
    if bad.size:
        raise DomainError(
            f"point {tuple(pts[bad[0]])} does not strictly dominate the reference"
        )
    front = nondominated_filter(pts)
    order = np.lexsort((front[:, 1], front[:, 0]))
    front = front[order]
    f1 = np.append(front[:, 0], ref[0])
    widths = np.diff(f1)
    heights = ref[1] - front[:, 1]
    return float(np.sum(widths * heights))


def igd(samples: PfSampleSet, reference_front) -> float:
    """Mean distance from each reference point to its nearest sample."""
    ref = np.asarray(reference_front, dtype=float)
    if ref.size == 0:
        raise ParameterError("reference front must be nonempty")
    ref = ref.reshape(-1, 2)
    diffs = ref[:, None, :] - samples.objectives[None, :, :]
    dists = np.linalg.norm(diffs, axis=2)
    return float(dists.min(axis=1).mean())


def nondominated_filter(points) -> np.ndarray:
    """Minimization-sense non-dominated subset, sorted by f1 (stable on ties).

    A point is dominated when another point is no worse in both coordinates
    and strictly better in at least one; exact duplicates are all retained.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return pts
    order = np.argsort(pts[:, 0], kind="stable")
    kept: list[int] = []
    best_f2_strictly_left = np.inf  # over points with strictly smaller f1
    i = 0
    n = order.size
    while i < n:
        # Group of equal f1 values.
        j = i
        while j < n and pts[order[j], 0] == pts[order[i], 0]:
            j += 1
        group = order[i:j]
        group_min = pts[group, 1].min()
        for idx in group:
            f2 = pts[idx, 1]
            if f2 < best_f2_strictly_left and f2 == group_min:
                kept.append(idx)
        best_f2_strictly_left = min(best_f2_strictly_left, group_min)
        i = j
    return pts[kept]
