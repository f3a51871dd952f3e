"""Enumeration of the network's piece-signature regions along the data line.

Starting from z_min, each step evaluates the network just inside the
current region, collects the piece-selection inequalities and jumps to the
smallest root of an increasing constraint: that root is the next point
where some unit changes its selected piece.  The regions tile
[z_min, z_max] exactly; the truncation region is the union of regions whose
mask equals the observed one.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segsi.errors import ConsistencyError, NumericError, PathExplosionError
from segsi.hypothesis import LineParametrization
from segsi.intervals import contains, normalize, total_length
from segsi.network import ConstraintSet, NetworkSpec, SegmentationMask, forward_line

# Constraints with |slope| below this never flip along the line.
SLOPE_TOL = 1e-12

DEFAULT_MAX_REGIONS = 10**6


@dataclass(frozen=True)
class Region:
    """One maximal interval of constant piece signature."""

    lo: float
    hi: float
    signature_hash: int
    mask: SegmentationMask
    signature: tuple = field(repr=False, default=())
    piece_changes: int = 0  # units whose piece differs from the previous region

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class RegionPath:
    """Adjacent regions covering [z_min, z_max]."""

    regions: tuple
    z_min: float
    z_max: float

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([r.lo for r in self.regions] + [self.regions[-1].hi])

    @property
    def region_count(self) -> int:
        return len(self.regions)

    def region_at(self, z: float) -> Region:
        los = [r.lo for r in self.regions]
        idx = max(0, bisect_right(los, z) - 1)
        return self.regions[idx]

    def dump(self, path: str | Path) -> None:
        """Line-delimited records: lo, hi, run-length-encoded mask, piece changes."""
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.regions:
                fh.write(
                    json.dumps(
                        {
                            "lo": r.lo,
                            "hi": r.hi,
                            "mask_rle": _rle(r.mask.labels),
                            "piece_changes": r.piece_changes,
                        }
                    )
                    + "\n"
                )


def _rle(labels: np.ndarray) -> list[list[int]]:
    runs = []
    start = 0
    for i in range(1, labels.size + 1):
        if i == labels.size or labels[i] != labels[start]:
            runs.append([int(labels[start]), i - start])
            start = i
    return runs


@dataclass(frozen=True)
class TruncationRegion:
    """Disjoint union of line intervals supporting the conditional null."""

    intervals: tuple
    flavor: str  # "homotopy" or "over-conditioned"

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(tuple(iv) for iv in self.intervals))

    @property
    def total_length(self) -> float:
        return total_length(self.intervals)

    def contains(self, z: float, atol: float = 0.0) -> bool:
        return contains(self.intervals, z, atol)


def next_breakpoint(constraints, z_t: float, z_max: float) -> float:
    """Smallest root of an increasing constraint beyond z_t, else z_max.

    Only constraints with slope > SLOPE_TOL can flip as z grows; their root
    -intercept/slope is where the inequality turns violated.  A root below
    z_t (beyond rounding tolerance) means the constraints were not all
    satisfied at z_t, which is a bookkeeping bug.
    """
    if isinstance(constraints, ConstraintSet):
        intercepts, slopes = constraints.intercepts, constraints.slopes
    else:
        items = list(constraints)
        intercepts = np.array([c.intercept for c in items])
        slopes = np.array([c.slope for c in items])
    pos = slopes > SLOPE_TOL
    if not np.any(pos):
        return z_max
    roots = -intercepts[pos] / slopes[pos]
    if not np.all(np.isfinite(roots)):
        raise NumericError("non-finite breakpoint candidate")
    atol = 1e-9 * (1.0 + abs(z_t))
    lowest = float(roots.min())
    if lowest < z_t - atol:
        raise ConsistencyError(
            f"constraint root {lowest} precedes current point {z_t}"
        )
    ahead = roots[roots > z_t]
    if ahead.size == 0:
        return z_max
    return float(ahead.min())


def compute_solution_path(
    net: NetworkSpec,
    line: LineParametrization,
    z_min: float,
    z_max: float,
    max_regions: int = DEFAULT_MAX_REGIONS,
) -> RegionPath:
    """Sweep [z_min, z_max] and return the full region path."""
    if not z_min < z_max:
        raise ValueError("need z_min < z_max")
    delta = 1e-9 * (z_max - z_min)
    a, b = line.a, line.b
    regions = []
    z_t = z_min
    prev_sig = None
    while z_t < z_max:
        if len(regions) >= max_regions:
            raise PathExplosionError(f"more than {max_regions} regions in the sweep")
        z_rep = min(z_t + delta, 0.5 * (z_t + z_max))
        mask, cons = forward_line(net, a, b, z_rep)
        z_next = min(next_breakpoint(cons, z_rep, z_max), z_max)
        if not z_next > z_t:
            raise ConsistencyError(f"no progress at z={z_t}")
        changes = 0
        if prev_sig is not None:
            changes = sum(
                int(np.count_nonzero(p != q)) for p, q in zip(prev_sig, cons.signature)
            )
        regions.append(
            Region(
                lo=z_t,
                hi=z_next,
                signature_hash=cons.signature_hash(),
                mask=mask,
                signature=tuple(cons.signature),
                piece_changes=changes,
            )
        )
        prev_sig = cons.signature
        z_t = z_next
    return RegionPath(regions=tuple(regions), z_min=z_min, z_max=z_max)


def truncation_region(
    path: RegionPath, mask_obs: SegmentationMask, z_obs: float
) -> TruncationRegion:
    """Union of path regions whose mask equals the observed one."""
    matching = [(r.lo, r.hi) for r in path.regions if r.mask == mask_obs]
    merged = normalize(matching)
    atol = 1e-9 * (1.0 + abs(z_obs))
    if not contains(merged, z_obs, atol):
        raise ConsistencyError(
            f"observed z={z_obs} not covered by any region with the observed mask"
        )
    return TruncationRegion(intervals=tuple(merged), flavor="homotopy")


def oc_region(
    net: NetworkSpec,
    line: LineParametrization,
    z_obs: float,
    z_min: float,
    z_max: float,
) -> TruncationRegion:
    """Single interval on which the full piece signature at z_obs is preserved."""
    _, cons = forward_line(net, line.a, line.b, z_obs)
    slopes, intercepts = cons.slopes, cons.intercepts
    pos = slopes > SLOPE_TOL
    neg = slopes < -SLOPE_TOL
    upper = z_max
    if np.any(pos):
        upper = min(upper, float((-intercepts[pos] / slopes[pos]).min()))
    lower = z_min
    if np.any(neg):
        lower = max(lower, float((-intercepts[neg] / slopes[neg]).max()))
    atol = 1e-9 * (1.0 + abs(z_obs))
    if upper - lower <= 0 or z_obs < lower - atol or z_obs > upper + atol:
        raise ConsistencyError(
            f"empty or misplaced over-conditioned interval [{lower}, {upper}] for z={z_obs}"
        )
    lower = min(lower, z_obs)
    upper = max(upper, z_obs)
    return TruncationRegion(intervals=((lower, upper),), flavor="over-conditioned")
