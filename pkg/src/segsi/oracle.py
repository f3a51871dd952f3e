"""Grid-scan oracle for the truncation region.

Evaluates the plain forward pass on a dense grid of line positions and
refines each mask transition by bisection, independently of the homotopy
sweep.  Used to cross-check the region path on small networks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segsi.homotopy import RegionPath, TruncationRegion
from segsi.intervals import normalize
from segsi.network import NetworkSpec, SegmentationMask, forward


def grid_scan_truncation(
    net: NetworkSpec,
    a: np.ndarray,
    b: np.ndarray,
    mask_obs: SegmentationMask,
    z_min: float,
    z_max: float,
    step: float,
    refine_tol: float,
) -> list[tuple[float, float]]:
    """Intervals where the mask equals mask_obs, by grid scan + bisection."""
    grid = np.arange(z_min, z_max + 0.5 * step, step)
    grid[-1] = min(grid[-1], z_max)
    matches = np.array([forward(net, a + b * g) == mask_obs for g in grid])
    intervals = []
    open_lo = z_min if matches[0] else None
    for i in range(1, grid.size):
        if matches[i] == matches[i - 1]:
            continue
        boundary = _bisect_transition(net, a, b, grid[i - 1], grid[i], mask_obs, matches[i - 1], refine_tol)
        if matches[i]:
            open_lo = boundary
        else:
            intervals.append((open_lo, boundary))
            open_lo = None
    if open_lo is not None:
        intervals.append((open_lo, z_max))
    return normalize(intervals)


def _bisect_transition(net, a, b, lo, hi, mask_obs, lo_matches, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (forward(net, a + b * mid) == mask_obs) == lo_matches:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class OracleComparison:
    max_endpoint_deviation: float
    mask_disagreements: int
    n_grid_points: int

    def ok(self, tol: float) -> bool:
        return self.mask_disagreements == 0 and self.max_endpoint_deviation <= tol


def compare_with_path(
    net: NetworkSpec,
    a: np.ndarray,
    b: np.ndarray,
    path: RegionPath,
    trunc: TruncationRegion,
    mask_obs: SegmentationMask,
    step: float,
    refine_tol: float,
) -> OracleComparison:
    """Check the homotopy result against an independent grid scan.

    Every grid point's plain-forward mask must agree with the mask of the
    path region containing it, and every oracle interval endpoint must sit
    next to a homotopy endpoint.
    """
    z_min, z_max = path.z_min, path.z_max
    grid = np.arange(z_min + 0.5 * step, z_max, step)
    disagreements = 0
    for g in grid:
        if forward(net, a + b * g) != path.region_at(g).mask:
            disagreements += 1
    oracle_ivs = grid_scan_truncation(net, a, b, mask_obs, z_min, z_max, step, refine_tol)
    homotopy_endpoints = np.array(
        [e for iv in trunc.intervals for e in iv], dtype=np.float64
    )
    max_dev = 0.0
    for lo, hi in oracle_ivs:
        for endpoint in (lo, hi):
            if not homotopy_endpoints.size:
                max_dev = np.inf
                break
            max_dev = max(max_dev, float(np.min(np.abs(homotopy_endpoints - endpoint))))
    return OracleComparison(
        max_endpoint_deviation=max_dev,
        mask_disagreements=disagreements,
        n_grid_points=grid.size,
    )
