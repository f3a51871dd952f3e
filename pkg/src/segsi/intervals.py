"""Disjoint-interval arithmetic and stable Gaussian interval masses.

Interval sets are lists of (lo, hi) pairs with lo < hi, kept sorted and
pairwise disjoint; +/-inf endpoints are allowed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, logsumexp

# Beyond this many standard deviations double precision carries no mass.
TAIL_CUTOFF_SIGMAS = 38.0

Interval = tuple[float, float]


def normalize(intervals, merge_gap: float = 0.0) -> list[Interval]:
    """Sort, drop empty intervals and merge overlapping/touching ones."""
    items = sorted((float(lo), float(hi)) for lo, hi in intervals if hi > lo)
    out: list[Interval] = []
    for lo, hi in items:
        if out and lo <= out[-1][1] + merge_gap:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def intersect(a, b) -> list[Interval]:
    """Intersection of two disjoint sorted interval lists."""
    out: list[Interval] = []
    i = j = 0
    a, b = list(a), list(b)
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def total_length(intervals) -> float:
    return float(sum(hi - lo for lo, hi in intervals))


def contains(intervals, x: float, atol: float = 0.0) -> bool:
    return any(lo - atol <= x <= hi + atol for lo, hi in intervals)


def two_sided_tail(intervals, cut: float) -> list[Interval]:
    """Intersection with {|z| >= cut}."""
    cut = abs(float(cut))
    return intersect(intervals, [(-np.inf, -cut), (cut, np.inf)])


def log_gauss_mass(lo: float, hi: float) -> float:
    """log P(lo < N(0,1) < hi), accurate far into the tails."""
    if hi <= lo:
        return -np.inf
    if lo >= TAIL_CUTOFF_SIGMAS or hi <= -TAIL_CUTOFF_SIGMAS:
        return -np.inf
    if lo >= 0.0:
        # work in the upper tail via the survival function
        lo, hi = -hi, -lo
    if hi <= 0.0:
        la, lb = log_ndtr(lo), log_ndtr(hi)
        with np.errstate(divide="ignore"):
            return float(lb + np.log1p(-np.exp(la - lb)))
    # interval straddles zero: both CDF values are moderate
    mass = np.exp(log_ndtr(hi)) - np.exp(log_ndtr(lo))
    with np.errstate(divide="ignore"):
        return float(np.log(mass)) if mass > 0 else -np.inf


def log_gauss_mass_set(intervals, sigma: float) -> float:
    """log of the N(0, sigma^2) mass of a disjoint interval set."""
    logs = [log_gauss_mass(lo / sigma, hi / sigma) for lo, hi in intervals]
    if not logs:
        return -np.inf
    return float(logsumexp(logs))
