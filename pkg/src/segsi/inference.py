"""Naive, selective, over-conditioned and permutation p-values."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from segsi.errors import DegenerateRegionError, ValidationError
from segsi.homotopy import (
    TruncationRegion,
    compute_solution_path,
    oc_region,
    truncation_region,
)
from segsi.hypothesis import (
    NO_DETECTION,
    NoDetection,
    NoiseModel,
    build_test_direction,
    line_parametrization,
)
from segsi.images import ImageVector
from segsi.intervals import log_gauss_mass_set, two_sided_tail
from segsi.network import NetworkSpec, forward

DEFAULT_Z_RANGE_SIGMAS = 20.0


@dataclass(frozen=True)
class TestResult:
    """Outcome of the full selective-inference pipeline on one image."""

    detected: bool
    z_obs: float | None = None
    sigma_eta: float | None = None
    p_naive: float | None = None
    p_selective: float | None = None
    p_oc: float | None = None
    truncation: TruncationRegion | None = None
    oc_truncation: TruncationRegion | None = None
    region_count: int | None = None
    wall_time: float | None = None


def naive_p(z_obs: float, sigma_eta: float) -> float:
    """Two-sided z-test p-value, ignoring selection."""
    if not sigma_eta > 0:
        raise ValueError("sigma_eta must be positive")
    return float(2.0 * ndtr(-abs(z_obs) / sigma_eta))


def truncated_two_sided_p(z_obs: float, sigma_eta: float, Z: TruncationRegion | list) -> float:
    """P(|T| >= |z_obs|) for T ~ N(0, sigma_eta^2) truncated to the region Z.

    Computed by exact interval algebra on Z intersected with the two-sided
    tail, with Gaussian masses evaluated in log space.
    """
    if not sigma_eta > 0:
        raise ValueError("sigma_eta must be positive")
    intervals = Z.intervals if isinstance(Z, TruncationRegion) else list(Z)
    atol = 1e-9 * (1.0 + abs(z_obs))
    if not any(lo - atol <= z_obs <= hi + atol for lo, hi in intervals):
        raise ValidationError(f"z_obs={z_obs} lies outside the truncation region")
    log_den = log_gauss_mass_set(intervals, sigma_eta)
    if log_den == -np.inf:
        raise DegenerateRegionError("truncation region carries no probability mass")
    tail = two_sided_tail(intervals, abs(z_obs))
    log_num = log_gauss_mass_set(tail, sigma_eta)
    if log_num == -np.inf:
        return 0.0
    return float(min(1.0, np.exp(log_num - log_den)))


def selective_p_pipeline(
    net: NetworkSpec,
    x_obs: ImageVector | np.ndarray,
    noise: NoiseModel,
    z_range_sigmas: float = DEFAULT_Z_RANGE_SIGMAS,
    compute_oc: bool = True,
    max_regions: int | None = None,
) -> TestResult:
    """End-to-end selective inference for one image.

    Runs segmentation, builds the test direction and data line, enumerates
    the region path over [-K*sigma_eta, K*sigma_eta] (widened when |z_obs|
    falls outside), and evaluates the truncated-Gaussian p-values.
    """
    t0 = time.perf_counter()
    mask_obs = forward(net, x_obs)
    eta = build_test_direction(mask_obs)
    if isinstance(eta, NoDetection):
        return TestResult(detected=False, wall_time=time.perf_counter() - t0)
    line = line_parametrization(x_obs, eta, noise)
    half = max(z_range_sigmas, abs(line.z_obs) / line.sigma_eta + 1.0) * line.sigma_eta
    z_min, z_max = -half, half
    kwargs = {} if max_regions is None else {"max_regions": max_regions}
    path = compute_solution_path(net, line, z_min, z_max, **kwargs)
    trunc = truncation_region(path, mask_obs, line.z_obs)
    p_sel = truncated_two_sided_p(line.z_obs, line.sigma_eta, trunc)
    p_nv = naive_p(line.z_obs, line.sigma_eta)
    p_oc_val = None
    oc_trunc = None
    if compute_oc:
        oc_trunc = oc_region(net, line, line.z_obs, z_min, z_max)
        p_oc_val = truncated_two_sided_p(line.z_obs, line.sigma_eta, oc_trunc)
    return TestResult(
        detected=True,
        z_obs=line.z_obs,
        sigma_eta=line.sigma_eta,
        p_naive=p_nv,
        p_selective=p_sel,
        p_oc=p_oc_val,
        truncation=trunc,
        oc_truncation=oc_trunc,
        region_count=path.region_count,
        wall_time=time.perf_counter() - t0,
    )


def permutation_test(
    net: NetworkSpec,
    x_obs: ImageVector | np.ndarray,
    B: int = 1000,
    seed: int = 0,
) -> float | NoDetection:
    """Permutation baseline: pixel values are shuffled B times.

    A permutation whose segmentation yields no detection contributes 1 to
    the count (conservative).  Returns NO_DETECTION when the observed image
    itself yields no test.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    values = x_obs.values if isinstance(x_obs, ImageVector) else np.asarray(x_obs, dtype=np.float64)
    mask_obs = forward(net, values)
    eta_obs = build_test_direction(mask_obs)
    if isinstance(eta_obs, NoDetection):
        return NO_DETECTION
    t_obs = abs(float(eta_obs @ values))
    count = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        perm = rng.permutation(values)
        eta_b = build_test_direction(forward(net, perm))
        if isinstance(eta_b, NoDetection):
            count += 1
            continue
        if t_obs <= abs(float(eta_b @ perm)):
            count += 1
    return count / B
