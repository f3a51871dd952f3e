"""Test direction, nuisance decomposition and the data line.

The statistic is the object-minus-background mean difference eta'X.  Fixing
the nuisance component orthogonal (in Sigma-geometry) to eta confines the
data to the line x(z) = a + b*z with z = eta'x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segsi.errors import NumericError, ValidationError
from segsi.images import ImageVector
from segsi.network import SegmentationMask


class NoDetection:
    """Sentinel: the mask has no object or no background, so no test exists."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_DETECTION"


NO_DETECTION = NoDetection()


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian noise: isotropic (sigma) or a full SPD covariance matrix."""

    sigma: float | None = None
    covariance: np.ndarray | None = None

    def __post_init__(self):
        if (self.sigma is None) == (self.covariance is None):
            raise ValidationError("give exactly one of sigma or covariance")
        if self.sigma is not None:
            if not (self.sigma > 0 and np.isfinite(self.sigma)):
                raise ValidationError("sigma must be positive and finite")
        else:
            cov = np.asarray(self.covariance, dtype=np.float64)
            object.__setattr__(self, "covariance", cov)
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise ValidationError("covariance must be square")
            if not np.allclose(cov, cov.T, atol=1e-10):
                raise ValidationError("covariance must be symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise ValidationError("covariance must be positive definite") from exc

    @property
    def is_isotropic(self) -> bool:
        return self.sigma is not None

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Sigma @ v."""
        if self.is_isotropic:
            return (self.sigma**2) * v
        return self.covariance @ v

    @classmethod
    def isotropic(cls, sigma: float) -> "NoiseModel":
        return cls(sigma=float(sigma))

    @classmethod
    def full(cls, covariance: np.ndarray) -> "NoiseModel":
        return cls(covariance=covariance)


@dataclass(frozen=True)
class LineParametrization:
    """x(z) = a + b*z with z_obs = eta'x_obs and sigma_eta = sqrt(eta'Sigma eta)."""

    a: np.ndarray
    b: np.ndarray
    z_obs: float
    eta: np.ndarray
    sigma_eta: float


def build_test_direction(mask: SegmentationMask) -> np.ndarray | NoDetection:
    """Contrast vector: +1/|O| on object pixels, -1/|B| on background pixels.

    Returns NO_DETECTION when either region is empty; such images count as
    undetected and are skipped by the test.
    """
    obj = mask.object_pixels
    bg = mask.background_pixels
    if obj.size == 0 or bg.size == 0:
        return NO_DETECTION
    eta = np.zeros(mask.n, dtype=np.float64)
    eta[obj] = 1.0 / obj.size
    eta[bg] = -1.0 / bg.size
    return eta


def line_parametrization(
    x_obs: ImageVector | np.ndarray, eta: np.ndarray, noise: NoiseModel
) -> LineParametrization:
    """Decompose x_obs into nuisance a and direction b with x_obs = a + b*z_obs."""
    x = x_obs.values if isinstance(x_obs, ImageVector) else np.asarray(x_obs, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    sigma_eta_vec = noise.apply(eta)
    var = float(eta @ sigma_eta_vec)
    if not (var > 0) or not np.isfinite(var):
        raise NumericError(f"degenerate statistic variance {var}")
    b = sigma_eta_vec / var
    z_obs = float(eta @ x)
    a = x - b * z_obs
    return LineParametrization(a=a, b=b, z_obs=z_obs, eta=eta, sigma_eta=float(np.sqrt(var)))


def estimate_variance(reference) -> NoiseModel:
    """Isotropic noise model from the unbiased sample variance of pooled reference values."""
    if hasattr(reference, "__iter__") and not isinstance(reference, np.ndarray):
        parts = [
            r.values if isinstance(r, ImageVector) else np.asarray(r, dtype=np.float64).ravel()
            for r in reference
        ]
        pooled = np.concatenate([np.atleast_1d(p) for p in parts])
    else:
        pooled = np.asarray(reference, dtype=np.float64).ravel()
    if pooled.size < 2:
        raise ValueError("need at least 2 reference values")
    var = float(np.var(pooled, ddof=1))
    if not var > 0:
        raise ValueError("reference values are constant; variance is zero")
    return NoiseModel.isotropic(float(np.sqrt(var)))
