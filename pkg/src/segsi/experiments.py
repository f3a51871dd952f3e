"""Synthetic-data experiment harness.

Reproduces the validation studies: false positive rate, power, truncation
interval length, breakpoint counts, robustness to non-Gaussian noise and
estimated variance, pivot uniformity, permutation baseline and the
grid-scan oracle check.  Every trial derives its RNG stream from
(root seed, trial index), so reports are deterministic up to wall time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import kstest

from segsi.errors import ValidationError
from segsi.homotopy import compute_solution_path, truncation_region
from segsi.hypothesis import (
    NO_DETECTION,
    NoDetection,
    NoiseModel,
    build_test_direction,
    estimate_variance,
    line_parametrization,
)
from segsi.images import ImageVector
from segsi.inference import (
    naive_p,
    permutation_test,
    selective_p_pipeline,
)
from segsi.netgen import DEFAULT_NET_SEED, make_cnn, make_pivot_net
from segsi.network import NetworkSpec, forward
from segsi.oracle import compare_with_path

NOISE_FAMILIES = (
    "gaussian",
    "laplace",
    "skew-normal",
    "student-t",
    "gaussian-correlated",
)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 64
    trials: int = 120
    delta_mu: float = 0.0
    alpha: float = 0.05
    noise_family: str = "gaussian"
    rho: float = 0.5
    sigma_mode: str = "known"  # known | estimated
    seed: int = 0
    B: int = 1000
    net_seed: int = DEFAULT_NET_SEED
    z_range_sigmas: float = 20.0

    def __post_init__(self):
        side = math.isqrt(self.n)
        if side * side != self.n:
            raise ValidationError(f"n={self.n} must be a perfect square")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.noise_family not in NOISE_FAMILIES:
            raise ValidationError(f"unknown noise family {self.noise_family!r}")
        if self.sigma_mode not in ("known", "estimated"):
            raise ValidationError(f"unknown sigma mode {self.sigma_mode!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    records: list
    aggregates: dict

    def payload(self) -> dict:
        """Deterministic content: every wall-time field stripped."""
        records = [
            {k: v for k, v in r.items() if not k.endswith("time")} for r in self.records
        ]
        return {
            "kind": self.kind,
            "config": self.config,
            "records": records,
            "aggregates": self.aggregates,
        }

    def write(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "trials.jsonl", "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")
        summary = {"kind": self.kind, "config": self.config, "aggregates": self.aggregates}
        (out_dir / "summary.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
        if "qq" in self.aggregates:
            qq = self.aggregates["qq"]
            with open(out_dir / "qq.csv", "w", encoding="utf-8") as fh:
                fh.write("uniform_quantile,selective_p\n")
                for u, p in zip(qq["uniform"], qq["selective"]):
                    fh.write(f"{u},{p}\n")


# ---------------------------------------------------------------------------
# Data generators


def correlated_covariance(n: int, rho: float) -> np.ndarray:
    """Separable grid covariance: entry rho^(Manhattan grid distance)."""
    side = math.isqrt(n)
    idx = np.arange(side)
    axis = rho ** np.abs(idx[:, None] - idx[None, :])
    return np.kron(axis, axis)


def noise_model_for(family: str, n: int, rho: float = 0.5) -> NoiseModel:
    """The exact noise model the generator targets (unit variance throughout)."""
    if family == "gaussian-correlated":
        return NoiseModel.full(correlated_covariance(n, rho))
    return NoiseModel.isotropic(1.0)


def _standardized_draw(family: str, n: int, rng: np.random.Generator, rho: float) -> np.ndarray:
    if family == "gaussian":
        return rng.standard_normal(n)
    if family == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=n)
    if family == "skew-normal":
        # two-Gaussian construction with shape parameter 10, then standardized
        shape = 10.0
        delta = shape / math.sqrt(1.0 + shape * shape)
        u = np.abs(rng.standard_normal(n))
        v = rng.standard_normal(n)
        x = delta * u + math.sqrt(1.0 - delta * delta) * v
        mean = delta * math.sqrt(2.0 / math.pi)
        sd = math.sqrt(1.0 - 2.0 * delta * delta / math.pi)
        return (x - mean) / sd
    if family == "student-t":
        df = 20.0
        return rng.standard_t(df, size=n) / math.sqrt(df / (df - 2.0))
    if family == "gaussian-correlated":
        side = math.isqrt(n)
        idx = np.arange(side)
        axis = rho ** np.abs(idx[:, None] - idx[None, :])
        chol = np.linalg.cholesky(axis)
        g = rng.standard_normal((side, side))
        return (chol @ g @ chol.T).ravel()
    raise ValueError(f"unknown noise family {family!r}")


def generate_null_image(n: int, family: str, rng: np.random.Generator, rho: float = 0.5) -> ImageVector:
    """Zero-mean unit-variance noise image from the named family."""
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"n={n} must be a perfect square")
    return ImageVector(_standardized_draw(family, n, rng, rho), side, side)


def object_square_indices(n: int) -> np.ndarray:
    """Flat indices of the centered square object covering n/4 pixels."""
    side = math.isqrt(n)
    s = side // 2
    off = (side - s) // 2
    rows, cols = np.meshgrid(np.arange(off, off + s), np.arange(off, off + s), indexing="ij")
    return (rows * side + cols).ravel()


def generate_signal_image(
    n: int, delta_mu: float, rng: np.random.Generator
) -> tuple[ImageVector, np.ndarray]:
    """Unit Gaussian noise plus mean delta_mu on a centered square object."""
    if delta_mu < 0:
        raise ValueError("delta_mu must be >= 0")
    side = math.isqrt(n)
    values = rng.standard_normal(n)
    obj = object_square_indices(n)
    values[obj] += delta_mu
    return ImageVector(values, side, side), obj


# ---------------------------------------------------------------------------
# Trial loop shared by FPR / power / robustness


def _run_trials(config: ExperimentConfig, net: NetworkSpec, signal: bool) -> list[dict]:
    records = []
    for i in range(config.trials):
        rng = np.random.default_rng([config.seed, i])
        if signal:
            image, _ = generate_signal_image(config.n, config.delta_mu, rng)
        else:
            image = generate_null_image(config.n, config.noise_family, rng, config.rho)
        if config.sigma_mode == "estimated":
            noise = estimate_variance(image.values)
        else:
            noise = noise_model_for(config.noise_family, config.n, config.rho)
        res = selective_p_pipeline(
            net, image, noise, z_range_sigmas=config.z_range_sigmas, compute_oc=True
        )
        rec = {"trial": i, "detected": res.detected}
        if res.detected:
            rec.update(
                z_obs=res.z_obs,
                sigma_eta=res.sigma_eta,
                p_naive=res.p_naive,
                p_selective=res.p_selective,
                p_oc=res.p_oc,
                trunc_length=res.truncation.total_length,
                oc_length=res.oc_truncation.total_length,
                region_count=res.region_count,
                wall_time=res.wall_time,
            )
        records.append(rec)
    return records


def _rate(records, key, alpha):
    detected = [r for r in records if r["detected"]]
    if not detected:
        return None, 0
    hits = sum(1 for r in detected if r[key] < alpha)
    return hits / len(detected), len(detected)


def _binomial_se(rate, count):
    if rate is None or count == 0:
        return None
    return math.sqrt(max(rate * (1.0 - rate), 1e-12) / count)


def run_fpr_experiment(config: ExperimentConfig, net: NetworkSpec | None = None) -> ExperimentReport:
    """Null-image rejection rates for the selective, naive and oc p-values."""
    if config.delta_mu != 0:
        raise ValidationError("FPR experiment needs delta_mu = 0")
    net = net or make_cnn(config.n, config.net_seed)
    records = _run_trials(config, net, signal=False)
    aggregates = {}
    for key in ("p_selective", "p_naive", "p_oc"):
        rate, count = _rate(records, key, config.alpha)
        aggregates[f"fpr_{key[2:]}"] = rate
        aggregates[f"fpr_{key[2:]}_se"] = _binomial_se(rate, count)
    detected = [r for r in records if r["detected"]]
    aggregates["n_detected"] = len(detected)
    aggregates["mean_region_count"] = (
        float(np.mean([r["region_count"] for r in detected])) if detected else None
    )
    aggregates["mean_trunc_length"] = (
        float(np.mean([r["trunc_length"] for r in detected])) if detected else None
    )
    return ExperimentReport("fpr", asdict(config), records, aggregates)


def run_power_experiment(config: ExperimentConfig, net: NetworkSpec | None = None) -> ExperimentReport:
    """Signal-image power (detected & rejected / detected) for homotopy and oc."""
    if not config.delta_mu > 0:
        raise ValidationError("power experiment needs delta_mu > 0")
    net = net or make_cnn(config.n, config.net_seed)
    records = _run_trials(config, net, signal=True)
    power_h, count = _rate(records, "p_selective", config.alpha)
    power_oc, _ = _rate(records, "p_oc", config.alpha)
    detected = [r for r in records if r["detected"]]
    aggregates = {
        "power_homotopy": power_h,
        "power_oc": power_oc,
        "power_homotopy_se": _binomial_se(power_h, count),
        "n_detected": len(detected),
        "mean_trunc_length": float(np.mean([r["trunc_length"] for r in detected])) if detected else None,
        "mean_oc_length": float(np.mean([r["oc_length"] for r in detected])) if detected else None,
    }
    return ExperimentReport("power", asdict(config), records, aggregates)


def run_breakpoint_experiment(
    config: ExperimentConfig, n_grid=(16, 64, 256)
) -> ExperimentReport:
    """Mean encountered-region count per image size, with a log-log trend fit."""
    records = []
    means = []
    for n in n_grid:
        sub = ExperimentConfig(**{**asdict(config), "n": n, "delta_mu": 0.0})
        net = make_cnn(n, config.net_seed)
        recs = _run_trials(sub, net, signal=False)
        counts = [r["region_count"] for r in recs if r["detected"]]
        mean_count = float(np.mean(counts)) if counts else None
        means.append(mean_count)
        records.append({"n": n, "mean_region_count": mean_count, "trials": len(recs)})
    usable = [(n, m) for n, m in zip(n_grid, means) if m]
    slope = None
    if len(usable) >= 2:
        xs = np.log([n for n, _ in usable])
        ys = np.log([m for _, m in usable])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return ExperimentReport(
        "breakpoints",
        asdict(config),
        records,
        {"loglog_slope": slope, "n_grid": list(n_grid), "mean_counts": means},
    )


def run_pivot_experiment(config: ExperimentConfig, activation: str = "relu") -> ExperimentReport:
    """Null-pivot QQ data and KS uniformity statistics.

    The relu variant runs the segmentation CNN at config.n; the smooth
    variants run the 8-16-8 dense net with the piecewise approximation.
    """
    net = make_pivot_net(activation, config.n, config.net_seed)
    n_eff = net.n_pixels
    records = []
    for i in range(config.trials):
        rng = np.random.default_rng([config.seed, i])
        values = _standardized_draw(config.noise_family, n_eff, rng, config.rho)
        image = ImageVector(values, net.input_height, net.input_width)
        noise = noise_model_for(config.noise_family, n_eff, config.rho)
        res = selective_p_pipeline(
            net, image, noise, z_range_sigmas=config.z_range_sigmas, compute_oc=False
        )
        rec = {"trial": i, "detected": res.detected}
        if res.detected:
            rec.update(p_selective=res.p_selective, p_naive=res.p_naive,
                       region_count=res.region_count, wall_time=res.wall_time)
        records.append(rec)
    sel = np.sort([r["p_selective"] for r in records if r["detected"]])
    nav = np.sort([r["p_naive"] for r in records if r["detected"]])
    ks_sel = kstest(sel, "uniform") if sel.size else None
    ks_nav = kstest(nav, "uniform") if nav.size else None
    uniform_q = ((np.arange(sel.size) + 0.5) / sel.size) if sel.size else np.empty(0)
    aggregates = {
        "activation": activation,
        "n_effective": n_eff,
        "n_detected": int(sel.size),
        "ks_selective": {"statistic": float(ks_sel.statistic), "pvalue": float(ks_sel.pvalue)} if ks_sel else None,
        "ks_naive": {"statistic": float(ks_nav.statistic), "pvalue": float(ks_nav.pvalue)} if ks_nav else None,
        "mean_region_count": float(np.mean([r["region_count"] for r in records if r["detected"]])) if sel.size else None,
        "qq": {"uniform": uniform_q.tolist(), "selective": sel.tolist()},
    }
    return ExperimentReport("pivot", asdict(config), records, aggregates)


def run_robustness_experiment(
    config: ExperimentConfig,
    families=("laplace", "skew-normal", "student-t"),
    alphas=(0.05, 0.1),
    include_estimated_sigma: bool = True,
) -> ExperimentReport:
    """FPR under misspecified noise and under plug-in variance estimation.

    The selective method still assumes isotropic unit-variance Gaussian
    noise; the data come from the named families.
    """
    settings = [(fam, "known") for fam in families]
    if include_estimated_sigma:
        settings.append(("gaussian", "estimated"))
    records = []
    results = []
    net = make_cnn(config.n, config.net_seed)
    for fam, sigma_mode in settings:
        sub = ExperimentConfig(
            **{**asdict(config), "noise_family": fam, "sigma_mode": sigma_mode, "delta_mu": 0.0}
        )
        recs = _run_trials(sub, net, signal=False)
        label = f"{fam}/{sigma_mode}"
        for r in recs:
            records.append({"setting": label, **r})
        entry = {"family": fam, "sigma_mode": sigma_mode}
        for alpha in alphas:
            rate, count = _rate(recs, "p_selective", alpha)
            entry[f"fpr_alpha_{alpha}"] = rate
            entry[f"n_detected"] = count
        results.append(entry)
    return ExperimentReport(
        "robustness", asdict(config), records, {"settings": results, "alphas": list(alphas)}
    )


def run_permutation_baseline(
    config: ExperimentConfig, net: NetworkSpec | None = None
) -> ExperimentReport:
    """Permutation-test FPR on correlated-noise nulls, next to the selective FPR."""
    net = net or make_cnn(config.n, config.net_seed)
    noise = noise_model_for(config.noise_family, config.n, config.rho)
    records = []
    for i in range(config.trials):
        rng = np.random.default_rng([config.seed, i])
        image = generate_null_image(config.n, config.noise_family, rng, config.rho)
        p_perm = permutation_test(net, image, B=config.B, seed=int(1_000_003 * config.seed + i))
        res = selective_p_pipeline(
            net, image, noise, z_range_sigmas=config.z_range_sigmas, compute_oc=False
        )
        rec = {
            "trial": i,
            "detected": not isinstance(p_perm, NoDetection),
        }
        if rec["detected"]:
            rec["p_permutation"] = p_perm
        if res.detected:
            rec["p_selective"] = res.p_selective
        records.append(rec)
    perm_rate, perm_count = _rate(records, "p_permutation", config.alpha)
    sel_detected = [r for r in records if "p_selective" in r]
    sel_rate = (
        sum(1 for r in sel_detected if r["p_selective"] < config.alpha) / len(sel_detected)
        if sel_detected
        else None
    )
    aggregates = {
        "fpr_permutation": perm_rate,
        "fpr_selective": sel_rate,
        "n_detected": perm_count,
    }
    return ExperimentReport("permutation", asdict(config), records, aggregates)


def run_oracle_check(
    config: ExperimentConfig,
    n_nets: int = 20,
    step_sigmas: float = 1e-3,
    tol_sigmas: float = 1e-6,
) -> ExperimentReport:
    """Homotopy vs grid-scan comparison on random small networks."""
    if config.n > 64:
        raise ValidationError("oracle check is restricted to n <= 64")
    records = []
    max_dev = 0.0
    disagreements = 0
    for t in range(max(n_nets, config.trials)):
        net = make_cnn(config.n, seed=[config.net_seed, t])
        rng = np.random.default_rng([config.seed, t])
        image = generate_null_image(config.n, "gaussian", rng)
        mask = forward(net, image)
        eta = build_test_direction(mask)
        if isinstance(eta, NoDetection):
            records.append({"trial": t, "detected": False})
            continue
        line = line_parametrization(image, eta, NoiseModel.isotropic(1.0))
        sigma = line.sigma_eta
        z_min, z_max = -config.z_range_sigmas * sigma, config.z_range_sigmas * sigma
        path = compute_solution_path(net, line, z_min, z_max)
        trunc = truncation_region(path, mask, line.z_obs)
        cmp = compare_with_path(
            net, line.a, line.b, path, trunc, mask,
            step=step_sigmas * sigma, refine_tol=1e-3 * tol_sigmas * sigma,
        )
        max_dev = max(max_dev, cmp.max_endpoint_deviation / sigma)
        disagreements += cmp.mask_disagreements
        records.append(
            {
                "trial": t,
                "detected": True,
                "max_endpoint_deviation_sigmas": cmp.max_endpoint_deviation / sigma,
                "mask_disagreements": cmp.mask_disagreements,
                "region_count": path.region_count,
            }
        )
    ok = disagreements == 0 and max_dev <= tol_sigmas
    aggregates = {
        "max_endpoint_deviation_sigmas": max_dev,
        "mask_disagreements": disagreements,
        "tolerance_sigmas": tol_sigmas,
        "ok": ok,
    }
    return ExperimentReport("oracle-check", asdict(config), records, aggregates)
