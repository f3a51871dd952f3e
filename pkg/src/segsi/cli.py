"""Command-line interface."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from segsi.errors import SegsiError
from segsi.experiments import (
    ExperimentConfig,
    run_breakpoint_experiment,
    run_fpr_experiment,
    run_oracle_check,
    run_permutation_baseline,
    run_pivot_experiment,
    run_power_experiment,
    run_robustness_experiment,
)
from segsi.hypothesis import NoiseModel, estimate_variance
from segsi.images import read_image
from segsi.inference import selective_p_pipeline
from segsi.netgen import make_cnn, make_dense
from segsi.weights_io import load_network, save_network


def _cmd_infer(args) -> int:
    net = load_network(args.weights, approximate_cuts=args.approx_cuts)
    image = read_image(args.image)
    if args.estimate_from:
        noise = estimate_variance(read_image(args.estimate_from).values)
    else:
        noise = NoiseModel.isotropic(args.sigma)
    res = selective_p_pipeline(
        net, image, noise, z_range_sigmas=args.zrange, compute_oc=args.oc
    )
    out = {"detected": res.detected}
    if res.detected:
        out.update(
            z_obs=res.z_obs,
            sigma_eta=res.sigma_eta,
            p_naive=res.p_naive,
            p_selective=res.p_selective,
            truncation_intervals=[list(iv) for iv in res.truncation.intervals],
            region_count=res.region_count,
        )
        if args.oc:
            out["p_oc"] = res.p_oc
            out["oc_interval"] = list(res.oc_truncation.intervals[0])
    print(json.dumps(out, indent=2))
    return 0


_RUNNERS = {
    "fpr": run_fpr_experiment,
    "power": run_power_experiment,
    "breakpoints": run_breakpoint_experiment,
    "pivot": run_pivot_experiment,
    "robustness": run_robustness_experiment,
    "permutation": run_permutation_baseline,
}


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.which == "pivot":
        report = run_pivot_experiment(config, activation=args.activation)
    elif args.which == "breakpoints":
        report = run_breakpoint_experiment(config, n_grid=tuple(args.n_grid))
    else:
        report = _RUNNERS[args.which](config)
    report.write(args.out)
    print(json.dumps(report.aggregates if args.which != "pivot" else
                     {k: v for k, v in report.aggregates.items() if k != "qq"}, indent=2))
    return 0


def _cmd_oracle_check(args) -> int:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig(n=16, trials=20)
    report = run_oracle_check(config, n_nets=args.nets)
    if args.out:
        report.write(args.out)
    print(json.dumps(report.aggregates, indent=2))
    return 0 if report.aggregates["ok"] else 1


def _cmd_make_net(args) -> int:
    if args.kind == "cnn":
        net = make_cnn(args.n, args.seed)
    else:
        net = make_dense(args.n, seed=args.seed)
    manifest = save_network(net, args.out, metadata={"generator": args.kind, "seed": args.seed})
    print(str(manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segsi",
        description="Selective inference for piecewise-linear DNN segmentation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="selective p-value for one image")
    p.add_argument("--weights", required=True, help="weight manifest path")
    p.add_argument("--image", required=True, help="SIIMG1 or CSV image file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--sigma", type=float, default=1.0, help="known noise sigma")
    group.add_argument("--estimate-from", help="image file to estimate sigma from")
    p.add_argument("--zrange", type=float, default=20.0, help="search half-width in sigmas")
    p.add_argument("--oc", action="store_true", help="also compute the over-conditioned p-value")
    p.add_argument("--approx-cuts", type=int, default=None,
                   help="piece count for smooth hidden activations")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("experiment", help="run a synthetic experiment")
    p.add_argument("which", choices=sorted(_RUNNERS))
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--activation", default="relu",
                   help="pivot network: relu, sigmoid-3cut, tanh-3cut, sigmoid-5cut, ...")
    p.add_argument("--n-grid", type=int, nargs="+", default=[16, 64, 256])
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("oracle-check", help="compare homotopy against the grid-scan oracle")
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--out", help="optional output directory")
    p.add_argument("--nets", type=int, default=20, help="number of random networks")
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("make-net", help="export a deterministic network manifest")
    p.add_argument("--kind", choices=["cnn", "dense"], default="cnn")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_net)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SegsiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
