"""Command-line entry point: generate / simulate / calibrate / shock /
metrics / steady-state subcommands."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import calibration as cal
from . import engine, flows, metrics, scenario, shocks


def _cmd_generate(args):
    path = scenario.generate_synthetic(
        dims=(args.regions, args.industries, args.occupations),
        n_agents=args.agents,
        n_positions=args.positions,
        seed=args.seed,
        out_dir=args.out,
    )
    print(path)


def _cmd_simulate(args):
    cfg = scenario.load_scenario(args.config)
    seeds = args.seeds if args.seeds else list(cfg.seeds)
    spec = cfg.to_runspec()
    if args.steps is not None:
        # fixed-length run: disable steady-state detection, collect everything
        from dataclasses import replace

        spec = replace(
            spec,
            steady=flows.SteadyStateParams(
                window=1, lag=1, epsilon=float("inf"), max_steps=3
            ),
            collection_steps=args.steps,
        )
    results = engine.run_suite(spec, seeds)
    out = args.out or cfg.output_dir
    manifest = scenario.write_results(
        out,
        cfg.config_hash,
        labels=cfg.labels,
        flows={s: r.flows for s, r in zip(seeds, results)},
        transitions={s: r.collection_transitions for s, r in zip(seeds, results)},
        xi={s: r.xi_history for s, r in zip(seeds, results)},
    )
    print(json.dumps({"output_dir": str(out), "files": len(manifest["files"])}))


def _cmd_calibrate(args):
    cfg = scenario.load_scenario(args.config)
    config = cfg.calibration or cal.CalibrationConfig()
    from dataclasses import replace

    if args.threshold is not None:
        config = replace(config, threshold=args.threshold)
    if args.max_iters is not None:
        config = replace(config, max_iterations=args.max_iters)
    if args.m_sims is not None:
        config = replace(config, m_simulations=args.m_sims)
    if args.fresh_seeds:
        config = replace(config, fixed_seeds=False)

    observed = {}
    for dim in flows.DIMENSIONS:
        observed[dim], _, _ = scenario.read_matrix_csv(getattr(args, f"observed_{dim}"))
    result = cal.calibrate(
        observed,
        config,
        cfg.to_runspec(),
        progress=lambda rec: print(
            f"iteration {rec['iteration']}: mean_error={rec['mean_error']:.6g}",
            file=sys.stderr,
        ),
    )

    out = args.out or cfg.output_dir
    out = scenario.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "calibration_history.csv", "w") as fh:
        cols = [
            "iteration",
            "mean_error",
            "pearson_region",
            "pearson_industry",
            "pearson_occupation",
            "frobenius_region",
            "frobenius_industry",
            "frobenius_occupation",
        ]
        fh.write(",".join(cols) + "\n")
        for rec in result.history:
            fh.write(",".join(str(rec[c]) for c in cols) + "\n")
    scenario.write_results(
        out,
        cfg.config_hash,
        labels=cfg.labels,
        nu={
            "region": result.bundle.nu_region,
            "industry": result.bundle.nu_industry,
            "occupation": result.bundle.nu_occupation,
        },
        reports={
            "calibration_summary": {
                "converged": result.converged,
                "best_iteration": result.best_iteration,
                "final_mean_error": result.history[-1]["mean_error"],
                "best_mean_error": result.history[result.best_iteration]["mean_error"],
            }
        },
    )
    if not result.converged:
        print("warning: calibration did not reach the threshold", file=sys.stderr)
    print(json.dumps({"converged": result.converged, "iterations": len(result.history)}))


def _cmd_shock(args):
    cfg = scenario.load_scenario(args.config)
    spec = cfg.shock
    if args.kind or args.industries:
        spec = shocks.ShockSpec(
            kind=args.kind or (spec.kind if spec else "positional"),
            industries=tuple(args.industries)
            if args.industries
            else (spec.industries if spec else ()),
            homogenise=tuple(args.homogenise)
            if args.homogenise
            else (spec.homogenise if spec else ()),
            sigma_multiplier=args.sigma,
            seed=args.shock_seed,
        )
    if spec is None:
        raise SystemExit("no shock specified in config or on the command line")
    report = shocks.run_experiment(cfg.to_runspec(), spec, m=args.m, base_seed=args.seed)

    out = scenario.Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    for dim, rep in report.dimensions.items():
        with open(out / f"flagged_edges_{dim}.csv", "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["from", "to", "mean_change", "p_value"])
            writer.writerows(rep.flagged_edges)
    scenario.write_results(
        out, cfg.config_hash, labels=cfg.labels, reports={"shock_report": report.as_dict()}
    )
    print(json.dumps(report.as_dict()["dimensions"], indent=2))


def _cmd_metrics(args):
    a, _, _ = scenario.read_matrix_csv(args.matrix_a)
    b, _, _ = scenario.read_matrix_csv(args.matrix_b)
    rep = metrics.fit_report(a, b)
    print(json.dumps({"pearson": rep.pearson, "frobenius": rep.frobenius}))


def _cmd_steady_state(args):
    xi = scenario.read_xi_csv(args.xi)
    params = flows.SteadyStateParams(
        window=args.window, lag=args.lag, epsilon=args.epsilon, max_steps=len(xi)
    )
    reached = None
    first = None
    need = params.window + params.lag + 1
    for t in range(need, len(xi) + 1):
        if flows.steady_state_reached(xi[:t], params):
            first = t - 1
            break
    reached = first is not None
    print(json.dumps({"reached": reached, "first_step": first, "length": len(xi)}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfn", description="Labour flow network simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic input fixture")
    p.add_argument("--regions", type=int, default=21)
    p.add_argument("--industries", type=int, default=21)
    p.add_argument("--occupations", type=int, default=9)
    p.add_argument("--agents", type=int, default=3500)
    p.add_argument("--positions", type=int, default=3600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", help="run one simulation or a seeded suite")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, nargs="*")
    p.add_argument("--steps", type=int, help="fixed step count instead of steady-state run")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="fit the similarity exponents to observed flows")
    p.add_argument("--config", required=True)
    p.add_argument("--observed-region", required=True)
    p.add_argument("--observed-industry", required=True)
    p.add_argument("--observed-occupation", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--m-sims", type=int)
    p.add_argument("--fixed-seeds", action="store_true", default=True)
    p.add_argument("--fresh-seeds", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("shock", help="run a shocked-vs-baseline experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=shocks.SHOCK_KINDS)
    p.add_argument("--industries", type=int, nargs="*")
    p.add_argument("--homogenise", nargs="*", choices=["region", "occupation"])
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shock-seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_shock)

    p = sub.add_parser("metrics", help="compare two matrix CSVs")
    p.add_argument("matrix_a")
    p.add_argument("matrix_b")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("steady-state", help="diagnose an error-series CSV")
    p.add_argument("--xi", required=True)
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--lag", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.set_defaults(func=_cmd_steady_state)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
