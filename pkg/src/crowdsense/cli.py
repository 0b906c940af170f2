"""Command-line entry point.

Verbs: train, eval, sweep, oracle, plot. Shared flags: --config PATH,
--seed N, --out DIR. Exit codes: 0 success, 1 validation/usage error,
2 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import experiments, marl
from .experiments import fmt_float
from .config import ExperimentConfig, default_experiment, load_config
from .errors import ConfigError, CrowdsenseError


def _resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_experiment()
    if args.seed is not None:
        config = replace(config, trainer=replace(config.trainer, seed=args.seed))
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    return config


def cmd_train(args) -> int:
    config = _resolve_config(args)
    records = experiments.run_experiment(config)
    print(f"wrote {len(records)} runs to {config.out_dir}")
    for k, record in enumerate(records):
        means = " ".join(f"{m:8.2f}" for m in record.eval_mean)
        print(f"run {k}: eval mean per agent {means}  ({record.wall_seconds:.1f}s)")
    return 0


def cmd_eval(args) -> int:
    config = _resolve_config(args)
    n = config.env.n_agents
    if args.checkpoints:
        policies = [
            marl.load_agent(os.path.join(args.checkpoints, f"agent_{i}.json")).actor
            for i in range(n)
        ]
        label = args.checkpoints
    elif args.baseline:
        policies = [
            experiments.baseline_policy(args.baseline, config.env.effort_cap, args.value)
            for _ in range(n)
        ]
        label = f"{args.baseline} baseline"
    else:
        raise ConfigError(["eval needs --checkpoints DIR or --baseline KIND"])
    result = marl.evaluate(
        policies,
        config.env,
        config.eval_episodes,
        seed=config.trainer.seed,
        discounted=args.discounted,
    )
    print(f"evaluated {label}: {config.eval_episodes} episodes")
    for agent in range(n):
        print(
            f"agent {agent}: mean {fmt_float(result.mean[agent])} variance {fmt_float(result.variance[agent])}"
        )
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "eval_summary.csv")
    lines = ["agent,mean,variance"] + [
        f"{agent},{fmt_float(result.mean[agent])},{fmt_float(result.variance[agent])}" for agent in range(n)
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    if args.episodes is not None:
        config = replace(config, trainer=replace(config.trainer, episodes=args.episodes))
    table = experiments.sweep_memory_length(config)
    for line in experiments.render_sweep_table(table, config.k_sweep):
        print(line)
    print(f"wrote {os.path.join(config.out_dir, 'sweep.csv')}")
    return 0


def cmd_oracle(args) -> int:
    best = experiments.best_response_oracle(args.q, args.s, args.r, args.c, args.x_max)
    print(f"best response effort: {best!r}")
    return 0


def cmd_plot(args) -> int:
    config = _resolve_config(args)
    records = experiments.read_run_payoffs(config.out_dir)
    paths = experiments.emit_plots(records, os.path.join(config.out_dir, "plots"))
    for path in paths:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="TOML experiment file")
    shared.add_argument("--seed", type=int, metavar="N", help="override the master seed")
    shared.add_argument("--out", metavar="DIR", help="override the output directory")

    parser = argparse.ArgumentParser(
        prog="crowdsense",
        description="Train and evaluate effort-allocation agents for a "
        "budget-sharing sensing campaign.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", parents=[shared], help="run seeded training runs, write CSVs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[shared], help="evaluate checkpoints or a baseline")
    p.add_argument("--checkpoints", metavar="DIR", help="directory holding agent_<i>.json")
    p.add_argument("--baseline", choices=["random", "constant", "zero"])
    p.add_argument("--value", type=float, help="effort for the constant baseline")
    p.add_argument("--discounted", action="store_true", help="report discounted returns")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[shared], help="dynamics x window-length grid")
    p.add_argument("--episodes", type=int, help="override training episodes (smoke mode)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", parents=[shared], help="closed-form best-response effort")
    p.add_argument("--q", type=float, default=1.0, help="own signal quality")
    p.add_argument("--s", type=float, default=1.0, help="others' total contribution")
    p.add_argument("--r", type=float, default=10.0, help="step budget")
    p.add_argument("--c", type=float, default=1.0, help="own unit cost")
    p.add_argument("--x-max", type=float, default=5.0, help="effort cap")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", parents=[shared], help="render SVG charts from run CSVs")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CrowdsenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
