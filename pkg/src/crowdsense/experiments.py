"""Multi-seed experiment orchestration, metrics persistence, diagnostics.

All CSV output uses comma separators, '.' decimals, a header row, LF line
endings, and repr() float formatting, so files are byte-stable across
re-runs of the same configuration.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import marl, svg
from .config import DYNAMICS_FAMILIES, ExperimentConfig, env_for_sweep_cell
from .env import EnvConfig
from .errors import ConfigError, CrowdsenseError

# Reference mean episode rewards for the standard dynamics/window grid,
# printed alongside sweep output for comparison (never asserted against).
REFERENCE_REWARDS: dict[str, dict[int, float]] = {
    "sine": {10: 28.25, 30: 25.88, 50: 33.52, 100: 28.07},
    "linear": {10: 46.41, 30: 48.36, 50: 50.01, 100: 48.79},
    "markov": {10: 35.89, 30: 38.88, 50: 44.73, 100: 42.31},
    "mixed": {10: 22.43, 30: 35.75, 50: 36.91, 100: 27.77},
}


@dataclass
class RunRecord:
    seed: int
    episode_payoffs: np.ndarray = field(repr=False)   # (episodes, N)
    eval_mean: np.ndarray                             # (N,)
    eval_variance: np.ndarray                         # (N,)
    wall_seconds: float                               # in-memory only, never persisted


def fmt_float(value) -> str:
    """Shortest round-trippable decimal form, always a plain Python float."""
    return repr(float(value))


def _run_seeds(master_seed: int, run_index: int) -> tuple[int, int]:
    """Derive independent (train, eval) seeds for one run of a sweep of runs."""
    state = np.random.SeedSequence((master_seed, run_index)).generate_state(2)
    return int(state[0]), int(state[1])


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _run_csv_lines(record: RunRecord) -> list[str]:
    lines = ["episode,agent,payoff"]
    episodes, n = record.episode_payoffs.shape
    for episode in range(episodes):
        for agent in range(n):
            lines.append(f"{episode},{agent},{fmt_float(record.episode_payoffs[episode, agent])}")
    return lines


def _aggregate_csv_lines(records: list[RunRecord]) -> list[str]:
    lines = ["episode,agent,mean,variance"]
    if not records:
        return lines
    stacked = np.stack([r.episode_payoffs for r in records])  # (runs, episodes, N)
    mean = stacked.mean(axis=0)
    variance = stacked.var(axis=0)
    episodes, n = mean.shape
    for episode in range(episodes):
        for agent in range(n):
            lines.append(
                f"{episode},{agent},{fmt_float(mean[episode, agent])},{fmt_float(variance[episode, agent])}"
            )
    return lines


def _eval_csv_lines(records: list[RunRecord]) -> list[str]:
    lines = ["run,agent,mean,variance"]
    for k, record in enumerate(records):
        for agent in range(record.eval_mean.shape[0]):
            lines.append(
                f"{k},{agent},{fmt_float(record.eval_mean[agent])},{fmt_float(record.eval_variance[agent])}"
            )
    return lines


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> list[RunRecord]:
    """Train `runs` independently seeded instances and persist their metrics.

    Writes run_<k>.csv per run, aggregate.csv (mean/variance across runs),
    eval.csv, and one checkpoint file per agent per run.
    """
    out = config.out_dir if out_dir is None else out_dir
    os.makedirs(out, exist_ok=True)
    records: list[RunRecord] = []
    for k in range(config.runs):
        train_seed, eval_seed = _run_seeds(config.trainer.seed, k)
        started = time.perf_counter()
        agents, metrics = marl.train(config.env, replace(config.trainer, seed=train_seed))
        result = marl.evaluate(
            [agent.actor for agent in agents],
            config.env,
            config.eval_episodes,
            seed=eval_seed,
        )
        record = RunRecord(
            seed=train_seed,
            episode_payoffs=metrics.episode_payoffs,
            eval_mean=result.mean,
            eval_variance=result.variance,
            wall_seconds=time.perf_counter() - started,
        )
        records.append(record)
        _write_lines(os.path.join(out, f"run_{k}.csv"), _run_csv_lines(record))
        ckpt_dir = os.path.join(out, "checkpoints", f"run_{k}")
        os.makedirs(ckpt_dir, exist_ok=True)
        for i, agent in enumerate(agents):
            marl.save_agent(agent, os.path.join(ckpt_dir, f"agent_{i}.json"))
    _write_lines(os.path.join(out, "aggregate.csv"), _aggregate_csv_lines(records))
    _write_lines(os.path.join(out, "eval.csv"), _eval_csv_lines(records))
    return records


def read_run_payoffs(out_dir: str) -> list[RunRecord]:
    """Rebuild run records from the run_<k>.csv files under a directory."""
    records: list[RunRecord] = []
    k = 0
    while True:
        path = os.path.join(out_dir, f"run_{k}.csv")
        if not os.path.exists(path):
            break
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.strip().split(",") for line in fh.readlines()[1:] if line.strip()]
        if rows:
            episodes = max(int(r[0]) for r in rows) + 1
            n = max(int(r[1]) for r in rows) + 1
            payoffs = np.zeros((episodes, n))
            for episode, agent, value in rows:
                payoffs[int(episode), int(agent)] = float(value)
        else:
            payoffs = np.zeros((0, 0))
        records.append(
            RunRecord(
                seed=k,
                episode_payoffs=payoffs,
                eval_mean=np.zeros(payoffs.shape[1] if payoffs.size else 0),
                eval_variance=np.zeros(payoffs.shape[1] if payoffs.size else 0),
                wall_seconds=0.0,
            )
        )
        k += 1
    if not records:
        raise CrowdsenseError(f"no run_<k>.csv files found in {out_dir}")
    return records


# --- memory-length sweep ------------------------------------------------------


def sweep_memory_length(
    config: ExperimentConfig, out_dir: str | None = None
) -> dict[tuple[str, int], float]:
    """Run the full dynamics-family x window grid.

    Each cell trains `runs` seeds at that window length and reports the
    final evaluation's mean episode payoff averaged over agents and
    seeds. Writes sweep.csv plus an aligned-text table with reference
    lines for the default grid.
    """
    out = config.out_dir if out_dir is None else out_dir
    os.makedirs(out, exist_ok=True)
    table: dict[tuple[str, int], float] = {}
    for family in DYNAMICS_FAMILIES:
        for window in config.k_sweep:
            cell_config = replace(
                config,
                env=env_for_sweep_cell(config, family, window),
                dynamics_family=family,
            )
            cell_dir = os.path.join(out, "cells", f"{family}_w{window}")
            records = run_experiment(cell_config, cell_dir)
            table[(family, window)] = float(
                np.mean([record.eval_mean.mean() for record in records])
            )
    _write_lines(
        os.path.join(out, "sweep.csv"),
        ["dynamics,window,mean_reward"]
        + [f"{family},{window},{fmt_float(table[(family, window)])}" for family in DYNAMICS_FAMILIES for window in config.k_sweep],
    )
    _write_lines(os.path.join(out, "sweep.txt"), render_sweep_table(table, config.k_sweep))
    return table


def render_sweep_table(
    table: dict[tuple[str, int], float], k_sweep: tuple[int, ...]
) -> list[str]:
    """Aligned text table, one measured row and one reference row per family."""
    label_width = max(len(f"{family} (reference)") for family in DYNAMICS_FAMILIES)
    header = "dynamics".ljust(label_width) + "".join(f"  w={k}".rjust(10) for k in k_sweep)
    lines = [header, "-" * len(header)]
    for family in DYNAMICS_FAMILIES:
        cells = "".join(f"{table[(family, k)]:10.2f}" for k in k_sweep)
        lines.append(family.ljust(label_width) + cells)
        refs = REFERENCE_REWARDS.get(family, {})
        if any(k in refs for k in k_sweep):
            ref_cells = "".join(
                f"{refs[k]:10.2f}" if k in refs else " " * 10 for k in k_sweep
            )
            lines.append(f"{family} (reference)".ljust(label_width) + ref_cells)
    return lines


# --- policies and diagnostics -------------------------------------------------


def baseline_policy(kind: str, x_max: float, value: float | None = None):
    """A policy callable usable wherever a trained actor is: `random`
    draws uniformly from [0, x_max] each step, `constant` always returns
    `value`, `zero` contributes nothing.
    """
    if kind == "random":
        return lambda obs, rng: float(rng.uniform(0.0, x_max))
    if kind == "constant":
        if value is None or not 0.0 <= value <= x_max:
            raise ConfigError([f"constant baseline needs a value in [0, {x_max}], got {value}"])
        return lambda obs, rng: float(value)
    if kind == "zero":
        return lambda obs, rng: 0.0
    raise ConfigError([f"baseline kind must be random, constant, or zero, got {kind!r}"])


def best_response_oracle(q_i: float, s: float, r: float, c_i: float, x_max: float) -> float:
    """Optimal one-shot effort against fixed opposition.

    Maximizes x*q_i*r / (x*q_i + s) - c_i*x over [0, x_max] in closed
    form, then cross-checks against a 1e-4-step grid search and insists
    the two agree to 1e-3.
    """
    violations = []
    if not s > 0:
        violations.append(f"s must be > 0, got {s}")
    if not q_i > 0:
        violations.append(f"q_i must be > 0, got {q_i}")
    if not r > 0:
        violations.append(f"r must be > 0, got {r}")
    if not c_i > 0:
        violations.append(f"c_i must be > 0, got {c_i}")
    if not x_max > 0:
        violations.append(f"x_max must be > 0, got {x_max}")
    if violations:
        raise ConfigError(violations)

    closed = min(max((math.sqrt(q_i * r * s / c_i) - s) / q_i, 0.0), x_max)

    grid = np.arange(0.0, x_max + 1e-4, 1e-4)
    payoff = grid * q_i * r / (grid * q_i + s) - c_i * grid
    gridded = float(grid[int(np.argmax(payoff))])
    if abs(closed - gridded) > 1e-3:
        raise CrowdsenseError(
            f"best-response disagreement: closed form {closed!r} vs grid {gridded!r}"
        )
    return closed


def symmetric_equilibrium(n_agents: int, budget: float, cost: float) -> tuple[float, float]:
    """Equilibrium effort and per-step payoff when all agents share one
    QoI level and one cost: x* = R(N-1)/(N^2 c), payoff R/N^2.
    Useful as a reference line when reading evaluation reports.
    """
    effort = budget * (n_agents - 1) / (n_agents**2 * cost)
    payoff = budget / n_agents**2
    return effort, payoff


def emit_plots(records: list[RunRecord], out_dir: str) -> list[str]:
    """One SVG per agent: mean episode payoff across runs, with a
    mean +/- variance band. Returns the written paths.
    """
    if not records:
        raise CrowdsenseError("no data to plot: empty record list")
    stacked = np.stack([record.episode_payoffs for record in records])  # (runs, E, N)
    episodes = stacked.shape[1]
    if episodes == 0:
        raise CrowdsenseError("no data to plot: zero episodes")
    os.makedirs(out_dir, exist_ok=True)
    x = np.arange(episodes, dtype=float)
    mean = stacked.mean(axis=0)
    variance = stacked.var(axis=0)
    paths = []
    for agent in range(stacked.shape[2]):
        doc = svg.line_chart(
            x,
            mean[:, agent],
            variance[:, agent],
            title=f"Agent {agent} episode payoff ({len(records)} runs)",
            x_label="training episode",
            y_label="episode payoff",
        )
        path = os.path.join(out_dir, f"agent_{agent}.svg")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
        paths.append(path)
    return paths
