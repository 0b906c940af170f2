"""Experiment configuration: TOML loading, defaulting, validation.

A minimal file needs only the agent count and a dynamics family::

    n_agents = 4
    dynamics = "sine"

Everything else is defaulted. Per-agent dynamics can be spelled out with
``[[dynamics]]`` tables instead of a family name. Unknown keys anywhere
are rejected, not ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dynamics as dyn
from . import env as env_mod
from .env import EnvConfig
from .errors import ConfigError
from .marl import TrainerConfig, validate_trainer

OUT_DIR_ENV_VAR = "CROWDSENSE_OUT"
DEFAULT_K_SWEEP = (10, 30, 50, 100)
DYNAMICS_FAMILIES = ("sine", "linear", "markov", "mixed")

_ENV_KEYS = {
    "n_agents",
    "dynamics",
    "horizon",
    "window",
    "budget",
    "costs",
    "denominator_guard",
    "effort_cap",
    "discount",
}
_TOP_KEYS = _ENV_KEYS | {
    "dynamics_seed",
    "runs",
    "eval_episodes",
    "out_dir",
    "k_sweep",
    "trainer",
}
_TRAINER_KEYS = {
    "episodes",
    "gamma",
    "minibatch",
    "updates_per_step",
    "buffer_capacity",
    "hidden",
    "actor_lr",
    "critic_lr",
    "actor_skip",
    "critic_skip",
    "noise_initial",
    "noise_decay",
    "noise_floor",
    "tau",
    "use_targets",
    "seed",
}
_DYNAMICS_KEYS = {
    "sine": {"kind", "amplitude", "period", "phase", "offset"},
    "linear": {"kind", "slope", "period", "offset"},
    "markov": {"kind", "values", "transition", "initial_state"},
}


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV_VAR, "out")


@dataclass
class ExperimentConfig:
    env: EnvConfig
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    runs: int = 10
    eval_episodes: int = 20
    out_dir: str = field(default_factory=default_out_dir)
    k_sweep: tuple[int, ...] = DEFAULT_K_SWEEP
    dynamics_family: str | None = None
    dynamics_seed: int = 0


def default_experiment(family: str = "sine", n_agents: int = 4, dynamics_seed: int = 0) -> ExperimentConfig:
    """The fully defaulted configuration used when no file is given."""
    specs = dyn.default_specs(family, n_agents, seed=dynamics_seed)
    return ExperimentConfig(
        env=EnvConfig(n_agents=n_agents, dynamics=specs),
        dynamics_family=family,
        dynamics_seed=dynamics_seed,
    )


def validate_experiment(config: ExperimentConfig) -> list[str]:
    v = env_mod.validate_config(config.env) + validate_trainer(config.trainer)
    if config.runs < 1:
        v.append(f"runs must be >= 1, got {config.runs}")
    if config.eval_episodes < 1:
        v.append(f"eval_episodes must be >= 1, got {config.eval_episodes}")
    if not config.k_sweep:
        v.append("k_sweep must be non-empty")
    for k in config.k_sweep:
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
            v.append(f"k_sweep entries must be positive integers, got {k!r}")
    return v


def _parse_dynamics_table(table: dict, index: int, violations: list[str]):
    kind = table.get("kind")
    if kind not in _DYNAMICS_KEYS:
        violations.append(f"dynamics[{index}]: unknown kind {kind!r}")
        return None
    unknown = set(table) - _DYNAMICS_KEYS[kind]
    if unknown:
        violations.append(f"dynamics[{index}]: unknown keys {sorted(unknown)}")
        return None
    body = {k: v for k, v in table.items() if k != "kind"}
    try:
        if kind == "sine":
            return dyn.SineSpec(**body)
        if kind == "linear":
            return dyn.LinearSpec(**body)
        return dyn.MarkovSpec(**body)
    except TypeError as exc:
        violations.append(f"dynamics[{index}]: {exc}")
        return None


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from parsed key/value data."""
    violations: list[str] = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        violations.append(f"unknown keys {sorted(unknown)}")

    trainer_raw = raw.get("trainer", {})
    if not isinstance(trainer_raw, dict):
        violations.append("trainer must be a table")
        trainer_raw = {}
    unknown = set(trainer_raw) - _TRAINER_KEYS
    if unknown:
        violations.append(f"trainer: unknown keys {sorted(unknown)}")
        trainer_raw = {k: v for k, v in trainer_raw.items() if k in _TRAINER_KEYS}
    if "hidden" in trainer_raw:
        trainer_raw = dict(trainer_raw, hidden=tuple(trainer_raw["hidden"]))
    trainer = TrainerConfig(**trainer_raw)

    if "n_agents" not in raw:
        violations.append("n_agents is required")
    n_agents = int(raw.get("n_agents", 1))
    dynamics_seed = int(raw.get("dynamics_seed", 0))

    family: str | None = None
    dynamics_raw = raw.get("dynamics")
    if dynamics_raw is None:
        violations.append("dynamics is required (family name or [[dynamics]] tables)")
        specs: list = []
    elif isinstance(dynamics_raw, str):
        if dynamics_raw not in DYNAMICS_FAMILIES:
            violations.append(
                f"dynamics family must be one of {list(DYNAMICS_FAMILIES)}, got {dynamics_raw!r}"
            )
            specs = []
        else:
            family = dynamics_raw
            specs = dyn.default_specs(family, max(n_agents, 1), seed=dynamics_seed)
    elif isinstance(dynamics_raw, list):
        specs = []
        for idx, table in enumerate(dynamics_raw):
            spec = _parse_dynamics_table(table, idx, violations)
            if spec is not None:
                specs.append(spec)
        if not violations and len(specs) != n_agents:
            violations.append(
                f"got {len(specs)} dynamics tables for {n_agents} agents"
            )
    else:
        violations.append("dynamics must be a family name or an array of tables")
        specs = []

    env_kwargs: dict[str, Any] = {}
    for key in ("horizon", "window"):
        if key in raw:
            env_kwargs[key] = int(raw[key])
    for key in ("denominator_guard", "effort_cap", "discount"):
        if key in raw:
            env_kwargs[key] = float(raw[key])
    for key in ("budget", "costs"):
        if key in raw:
            value = raw[key]
            env_kwargs[key] = (
                np.asarray(value, dtype=float) if isinstance(value, list) else float(value)
            )
    env_config = EnvConfig(n_agents=n_agents, dynamics=specs, **env_kwargs)

    config = ExperimentConfig(
        env=env_config,
        trainer=trainer,
        runs=int(raw.get("runs", 10)),
        eval_episodes=int(raw.get("eval_episodes", 20)),
        out_dir=str(raw.get("out_dir", default_out_dir())),
        k_sweep=tuple(raw.get("k_sweep", DEFAULT_K_SWEEP)),
        dynamics_family=family,
        dynamics_seed=dynamics_seed,
    )
    violations += validate_experiment(config)
    if violations:
        raise ConfigError(violations)
    return config


def load_config(path) -> ExperimentConfig:
    """Parse a TOML experiment file. Parse failures keep tomli's line info."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"parse error in {path}: {exc}"]) from exc
    return config_from_dict(raw)


def env_for_sweep_cell(config: ExperimentConfig, family: str, window: int) -> EnvConfig:
    """The cell environment: same settings, swapped dynamics family and window."""
    specs = dyn.default_specs(family, config.env.n_agents, seed=config.dynamics_seed)
    return replace(config.env, dynamics=specs, window=window)
