"""The N-agent sensing campaign environment.

Every step the service provider pays out a budget R_t in proportion to
each participant's share of the total contributed value x_i * q_i, and
each participant pays a linear cost for its effort. The QoI signals
evolve on their own (effort never feeds back into the signals), which
makes the environment an exogenous-state Markov game.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dynamics
from .dynamics import DynamicsSpec, DynamicsState
from .errors import ConfigError, EffortBoundsError, EpisodeCompleteError, ShapeError

DEFAULT_BUDGET = 10.0
DEFAULT_COST = 1.0
DEFAULT_GUARD = 1e-6
DEFAULT_EFFORT_CAP = 5.0
DEFAULT_DISCOUNT = 0.95


def _is_scalar(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating))


@dataclass
class EnvConfig:
    n_agents: int
    dynamics: list[DynamicsSpec]
    horizon: int = 45
    window: int = 10
    budget: float | Sequence[float] = DEFAULT_BUDGET    # scalar or per-step schedule
    costs: float | Sequence[float] = DEFAULT_COST       # scalar or per-agent
    denominator_guard: float = DEFAULT_GUARD
    effort_cap: float = DEFAULT_EFFORT_CAP
    discount: float = DEFAULT_DISCOUNT

    def budget_at(self, t: int) -> float:
        if _is_scalar(self.budget):
            return float(self.budget)
        return float(self.budget[t])

    def cost_vector(self) -> np.ndarray:
        if _is_scalar(self.costs):
            return np.full(self.n_agents, float(self.costs))
        return np.asarray(self.costs, dtype=float)

    @property
    def obs_dim(self) -> int:
        return self.n_agents * (self.window + 1)


def validate_config(config: EnvConfig) -> list[str]:
    v: list[str] = []
    if config.n_agents < 1:
        v.append(f"n_agents must be >= 1, got {config.n_agents}")
    if config.horizon < 1:
        v.append(f"horizon must be >= 1, got {config.horizon}")
    if config.window < 1:
        v.append(f"window must be >= 1, got {config.window}")
    if len(config.dynamics) != config.n_agents:
        v.append(f"{len(config.dynamics)} dynamics specs for {config.n_agents} agents")
    for i, spec in enumerate(config.dynamics):
        for msg in dynamics.validate(spec):
            v.append(f"dynamics[{i}]: {msg}")
    if _is_scalar(config.budget):
        if not config.budget > 0:
            v.append(f"budget must be > 0, got {config.budget}")
    else:
        schedule = np.asarray(config.budget, dtype=float)
        if len(schedule) != config.horizon:
            v.append(f"budget schedule has {len(schedule)} entries for horizon {config.horizon}")
        if np.any(schedule <= 0):
            v.append("budget schedule entries must be > 0")
    costs = config.costs if _is_scalar(config.costs) else np.asarray(config.costs, dtype=float)
    if _is_scalar(costs):
        if costs < 0:
            v.append(f"cost must be >= 0, got {costs}")
    else:
        if len(costs) != config.n_agents:
            v.append(f"{len(costs)} costs for {config.n_agents} agents")
        if np.any(costs < 0):
            v.append("costs must be >= 0")
    if not config.denominator_guard > 0:
        v.append(f"denominator_guard must be > 0, got {config.denominator_guard}")
    if not config.effort_cap > 0:
        v.append(f"effort_cap must be > 0, got {config.effort_cap}")
    if not 0.0 <= config.discount <= 1.0:
        v.append(f"discount must be in [0, 1], got {config.discount}")
    return v


@dataclass
class EnvState:
    t: int
    qoi_history: np.ndarray                  # (K+1, N); row K is the newest step
    dyn_states: list[DynamicsState] = field(repr=False)


@dataclass
class StepOutcome:
    rewards: np.ndarray
    payoffs: np.ndarray
    next_state: EnvState
    done: bool


def reset(config: EnvConfig, rng) -> EnvState:
    """Start an episode: history is zero-padded except the newest row (q at t=0)."""
    violations = validate_config(config)
    if violations:
        raise ConfigError(violations)
    rng = np.random.default_rng(rng)
    history = np.zeros((config.window + 1, config.n_agents))
    dyn_states = []
    for i, spec in enumerate(config.dynamics):
        q, nxt = dynamics.qoi_at(spec, dynamics.initial_state(spec), rng)
        history[config.window, i] = q
        dyn_states.append(nxt)
    return EnvState(t=0, qoi_history=history, dyn_states=dyn_states)


def _check_efforts(x: np.ndarray, effort_cap: float | None):
    if effort_cap is not None and (np.any(x < 0) or np.any(x > effort_cap)):
        raise EffortBoundsError(f"efforts {x} outside [0, {effort_cap}]")


def compute_rewards(
    x, q, budget: float, guard: float = DEFAULT_GUARD, effort_cap: float | None = None
) -> np.ndarray:
    """Proportional budget shares r_i = x_i q_i / sum_j x_j q_j * R.

    When the contribution total is within `guard` of zero the shares are
    undefined, and everyone is paid nothing for that step.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.shape != q.shape:
        raise ShapeError(f"effort shape {x.shape} != QoI shape {q.shape}")
    _check_efforts(x, effort_cap)
    contributions = x * q
    total = contributions.sum()
    if abs(total) < guard:
        return np.zeros_like(x)
    return contributions / total * budget


def compute_payoffs(
    x, q, budget: float, costs, guard: float = DEFAULT_GUARD, effort_cap: float | None = None
) -> np.ndarray:
    """Reward share minus linear sensing cost: U_i = r_i - c_i x_i."""
    x = np.asarray(x, dtype=float)
    costs = np.asarray(costs, dtype=float)
    r = compute_rewards(x, q, budget, guard, effort_cap)
    return r - costs * x


def step(state: EnvState, x, config: EnvConfig, rng) -> StepOutcome:
    """Settle payoffs at the current step, then advance signals and the window."""
    if state.t >= config.horizon:
        raise EpisodeCompleteError(f"episode already finished at t={state.t}")
    x = np.asarray(x, dtype=float)
    if x.shape != (config.n_agents,):
        raise ShapeError(f"effort vector shape {x.shape}, expected ({config.n_agents},)")
    _check_efforts(x, config.effort_cap)
    rng = np.random.default_rng(rng)

    q_now = state.qoi_history[config.window]
    rewards = compute_rewards(x, q_now, config.budget_at(state.t), config.denominator_guard)
    payoffs = rewards - config.cost_vector() * x

    history = np.empty_like(state.qoi_history)
    history[:-1] = state.qoi_history[1:]
    dyn_states = []
    for i, spec in enumerate(config.dynamics):
        q, nxt = dynamics.qoi_at(spec, state.dyn_states[i], rng)
        history[config.window, i] = q
        dyn_states.append(nxt)
    next_state = EnvState(t=state.t + 1, qoi_history=history, dyn_states=dyn_states)
    return StepOutcome(rewards, payoffs, next_state, next_state.t >= config.horizon)


def observation(state: EnvState, agent: int) -> np.ndarray:
    """The public observation: all agents' QoI window, flattened row-major.

    Identical for every agent; effort levels are never part of it.
    """
    n = state.qoi_history.shape[1]
    if not 0 <= agent < n:
        raise ShapeError(f"agent index {agent} out of range for {n} agents")
    return state.qoi_history.reshape(-1).copy()


def discounted_return(payoffs, gamma: float) -> float:
    """Sum of gamma^t * U_t with t starting at 1 for the first entry."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"discount must be in [0, 1], got {gamma}")
    total = 0.0
    factor = gamma
    for u in payoffs:
        total += factor * float(u)
        factor *= gamma
    return total
