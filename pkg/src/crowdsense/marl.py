"""Multi-agent actor-critic learner with centralized critics.

Each participant owns an actor (QoI window -> bounded effort) and a
critic scoring the joint state-action (window plus *all* efforts). The
critics only exist during training; execution needs nothing but the
actors and the public QoI window, so trained policies run fully
decentralized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import env as env_mod
from . import nn
from .env import EnvConfig
from .errors import ConfigError, ShapeError
from .nn import Gradients, Mlp, OptimizerState
from .replay import ReplayBuffer, Transition


@dataclass
class TrainerConfig:
    episodes: int = 150
    # Quality evolves independently of effort, so optimal play is myopic; a
    # short bootstrap horizon keeps critic targets near the stage-payoff scale
    # instead of ~20x it, which stabilizes the regression.
    gamma: float = 0.5
    minibatch: int = 64
    updates_per_step: int = 1
    buffer_capacity: int = 100_000
    hidden: tuple[int, ...] = (64, 64)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    actor_skip: bool = False
    critic_skip: bool = True
    noise_initial: float | None = None   # defaults to 0.5 * effort_cap
    noise_decay: float = 0.97            # reaches the floor within ~150 episodes
    noise_floor: float = 0.02
    tau: float = 0.01
    use_targets: bool = True
    seed: int = 0


def validate_trainer(config: TrainerConfig) -> list[str]:
    v: list[str] = []
    if config.episodes < 0:
        v.append(f"episodes must be >= 0, got {config.episodes}")
    if not 0.0 <= config.gamma <= 1.0:
        v.append(f"gamma must be in [0, 1], got {config.gamma}")
    if config.minibatch < 1:
        v.append(f"minibatch must be >= 1, got {config.minibatch}")
    if config.updates_per_step < 0:
        v.append(f"updates_per_step must be >= 0, got {config.updates_per_step}")
    if config.buffer_capacity < 1:
        v.append(f"buffer_capacity must be >= 1, got {config.buffer_capacity}")
    if not 0.0 < config.tau <= 1.0:
        v.append(f"tau must be in (0, 1], got {config.tau}")
    if config.noise_initial is not None and config.noise_initial < 0:
        v.append(f"noise_initial must be >= 0, got {config.noise_initial}")
    if not 0.0 < config.noise_decay <= 1.0:
        v.append(f"noise_decay must be in (0, 1], got {config.noise_decay}")
    return v


@dataclass
class Agent:
    actor: Mlp
    critic: Mlp
    actor_opt: OptimizerState
    critic_opt: OptimizerState
    target_actor: Mlp | None = None
    target_critic: Mlp | None = None
    noise_sigma: float = 0.0

    @property
    def n_actions(self) -> int:
        """How many joint efforts the critic consumes."""
        return self.critic.in_dim - self.actor.in_dim


@dataclass
class TrainMetrics:
    episode_payoffs: np.ndarray      # (episodes, N) summed payoff per episode
    critic_losses: np.ndarray        # (updates, N) pre-step loss per update round
    noise_levels: np.ndarray         # (episodes,)


def make_agents(env_config: EnvConfig, trainer_config: TrainerConfig) -> list[Agent]:
    """Seeded construction of all actors, critics, and their target copies."""
    obs_dim = env_config.obs_dim
    n = env_config.n_agents
    seed_rng = np.random.default_rng(np.random.SeedSequence((trainer_config.seed, 0x1217)))
    agents = []
    for _ in range(n):
        actor_seed, critic_seed = (int(s) for s in seed_rng.integers(0, 2**31, size=2))
        actor = nn.init(
            (obs_dim, *trainer_config.hidden, 1),
            nn.SCALED_SIGMOID,
            seed=actor_seed,
            x_max=env_config.effort_cap,
            use_skip=trainer_config.actor_skip,
        )
        critic = nn.init(
            (obs_dim + n, *trainer_config.hidden, 1),
            nn.IDENTITY,
            seed=critic_seed,
            use_skip=trainer_config.critic_skip,
        )
        agent = Agent(
            actor=actor,
            critic=critic,
            actor_opt=OptimizerState(lr=trainer_config.actor_lr),
            critic_opt=OptimizerState(lr=trainer_config.critic_lr),
        )
        if trainer_config.use_targets:
            agent.target_actor = nn.clone_mlp(actor)
            agent.target_critic = nn.clone_mlp(critic)
        agents.append(agent)
    return agents


def act(agent: Agent, obs, explore: bool, rng: np.random.Generator | None = None) -> float:
    """Deterministic actor output, plus clamped Gaussian noise when exploring."""
    out, _ = nn.forward(agent.actor, obs)
    effort = float(out[0])
    if explore:
        if rng is None:
            raise ValueError("exploration requires an rng")
        effort = float(np.clip(effort + rng.normal(0.0, agent.noise_sigma), 0.0, agent.actor.x_max))
    return effort


def critic_value(agent: Agent, obs_window, actions) -> float:
    """Score one joint state-action; the window may be a matrix or already flat."""
    obs = np.asarray(obs_window, dtype=float).reshape(-1)
    actions = np.asarray(actions, dtype=float).reshape(-1)
    if actions.shape[0] != agent.n_actions:
        raise ShapeError(
            f"critic expects {agent.n_actions} efforts, got {actions.shape[0]}"
        )
    out, _ = nn.forward(agent.critic, np.concatenate([obs, actions]))
    return float(out[0])


def _stack_batch(batch: Sequence[Transition]):
    obs = np.stack([tr.obs_window.reshape(-1) for tr in batch])
    actions = np.stack([tr.actions for tr in batch])
    payoffs = np.stack([tr.payoffs for tr in batch])
    next_obs = np.stack([tr.next_obs_window.reshape(-1) for tr in batch])
    return obs, actions, payoffs, next_obs


def _bootstrap_input(agents: Sequence[Agent], next_obs: np.ndarray, use_targets: bool) -> np.ndarray:
    """Next window plus every agent's (target) actor output on it, concatenated."""
    next_actions = np.empty((next_obs.shape[0], len(agents)))
    for k, agent in enumerate(agents):
        actor = agent.target_actor if use_targets and agent.target_actor is not None else agent.actor
        out, _ = nn.forward(actor, next_obs)
        next_actions[:, k] = out[:, 0]
    return np.concatenate([next_obs, next_actions], axis=1)


def _target_row(agent: Agent, critic_in, payoffs_i, gamma: float, use_targets: bool) -> np.ndarray:
    critic = agent.target_critic if use_targets and agent.target_critic is not None else agent.critic
    q, _ = nn.forward(critic, critic_in)
    return payoffs_i + gamma * q[:, 0]


def compute_targets(
    agents: Sequence[Agent], batch: Sequence[Transition], gamma: float, use_targets: bool
) -> np.ndarray:
    """Bootstrap targets y_i^j = U_i^j + gamma * Q_i(next window, next joint efforts).

    Next efforts come from every agent's (target) actor on the next
    window. Episode truncation is invisible here on purpose: the horizon
    ends an episode but is not an absorbing terminal state, so no
    terminal masking is applied.
    """
    if len(batch) == 0:
        raise ShapeError("minibatch must be non-empty")
    _, _, payoffs, next_obs = _stack_batch(batch)
    critic_in = _bootstrap_input(agents, next_obs, use_targets)
    targets = np.empty((len(agents), len(batch)))
    for i, agent in enumerate(agents):
        targets[i] = _target_row(agent, critic_in, payoffs[:, i], gamma, use_targets)
    return targets


def _update_critic_arrays(agent: Agent, state_action: np.ndarray, targets_i) -> float:
    y = np.asarray(targets_i, dtype=float)
    m = state_action.shape[0]
    pred, cache = nn.forward(agent.critic, state_action)
    residual = pred[:, 0] - y
    loss = float(np.mean(residual**2))
    d_out = (2.0 / m) * residual[:, None]
    grads, _ = nn.backward(agent.critic, cache, d_out)
    nn.apply_update(agent.critic_opt, agent.critic, grads)
    return loss


def update_critic(agent: Agent, batch: Sequence[Transition], targets_i) -> float:
    """One descent step on the mean squared target error; returns the pre-step loss."""
    obs, actions, _, _ = _stack_batch(batch)
    return _update_critic_arrays(agent, np.concatenate([obs, actions], axis=1), targets_i)


def _actor_objective_arrays(
    agent: Agent, agent_index: int, obs: np.ndarray, state_action: np.ndarray
) -> tuple[float, Gradients]:
    """Core of the actor objective; `state_action` column obs_dim+agent_index
    is overwritten with the live actor's output (callers must not reuse it)."""
    m = obs.shape[0]
    a_out, a_cache = nn.forward(agent.actor, obs)
    state_action[:, obs.shape[1] + agent_index] = a_out[:, 0]
    q, c_cache = nn.forward(agent.critic, state_action)
    objective = float(np.mean(q[:, 0]))
    d_q = np.full((m, 1), 1.0 / m)
    _, d_in = nn.backward(agent.critic, c_cache, d_q)
    d_effort = d_in[:, obs.shape[1] + agent_index]
    grads, _ = nn.backward(agent.actor, a_cache, d_effort[:, None])
    return objective, grads


def actor_objective_gradient(
    agent: Agent, agent_index: int, batch: Sequence[Transition]
) -> tuple[float, Gradients]:
    """Mean critic value with agent i's effort re-produced by its live actor,
    and that value's exact gradient with respect to the actor parameters.

    Other agents' efforts stay as stored in the buffer; the chain runs
    through the critic's input gradient at the effort coordinate.
    """
    obs, actions, _, _ = _stack_batch(batch)
    return _actor_objective_arrays(agent, agent_index, obs, np.concatenate([obs, actions], axis=1))


def update_actor(agent: Agent, agent_index: int, batch: Sequence[Transition]) -> float:
    """One ascent step on the mean critic value; returns the objective estimate."""
    objective, grads = actor_objective_gradient(agent, agent_index, batch)
    nn.apply_update(agent.actor_opt, agent.actor, nn.scale_grads(grads, -1.0))
    return objective


def _blend(target: Mlp, live: Mlp, tau: float):
    for t_arr, l_arr in zip(target.weights + target.biases, live.weights + live.biases):
        t_arr *= 1.0 - tau
        t_arr += tau * l_arr


def soft_update_targets(agents: Sequence[Agent], tau: float) -> None:
    """target <- tau * live + (1 - tau) * target, parameter-wise."""
    for agent in agents:
        if agent.target_actor is not None:
            _blend(agent.target_actor, agent.actor, tau)
        if agent.target_critic is not None:
            _blend(agent.target_critic, agent.critic, tau)


def train(env_config: EnvConfig, trainer_config: TrainerConfig) -> tuple[list[Agent], TrainMetrics]:
    """Full training loop: explore, store joint transitions, update critics
    then actors once the buffer is warm, soft-update targets every step.

    Fully deterministic for a given trainer seed.
    """
    violations = env_mod.validate_config(env_config) + validate_trainer(trainer_config)
    if violations:
        raise ConfigError(violations)

    root = np.random.SeedSequence(trainer_config.seed)
    env_ss, noise_ss, sample_ss = root.spawn(3)
    rng_env = np.random.default_rng(env_ss)
    rng_noise = np.random.default_rng(noise_ss)
    rng_sample = np.random.default_rng(sample_ss)

    agents = make_agents(env_config, trainer_config)
    buffer = ReplayBuffer(trainer_config.buffer_capacity, effort_cap=env_config.effort_cap)
    noise_initial = (
        0.5 * env_config.effort_cap
        if trainer_config.noise_initial is None
        else trainer_config.noise_initial
    )

    n = env_config.n_agents
    episode_payoffs = np.zeros((trainer_config.episodes, n))
    noise_levels = np.zeros(trainer_config.episodes)
    loss_rows: list[np.ndarray] = []

    for episode in range(trainer_config.episodes):
        sigma = max(trainer_config.noise_floor, noise_initial * trainer_config.noise_decay**episode)
        noise_levels[episode] = sigma
        for agent in agents:
            agent.noise_sigma = sigma

        state = env_mod.reset(env_config, rng_env)
        done = False
        while not done:
            obs = env_mod.observation(state, 0)
            efforts = np.array([act(agent, obs, True, rng_noise) for agent in agents])
            outcome = env_mod.step(state, efforts, env_config, rng_env)
            buffer.push(
                Transition(
                    obs_window=state.qoi_history.copy(),
                    actions=efforts,
                    payoffs=outcome.payoffs,
                    next_obs_window=outcome.next_state.qoi_history.copy(),
                )
            )
            episode_payoffs[episode] += outcome.payoffs
            state = outcome.next_state
            done = outcome.done

            if len(buffer) >= trainer_config.minibatch:
                for _ in range(trainer_config.updates_per_step):
                    losses = np.zeros(n)
                    for i, agent in enumerate(agents):
                        batch = buffer.sample(trainer_config.minibatch, rng_sample)
                        b_obs, b_actions, b_payoffs, b_next = _stack_batch(batch)
                        bootstrap = _bootstrap_input(agents, b_next, trainer_config.use_targets)
                        targets_i = _target_row(
                            agent,
                            bootstrap,
                            b_payoffs[:, i],
                            trainer_config.gamma,
                            trainer_config.use_targets,
                        )
                        state_action = np.concatenate([b_obs, b_actions], axis=1)
                        losses[i] = _update_critic_arrays(agent, state_action, targets_i)
                        _, grads = _actor_objective_arrays(agent, i, b_obs, state_action)
                        nn.apply_update(agent.actor_opt, agent.actor, nn.scale_grads(grads, -1.0))
                    loss_rows.append(losses)
                if trainer_config.use_targets:
                    soft_update_targets(agents, trainer_config.tau)

    critic_losses = np.stack(loss_rows) if loss_rows else np.zeros((0, n))
    return agents, TrainMetrics(episode_payoffs, critic_losses, noise_levels)


# --- decentralized evaluation -------------------------------------------------
#
# Evaluation accepts actors (or bare callables), never full Agents: the
# critics cannot leak into execution because the API has no slot for them.

Policy = Union[Mlp, Callable[[np.ndarray, np.random.Generator], float]]


@dataclass
class EvalResult:
    mean: np.ndarray        # per-agent mean episode payoff
    variance: np.ndarray    # per-agent variance across episodes
    episode_payoffs: np.ndarray = field(repr=False)  # (episodes, N)


def _as_policy(policy: Policy) -> Callable[[np.ndarray, np.random.Generator], float]:
    if isinstance(policy, Mlp):
        return lambda obs, rng: float(nn.forward(policy, obs)[0][0])
    return policy


def evaluate(
    policies: Sequence[Policy],
    env_config: EnvConfig,
    episodes: int,
    seed: int = 0,
    *,
    discounted: bool = False,
) -> EvalResult:
    """Run greedy policies (no exploration noise) and summarize episode payoffs."""
    violations = env_mod.validate_config(env_config)
    if violations:
        raise ConfigError(violations)
    if len(policies) != env_config.n_agents:
        raise ShapeError(f"{len(policies)} policies for {env_config.n_agents} agents")
    fns = [_as_policy(p) for p in policies]
    env_ss, pol_ss = np.random.SeedSequence(seed).spawn(2)
    rng_env = np.random.default_rng(env_ss)
    rng_pol = np.random.default_rng(pol_ss)

    totals = np.zeros((episodes, env_config.n_agents))
    for episode in range(episodes):
        state = env_mod.reset(env_config, rng_env)
        done = False
        step_payoffs: list[np.ndarray] = []
        while not done:
            obs = env_mod.observation(state, 0)
            efforts = np.array(
                [np.clip(fn(obs, rng_pol), 0.0, env_config.effort_cap) for fn in fns]
            )
            outcome = env_mod.step(state, efforts, env_config, rng_env)
            step_payoffs.append(outcome.payoffs)
            state = outcome.next_state
            done = outcome.done
        series = np.stack(step_payoffs)
        if discounted:
            totals[episode] = [
                env_mod.discounted_return(series[:, i], env_config.discount)
                for i in range(env_config.n_agents)
            ]
        else:
            totals[episode] = series.sum(axis=0)
    return EvalResult(
        mean=totals.mean(axis=0),
        variance=totals.var(axis=0),
        episode_payoffs=totals,
    )


# --- checkpoints --------------------------------------------------------------


def save_agent(agent: Agent, path) -> None:
    """One file per agent bundling actor and critic (bit-faithful)."""
    payload = {
        "actor": nn.mlp_to_dict(agent.actor),
        "critic": nn.mlp_to_dict(agent.critic),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_agent(path) -> Agent:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return Agent(
        actor=nn.mlp_from_dict(payload["actor"]),
        critic=nn.mlp_from_dict(payload["critic"]),
        actor_opt=OptimizerState(lr=0.0),
        critic_opt=OptimizerState(lr=0.0),
    )
