"""Crowdsensing effort-allocation game with multi-agent actor-critic training."""

from .dynamics import (
    DynamicsState,
    LinearSpec,
    MarkovSpec,
    SineSpec,
    default_specs,
    initial_state,
    qoi_at,
)
from .env import EnvConfig, EnvState, StepOutcome, compute_payoffs, compute_rewards, reset, step
from .errors import (
    ConfigError,
    CrowdsenseError,
    EffortBoundsError,
    EmptyBufferError,
    EpisodeCompleteError,
    ShapeError,
)
from .marl import Agent, TrainerConfig, TrainMetrics, evaluate, make_agents, train
from .nn import Mlp, OptimizerState, forward, backward, grad_check
from .replay import ReplayBuffer, Transition

__all__ = [
    "Agent",
    "ConfigError",
    "CrowdsenseError",
    "DynamicsState",
    "EffortBoundsError",
    "EmptyBufferError",
    "EnvConfig",
    "EnvState",
    "EpisodeCompleteError",
    "LinearSpec",
    "MarkovSpec",
    "Mlp",
    "OptimizerState",
    "ReplayBuffer",
    "ShapeError",
    "SineSpec",
    "StepOutcome",
    "TrainMetrics",
    "TrainerConfig",
    "Transition",
    "backward",
    "compute_payoffs",
    "compute_rewards",
    "default_specs",
    "evaluate",
    "forward",
    "grad_check",
    "initial_state",
    "make_agents",
    "qoi_at",
    "reset",
    "step",
    "train",
]

__version__ = "0.1.0"
