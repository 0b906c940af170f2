"""Stochastic quality-of-information (QoI) signal generators.

Each sensing participant is driven by one of three signal families:
a sinusoid, a repeating linear ramp (sawtooth), or a finite-state
Markov chain. Signals may go negative; agents are expected to learn
to sit out those stretches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SineSpec:
    amplitude: float
    period: float          # steps per full cycle
    phase: float = 0.0     # radians
    offset: float = 0.0


@dataclass(frozen=True)
class LinearSpec:
    slope: float           # QoI gained per step within a ramp
    period: int            # ramp restarts every `period` steps
    offset: float = 0.0


@dataclass
class MarkovSpec:
    values: np.ndarray       # QoI emitted in each chain state
    transition: np.ndarray   # row-stochastic matrix, one row per state
    initial_state: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.transition = np.asarray(self.transition, dtype=float)


DynamicsSpec = Union[SineSpec, LinearSpec, MarkovSpec]


@dataclass(frozen=True)
class DynamicsState:
    t: int = 0
    markov_state: int | None = None


def validate(spec: DynamicsSpec) -> list[str]:
    """Return every invariant violation for `spec` (empty list means ok)."""
    violations: list[str] = []
    if isinstance(spec, SineSpec):
        if not spec.period > 0:
            violations.append(f"period must be > 0, got {spec.period}")
        if not math.isfinite(spec.amplitude):
            violations.append(f"amplitude must be finite, got {spec.amplitude}")
    elif isinstance(spec, LinearSpec):
        if not spec.period > 0:
            violations.append(f"period must be > 0, got {spec.period}")
        if not math.isfinite(spec.slope):
            violations.append(f"slope must be finite, got {spec.slope}")
    elif isinstance(spec, MarkovSpec):
        values = spec.values
        matrix = spec.transition
        if values.ndim != 1 or values.size == 0:
            violations.append("values must be a non-empty vector")
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            violations.append(f"transition must be square, got shape {matrix.shape}")
        elif values.ndim == 1 and matrix.shape[0] != values.size:
            violations.append(
                f"transition has {matrix.shape[0]} rows but there are {values.size} values"
            )
        if matrix.ndim == 2:
            if np.any(matrix < 0) or np.any(matrix > 1):
                violations.append("transition entries must lie in [0, 1]")
            for i, row in enumerate(matrix):
                s = float(row.sum())
                if abs(s - 1.0) > ROW_SUM_TOL:
                    violations.append(f"row {i} sums to {s:g}")
        if values.size and not (0 <= spec.initial_state < values.size):
            violations.append(
                f"initial_state {spec.initial_state} out of range for {values.size} states"
            )
    else:
        violations.append(f"unknown dynamics spec type {type(spec).__name__}")
    return violations


def initial_state(spec: DynamicsSpec) -> DynamicsState:
    if isinstance(spec, MarkovSpec):
        return DynamicsState(t=0, markov_state=spec.initial_state)
    return DynamicsState(t=0)


def qoi_at(
    spec: DynamicsSpec, state: DynamicsState, rng: np.random.Generator
) -> tuple[float, DynamicsState]:
    """Emit the QoI value for the current step and advance one step.

    Markov chains advance with a single uniform draw through the
    inverse CDF of the current transition row, so trajectories are
    reproducible across platforms for a given seed.
    """
    t = state.t
    if isinstance(spec, SineSpec):
        q = spec.offset + spec.amplitude * math.sin(2.0 * math.pi * t / spec.period + spec.phase)
        return q, DynamicsState(t=t + 1)
    if isinstance(spec, LinearSpec):
        q = spec.offset + spec.slope * (t % spec.period)
        return q, DynamicsState(t=t + 1)
    if isinstance(spec, MarkovSpec):
        s = state.markov_state
        if s is None or not (0 <= s < spec.values.size):
            raise ValueError(f"markov state {s} invalid for {spec.values.size}-state chain")
        q = float(spec.values[s])
        u = rng.random()
        cdf = np.cumsum(spec.transition[s])
        nxt = int(min(np.searchsorted(cdf, u, side="right"), spec.values.size - 1))
        return q, DynamicsState(t=t + 1, markov_state=nxt)
    raise TypeError(f"unknown dynamics spec type {type(spec).__name__}")


# --- default desk-scale specs -------------------------------------------------
#
# Used by the experiment harness whenever a config names a signal family
# without giving per-agent parameters. Parameters are drawn once from the
# master seed so every run (and every window-length sweep cell) sees the
# same heterogeneous environment.

DEFAULT_FAMILIES = ("sine", "linear", "markov")


def default_sine(rng: np.random.Generator) -> SineSpec:
    # The offset matches the largest amplitude draw, so default sine quality
    # never dips below zero.  Negative quality flips the sign of a
    # contribution inside the proportional-share denominator, which can turn
    # the whole pool negative and reward perverse over-sensing spirals.
    return SineSpec(
        amplitude=float(rng.uniform(0.8, 1.2)),
        period=float(rng.uniform(15.0, 25.0)),
        phase=float(rng.uniform(0.0, 2.0 * math.pi)),
        offset=1.2,
    )


def default_linear(rng: np.random.Generator) -> LinearSpec:
    # Offset keeps the ramp's competitive value on par with the other
    # families, so every default participant has a profitable niche.
    return LinearSpec(
        slope=float(rng.uniform(0.05, 0.15)),
        period=20,
        offset=0.3,
    )


def default_markov(rng: np.random.Generator, n_states: int = 5) -> MarkovSpec:
    values = rng.uniform(-1.0, 2.0, size=n_states)
    matrix = rng.uniform(size=(n_states, n_states))
    matrix /= matrix.sum(axis=1, keepdims=True)
    return MarkovSpec(values=values, transition=matrix, initial_state=0)


def default_specs(family: str, n_agents: int, seed: int) -> list[DynamicsSpec]:
    """Build `n_agents` heterogeneous specs of one family ("mixed" cycles all three)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD15C)))
    makers = {"sine": default_sine, "linear": default_linear, "markov": default_markov}
    specs: list[DynamicsSpec] = []
    for i in range(n_agents):
        kind = DEFAULT_FAMILIES[i % 3] if family == "mixed" else family
        if kind not in makers:
            raise ValueError(f"unknown dynamics family {family!r}")
        specs.append(makers[kind](rng))
    return specs
