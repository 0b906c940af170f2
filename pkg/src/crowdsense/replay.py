"""Fixed-capacity FIFO experience store with uniform minibatch sampling.

One record holds the *joint* transition for all agents at one time step:
the QoI window seen when acting, every agent's effort, every agent's
payoff, and the window after the environment advanced. Critics consume
all efforts, so joint storage avoids duplicating the windows N times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EffortBoundsError, EmptyBufferError, ShapeError


@dataclass
class Transition:
    obs_window: np.ndarray        # (K+1, N) QoI matrix at decision time
    actions: np.ndarray           # (N,) joint effort
    payoffs: np.ndarray           # (N,)
    next_obs_window: np.ndarray   # (K+1, N)

    def __post_init__(self):
        self.obs_window = np.asarray(self.obs_window, dtype=float)
        self.actions = np.asarray(self.actions, dtype=float)
        self.payoffs = np.asarray(self.payoffs, dtype=float)
        self.next_obs_window = np.asarray(self.next_obs_window, dtype=float)


class ReplayBuffer:
    """Ring buffer of Transitions; eviction is strictly oldest-first."""

    def __init__(self, capacity: int, effort_cap: float | None = None):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.effort_cap = effort_cap
        self._ring: list[Transition] = []
        self._insertions = 0
        self._shapes: tuple | None = None

    def __len__(self) -> int:
        return len(self._ring)

    @property
    def insertions(self) -> int:
        """Total number of pushes ever, independent of eviction."""
        return self._insertions

    def _check(self, tr: Transition):
        n = tr.actions.shape[0] if tr.actions.ndim == 1 else -1
        shapes = (tr.obs_window.shape, tr.actions.shape, tr.payoffs.shape, tr.next_obs_window.shape)
        if (
            tr.obs_window.ndim != 2
            or tr.actions.ndim != 1
            or tr.payoffs.shape != tr.actions.shape
            or tr.next_obs_window.shape != tr.obs_window.shape
            or tr.obs_window.shape[1] != n
        ):
            raise ShapeError(f"inconsistent transition shapes {shapes}")
        if self._shapes is None:
            self._shapes = shapes
        elif shapes != self._shapes:
            raise ShapeError(f"transition shapes {shapes} do not match buffer {self._shapes}")
        if self.effort_cap is not None:
            if np.any(tr.actions < 0) or np.any(tr.actions > self.effort_cap):
                raise EffortBoundsError(
                    f"efforts {tr.actions} outside [0, {self.effort_cap}]"
                )

    def push(self, tr: Transition) -> None:
        self._check(tr)
        if len(self._ring) < self.capacity:
            self._ring.append(tr)
        else:
            self._ring[self._insertions % self.capacity] = tr
        self._insertions += 1

    def sample(self, m: int, rng: np.random.Generator) -> list[Transition]:
        """Draw `m` records uniformly with replacement; deterministic per rng state."""
        if not self._ring:
            raise EmptyBufferError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, len(self._ring), size=int(m))
        return [self._ring[i] for i in idx]
