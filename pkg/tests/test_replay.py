import numpy as np
import pytest

from crowdsense.errors import EffortBoundsError, EmptyBufferError, ShapeError
from crowdsense.replay import ReplayBuffer, Transition


def make_transition(tag: float, n_agents: int = 2, window: int = 1) -> Transition:
    """A transition whose payoff vector encodes `tag` for identification."""
    shape = (window + 1, n_agents)
    return Transition(
        obs_window=np.full(shape, tag),
        actions=np.full(n_agents, 1.0),
        payoffs=np.full(n_agents, tag),
        next_obs_window=np.full(shape, tag + 0.5),
    )


def test_fifo_eviction():
    buffer = ReplayBuffer(capacity=2)
    for tag in (1.0, 2.0, 3.0):
        buffer.push(make_transition(tag))
    tags = {tr.payoffs[0] for tr in buffer.sample(100, np.random.default_rng(0))}
    assert tags == {2.0, 3.0}
    assert len(buffer) == 2


def test_size_tracks_pushes_up_to_capacity():
    buffer = ReplayBuffer(capacity=5)
    for k in range(1, 4):
        buffer.push(make_transition(float(k)))
        assert len(buffer) == k


def test_insertion_counter_ignores_capacity():
    buffer = ReplayBuffer(capacity=3)
    for k in range(7):
        buffer.push(make_transition(float(k)))
    assert buffer.insertions == 7
    assert len(buffer) == 3


def test_eviction_order_by_insertion_tag():
    # After 7 pushes into capacity 3, exactly the 3 newest tags survive.
    buffer = ReplayBuffer(capacity=3)
    for k in range(7):
        buffer.push(make_transition(float(k)))
    tags = {tr.payoffs[0] for tr in buffer.sample(300, np.random.default_rng(1))}
    assert tags == {4.0, 5.0, 6.0}


def test_sample_empty_buffer_raises():
    with pytest.raises(EmptyBufferError):
        ReplayBuffer(capacity=2).sample(1, np.random.default_rng(0))


def test_sample_single_element_with_replacement():
    buffer = ReplayBuffer(capacity=4)
    buffer.push(make_transition(9.0))
    batch = buffer.sample(4, np.random.default_rng(0))
    assert len(batch) == 4
    assert all(tr.payoffs[0] == 9.0 for tr in batch)


def test_sample_deterministic_per_seed():
    buffer = ReplayBuffer(capacity=10)
    for k in range(10):
        buffer.push(make_transition(float(k)))
    a = [tr.payoffs[0] for tr in buffer.sample(50, np.random.default_rng(33))]
    b = [tr.payoffs[0] for tr in buffer.sample(50, np.random.default_rng(33))]
    assert a == b


def test_sample_returns_stored_objects():
    buffer = ReplayBuffer(capacity=4)
    buffer.push(make_transition(1.0))
    buffer.push(make_transition(2.0))
    batch = buffer.sample(10, np.random.default_rng(2))
    stored = {id(tr) for tr in buffer.sample(1000, np.random.default_rng(3))}
    assert all(id(tr) in stored for tr in batch)


def test_sample_uniformity():
    # 1e5 draws over 10 records: every frequency within 0.1 +/- 0.01.
    buffer = ReplayBuffer(capacity=10)
    for k in range(10):
        buffer.push(make_transition(float(k)))
    counts = np.zeros(10)
    batch = buffer.sample(10**5, np.random.default_rng(77))
    for tr in batch:
        counts[int(tr.payoffs[0])] += 1
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 0.1) < 0.01)


def test_push_rejects_inconsistent_shapes():
    buffer = ReplayBuffer(capacity=4)
    buffer.push(make_transition(1.0, n_agents=2))
    with pytest.raises(ShapeError):
        buffer.push(make_transition(2.0, n_agents=3))


def test_push_rejects_mismatched_windows():
    bad = Transition(
        obs_window=np.zeros((2, 2)),
        actions=np.zeros(2),
        payoffs=np.zeros(2),
        next_obs_window=np.zeros((3, 2)),
    )
    with pytest.raises(ShapeError):
        ReplayBuffer(capacity=2).push(bad)


def test_push_enforces_effort_bounds_when_configured():
    buffer = ReplayBuffer(capacity=2, effort_cap=5.0)
    good = make_transition(1.0)
    buffer.push(good)
    bad = make_transition(2.0)
    bad.actions[0] = 6.0
    with pytest.raises(EffortBoundsError):
        buffer.push(bad)
