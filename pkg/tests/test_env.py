import numpy as np
import pytest

from crowdsense import env
from crowdsense.dynamics import MarkovSpec, SineSpec
from crowdsense.env import EnvConfig, EnvState
from crowdsense.errors import (
    ConfigError,
    EffortBoundsError,
    EpisodeCompleteError,
    ShapeError,
)


def constant_config(n_agents=2, value=1.0, **overrides):
    """Environment whose QoI is frozen at `value` for every agent."""
    spec = MarkovSpec(values=[value], transition=np.eye(1))
    defaults = dict(n_agents=n_agents, dynamics=[spec] * n_agents)
    defaults.update(overrides)
    return EnvConfig(**defaults)


# --- compute_rewards / compute_payoffs ---------------------------------------


def test_rewards_symmetric_split():
    r = env.compute_rewards([1, 1], [1, 1], budget=10)
    assert np.allclose(r, [5, 5])


def test_rewards_worked_example():
    # contributions (2*0.5, 1*3) = (1, 3); shares 1/4 and 3/4 of R=8
    r = env.compute_rewards([2, 1], [0.5, 3], budget=8)
    assert np.allclose(r, [2, 6], atol=1e-12)


def test_rewards_guard_zero_denominator():
    r = env.compute_rewards([1, 1], [1, -1], budget=123.0)
    assert np.array_equal(r, [0.0, 0.0])


def test_rewards_effort_bounds_checked():
    with pytest.raises(EffortBoundsError):
        env.compute_rewards([6, 1], [1, 1], budget=10, effort_cap=5.0)
    with pytest.raises(EffortBoundsError):
        env.compute_rewards([-0.5, 1], [1, 1], budget=10, effort_cap=5.0)


def test_payoffs_single_agent_takes_budget():
    u = env.compute_payoffs([2], [3], budget=12, costs=[1])
    assert u == pytest.approx([10.0])


def test_payoffs_worked_example():
    u = env.compute_payoffs([2, 1], [0.5, 3], budget=8, costs=[0.2, 0.1])
    assert np.allclose(u, [1.6, 5.9], atol=1e-12)


def test_payoffs_guard_leaves_costs():
    u = env.compute_payoffs([1, 1], [1, -1], budget=10, costs=[1, 1])
    assert np.allclose(u, [-1, -1])


def test_budget_conservation_random_samples():
    # Whenever the guard does not trigger the shares must sum to R exactly
    # (to rounding), across 1e4 random draws.
    rng = np.random.default_rng(123)
    checked = 0
    for _ in range(10**4):
        n = int(rng.integers(1, 6))
        x = rng.uniform(0, 5, size=n)
        q = rng.uniform(-1, 2, size=n)
        budget = float(rng.uniform(0.1, 100))
        if abs(np.dot(x, q)) < env.DEFAULT_GUARD:
            continue
        r = env.compute_rewards(x, q, budget)
        assert abs(r.sum() - budget) <= 1e-9 * budget
        checked += 1
    assert checked > 9000


def test_share_scale_invariance():
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.uniform(0.1, 5, size=3)
        q = rng.uniform(0.1, 2, size=3)
        lam = float(rng.uniform(1, 4))
        base = env.compute_rewards(x, q, budget=10)
        scaled = env.compute_rewards(lam * x, q, budget=10)
        assert np.allclose(base, scaled, atol=1e-9)


def test_reward_monotone_in_own_effort():
    q = np.array([1.0, 2.0])
    previous = -np.inf
    for x0 in np.linspace(0.1, 5, 25):
        r = env.compute_rewards([x0, 1.0], q, budget=10)
        assert r[0] > previous
        previous = r[0]


def test_zero_effort_zero_payoff():
    u = env.compute_payoffs([0, 2], [1.5, 1.0], budget=10, costs=[3, 0.1])
    assert u[0] == 0.0


def test_permutation_symmetry():
    x = np.array([1.0, 2.0, 0.5])
    q = np.array([0.3, 1.1, 2.0])
    perm = np.array([2, 0, 1])
    r = env.compute_rewards(x, q, budget=7)
    r_perm = env.compute_rewards(x[perm], q[perm], budget=7)
    assert np.allclose(r[perm], r_perm)


# --- reset / step / observation ----------------------------------------------


def test_reset_zero_padding_and_shape():
    config = EnvConfig(
        n_agents=2,
        dynamics=[SineSpec(amplitude=1, period=20), SineSpec(amplitude=1, period=10)],
        window=3,
    )
    state = env.reset(config, np.random.default_rng(0))
    assert state.qoi_history.shape == (4, 2)
    assert np.array_equal(state.qoi_history[:3], np.zeros((3, 2)))
    assert state.t == 0


def test_reset_determinism():
    config = EnvConfig(n_agents=3, dynamics=env_specs(), window=5)
    a = env.reset(config, np.random.default_rng(11))
    b = env.reset(config, np.random.default_rng(11))
    assert np.array_equal(a.qoi_history, b.qoi_history)


def env_specs():
    from crowdsense.dynamics import default_specs

    return default_specs("mixed", 3, seed=4)


def test_reset_markov_initial_value_lands_in_newest_row():
    spec = MarkovSpec(values=[0.0, 0.0, 7.0], transition=np.eye(3), initial_state=2)
    config = EnvConfig(n_agents=1, dynamics=[spec], window=2)
    state = env.reset(config, np.random.default_rng(0))
    assert state.qoi_history[2, 0] == 7.0
    assert np.array_equal(state.qoi_history[:2, 0], [0.0, 0.0])


def test_reset_invalid_config_lists_violations():
    config = EnvConfig(n_agents=0, dynamics=[], horizon=0, window=0)
    with pytest.raises(ConfigError) as excinfo:
        env.reset(config, np.random.default_rng(0))
    assert len(excinfo.value.violations) >= 3


def test_step_settles_constant_dynamics():
    config = constant_config(n_agents=2, value=1.0, costs=0.0, horizon=5, window=2)
    state = env.reset(config, np.random.default_rng(0))
    for _ in range(2):
        outcome = env.step(state, [1.0, 1.0], config, np.random.default_rng(0))
        assert np.allclose(outcome.payoffs, [5.0, 5.0])
        state = outcome.next_state


def test_step_zero_effort_guard():
    config = constant_config(n_agents=2, horizon=3)
    state = env.reset(config, np.random.default_rng(0))
    outcome = env.step(state, [0.0, 0.0], config, np.random.default_rng(0))
    assert np.array_equal(outcome.payoffs, [0.0, 0.0])


def test_step_episode_end_and_error_after():
    config = constant_config(n_agents=2, horizon=4, window=2)
    rng = np.random.default_rng(1)
    state = env.reset(config, rng)
    done = False
    for _ in range(4):
        assert not done
        outcome = env.step(state, [1.0, 1.0], config, rng)
        state, done = outcome.next_state, outcome.done
    assert done and state.t == 4
    with pytest.raises(EpisodeCompleteError):
        env.step(state, [1.0, 1.0], config, rng)


def test_step_shifts_window():
    spec = MarkovSpec(values=[3.0], transition=np.eye(1))
    config = EnvConfig(n_agents=1, dynamics=[spec], window=2, horizon=5)
    state = env.reset(config, np.random.default_rng(0))
    assert np.array_equal(state.qoi_history[:, 0], [0, 0, 3])
    state = env.step(state, [1.0], config, np.random.default_rng(0)).next_state
    assert np.array_equal(state.qoi_history[:, 0], [0, 3, 3])
    state = env.step(state, [1.0], config, np.random.default_rng(0)).next_state
    assert np.array_equal(state.qoi_history[:, 0], [3, 3, 3])


def test_step_rejects_out_of_bounds_efforts():
    config = constant_config(n_agents=2)
    state = env.reset(config, np.random.default_rng(0))
    with pytest.raises(EffortBoundsError):
        env.step(state, [9.0, 1.0], config, np.random.default_rng(0))


def test_step_uses_budget_schedule():
    schedule = [2.0, 4.0, 8.0]
    config = constant_config(n_agents=2, horizon=3, costs=0.0, budget=schedule)
    rng = np.random.default_rng(0)
    state = env.reset(config, rng)
    for expected in schedule:
        outcome = env.step(state, [1.0, 1.0], config, rng)
        assert np.allclose(outcome.rewards.sum(), expected)
        state = outcome.next_state


def test_observation_flattening_and_equality():
    history = np.array([[1.0, 2.0]])
    state = EnvState(t=0, qoi_history=history, dyn_states=[])
    assert np.array_equal(env.observation(state, 0), [1.0, 2.0])
    assert np.array_equal(env.observation(state, 0), env.observation(state, 1))


def test_observation_after_reset_is_padded():
    spec = MarkovSpec(values=[3.0], transition=np.eye(1))
    config = EnvConfig(n_agents=1, dynamics=[spec], window=2)
    state = env.reset(config, np.random.default_rng(0))
    assert np.array_equal(env.observation(state, 0), [0.0, 0.0, 3.0])


def test_observation_rejects_bad_agent_index():
    state = EnvState(t=0, qoi_history=np.zeros((2, 2)), dyn_states=[])
    with pytest.raises(ShapeError):
        env.observation(state, 5)


def test_observation_is_a_copy():
    state = EnvState(t=0, qoi_history=np.ones((2, 1)), dyn_states=[])
    obs = env.observation(state, 0)
    obs[0] = 99.0
    assert state.qoi_history[0, 0] == 1.0


# --- discounted_return -------------------------------------------------------


def test_discounted_return_undiscounted_sum():
    assert env.discounted_return([1, 2, 3], 1.0) == pytest.approx(6.0)


def test_discounted_return_starts_at_gamma_power_one():
    assert env.discounted_return([5], 0.5) == pytest.approx(2.5)


def test_discounted_return_geometric_series():
    # Oracle: direct term-by-term accumulation.
    expected = sum(0.9**t for t in range(1, 11))
    assert env.discounted_return(np.ones(10), 0.9) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(5.8618940391, abs=1e-9)


def test_discounted_return_rejects_bad_gamma():
    with pytest.raises(ConfigError):
        env.discounted_return([1.0], 1.5)


# --- config validation -------------------------------------------------------


def test_validate_config_budget_schedule_length():
    config = constant_config(n_agents=2, horizon=5, budget=[1.0, 2.0])
    violations = env.validate_config(config)
    assert any("schedule" in v for v in violations)


def test_validate_config_cost_length():
    config = constant_config(n_agents=2, costs=[0.1, 0.2, 0.3])
    assert env.validate_config(config) != []


def test_validate_config_accepts_defaults():
    config = constant_config(n_agents=3)
    assert env.validate_config(config) == []


def test_obs_dim():
    config = constant_config(n_agents=4, window=10)
    assert config.obs_dim == 44
