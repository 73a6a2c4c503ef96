"""Agent brain: priorities, action selection, rewards and returns."""

import math

import numpy as np
import pytest
import torch

from sirl_swarm.models.agent import (
    GREEDY,
    NETWORK_NAMES,
    STOCHASTIC,
    AgentBrain,
    DiscountConfig,
    action_priority,
    deterministic_return,
    medium_reward,
    select_action,
    stochastic_return,
)
from sirl_swarm.models.neuralcore import policy_forward, value_forward


def _constant_value(net, value):
    net.zero_()
    with torch.no_grad():
        net._layers[-1].bias.fill_(value)
    return net


def test_zero_weight_eval_net_gives_zero_priority(small_brain, rng):
    small_brain.eval_value.zero_()
    for _ in range(10):
        assert action_priority(small_brain, rng.uniform(-1.0, 1.0, 7)) == 0.0


def test_synced_target_reproduces_the_priority(small_brain, rng):
    small_brain.sync_targets()
    for _ in range(20):
        state = rng.uniform(-1.0, 1.0, 7)
        assert value_forward(small_brain.eval_target, state) == action_priority(small_brain, state)


def test_brain_starts_with_synced_targets(small_brain):
    assert torch.equal(small_brain.eval_value.flat_parameters(), small_brain.eval_target.flat_parameters())
    assert torch.equal(small_brain.behav_value.flat_parameters(), small_brain.behav_target.flat_parameters())


def test_create_is_seeded():
    a = AgentBrain.create(hidden=(8,), seed=5)
    b = AgentBrain.create(hidden=(8,), seed=5)
    c = AgentBrain.create(hidden=(8,), seed=6)
    assert torch.equal(a.policy.flat_parameters(), b.policy.flat_parameters())
    assert not torch.equal(a.policy.flat_parameters(), c.policy.flat_parameters())


def test_joint_brain_widths():
    brain = AgentBrain.create(input_width=63, hidden=(8,))
    assert brain.input_width == 63
    assert brain.eval_value.input_width == 7


def test_greedy_zero_policy_picks_up(small_brain):
    small_brain.policy.zero_()
    assert select_action(small_brain, np.zeros(7), GREEDY) == 0


def test_greedy_is_deterministic(small_brain, rng):
    for _ in range(20):
        state = rng.uniform(-1.0, 1.0, 7)
        expected = int(np.argmax(policy_forward(small_brain.policy, state)))
        assert select_action(small_brain, state, GREEDY) == expected
        assert select_action(small_brain, state, GREEDY) == expected


def test_greedy_choice_is_invariant_to_output_scaling(small_brain, rng):
    states = [rng.uniform(-1.0, 1.0, 7) for _ in range(20)]
    before = [select_action(small_brain, state, GREEDY) for state in states]
    with torch.no_grad():
        small_brain.policy._layers[-1].weight.mul_(3.0)
        small_brain.policy._layers[-1].bias.mul_(3.0)
    assert [select_action(small_brain, state, GREEDY) for state in states] == before


def test_stochastic_frequencies(small_brain):
    state = np.array([0, 1, 0, 0, 0.3, -0.6, 1.0])
    probs = policy_forward(small_brain.policy, state)
    draws = 100_000
    rng = np.random.default_rng(9)
    counts = np.zeros(5)
    for _ in range(draws):
        counts[select_action(small_brain, state, STOCHASTIC, rng)] += 1
    sigma = np.sqrt(draws * probs * (1.0 - probs))
    assert (np.abs(counts - draws * probs) <= 3.0 * sigma + 1.0).all()


def test_stochastic_selection_needs_a_generator(small_brain):
    with pytest.raises(ValueError):
        select_action(small_brain, np.zeros(7), STOCHASTIC)
    with pytest.raises(ValueError):
        select_action(small_brain, np.zeros(7), "random")


def test_medium_reward():
    assert medium_reward(3.0, 2.0) == 1.0
    assert medium_reward(2.0, 3.0) == 0.0
    assert medium_reward(2.0, 2.0) == 0.0
    assert medium_reward(3.0, 2.0, DiscountConfig(reward_scale=2.5)) == 2.5
    with pytest.raises(ValueError):
        medium_reward(-1.0, 2.0)


def test_deterministic_return(small_brain):
    _constant_value(small_brain.eval_target, 2.0)
    state = np.zeros(7)
    assert deterministic_return(1.0, state, small_brain, DiscountConfig(gamma2=0.0)) == 1.0
    assert deterministic_return(1.0, None, small_brain, DiscountConfig(gamma2=0.9)) == 1.0
    assert deterministic_return(1.0, state, small_brain, DiscountConfig(gamma2=0.9)) == pytest.approx(2.8)


def test_stochastic_return(small_brain):
    _constant_value(small_brain.behav_target, 2.0)
    state = np.zeros(7)
    assert stochastic_return(1.0, None, small_brain, DiscountConfig(gamma1=0.9)) == 1.0
    assert stochastic_return(1.0, state, small_brain, DiscountConfig(gamma1=0.9)) == pytest.approx(2.8)
    assert stochastic_return(1.0, state, small_brain, DiscountConfig(gamma1=0.0)) == 1.0


def test_returns_are_linear_in_the_reward(small_brain, rng):
    cfg = DiscountConfig(gamma1=0.7, gamma2=0.4)
    for _ in range(20):
        state = rng.uniform(-1.0, 1.0, 7)
        r = float(rng.uniform(-5.0, 5.0))
        offset = deterministic_return(0.0, state, small_brain, cfg)
        assert deterministic_return(r, state, small_brain, cfg) == pytest.approx(r + offset)
        offset = stochastic_return(0.0, state, small_brain, cfg)
        assert stochastic_return(r, state, small_brain, cfg) == pytest.approx(r + offset)


def test_invalid_discounts():
    with pytest.raises(ValueError):
        DiscountConfig(gamma1=1.5)
    with pytest.raises(ValueError):
        DiscountConfig(gamma2=-0.1)
    with pytest.raises(ValueError):
        DiscountConfig(reward_scale=0.0)


def test_brain_checkpoint(tmp_path, small_brain):
    small_brain.discount = DiscountConfig(gamma1=0.8, gamma2=0.1)
    path = small_brain.save(tmp_path / "brain.check", extra={"round": 3})
    loaded = AgentBrain.load(path)
    for name in NETWORK_NAMES:
        assert torch.equal(loaded.network(name).flat_parameters(), small_brain.network(name).flat_parameters())
    assert loaded.discount == small_brain.discount
    with pytest.raises(FileNotFoundError):
        AgentBrain.load(tmp_path / "missing.check")


def test_copy_from(small_brain):
    other = AgentBrain.create(hidden=(8,), seed=99)
    other.copy_from(small_brain)
    for name in NETWORK_NAMES:
        assert torch.equal(other.network(name).flat_parameters(), small_brain.network(name).flat_parameters())
    with pytest.raises(ValueError):
        other.network("critic")


def test_returns_stay_finite(small_brain, rng):
    cfg = DiscountConfig(gamma1=0.9, gamma2=0.9)
    for _ in range(50):
        state = rng.uniform(-1.0, 1.0, 7)
        assert math.isfinite(deterministic_return(1.0, state, small_brain, cfg))
        assert math.isfinite(stochastic_return(1.0, state, small_brain, cfg))
