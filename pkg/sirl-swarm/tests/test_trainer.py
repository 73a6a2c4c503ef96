"""Federal optimizer, sessions, rounds and training samples."""

import copy
import math

import numpy as np
import pytest
import torch

from conftest import make_world
from sirl_swarm import settings as s
from sirl_swarm.baselines import get_profile
from sirl_swarm.environment.medium import PheromoneMap
from sirl_swarm.environment.world import WorldState
from sirl_swarm.models.agent import GREEDY, STOCHASTIC, TRAINABLE_NETWORKS, AgentBrain
from sirl_swarm.models.neuralcore import VALUE_HEAD, Mlp, value_loss_grad
from sirl_swarm.trainer import (
    FederalOptimizer,
    SampleConfig,
    SampleSet,
    Trainer,
    TrainerConfig,
    VirtualAgent,
    federal_step,
    generate_samples,
    run_behavior_session,
    run_evaluation_session,
    run_training_round,
)
from sirl_swarm.utils.profiler import RoundProfiler


def _grad(net, rng):
    _, g = value_loss_grad(net, rng.uniform(-1.0, 1.0, net.input_width), float(rng.uniform(-2.0, 2.0)))
    return g


def _same_rows(a, b):
    if a.keys() != b.keys():
        return False
    for key in a:
        x, y = a[key], b[key]
        if isinstance(x, float) and math.isnan(x):
            if not (isinstance(y, float) and math.isnan(y)):
                return False
        elif x != y:
            return False
    return True


def _brains(brain, n):
    return [copy.deepcopy(brain) for _ in range(n)]


###################################################################################
# Federal optimizer
#


def test_zero_gradients_keep_the_parameters():
    net = Mlp((7, 4, 1), VALUE_HEAD, seed=1)
    before = net.flat_parameters()
    opt = FederalOptimizer(net)
    federal_step(opt, [[torch.zeros_like(p) for p in net.parameters()]])
    assert torch.equal(net.flat_parameters(), before)


def test_empty_gradient_list_is_a_no_op():
    net = Mlp((7, 4, 1), VALUE_HEAD, seed=1)
    before = net.flat_parameters()
    opt = FederalOptimizer(net)
    assert federal_step(opt, []) is None
    assert opt.steps == 0
    assert torch.equal(net.flat_parameters(), before)


def test_single_gradient_without_momentum_is_gradient_descent(rng):
    net = Mlp((7, 4, 1), VALUE_HEAD, seed=1)
    before = [p.detach().clone() for p in net.parameters()]
    g = _grad(net, rng)
    FederalOptimizer(net, momentum=0.0, learning_rate=0.01).step([g])
    for p, p0, gi in zip(net.parameters(), before, g):
        assert torch.equal(p.detach(), p0 + (-0.01 * gi))


def test_opposite_gradients_cancel(rng):
    net = Mlp((7, 4, 1), VALUE_HEAD, seed=1)
    before = net.flat_parameters()
    g = _grad(net, rng)
    opt = FederalOptimizer(net)
    opt.step([g, [-gi for gi in g]])
    assert torch.equal(net.flat_parameters(), before)
    assert all(torch.count_nonzero(v) == 0 for v in opt.velocity)


def test_identical_gradients_reproduce_the_single_agent_update(rng):
    single = Mlp((7, 6, 1), VALUE_HEAD, seed=3)
    swarm = copy.deepcopy(single)
    opt_single = FederalOptimizer(single, momentum=0.9, learning_rate=1e-2)
    opt_swarm = FederalOptimizer(swarm, momentum=0.9, learning_rate=1e-2)
    for step in range(100):
        g = _grad(single, rng)
        opt_single.step([g])
        opt_swarm.step([g] * 5)
        if step == 0:
            assert torch.equal(single.flat_parameters(), swarm.flat_parameters())
        assert torch.max(torch.abs(single.flat_parameters() - swarm.flat_parameters())) <= 1e-12


def test_gradient_shape_mismatch_is_rejected(rng):
    net = Mlp((7, 4, 1), VALUE_HEAD)
    other = Mlp((7, 5, 1), VALUE_HEAD)
    with pytest.raises(ValueError):
        FederalOptimizer(net).step([_grad(other, rng)])


def test_targets_sync_every_configured_steps(small_brain, rng):
    virtual = VirtualAgent(small_brain, TrainerConfig(target_sync_every=3, learning_rate=0.1))
    net, target = small_brain.eval_value, small_brain.eval_target
    for step in range(1, 7):
        virtual.federal_step("eval_value", [_grad(net, rng)])
        synced = torch.equal(net.flat_parameters(), target.flat_parameters())
        assert synced == (step % 3 == 0)


def test_broadcast_copies_the_mirror(small_brain, rng):
    virtual = VirtualAgent(small_brain, TrainerConfig())
    brains = [AgentBrain.create(hidden=(8,), seed=k) for k in range(3)]
    virtual.broadcast(brains, TRAINABLE_NETWORKS)
    for brain in brains:
        for name in TRAINABLE_NETWORKS:
            assert torch.equal(brain.network(name).flat_parameters(), small_brain.network(name).flat_parameters())


###################################################################################
# Sessions
#


def test_session_breaks_on_a_positive_similarity_change(small_cfg):
    brain = AgentBrain.create(hidden=(8,), seed=1)
    brain.policy.zero_()
    with torch.no_grad():
        brain.policy._layers[-1].bias.copy_(torch.tensor([0.0, 0.0, 0.0, 5.0, 0.0], dtype=torch.float64))
    w = make_world(7, 7, [(2, 3)], [(3, 3)])
    virtual = VirtualAgent(brain, small_cfg)
    trace = run_evaluation_session(w, _brains(brain, 1), virtual, PheromoneMap(7, 7), get_profile(s.SIRL), small_cfg)
    assert trace.broke
    assert trace.steps == 1
    assert trace.optimizer_steps == 0
    assert virtual.optimizers["eval_value"].steps == 0
    assert trace.si_end == 1.0


def test_single_phase_session_takes_one_federal_step(square3, small_cfg):
    cfg = TrainerConfig(t_max=1, seed=1, hidden=(8,))
    brain = AgentBrain.create(hidden=(8,), seed=1)
    w = WorldState(square3, square3.labeled_cells)
    virtual = VirtualAgent(brain, cfg)
    trace = run_evaluation_session(w, _brains(brain, 9), virtual, PheromoneMap(7, 7), get_profile(s.SIRL), cfg)
    assert not trace.broke
    assert trace.optimizer_steps == 1
    assert virtual.optimizers["eval_value"].steps == 1
    assert trace.modes == [GREEDY]
    assert trace.actors == [9]


def test_sessions_freeze_the_other_module(square3, small_cfg, rng):
    brain = AgentBrain.create(hidden=(8,), seed=2)
    profile = get_profile(s.SIRL)
    virtual = VirtualAgent(brain, small_cfg)
    brains = _brains(brain, 9)

    frozen = {name: brain.network(name).flat_parameters() for name in ["policy", "behav_value", "behav_target"]}
    w = WorldState.random_placement(square3, rng)
    run_evaluation_session(w, brains, virtual, PheromoneMap(7, 7), profile, small_cfg)
    for name, params in frozen.items():
        assert torch.equal(brain.network(name).flat_parameters(), params)

    frozen = {name: brain.network(name).flat_parameters() for name in ["eval_value", "eval_target"]}
    w = WorldState.random_placement(square3, rng)
    trace = run_behavior_session(w, brains, virtual, PheromoneMap(7, 7), profile, small_cfg)
    for name, params in frozen.items():
        assert torch.equal(brain.network(name).flat_parameters(), params)
    assert set(trace.modes) <= {STOCHASTIC}


def test_isolated_agents_all_act_in_the_behavior_session(small_cfg):
    cfg = TrainerConfig(t_max=1, seed=4, hidden=(8,))
    positions = [(0, 0), (3, 0), (6, 0), (0, 3), (6, 3), (0, 6), (3, 6), (6, 6)]
    w = make_world(7, 7, [(3, 3)], positions)
    brain = AgentBrain.create(hidden=(8,), seed=4)
    virtual = VirtualAgent(brain, cfg)
    trace = run_behavior_session(w, _brains(brain, 8), virtual, PheromoneMap(7, 7), get_profile(s.SIRL), cfg)
    assert trace.actors == [8]


def test_global_rewards_telescope(square3, small_cfg):
    brain = AgentBrain.create(hidden=(8,), seed=5)
    virtual = VirtualAgent(brain, small_cfg)
    brains = _brains(brain, 9)
    for seed in range(5):
        w = WorldState.random_placement(square3, np.random.default_rng(seed))
        trace = run_behavior_session(w, brains, virtual, PheromoneMap(7, 7), get_profile(s.SIRL_WS), small_cfg)
        assert sum(trace.global_rewards) == pytest.approx(trace.si_end - trace.si_start, abs=1e-12)
        assert trace.actors == [9] * trace.steps


def test_brains_stay_homogeneous(square3, small_cfg):
    samples = generate_samples(
        square3, 5, np.random.default_rng(0), sample_cfg=SampleConfig(count=5, episode_length=10)
    )
    trainer = Trainer(get_profile(s.SIRL), samples, small_cfg)
    trainer.train(rounds=5, progress=False)
    for brain in trainer.brains:
        for name, net in trainer.brain.networks().items():
            assert torch.equal(brain.network(name).flat_parameters(), net.flat_parameters())


###################################################################################
# Rounds and samples
#


def test_round_with_zero_weight_networks(square3, small_cfg):
    brain = AgentBrain.create(hidden=(8,), seed=0)
    for net in brain.networks().values():
        net.zero_()
    samples = SampleSet(square3, np.array([square3.labeled_cells]))
    virtual = VirtualAgent(brain, small_cfg)
    metrics = run_training_round(_brains(brain, 9), virtual, samples, get_profile(s.SIRL), small_cfg, 0)
    evaluation, behavior = metrics.rows()
    assert evaluation["session"] == s.EVALUATION_SESSION
    assert behavior["session"] == s.BEHAVIOR_SESSION
    for row, losses in [(evaluation, ["loss_eval"]), (behavior, ["loss_policy", "loss_value"])]:
        for key in ["si_start", "si_end", "mean_actors"] + losses:
            assert math.isfinite(row[key])


def test_methods_without_coordination_skip_the_evaluation_session(square3, small_cfg):
    samples = SampleSet(square3, np.array([square3.labeled_cells]))
    for method in [s.SIRL_WS, s.IRL, s.JL, s.IRL_O, s.JL_O]:
        trainer = Trainer(get_profile(method), samples, small_cfg)
        metrics = trainer.run_round(0)
        assert [trace.session for trace in metrics.traces] == [s.BEHAVIOR_SESSION]


def test_training_is_reproducible(square3, small_cfg):
    samples = generate_samples(
        square3, 8, np.random.default_rng(1), sample_cfg=SampleConfig(count=8, episode_length=12)
    )

    def run():
        trainer = Trainer(get_profile(s.SIRL), samples, small_cfg)
        rows = []
        for metrics in trainer.train(rounds=10, progress=False):
            rows.extend(metrics.rows())
        return rows, trainer.brain.policy.flat_parameters()

    rows_a, params_a = run()
    rows_b, params_b = run()
    assert len(rows_a) == len(rows_b) == 20
    assert all(_same_rows(a, b) for a, b in zip(rows_a, rows_b))
    assert torch.equal(params_a, params_b)


def test_trainer_rejects_scripted_methods_and_wrong_widths(square3, small_cfg):
    samples = SampleSet(square3, np.array([square3.labeled_cells]))
    with pytest.raises(ValueError):
        Trainer(get_profile(s.DC), samples, small_cfg)
    with pytest.raises(ValueError):
        Trainer(get_profile(s.JL), samples, small_cfg, AgentBrain.create(hidden=(8,)))


def test_single_sample(cross5):
    samples = generate_samples(cross5, 1, np.random.default_rng(3), sample_cfg=SampleConfig(count=1))
    assert len(samples) == 1
    w = samples.world(0)
    assert w.num_agents == cross5.num_agents
    assert (samples.pheromones(0).amount >= 0).all()


def test_samples_record_walk_states(square3):
    cfg = SampleConfig(count=6, episode_length=9, warmup=2, record_every=3)
    samples = generate_samples(square3, 6, np.random.default_rng(4), sample_cfg=cfg)
    assert len(samples) == 6
    assert samples.positions.shape == (6, 9, 2)
    assert all((samples.pheromones(i).amount >= 0).all() for i in range(6))


def test_sample_walks_start_on_a_marked_field(square3):
    samples = generate_samples(square3, 4, np.random.default_rng(7), sample_cfg=SampleConfig(count=4))
    for index in range(4):
        field_map = samples.pheromones(index)
        assert all(field_map.get(pos) > 0.0 for pos in square3.labeled_cells)


def test_sample_file(tmp_path, square3, cross5):
    samples = generate_samples(square3, 3, np.random.default_rng(5), sample_cfg=SampleConfig(count=3))
    path = samples.save(tmp_path / "samples.npz")
    loaded = SampleSet.load(path, square3)
    assert np.array_equal(loaded.positions, samples.positions)
    assert np.array_equal(loaded.pheromones(2).amount, samples.pheromones(2).amount)
    with pytest.raises(ValueError):
        SampleSet.load(path, cross5)
    with pytest.raises(FileNotFoundError):
        SampleSet.load(tmp_path / "missing.npz")


def test_invalid_samples(square3):
    with pytest.raises(ValueError):
        SampleSet(square3, np.zeros((1, 8, 2), dtype=np.int64))
    duplicated = np.array([[(0, 0)] * 9])
    with pytest.raises(ValueError):
        SampleSet(square3, duplicated)


def test_walks_that_never_record_are_rejected():
    with pytest.raises(ValueError):
        SampleConfig(count=1, episode_length=5, warmup=5, record_every=3)
    with pytest.raises(ValueError):
        SampleConfig(count=1, episode_length=8, warmup=6, record_every=3)
    assert SampleConfig(count=1, episode_length=9, warmup=6, record_every=3).episode_length == 9
    assert SampleConfig(count=1, episode_length=1, warmup=0, record_every=1).count == 1


def test_sample_draw_is_in_range(square3):
    samples = SampleSet(square3, np.array([square3.labeled_cells] * 4))
    rng = np.random.default_rng(6)
    draws = {samples.draw(rng) for _ in range(200)}
    assert draws == {0, 1, 2, 3}


def test_profiled_round_records_the_sections(square3):
    cfg = TrainerConfig(t_max=2, seed=1, hidden=(8,), profiling=True)
    samples = SampleSet(square3, np.array([[(x, 0) for x in range(7)] + [(0, 6), (6, 6)]]))
    RoundProfiler().reset()
    trainer = Trainer(get_profile(s.SIRL), samples, cfg)
    trainer.run_round(0)
    data = RoundProfiler().get_data()
    assert data["window"] == 1
    assert {"observe", "act"} <= set(data["last"])
    RoundProfiler().reset()


def test_trainer_config_from_json_sections():
    cfg = TrainerConfig.from_config(
        {
            "experiment": {"seed": 11},
            "train": {"t_max": 4, "learning_rate": 0.01, "target_sync_every": 7},
            "model": {"hidden": [16]},
            "medium": {"sense_radius": 2},
            "agent": {"gamma2": 0.5},
        }
    )
    assert cfg.seed == 11
    assert cfg.t_max == 4
    assert cfg.hidden == (16,)
    assert cfg.medium.sense_radius == 2
    assert cfg.discount.gamma2 == 0.5
    with pytest.raises(ValueError):
        TrainerConfig(t_max=0)
