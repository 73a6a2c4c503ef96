import copy
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from tqdm import tqdm

import sirl_swarm.settings as s
from sirl_swarm.baselines import ORIGIN_REWARD, DcRewardTable, MethodProfile, OriginRewardTable, origin_reward
from sirl_swarm.common import safe_get_parameter, stream_rng
from sirl_swarm.coordination import DISABLED, decide_winners
from sirl_swarm.environment.medium import MediumConfig, PheromoneMap
from sirl_swarm.environment.perception import (
    AttractorView,
    PerceptionConfig,
    build_coordinate_state,
    build_local_state,
    cascade_states,
    select_attractor,
    sense_attractors,
)
from sirl_swarm.environment.world import NEIGHBOR_DIRECTIONS, TargetShape, WorldState, distance, run_phase
from sirl_swarm.models.agent import (
    DEFAULT_HIDDEN,
    GREEDY,
    STOCHASTIC,
    TARGET_OF,
    TRAINABLE_NETWORKS,
    AgentBrain,
    DiscountConfig,
    action_priority,
    deterministic_return,
    medium_reward,
    select_action,
    stochastic_return,
)
from sirl_swarm.models.neuralcore import GradSet, Mlp, policy_loss_grad, sync_target, value_forward, value_loss_grad
from sirl_swarm.utils.profiler import RoundProfiler

LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

logger = s.get_custom_logger(__name__, LOG_LEVEL)

# Columns of the training metrics stream
METRIC_FIELDS = [
    "round",
    "session",
    "sample",
    "steps",
    "si_start",
    "si_end",
    "broke",
    "optimizer_steps",
    "mean_actors",
    "moves",
    "loss_eval",
    "loss_policy",
    "loss_value",
]


@dataclass(frozen=True)
class TrainerConfig:
    r"""
    Hyperparameters of federal training

    t_max : phases per session
    rounds : training rounds
    momentum, learning_rate : federal optimizer
    target_sync_every : optimizer steps between two target network syncs
    test_every : rounds between two periodic tests, 0 disables them
    checkpoint_every : rounds between two brain checkpoints, 0 disables them
    """

    t_max: int = 20
    rounds: int = 2000
    seed: int = 0
    momentum: float = 0.9
    learning_rate: float = 1e-3
    target_sync_every: int = 100
    test_every: int = 10
    checkpoint_every: int = 100
    profiling: bool = False
    hidden: Tuple[int, ...] = DEFAULT_HIDDEN
    medium: MediumConfig = field(default_factory=MediumConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    discount: DiscountConfig = field(default_factory=DiscountConfig)
    origin_reward: OriginRewardTable = field(default_factory=OriginRewardTable)
    dc_reward: DcRewardTable = field(default_factory=DcRewardTable)

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1: {}".format(self.t_max))
        if self.rounds < 0:
            raise ValueError("rounds cannot be negative: {}".format(self.rounds))
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1): {}".format(self.momentum))
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be positive: {}".format(self.learning_rate))
        if self.target_sync_every < 1:
            raise ValueError("target_sync_every must be at least 1: {}".format(self.target_sync_every))

    @classmethod
    def from_config(cls, config):
        r"""
        Build the trainer config from the sections of a JSON experiment config
        """

        def train(key, default):
            return safe_get_parameter(config, ["train", key], default)

        return cls(
            t_max=int(train("t_max", 20)),
            rounds=int(train("rounds", 2000)),
            seed=int(safe_get_parameter(config, ["experiment", "seed"], 0)),
            momentum=float(train("momentum", 0.9)),
            learning_rate=float(train("learning_rate", 1e-3)),
            target_sync_every=int(train("target_sync_every", 100)),
            test_every=int(train("test_every", 10)),
            checkpoint_every=int(train("checkpoint_every", 100)),
            profiling=bool(train("profiling", False)),
            hidden=tuple(safe_get_parameter(config, ["model", "hidden"], list(DEFAULT_HIDDEN))),
            medium=MediumConfig.from_dict(config.get("medium")),
            perception=PerceptionConfig.from_dict(config.get("perception")),
            discount=DiscountConfig.from_dict(config.get("agent")),
            origin_reward=OriginRewardTable.from_dict(config.get("origin_reward")),
            dc_reward=DcRewardTable.from_dict(config.get("dc_reward")),
        )


###################################################################################
# Federal optimization
#


class FederalOptimizer:
    r"""
    Momentum update of the parameters held by the virtual agent

        v <- momentum * v - learning_rate * mean(grads)
        theta <- theta + v

    The mean is accumulated as a running mean, so that N identical gradients average to
    exactly that gradient.
    """

    def __init__(self, net: Mlp, momentum=0.9, learning_rate=1e-3):
        self._net = net
        self._momentum = momentum
        self._learning_rate = learning_rate
        self._velocity = [torch.zeros_like(p) for p in net.parameters()]
        self._steps = 0

    @property
    def params(self):
        return self._net

    @property
    def velocity(self):
        return self._velocity

    @property
    def steps(self):
        return self._steps

    def step(self, grads: List[GradSet]) -> Optional[Mlp]:
        r"""
        Apply one federal step

        Parameters
        ----------
        grads : list of GradSet
            One gradient per contributing agent

        Returns
        -------
        The updated network, None when no agent contributed
        """
        if len(grads) == 0:
            return None
        params = list(self._net.parameters())
        for n, g in enumerate(grads):
            if len(g) != len(params) or any(gi.shape != p.shape for gi, p in zip(g, params)):
                raise ValueError("Gradient {} does not match the network topology {}".format(n, self._net.topology))

        with torch.no_grad():
            for k, (p, v) in enumerate(zip(params, self._velocity)):
                m = torch.zeros_like(p)
                for count, g in enumerate(grads, start=1):
                    m += (g[k] - m) / count
                v.mul_(self._momentum).add_(m, alpha=-self._learning_rate)
                p.add_(v)
        self._steps += 1
        return self._net


def federal_step(opt: FederalOptimizer, grads: List[GradSet]):
    return opt.step(grads)


class VirtualAgent:
    r"""
    Aggregator of the federal training. It holds the authoritative brain, one optimizer
    per trainable network, and broadcasts the updated parameters to every agent.
    """

    def __init__(self, mirror: AgentBrain, cfg: TrainerConfig):
        self.mirror = mirror
        self._sync_every = cfg.target_sync_every
        self.optimizers: Dict[str, FederalOptimizer] = {
            name: FederalOptimizer(mirror.network(name), cfg.momentum, cfg.learning_rate)
            for name in TRAINABLE_NETWORKS
        }

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    def federal_step(self, name, grads: List[GradSet]):
        r"""
        Returns
        -------
        bool : True if the network changed
        """
        opt = self.optimizers[name]
        if opt.step(grads) is None:
            return False
        for target, source in TARGET_OF.items():
            if source == name and opt.steps % self._sync_every == 0:
                self._log().debug("Sync {} after {} steps".format(target, opt.steps))
                sync_target(self.mirror.network(source), self.mirror.network(target))
        return True

    def broadcast(self, brains: List[AgentBrain], names):
        for brain in brains:
            for name in names:
                sync_target(self.mirror.network(name), brain.network(name))


###################################################################################
# Samples
#


@dataclass(frozen=True)
class SampleConfig:
    r"""
    Pheromone-guided random walk used to collect initial swarm states

    count : number of samples
    episode_length : iterations of one walk before a fresh random placement
    warmup : iterations before the first sample of a walk
    record_every : iterations between two samples
    bias : weight of the moves that approach the selected attractor, the others weigh 1
    """

    count: int = 7500
    episode_length: int = 60
    warmup: int = 5
    record_every: int = 3
    bias: float = 2.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1: {}".format(self.count))
        if self.episode_length < 1 or self.record_every < 1 or self.warmup < 0:
            raise ValueError("Invalid walk lengths: {}".format(self))
        if not self.bias > 0:
            raise ValueError("bias must be positive: {}".format(self.bias))
        # a walk must record at least once, otherwise generation never ends
        first = (self.warmup // self.record_every + 1) * self.record_every
        if first > self.episode_length:
            raise ValueError(
                "A walk of {} iterations records nothing after warmup {} every {}".format(
                    self.episode_length, self.warmup, self.record_every
                )
            )

    @classmethod
    def from_dict(cls, section):
        section = section or {}
        return cls(
            count=int(section.get("count", 7500)),
            episode_length=int(section.get("episode_length", 60)),
            warmup=int(section.get("warmup", 5)),
            record_every=int(section.get("record_every", 3)),
            bias=float(section.get("bias", 2.0)),
        )


class SampleSet:
    r"""
    Swarm states used as session starts: the agent positions and the pheromone field
    recorded at the same iteration
    """

    def __init__(self, shape: TargetShape, positions, fields=None):
        positions = np.asarray(positions, dtype=np.int64)
        if positions.ndim != 3 or positions.shape[1:] != (shape.num_agents, 2):
            raise ValueError(
                "Samples of shape [count, {}, 2] expected, got {}".format(shape.num_agents, positions.shape)
            )
        if len(positions) == 0:
            raise ValueError("A sample set cannot be empty")
        if fields is not None:
            fields = np.asarray(fields, dtype=np.float64)
            if fields.shape != (len(positions), shape.height, shape.width):
                raise ValueError("Pheromone fields do not match the samples: {}".format(fields.shape))
            if (fields < 0).any():
                raise ValueError("Pheromone fields cannot be negative")
        self._shape = shape
        self._positions = positions
        self._fields = fields
        # Construction validates the occupancy of every sample
        for index in range(len(positions)):
            self.world(index)

    def __len__(self):
        return len(self._positions)

    @property
    def shape(self):
        return self._shape

    @property
    def positions(self):
        return self._positions

    def world(self, index) -> WorldState:
        return WorldState(self._shape, self._positions[index])

    def pheromones(self, index) -> PheromoneMap:
        field_map = PheromoneMap(self._shape.width, self._shape.height)
        if self._fields is not None:
            for y, x in zip(*np.nonzero(self._fields[index])):
                field_map.set((int(x), int(y)), self._fields[index][y, x])
        return field_map

    def draw(self, rng):
        r"""
        Uniform sample index, with replacement across rounds
        """
        return int(rng.integers(0, len(self)))

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {"labeled": self._shape.labeled.astype(np.uint8), "positions": self._positions}
        if self._fields is not None:
            data["fields"] = self._fields
        with path.open("wb") as fd:
            np.savez_compressed(fd, **data)
        return path

    @classmethod
    def load(cls, path, shape: Optional[TargetShape] = None):
        if not os.path.exists(path):
            raise FileNotFoundError("Cannot load the samples: {}".format(path))
        with np.load(path) as data:
            stored = TargetShape.from_bitmap(data["labeled"])
            if shape is not None and shape != stored:
                raise ValueError("The samples in {} belong to another shape: {}".format(path, stored))
            fields = data["fields"] if "fields" in data.files else None
            return cls(stored, data["positions"], fields)


def _walk_action(w: WorldState, agent, target, rng, bias):
    pos = w.position(agent)
    weights = np.ones(len(NEIGHBOR_DIRECTIONS), dtype=np.float64)
    if target is not None:
        here = distance(pos, target)
        for k, action in enumerate(NEIGHBOR_DIRECTIONS):
            dx, dy = action.delta
            if distance((pos[0] + dx, pos[1] + dy), target) < here:
                weights[k] = bias
    return NEIGHBOR_DIRECTIONS[int(rng.choice(len(weights), p=weights / weights.sum()))]


def generate_samples(
    shape: TargetShape,
    count,
    rng,
    medium_cfg=MediumConfig(),
    perception_cfg=PerceptionConfig(),
    sample_cfg: Optional[SampleConfig] = None,
) -> SampleSet:
    r"""
    Collect swarm states with a pheromone-guided random walk.

    Each walk starts from a uniform random placement. At every iteration all agents act
    in ascending index: each one selects an attractor and moves in one of the four
    directions, the moves approaching the attractor weighted by `bias`. The pheromone is
    modified and decayed as in training. After `warmup` iterations the swarm state is
    recorded every `record_every` iterations.
    """
    if count < 1:
        raise ValueError("count must be at least 1: {}".format(count))
    sample_cfg = sample_cfg if sample_cfg is not None else SampleConfig(count=count)
    positions, fields = [], []
    walks = 0
    while len(positions) < count:
        walks += 1
        w = WorldState.random_placement(shape, rng)
        field_map = PheromoneMap.initial(shape.width, shape.height, shape.labeled_cells, medium_cfg)
        for iteration in range(1, sample_cfg.episode_length + 1):
            targets = {}
            for agent in range(w.num_agents):
                views = sense_attractors(field_map, w, agent, medium_cfg)
                selected = select_attractor(views, rng, perception_cfg)
                targets[agent] = selected.cell if selected is not None else None
            run_phase(
                w,
                range(w.num_agents),
                lambda agent: _walk_action(w, agent, targets[agent], rng, sample_cfg.bias),
                pheromones=field_map,
                medium_cfg=medium_cfg,
            )
            if iteration > sample_cfg.warmup and iteration % sample_cfg.record_every == 0:
                positions.append(w.positions.copy())
                fields.append(field_map.amount.copy())
                if len(positions) == count:
                    break
    logger.info("Generated {} samples in {} walks".format(count, walks))
    return SampleSet(shape, np.stack(positions), np.stack(fields))


###################################################################################
# Sessions
#


@dataclass
class Observation:
    r"""
    Snapshot of every agent's view before a phase

    local : 7-element local states (input of the Evaluation Module)
    selected : attractor selected by each agent, None without attractor
    inputs : Behavior Module inputs (local or cascaded)
    """

    local: List[np.ndarray]
    selected: List[Optional[AttractorView]]
    inputs: List[np.ndarray]


def observe(w: WorldState, pheromones, profile: MethodProfile, cfg: TrainerConfig, keys, t) -> Observation:
    local, selected = [], []
    for agent in range(w.num_agents):
        if profile.stigmergy:
            views = sense_attractors(pheromones, w, agent, cfg.medium)
            rng = stream_rng(cfg.seed, "attractor", *keys, t, agent)
            choice = select_attractor(views, rng, cfg.perception)
            state = build_local_state(w, agent, choice, cfg.medium.sense_radius)
        else:
            choice = None
            state = build_coordinate_state(w, agent)
        local.append(state)
        selected.append(choice)
    if profile.joint_input:
        inputs = [cascade_states(local, w, agent) for agent in range(w.num_agents)]
    else:
        inputs = local
    return Observation(local, selected, inputs)


def individual_rewards(w: WorldState, previous, obs: Observation, outcome, profile: MethodProfile, cfg: TrainerConfig):
    r"""
    Reward of every acting agent after a phase

    Parameters
    ----------
    previous : dict
        agent -> cell before the phase
    """
    rewards = {}
    for agent in outcome.actions:
        if profile.reward == ORIGIN_REWARD:
            rewards[agent] = origin_reward(
                w.shape.is_labeled(previous[agent]),
                w.is_labeled(agent),
                outcome.global_reward,
                cfg.origin_reward,
            )
        elif obs.selected[agent] is None:
            rewards[agent] = 0.0
        else:
            cell = obs.selected[agent].cell
            rewards[agent] = medium_reward(
                distance(previous[agent], cell), distance(w.position(agent), cell), cfg.discount
            )
    return rewards


@dataclass
class SessionTrace:
    r"""
    What happened in one session. global_rewards holds one entry per executed phase and
    actors the number of acting agents of each phase.
    """

    session: str
    si_start: float
    si_end: float = 0.0
    global_rewards: List[float] = field(default_factory=list)
    actors: List[int] = field(default_factory=list)
    modes: List[str] = field(default_factory=list)
    moves: int = 0
    broke: bool = False
    optimizer_steps: int = 0
    losses: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def steps(self):
        return len(self.global_rewards)

    def mean_loss(self, name):
        values = self.losses.get(name, [])
        return float(np.mean(values)) if values else float("nan")

    def add_loss(self, name, values):
        if values:
            self.losses.setdefault(name, []).append(float(np.mean(values)))


def _run_session(
    session,
    brains: List[AgentBrain],
    virtual: VirtualAgent,
    w: WorldState,
    pheromones: PheromoneMap,
    profile: MethodProfile,
    cfg: TrainerConfig,
    round_index,
    profiler=None,
) -> SessionTrace:
    profiler = profiler if profiler is not None else RoundProfiler()
    enable = cfg.profiling
    evaluation = session == s.EVALUATION_SESSION
    keys = (round_index, s.SESSION_CODES[session])
    field_map = pheromones if profile.stigmergy else None
    trace = SessionTrace(session=session, si_start=w.similarity())

    with profiler.section("observe", enable):
        obs = observe(w, field_map, profile, cfg, keys, 1)
    for t in range(1, cfg.t_max + 1):
        with profiler.section("act", enable):
            if evaluation:
                mode = GREEDY
                movers = list(range(w.num_agents))
                actions = {i: select_action(brains[i], obs.inputs[i], GREEDY) for i in movers}
            else:
                mode = STOCHASTIC
                if profile.coordination == DISABLED:
                    movers = list(range(w.num_agents))
                else:
                    priorities = [action_priority(brains[i], obs.local[i]) for i in range(w.num_agents)]
                    movers = decide_winners(priorities, w, profile.coordination_config)
                assert len(movers) > 0, "The coordination protocol left no agent acting"
                actions = {
                    i: select_action(
                        brains[i], obs.inputs[i], STOCHASTIC, stream_rng(cfg.seed, "action", *keys, t, i)
                    )
                    for i in movers
                }
            previous = {i: w.position(i) for i in movers}
            outcome = run_phase(w, movers, actions.__getitem__, field_map, cfg.medium)

        rewards = individual_rewards(w, previous, obs, outcome, profile, cfg)
        trace.global_rewards.append(outcome.global_reward)
        trace.actors.append(len(movers))
        trace.modes.append(mode)
        trace.moves += outcome.moves
        if outcome.global_reward > 0:
            trace.broke = True
            break

        terminal = t == cfg.t_max
        with profiler.section("observe", enable):
            next_obs = None if terminal else observe(w, field_map, profile, cfg, keys, t + 1)

        with profiler.section("gradients", enable):
            if evaluation:
                grads, losses = [], []
                for i in movers:
                    target = deterministic_return(
                        rewards[i], None if terminal else next_obs.local[i], brains[i], cfg.discount
                    )
                    loss, g = value_loss_grad(brains[i].eval_value, obs.local[i], target)
                    grads.append(g)
                    losses.append(loss)
                trace.add_loss("eval", losses)
                updates = {"eval_value": grads}
            else:
                policy_grads, value_grads, policy_losses, value_losses = [], [], [], []
                for i in movers:
                    target = stochastic_return(
                        rewards[i], None if terminal else next_obs.inputs[i], brains[i], cfg.discount
                    )
                    advantage = target - value_forward(brains[i].behav_value, obs.inputs[i])
                    loss, g = policy_loss_grad(brains[i].policy, obs.inputs[i], actions[i], advantage)
                    policy_grads.append(g)
                    policy_losses.append(loss)
                    loss, g = value_loss_grad(brains[i].behav_value, obs.inputs[i], target)
                    value_grads.append(g)
                    value_losses.append(loss)
                trace.add_loss("policy", policy_losses)
                trace.add_loss("value", value_losses)
                updates = {"policy": policy_grads, "behav_value": value_grads}

        with profiler.section("federal_step", enable):
            changed = []
            for name, grads in updates.items():
                if virtual.federal_step(name, grads):
                    changed.append(name)
                    changed.extend(target for target, source in TARGET_OF.items() if source == name)
                    trace.optimizer_steps += 1
            virtual.broadcast(brains, changed)
        obs = next_obs

    trace.si_end = w.similarity()
    return trace


def run_evaluation_session(w, brains, virtual, pheromones, profile, cfg, round_index=0, profiler=None):
    r"""
    Train the Evaluation Module on one session. Every agent acts greedily with the frozen
    Behavior Module and contributes one gradient per phase.
    """
    return _run_session(s.EVALUATION_SESSION, brains, virtual, w, pheromones, profile, cfg, round_index, profiler)


def run_behavior_session(w, brains, virtual, pheromones, profile, cfg, round_index=0, profiler=None):
    r"""
    Train the Behavior Module on one session. The frozen Evaluation Module gives the
    priorities, the winners of the coordination protocol act stochastically and
    contribute the policy and value gradients.
    """
    return _run_session(s.BEHAVIOR_SESSION, brains, virtual, w, pheromones, profile, cfg, round_index, profiler)


@dataclass
class RoundMetrics:
    round_index: int
    sample_index: int
    traces: List[SessionTrace]

    def rows(self):
        rows = []
        for trace in self.traces:
            rows.append(
                {
                    "round": self.round_index,
                    "session": trace.session,
                    "sample": self.sample_index,
                    "steps": trace.steps,
                    "si_start": trace.si_start,
                    "si_end": trace.si_end,
                    "broke": int(trace.broke),
                    "optimizer_steps": trace.optimizer_steps,
                    "mean_actors": float(np.mean(trace.actors)) if trace.actors else 0.0,
                    "moves": trace.moves,
                    "loss_eval": trace.mean_loss("eval"),
                    "loss_policy": trace.mean_loss("policy"),
                    "loss_value": trace.mean_loss("value"),
                }
            )
        return rows


def run_training_round(brains, virtual, samples: SampleSet, profile, cfg, round_index, profiler=None):
    r"""
    One round of federal training: a uniformly drawn sample is played by the evaluation
    session and then, from the same start, by the behavior session. Methods without
    conflict avoidance only run the behavior session.
    """
    index = samples.draw(stream_rng(cfg.seed, "sample_draw", round_index))
    traces = []
    if profile.evaluation_session:
        traces.append(
            run_evaluation_session(
                samples.world(index), brains, virtual, samples.pheromones(index), profile, cfg, round_index, profiler
            )
        )
    traces.append(
        run_behavior_session(
            samples.world(index), brains, virtual, samples.pheromones(index), profile, cfg, round_index, profiler
        )
    )
    return RoundMetrics(round_index, index, traces)


class Trainer:
    r"""
    Federal training of a swarm of learning agents on one shape
    """

    def __init__(self, profile: MethodProfile, samples: SampleSet, cfg: TrainerConfig, brain: AgentBrain = None):
        if not profile.learner:
            raise ValueError("Method {} is not trainable".format(profile.name))
        self._profile = profile
        self._samples = samples
        self._cfg = cfg
        if brain is None:
            brain = AgentBrain.create(profile.input_width, cfg.hidden, cfg.seed, cfg.discount)
        elif brain.input_width != profile.input_width:
            raise ValueError(
                "Method {} needs inputs of width {}, the brain reads {}".format(
                    profile.name, profile.input_width, brain.input_width
                )
            )
        self._virtual = VirtualAgent(brain, cfg)
        # Every agent starts from the parameters of the virtual agent
        self._brains = [copy.deepcopy(brain) for _ in range(samples.shape.num_agents)]
        self._profiler = RoundProfiler()

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @property
    def brain(self):
        return self._virtual.mirror

    @property
    def brains(self):
        return self._brains

    @property
    def virtual(self):
        return self._virtual

    @property
    def profile(self):
        return self._profile

    def run_round(self, round_index) -> RoundMetrics:
        self._profiler.start_round(self._cfg.profiling)
        return run_training_round(
            self._brains, self._virtual, self._samples, self._profile, self._cfg, round_index, self._profiler
        )

    def train(self, rounds=None, on_round=None, start_round=0, progress=True):
        r"""
        Run the training rounds

        Parameters
        ----------
        rounds : int
            Defaults to the configured number of rounds
        on_round : callable
            Called as on_round(round_index, metrics) after every round
        start_round : int
            Index of the first round, to resume from a checkpoint

        Returns
        -------
        list of RoundMetrics
        """
        rounds = self._cfg.rounds if rounds is None else rounds
        self._log().info(
            "Training {} on {} agents for {} rounds".format(self._profile.name, len(self._brains), rounds)
        )
        history = []
        for round_index in tqdm(range(start_round, start_round + rounds), disable=not progress, desc="rounds"):
            metrics = self.run_round(round_index)
            history.append(metrics)
            if on_round is not None:
                on_round(round_index, metrics)
        if self._cfg.profiling:
            self._log().info("Profiling: {}".format(self._profiler.get_data()["mean"]))
        return history
