import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

import sirl_swarm.settings as s
from sirl_swarm.common import stream_rng
from sirl_swarm.models.neuralcore import (
    POLICY_HEAD,
    VALUE_HEAD,
    Mlp,
    network_from_state,
    network_state,
    policy_forward,
    sync_target,
    value_forward,
)

LOG_LEVEL = logging.WARN
# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

GREEDY = "greedy"
STOCHASTIC = "stochastic"

DEFAULT_HIDDEN = (64, 64)

# Networks of a brain. The target networks are never optimized directly
NETWORK_NAMES = ["eval_value", "eval_target", "policy", "behav_value", "behav_target"]
TRAINABLE_NETWORKS = ["eval_value", "policy", "behav_value"]
TARGET_OF = {"eval_target": "eval_value", "behav_target": "behav_value"}


@dataclass(frozen=True)
class DiscountConfig:
    r"""
    gamma1 : discount of the stochastic return (behavior value target)
    gamma2 : discount of the deterministic return (action priority target)
    reward_scale : scale of the medium reward
    """

    gamma1: float = 0.9
    gamma2: float = 0.0
    reward_scale: float = 1.0

    def __post_init__(self):
        for name in ["gamma1", "gamma2"]:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError("{} must be in [0, 1]: {}".format(name, value))
        if not (math.isfinite(self.reward_scale) and self.reward_scale > 0):
            raise ValueError("reward_scale must be positive: {}".format(self.reward_scale))

    @classmethod
    def from_dict(cls, section):
        section = section or {}
        return cls(
            gamma1=float(section.get("gamma1", 0.9)),
            gamma2=float(section.get("gamma2", 0.0)),
            reward_scale=float(section.get("reward_scale", 1.0)),
        )


class AgentBrain:
    r"""
    The two neural modules of one agent.

    Evaluation Module: eval_value (e) and its target eval_target. The value of e on the
    local state is the action priority of the agent.
    Behavior Module: policy (p), behav_value (b) and its target behav_target.

    The Evaluation Module always reads the 7-element local state. The Behavior Module
    reads either the local state or the cascaded Moore observation.
    """

    def __init__(self, eval_value, eval_target, policy, behav_value, behav_target, discount=None):
        if not eval_value.same_topology(eval_target):
            raise ValueError("The evaluation value network and its target differ in topology")
        if not behav_value.same_topology(behav_target):
            raise ValueError("The behavior value network and its target differ in topology")
        if policy.input_width != behav_value.input_width:
            raise ValueError(
                "Policy and behavior value networks read different inputs: {} vs {}".format(
                    policy.input_width, behav_value.input_width
                )
            )
        self.eval_value = eval_value
        self.eval_target = eval_target
        self.policy = policy
        self.behav_value = behav_value
        self.behav_target = behav_target
        self.discount = discount if discount is not None else DiscountConfig()

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @classmethod
    def create(cls, input_width=s.LOCAL_STATE_WIDTH, hidden=DEFAULT_HIDDEN, seed=0, discount=None):
        r"""
        Build a brain with freshly initialized networks

        Parameters
        ----------
        input_width : int
            Input width of the Behavior Module (7, or 63 for the cascaded observation)
        hidden : sequence of int
            Hidden layer sizes shared by all networks
        seed : int
            Seeds the initialization. Each trainable network gets its own stream, the
            targets start as copies of their networks.
        """
        hidden = tuple(int(h) for h in hidden)
        seeds = stream_rng(seed, "init").integers(0, 2**62, size=len(TRAINABLE_NETWORKS))
        eval_value = Mlp((s.LOCAL_STATE_WIDTH,) + hidden + (1,), VALUE_HEAD, int(seeds[0]))
        policy = Mlp((input_width,) + hidden + (5,), POLICY_HEAD, int(seeds[1]))
        behav_value = Mlp((input_width,) + hidden + (1,), VALUE_HEAD, int(seeds[2]))
        eval_target = Mlp(eval_value.topology, VALUE_HEAD)
        behav_target = Mlp(behav_value.topology, VALUE_HEAD)
        sync_target(eval_value, eval_target)
        sync_target(behav_value, behav_target)
        return cls(eval_value, eval_target, policy, behav_value, behav_target, discount)

    @property
    def input_width(self):
        return self.policy.input_width

    def network(self, name):
        if name not in NETWORK_NAMES:
            raise ValueError("Unknown network: {}".format(name))
        return getattr(self, name)

    def networks(self):
        return {name: getattr(self, name) for name in NETWORK_NAMES}

    def copy_from(self, other):
        r"""
        Overwrite all five networks with the parameters of another brain
        """
        for name in NETWORK_NAMES:
            sync_target(other.network(name), self.network(name))
        return self

    def sync_targets(self, module=None):
        r"""
        Copy the value networks into their targets

        Parameters
        ----------
        module : string
            s.EVALUATION_SESSION or s.BEHAVIOR_SESSION to sync only one module, None for both
        """
        if module in (None, s.EVALUATION_SESSION):
            sync_target(self.eval_value, self.eval_target)
        if module in (None, s.BEHAVIOR_SESSION):
            sync_target(self.behav_value, self.behav_target)

    def save(self, path, extra=None):
        r"""
        Save the five networks and the discount config with torch.save
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {
            "format_version": s.CHECKPOINT_VERSION,
            "networks": {name: network_state(net) for name, net in self.networks().items()},
            "discount": asdict(self.discount),
            "extra": extra,
        }
        self._log().debug("Saving brain checkpoint: {}".format(path))
        torch.save(data, path)
        return path

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise FileNotFoundError("Cannot load the brain checkpoint: {}".format(path))
        data = torch.load(path, map_location="cpu", weights_only=False)
        if data.get("format_version") != s.CHECKPOINT_VERSION:
            raise ValueError(
                "Unsupported brain checkpoint version {} in {}".format(data.get("format_version"), path)
            )
        nets = {name: network_from_state(data["networks"][name]) for name in NETWORK_NAMES}
        return cls(discount=DiscountConfig(**data["discount"]), **nets)


def action_priority(brain: AgentBrain, state):
    r"""
    Action priority: V_e of the local state
    """
    return value_forward(brain.eval_value, state)


def select_action(brain: AgentBrain, state, mode, rng=None):
    r"""
    Select an action with the Behavior Module

    Parameters
    ----------
    state : array
        Behavior input of the agent
    mode : string
        GREEDY: argmax of pi, lowest action index on ties
        STOCHASTIC: sample from pi with rng
    rng : numpy.random.Generator
        Required in stochastic mode

    Returns
    -------
    int : the action index (world.Action)
    """
    probs = policy_forward(brain.policy, state)
    if mode == GREEDY:
        return int(np.argmax(probs))
    if mode == STOCHASTIC:
        if rng is None:
            raise ValueError("Stochastic action selection needs a random generator")
        index = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        return min(index, len(probs) - 1)
    raise ValueError("Unknown selection mode: {}".format(mode))


def medium_reward(d_prev, d_now, cfg: DiscountConfig = DiscountConfig()):
    r"""
    Reward for approaching the attractor selected at the previous step:
    reward_scale * max(d_prev - d_now, 0)
    """
    if d_prev < 0 or d_now < 0:
        raise ValueError("Distances cannot be negative: {} {}".format(d_prev, d_now))
    return cfg.reward_scale * max(d_prev - d_now, 0.0)


def deterministic_return(reward, next_state, brain: AgentBrain, cfg: DiscountConfig = None):
    r"""
    Target of the evaluation value network: reward + gamma2 * V_eval_target(next_state),
    just the reward when next_state is None (terminal)
    """
    cfg = cfg if cfg is not None else brain.discount
    if next_state is None or cfg.gamma2 == 0.0:
        return float(reward)
    return float(reward) + cfg.gamma2 * value_forward(brain.eval_target, next_state)


def stochastic_return(reward, next_state, brain: AgentBrain, cfg: DiscountConfig = None):
    r"""
    Target of the behavior value network: reward + gamma1 * V_behav_target(next_state),
    just the reward when next_state is None (terminal)
    """
    cfg = cfg if cfg is not None else brain.discount
    if next_state is None or cfg.gamma1 == 0.0:
        return float(reward)
    return float(reward) + cfg.gamma1 * value_forward(brain.behav_target, next_state)
