import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

import sirl_swarm.settings as s
from sirl_swarm.environment.world import WorldState, distance

# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG
LOG_LEVEL = logging.WARN

logger = s.get_custom_logger(__name__, LOG_LEVEL)


@dataclass(frozen=True)
class PerceptionConfig:
    r"""
    Gaussian distance weight D(d) = peak * exp(-(d - mean)^2 / (2 std^2))
    """

    peak: float = 1.0
    mean: float = 0.0
    std: float = 0.25

    def __post_init__(self):
        if not self.peak > 0:
            raise ValueError("peak must be positive: {}".format(self.peak))
        if not self.std > 0:
            raise ValueError("std must be positive: {}".format(self.std))

    @classmethod
    def from_dict(cls, section):
        section = section or {}
        return cls(
            peak=float(section.get("peak", 1.0)),
            mean=float(section.get("mean", 0.0)),
            std=float(section.get("std", 0.25)),
        )


@dataclass(frozen=True)
class AttractorView:
    r"""
    A sensed attractor: its cell, pheromone amount and Euclidean distance to the agent
    """

    cell: Tuple[int, int]
    amount: float
    distance: float


def distance_weight(d, cfg=PerceptionConfig()):
    if d < 0:
        raise ValueError("Distances cannot be negative: {}".format(d))
    return cfg.peak * math.exp(-((d - cfg.mean) ** 2) / (2.0 * cfg.std**2))


def log_distance_weight(d, cfg=PerceptionConfig()):
    return math.log(cfg.peak) - ((d - cfg.mean) ** 2) / (2.0 * cfg.std**2)


def attractor_probabilities(views: Sequence[AttractorView], cfg=PerceptionConfig()):
    r"""
    Selection probability of every attractor,

        C_j = D(d_j) * eps_j / sum_k D(d_k) * eps_k

    evaluated in log space with max subtraction, so that far attractors whose raw weight
    underflows still normalize.

    Returns
    -------
    numpy array of probabilities, same order as views
    """
    if len(views) == 0:
        return np.zeros(0, dtype=np.float64)
    logits = np.empty(len(views), dtype=np.float64)
    for k, view in enumerate(views):
        if not view.amount > 0:
            raise ValueError("Attractor {} has a non-positive amount {}".format(view.cell, view.amount))
        if not view.distance > 0:
            raise ValueError(
                "Attractor {} has a non-positive distance {}".format(view.cell, view.distance)
            )
        logits[k] = log_distance_weight(view.distance, cfg) + math.log(view.amount)
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def select_attractor(views: Sequence[AttractorView], rng, cfg=PerceptionConfig()) -> Optional[AttractorView]:
    r"""
    Sample one attractor according to the selection probabilities, None without views
    """
    if len(views) == 0:
        return None
    probs = attractor_probabilities(views, cfg)
    index = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return views[min(index, len(views) - 1)]


def sense_attractors(pheromones, world: WorldState, agent, medium_cfg) -> List[AttractorView]:
    r"""
    Attractors in the sensing window of an agent, row-major order
    """
    pos = world.position(agent)
    return [
        AttractorView(cell=cell, amount=amount, distance=distance(pos, cell))
        for cell, amount in pheromones.sense(pos, medium_cfg)
    ]


def build_local_state(world: WorldState, agent, selected: Optional[AttractorView], sense_radius):
    r"""
    The 7-element local state of an agent

    [n_up, n_right, n_down, n_left, dx, dy, on_labeled]

    The neighbor flags are bits, (dx, dy) is the offset of the selected attractor clamped
    to the sensing radius and divided by it, zero without attractor.
    """
    state = np.zeros(s.LOCAL_STATE_WIDTH, dtype=np.float64)
    state[:4] = world.neighbors4(agent)
    if selected is not None:
        x, y = world.position(agent)
        dx = min(max(selected.cell[0] - x, -sense_radius), sense_radius)
        dy = min(max(selected.cell[1] - y, -sense_radius), sense_radius)
        state[4] = dx / sense_radius
        state[5] = dy / sense_radius
    state[6] = 1.0 if world.is_labeled(agent) else 0.0
    return state


def build_coordinate_state(world: WorldState, agent):
    r"""
    Local state without stigmergy: the offset slots carry the exact coordinates of the
    agent scaled to [-1, 1]
    """
    state = np.zeros(s.LOCAL_STATE_WIDTH, dtype=np.float64)
    state[:4] = world.neighbors4(agent)
    x, y = world.position(agent)
    width, height = world.shape.width, world.shape.height
    state[4] = 2.0 * x / (width - 1) - 1.0 if width > 1 else 0.0
    state[5] = 2.0 * y / (height - 1) - 1.0 if height > 1 else 0.0
    state[6] = 1.0 if world.is_labeled(agent) else 0.0
    return state


def cascade_states(states, world: WorldState, agent):
    r"""
    Joint observation: own local state followed by the local states of the agents in the
    8 Moore slots (row-major), zeros for empty slots
    """
    joint = np.zeros(s.JOINT_STATE_WIDTH, dtype=np.float64)
    joint[: s.LOCAL_STATE_WIDTH] = states[agent]
    for slot, other in enumerate(world.moore_slots(agent), start=1):
        if other is not None:
            start = slot * s.LOCAL_STATE_WIDTH
            joint[start : start + s.LOCAL_STATE_WIDTH] = states[other]
    return joint
