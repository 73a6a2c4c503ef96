import logging
import math
from dataclasses import dataclass
from typing import List

import sirl_swarm.settings as s
from sirl_swarm.environment.world import NEIGHBOR_DIRECTIONS, WorldState

LOG_LEVEL = logging.WARN
# LOG_LEVEL = logging.DEBUG

logger = s.get_custom_logger(__name__, LOG_LEVEL)

MOORE8 = "moore8"
VON_NEUMANN4 = "von_neumann4"
DISABLED = "disabled"

COORDINATION_RANGES = [MOORE8, VON_NEUMANN4, DISABLED]


@dataclass(frozen=True)
class CoordinationConfig:
    r"""
    Range of the coordination channel: the 8 Moore neighbors, the 4 von Neumann neighbors
    or no channel at all (every agent acts)
    """

    range: str = MOORE8

    def __post_init__(self):
        if self.range not in COORDINATION_RANGES:
            raise ValueError(
                "Unknown coordination range '{}', expected one of {}".format(
                    self.range, COORDINATION_RANGES
                )
            )


def in_range_neighbors(w: WorldState, agent, cfg: CoordinationConfig) -> List[int]:
    r"""
    Agents that exchange priorities with the given agent
    """
    if cfg.range == MOORE8:
        return w.moore8(agent)
    if cfg.range == VON_NEUMANN4:
        x, y = w.position(agent)
        found = []
        for direction in NEIGHBOR_DIRECTIONS:
            dx, dy = direction.delta
            other = w.agent_at((x + dx, y + dy))
            if other is not None:
                found.append(other)
        return found
    return []


def beats(priorities, i, j):
    r"""
    True if agent i takes precedence over agent j: higher priority, lower index on ties
    """
    return priorities[i] > priorities[j] or (priorities[i] == priorities[j] and i < j)


def decide_winners(priorities, w: WorldState, cfg: CoordinationConfig = CoordinationConfig()) -> List[int]:
    r"""
    Run the conflict-avoidance protocol.

    An agent acts only if it takes precedence over every neighbor in its coordination
    range. With the channel disabled every agent acts.

    Parameters
    ----------
    priorities : sequence of float
        One finite action priority per agent
    w : WorldState
    cfg : CoordinationConfig

    Returns
    -------
    list of int
        Indices of the acting agents, ascending
    """
    if len(priorities) != w.num_agents:
        raise ValueError(
            "Expected {} priorities, got {}".format(w.num_agents, len(priorities))
        )
    for i, p in enumerate(priorities):
        if not math.isfinite(p):
            raise ValueError("Agent {} has a non-finite priority {}".format(i, p))

    if cfg.range == DISABLED:
        return list(range(w.num_agents))

    winners = []
    for i in range(w.num_agents):
        if all(beats(priorities, i, j) for j in in_range_neighbors(w, i, cfg)):
            winners.append(i)
    logger.debug("Winners: {} of {}".format(len(winners), w.num_agents))
    return winners
