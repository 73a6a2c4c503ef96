import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from PIL import Image

import sirl_swarm.settings as s
from sirl_swarm.environment.medium import MOORE_OFFSETS, write_pgm

# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG
LOG_LEVEL = logging.WARN

EMPTY = -1

# Frame levels
AGENT_LEVEL = 255
OUTLINE_LEVEL = 128


class Action(IntEnum):
    r"""
    Individual action set. Origin top-left, x to the right, y downwards: Up decrements y
    """

    UP = 0
    RIGHT = 1
    DOWN = 2
    LEFT = 3
    STOP = 4

    @property
    def delta(self):
        return _ACTION_DELTAS[self]


_ACTION_DELTAS = {
    Action.UP: (0, -1),
    Action.RIGHT: (1, 0),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.STOP: (0, 0),
}

# von Neumann directions in the order of the local state: Up, Right, Down, Left
NEIGHBOR_DIRECTIONS = [Action.UP, Action.RIGHT, Action.DOWN, Action.LEFT]


def distance(a, b):
    r"""
    Euclidean distance between two cells, adjacent cells are 1 apart
    """
    return math.hypot(a[0] - b[0], a[1] - b[1])


class TargetShape:
    r"""
    The labeled area on the grid. The number of labeled cells is the number of agents N
    """

    def __init__(self, labeled):
        labeled = np.asarray(labeled, dtype=bool)
        if labeled.ndim != 2:
            raise ValueError("A target shape needs a 2D bitmap, got shape {}".format(labeled.shape))
        if not labeled.any():
            raise ValueError("The target shape has no labeled cells")
        self._labeled = labeled.copy()
        self._labeled.flags.writeable = False

    @classmethod
    def from_bitmap(cls, bitmap):
        return cls(np.asarray(bitmap) != 0)

    @property
    def width(self):
        return self._labeled.shape[1]

    @property
    def height(self):
        return self._labeled.shape[0]

    @property
    def labeled(self):
        return self._labeled

    @property
    def num_agents(self):
        return int(self._labeled.sum())

    @property
    def labeled_cells(self) -> List[Tuple[int, int]]:
        ys, xs = np.nonzero(self._labeled)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    @property
    def centroid(self):
        ys, xs = np.nonzero(self._labeled)
        return float(xs.mean()), float(ys.mean())

    def inside(self, pos):
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height

    def is_labeled(self, pos):
        x, y = pos
        return bool(self._labeled[y, x])

    def outline(self):
        r"""
        Labeled cells with at least one non-labeled or out-of-grid 4-neighbor
        """
        padded = np.pad(self._labeled, 1, constant_values=False)
        interior = (
            padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
        )
        return self._labeled & ~interior

    def __eq__(self, other):
        if not isinstance(other, TargetShape):
            return NotImplemented
        return np.array_equal(self._labeled, other._labeled)

    def __hash__(self):
        return hash(self._labeled.tobytes())

    def __repr__(self):
        return "TargetShape({}x{}, N={})".format(self.width, self.height, self.num_agents)


class WorldState:
    r"""
    Grid environment: target shape, agent positions and the occupancy index.

    Agent i stands on positions[i] = (x, y). No two agents ever share a cell and the
    occupancy grid always mirrors the positions. The state is mutated only during the
    sequential action phase.
    """

    def __init__(self, shape: TargetShape, positions):
        self._shape = shape
        positions = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
        if len(positions) == 0:
            raise ValueError("A world needs at least one agent")
        self._positions = positions.copy()
        self._occupancy = np.full((shape.height, shape.width), EMPTY, dtype=np.int64)
        for i, (x, y) in enumerate(self._positions):
            if not shape.inside((x, y)):
                raise IndexError("Agent {} at ({}, {}) is outside the grid".format(i, x, y))
            if self._occupancy[y, x] != EMPTY:
                raise ValueError(
                    "Agents {} and {} share cell ({}, {})".format(self._occupancy[y, x], i, x, y)
                )
            self._occupancy[y, x] = i

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @classmethod
    def random_placement(cls, shape: TargetShape, rng, num_agents=None):
        r"""
        Place the agents on uniformly drawn distinct cells of the whole grid
        """
        n = shape.num_agents if num_agents is None else int(num_agents)
        total = shape.width * shape.height
        if n > total:
            raise ValueError("Cannot place {} agents on {} cells".format(n, total))
        flat = rng.choice(total, size=n, replace=False)
        positions = np.stack([flat % shape.width, flat // shape.width], axis=1)
        return cls(shape, positions)

    @property
    def shape(self):
        return self._shape

    @property
    def num_agents(self):
        return len(self._positions)

    @property
    def positions(self):
        view = self._positions.view()
        view.flags.writeable = False
        return view

    @property
    def occupancy(self):
        view = self._occupancy.view()
        view.flags.writeable = False
        return view

    def position(self, agent) -> Tuple[int, int]:
        x, y = self._positions[agent]
        return int(x), int(y)

    def occupied_cells(self) -> List[Tuple[int, int]]:
        return [(int(x), int(y)) for x, y in self._positions]

    def agent_at(self, pos) -> Optional[int]:
        x, y = pos
        if not self._shape.inside(pos):
            return None
        agent = int(self._occupancy[y, x])
        return None if agent == EMPTY else agent

    def is_free(self, pos):
        return self._shape.inside(pos) and self.agent_at(pos) is None

    def is_labeled(self, agent):
        return self._shape.is_labeled(self.position(agent))

    def labeled_count(self):
        xs, ys = self._positions[:, 0], self._positions[:, 1]
        return int(self._shape.labeled[ys, xs].sum())

    def copy(self):
        return WorldState(self._shape, self._positions)

    def apply_action(self, agent, action) -> bool:
        r"""
        Move one agent by one cell.

        Stop leaves the state unchanged. Any other action moves the agent only when the
        target cell is inside the grid and free; a blocked move is a normal outcome.

        Returns
        -------
        bool : True if the agent moved
        """
        if not 0 <= agent < self.num_agents:
            raise IndexError("Unknown agent {}".format(agent))
        action = Action(action)
        if action == Action.STOP:
            return False
        x, y = self.position(agent)
        dx, dy = action.delta
        target = (x + dx, y + dy)
        if not self.is_free(target):
            return False
        self._occupancy[y, x] = EMPTY
        self._occupancy[target[1], target[0]] = agent
        self._positions[agent] = target
        return True

    def similarity(self):
        r"""
        Fraction of the agents that stand on labeled cells
        """
        return self.labeled_count() / self.num_agents

    def neighbors4(self, agent) -> Tuple[bool, bool, bool, bool]:
        r"""
        Occupancy flags of the Up, Right, Down and Left cells. Out-of-grid cells are False
        """
        x, y = self.position(agent)
        flags = []
        for direction in NEIGHBOR_DIRECTIONS:
            dx, dy = direction.delta
            flags.append(self.agent_at((x + dx, y + dy)) is not None)
        return tuple(flags)

    def moore8(self, agent) -> List[int]:
        r"""
        Indices of the agents in the 8 surrounding cells, row-major order
        """
        x, y = self.position(agent)
        found = []
        for dx, dy in MOORE_OFFSETS:
            other = self.agent_at((x + dx, y + dy))
            if other is not None:
                found.append(other)
        return found

    def moore_slots(self, agent) -> List[Optional[int]]:
        r"""
        Agent index (or None) for each of the 8 Moore offsets, row-major order
        """
        x, y = self.position(agent)
        return [self.agent_at((x + dx, y + dy)) for dx, dy in MOORE_OFFSETS]

    def frame_levels(self):
        r"""
        Gray levels of a frame: agents white, labeled-area outline gray, rest black
        """
        levels = np.zeros((self._shape.height, self._shape.width), dtype=np.int64)
        levels[self._shape.outline()] = OUTLINE_LEVEL
        levels[self._occupancy != EMPTY] = AGENT_LEVEL
        return levels

    def to_pgm(self, path):
        write_pgm(path, self.frame_levels())

    def to_png(self, path, scale=8):
        r"""
        Up-scaled PNG rendering of the frame
        """
        path = Path(path)
        levels = self.frame_levels().astype(np.uint8)
        image = Image.fromarray(levels)
        if scale > 1:
            image = image.resize(
                (levels.shape[1] * scale, levels.shape[0] * scale), resample=Image.Resampling.NEAREST
            )
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            image.save(path)
        except OSError as e:
            raise OSError("Cannot write frame {}: {}".format(path, e)) from e


def global_reward(before: WorldState, after: WorldState):
    r"""
    Increase in similarity between two states of the same swarm, positive or negative
    """
    if before.shape != after.shape or before.num_agents != after.num_agents:
        raise ValueError(
            "Global reward needs states of the same shape and swarm: {} / {} agents vs {} / {} agents".format(
                before.shape, before.num_agents, after.shape, after.num_agents
            )
        )
    return (after.labeled_count() - before.labeled_count()) / after.num_agents


def similarity_delta(count_before, count_after, num_agents):
    r"""
    Global reward from the labeled counts before and after a phase
    """
    return (count_after - count_before) / num_agents


@dataclass
class PhaseOutcome:
    r"""
    Result of one action phase of the swarm

    actions : action taken by every acting agent
    moved : whether each acting agent changed cell
    count_before / count_after : agents on labeled cells around the phase
    """

    actions: Dict[int, Action] = field(default_factory=dict)
    moved: Dict[int, bool] = field(default_factory=dict)
    count_before: int = 0
    count_after: int = 0
    num_agents: int = 1

    @property
    def moves(self):
        return sum(1 for m in self.moved.values() if m)

    @property
    def global_reward(self):
        return similarity_delta(self.count_before, self.count_after, self.num_agents)


def run_phase(
    w: WorldState,
    movers: Iterable[int],
    choose_action: Callable[[int], Action],
    pheromones=None,
    medium_cfg=None,
) -> PhaseOutcome:
    r"""
    Let the acting agents act one after the other in ascending index.

    Every agent picks its action right before acting, so a move sees the cells freed or
    taken by the agents that acted earlier in the phase. With a pheromone map each acting
    agent then modifies the pheromone of the cell it stands on, and at the end of the
    phase every occupied cell decays.

    Parameters
    ----------
    w : WorldState
        Mutated in place
    movers : iterable of int
        The acting agents
    choose_action : callable
        agent -> Action
    pheromones : PheromoneMap
        None disables the stigmergy
    medium_cfg : MediumConfig
    """
    outcome = PhaseOutcome(count_before=w.labeled_count(), num_agents=w.num_agents)
    for agent in sorted(movers):
        action = Action(choose_action(agent))
        outcome.actions[agent] = action
        outcome.moved[agent] = w.apply_action(agent, action)
        if pheromones is not None:
            pos = w.position(agent)
            pheromones.deposit(pos, w.shape.is_labeled(pos), medium_cfg)
    if pheromones is not None:
        pheromones.decay_occupied(w.occupied_cells(), medium_cfg)
    outcome.count_after = w.labeled_count()
    return outcome
