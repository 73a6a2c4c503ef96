import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import sirl_swarm.settings as s
from sirl_swarm.common import stream_rng
from sirl_swarm.coordination import (
    DISABLED,
    MOORE8,
    VON_NEUMANN4,
    CoordinationConfig,
    decide_winners,
)
from sirl_swarm.environment.medium import MediumConfig, PheromoneMap
from sirl_swarm.environment.perception import PerceptionConfig, select_attractor, sense_attractors
from sirl_swarm.environment.world import (
    NEIGHBOR_DIRECTIONS,
    Action,
    PhaseOutcome,
    WorldState,
    distance,
    run_phase,
)

LOG_LEVEL = logging.WARN
# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

logger = s.get_custom_logger(__name__, LOG_LEVEL)

MEDIUM_REWARD = "medium"
ORIGIN_REWARD = "origin"


@dataclass(frozen=True)
class MethodProfile:
    r"""
    How a method is assembled from the shared stack

    stigmergy : agents sense, select attractors and modify the pheromone map
    coordination : range of the conflict-avoidance channel
    joint_input : the Behavior Module reads the cascaded Moore observation
    reward : MEDIUM_REWARD or ORIGIN_REWARD
    evaluation_session : the Evaluation Module is trained and used for priorities
    learner : False for the scripted methods
    """

    name: str
    stigmergy: bool = True
    coordination: str = MOORE8
    joint_input: bool = False
    reward: str = MEDIUM_REWARD
    evaluation_session: bool = True
    learner: bool = True

    @property
    def input_width(self):
        return s.JOINT_STATE_WIDTH if self.joint_input else s.LOCAL_STATE_WIDTH

    @property
    def coordination_config(self):
        return CoordinationConfig(self.coordination)


METHOD_PROFILES: Dict[str, MethodProfile] = {
    s.SIRL: MethodProfile(s.SIRL),
    s.SIRL_A: MethodProfile(s.SIRL_A, coordination=VON_NEUMANN4),
    s.SIRL_WS: MethodProfile(s.SIRL_WS, coordination=DISABLED, evaluation_session=False),
    s.JL: MethodProfile(s.JL, coordination=DISABLED, joint_input=True, evaluation_session=False),
    s.IRL: MethodProfile(s.IRL, coordination=DISABLED, evaluation_session=False),
    s.JL_O: MethodProfile(
        s.JL_O,
        stigmergy=False,
        coordination=DISABLED,
        joint_input=True,
        reward=ORIGIN_REWARD,
        evaluation_session=False,
    ),
    s.IRL_O: MethodProfile(
        s.IRL_O, stigmergy=False, coordination=DISABLED, reward=ORIGIN_REWARD, evaluation_session=False
    ),
    s.CS: MethodProfile(s.CS, coordination=DISABLED, evaluation_session=False, learner=False),
    s.DC: MethodProfile(s.DC, evaluation_session=False, learner=False),
    s.ORACLE: MethodProfile(
        s.ORACLE, stigmergy=False, coordination=DISABLED, evaluation_session=False, learner=False
    ),
}


def get_profile(method) -> MethodProfile:
    if method not in METHOD_PROFILES:
        raise ValueError("Unknown method '{}', expected one of {}".format(method, s.SUPPORTED_METHODS))
    return METHOD_PROFILES[method]


###################################################################################
# Reward tables
#


@dataclass(frozen=True)
class OriginRewardTable:
    r"""
    Individual reward of the coordinate-input baselines, keyed by the labeled flag of the
    agent before and after its action
    """

    a3: float = 10.0
    b3: float = 100.0

    def __post_init__(self):
        if not (self.a3 > 0 and self.b3 > 0):
            raise ValueError("a3 and b3 must be positive: {} {}".format(self.a3, self.b3))

    @classmethod
    def from_dict(cls, section):
        section = section or {}
        return cls(a3=float(section.get("a3", 10.0)), b3=float(section.get("b3", 100.0)))


def origin_reward(was_labeled, is_labeled, delta_si, tbl=OriginRewardTable()):
    if not was_labeled:
        return tbl.a3 if is_labeled else 0.0
    if not is_labeled:
        return 0.0
    return tbl.b3 * max(delta_si, 0.0)


# (neighbor count, labeled flag or None for any) -> reward
DEFAULT_DC_ROWS = (
    ((4, None), 0.0),
    ((3, True), 4.0),
    ((3, False), 12.0),
    ((2, None), 8.0),
    ((1, True), 8.0),
    ((1, False), 12.0),
    ((0, None), 12.0),
)


@dataclass(frozen=True)
class DcRewardTable:
    r"""
    Hand-set moving reward of the decentralized baseline, keyed by the number of occupied
    von Neumann neighbors and the labeled flag of the agent's cell
    """

    rows: Tuple = DEFAULT_DC_ROWS

    def __post_init__(self):
        if len(self.rows) != 7:
            raise ValueError("A DC reward table has 7 rows, got {}".format(len(self.rows)))
        for count in range(5):
            keys = [key for key, _ in self.rows if key[0] == count]
            flags = sorted(str(k[1]) for k in keys)
            if flags not in (["None"], ["False", "True"]):
                raise ValueError("Neighbor count {} is not covered exactly once: {}".format(count, keys))

    @classmethod
    def from_dict(cls, section):
        r"""
        Rows as {"4,*": 0, "3,1": 4, "3,0": 12, ...}
        """
        if not section:
            return cls()
        rows = []
        for key, reward in section.items():
            count, flag = key.split(",")
            labeled = None if flag.strip() == "*" else bool(int(flag))
            rows.append(((int(count), labeled), float(reward)))
        return cls(tuple(rows))

    def lookup(self, neighbor_count, in_labeled):
        table = dict(self.rows)
        if (neighbor_count, bool(in_labeled)) in table:
            return table[(neighbor_count, bool(in_labeled))]
        if (neighbor_count, None) in table:
            return table[(neighbor_count, None)]
        raise ValueError("Neighbor count out of range: {}".format(neighbor_count))


def dc_reward(neighbor_count, in_labeled, tbl=DcRewardTable()):
    return tbl.lookup(neighbor_count, in_labeled)


def dc_rewards(w: WorldState, tbl=DcRewardTable()) -> List[float]:
    return [dc_reward(sum(w.neighbors4(i)), w.is_labeled(i), tbl) for i in range(w.num_agents)]


###################################################################################
# Circular approach motion shared by CS and DC
#


def _axis_action(vx, vy):
    r"""
    Unit move along the dominant axis of a vector, x wins ties
    """
    if vx == 0 and vy == 0:
        return Action.STOP
    if abs(vx) >= abs(vy):
        return Action.RIGHT if vx > 0 else Action.LEFT
    return Action.DOWN if vy > 0 else Action.UP


def _target_of(action, pos):
    dx, dy = action.delta
    return pos[0] + dx, pos[1] + dy


def next_to_labeled_area(w: WorldState, agent):
    x, y = w.position(agent)
    for direction in NEIGHBOR_DIRECTIONS:
        dx, dy = direction.delta
        cell = (x + dx, y + dy)
        if w.shape.inside(cell) and w.shape.is_labeled(cell):
            return True
    return False


def circular_action(w: WorldState, agent, target) -> Action:
    r"""
    One step of the circular approach toward a target cell.

    The greedy step moves along the dominant axis of the offset to the target. The agent
    takes the clockwise tangent around the centroid of the labeled area instead when the
    greedy step is blocked, or when it stands outside the labeled area next to its border
    and the greedy step does not enter a free labeled cell. A blocked tangent means Stop.
    """
    pos = w.position(agent)
    greedy = _axis_action(target[0] - pos[0], target[1] - pos[1])
    if greedy == Action.STOP:
        return Action.STOP
    greedy_cell = _target_of(greedy, pos)
    blocked = not w.is_free(greedy_cell)
    enters_labeled = not blocked and w.shape.is_labeled(greedy_cell)
    circling = not w.is_labeled(agent) and next_to_labeled_area(w, agent) and not enters_labeled
    if not blocked and not circling:
        return greedy

    cx, cy = w.shape.centroid
    rx, ry = pos[0] - cx, pos[1] - cy
    # y grows downwards, so (-ry, rx) turns clockwise on screen
    tangent = _axis_action(-ry, rx)
    if tangent == Action.STOP or not w.is_free(_target_of(tangent, pos)):
        return Action.STOP
    return tangent


def _motion_targets(w, pheromones, agents, medium_cfg, perception_cfg, seed, t):
    r"""
    Target cell of every selected agent: its sampled attractor, or the labeled centroid
    when no pheromone is in range
    """
    cx, cy = w.shape.centroid
    centroid = (int(round(cx)), int(round(cy)))
    targets = {}
    for agent in agents:
        views = sense_attractors(pheromones, w, agent, medium_cfg)
        selected = select_attractor(views, stream_rng(seed, "baseline", t, agent), perception_cfg)
        targets[agent] = selected.cell if selected is not None else centroid
    return targets


def _scripted_phase(w, pheromones, movers, medium_cfg, perception_cfg, seed, t):
    targets = _motion_targets(w, pheromones, movers, medium_cfg, perception_cfg, seed, t)
    return run_phase(
        w,
        movers,
        lambda agent: circular_action(w, agent, targets[agent]),
        pheromones=pheromones,
        medium_cfg=medium_cfg,
    )


def dc_winners(w: WorldState, tbl=DcRewardTable()) -> List[int]:
    r"""
    Agents holding the maximum DC reward within their Moore range, lowest index on ties
    """
    return decide_winners(dc_rewards(w, tbl), w, CoordinationConfig(MOORE8))


def dc_step(
    w: WorldState,
    pheromones: PheromoneMap,
    medium_cfg=MediumConfig(),
    tbl=DcRewardTable(),
    perception_cfg=PerceptionConfig(),
    seed=0,
    t=0,
) -> PhaseOutcome:
    r"""
    One iteration of the decentralized baseline. The world and the map are updated in place.
    """
    movers = dc_winners(w, tbl)
    return _scripted_phase(w, pheromones, movers, medium_cfg, perception_cfg, seed, t)


def cs_selection(w: WorldState, k, tbl=DcRewardTable()) -> List[int]:
    r"""
    The k agents with the highest DC reward, lower index first on ties. k is clamped to N
    """
    if k < 1:
        raise ValueError("CS needs k >= 1, got {}".format(k))
    k = min(int(k), w.num_agents)
    rewards = dc_rewards(w, tbl)
    ranking = sorted(range(w.num_agents), key=lambda i: (-rewards[i], i))
    return sorted(ranking[:k])


def cs_step(
    w: WorldState,
    pheromones: PheromoneMap,
    k,
    medium_cfg=MediumConfig(),
    tbl=DcRewardTable(),
    perception_cfg=PerceptionConfig(),
    seed=0,
    t=0,
) -> PhaseOutcome:
    r"""
    One iteration of the centralized-selection baseline
    """
    movers = cs_selection(w, k, tbl)
    return _scripted_phase(w, pheromones, movers, medium_cfg, perception_cfg, seed, t)


###################################################################################
# Oracle
#


def shortest_path(w: WorldState, start, goal) -> Optional[List[Tuple[int, int]]]:
    r"""
    Breadth-first shortest path over free cells, start excluded and goal included.
    Neighbors are expanded Up, Right, Down, Left. None when the goal is unreachable.
    """
    if start == goal:
        return []
    previous = {start: None}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for direction in NEIGHBOR_DIRECTIONS:
            dx, dy = direction.delta
            nxt = (cell[0] + dx, cell[1] + dy)
            if nxt in previous or not w.is_free(nxt):
                continue
            previous[nxt] = cell
            if nxt == goal:
                path = [nxt]
                while previous[path[-1]] != start:
                    path.append(previous[path[-1]])
                return path[::-1]
            queue.append(nxt)
    return None


def _neighbor_cells(cell):
    return [(cell[0] + d.delta[0], cell[1] + d.delta[1]) for d in NEIGHBOR_DIRECTIONS]


def _step_action(pos, cell):
    for action in NEIGHBOR_DIRECTIONS:
        if _target_of(action, pos) == cell:
            return action
    raise ValueError("Cells {} and {} are not adjacent".format(pos, cell))


class OracleController:
    r"""
    Centralized filler used as an upper reference.

    For the free labeled cells (vacancies) and the agents outside the labeled area, the
    pair with the smallest Euclidean distance is assigned and the agent is moved one cell
    per iteration along a shortest unobstructed path. The assignment is released as soon
    as the agent stands on any labeled cell, so the similarity never decreases. When no
    outside agent can reach a vacancy, a labeled agent next to it steps in and the hole
    moves toward the reachable cells.
    """

    def __init__(self):
        self._assignment: Optional[Tuple[Tuple[int, int], int]] = None

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @property
    def assignment(self):
        return self._assignment

    def reset(self):
        self._assignment = None

    def _assign(self, w: WorldState):
        vacancies = [cell for cell in w.shape.labeled_cells if w.is_free(cell)]
        outsiders = [i for i in range(w.num_agents) if not w.is_labeled(i)]
        pairs = sorted(
            (distance(cell, w.position(i)), cell[1], cell[0], i)
            for cell in vacancies
            for i in outsiders
        )
        for _, vy, vx, agent in pairs:
            path = shortest_path(w, w.position(agent), (vx, vy))
            if path:
                self._log().debug("Agent {} assigned to vacancy {}".format(agent, (vx, vy)))
                return ((vx, vy), agent), path
        return None, None

    def _path(self, w):
        vacancy, agent = self._assignment
        if not w.is_free(vacancy) or w.is_labeled(agent):
            return None
        return shortest_path(w, w.position(agent), vacancy)

    def _reachable(self, w: WorldState, outsiders):
        # free cells an outside agent can walk to
        seen = {w.position(i) for i in outsiders}
        queue = deque(seen)
        while queue:
            cell = queue.popleft()
            for neighbor in _neighbor_cells(cell):
                if neighbor not in seen and w.is_free(neighbor):
                    seen.add(neighbor)
                    queue.append(neighbor)
        return seen

    def _shift(self, w: WorldState, vacancies, outsiders):
        r"""
        Move a labeled agent into an enclosed vacancy so that the hole travels towards
        the cells the outside agents can reach. The similarity is unchanged.
        """
        reachable = self._reachable(w, outsiders)
        for vacancy in sorted(vacancies, key=lambda cell: (cell[1], cell[0])):
            previous = {vacancy: None}
            queue = deque([vacancy])
            while queue:
                cell = queue.popleft()
                if cell != vacancy and any(n in reachable for n in _neighbor_cells(cell)):
                    while previous[cell] != vacancy:
                        cell = previous[cell]
                    return w.agent_at(cell), _step_action(cell, vacancy)
                for neighbor in _neighbor_cells(cell):
                    agent = w.agent_at(neighbor) if w.shape.inside(neighbor) else None
                    if neighbor in previous or agent is None or not w.is_labeled(agent):
                        continue
                    previous[neighbor] = cell
                    queue.append(neighbor)
        return None

    def step(self, w: WorldState) -> PhaseOutcome:
        path = self._path(w) if self._assignment is not None else None
        if not path:
            self._assignment, path = self._assign(w)
        if self._assignment is None:
            vacancies = [cell for cell in w.shape.labeled_cells if w.is_free(cell)]
            outsiders = [i for i in range(w.num_agents) if not w.is_labeled(i)]
            shift = self._shift(w, vacancies, outsiders) if vacancies and outsiders else None
            if shift is None:
                count = w.labeled_count()
                return PhaseOutcome(count_before=count, count_after=count, num_agents=w.num_agents)
            agent, action = shift
            self._log().debug("Agent {} shifted {} to open an enclosed vacancy".format(agent, action.name))
            return run_phase(w, [agent], lambda _: action)

        _, agent = self._assignment
        action = _step_action(w.position(agent), path[0])
        outcome = run_phase(w, [agent], lambda _: action)
        if w.is_labeled(agent):
            self._assignment = None
        return outcome


def oracle_step(w: WorldState, controller: Optional[OracleController] = None) -> PhaseOutcome:
    r"""
    One Oracle iteration. Pass the same controller across iterations to keep the assignment
    """
    controller = controller if controller is not None else OracleController()
    return controller.step(w)
