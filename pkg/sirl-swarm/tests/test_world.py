"""Grid world: actions, similarity, neighborhoods and the action phase."""

import numpy as np
import pytest
from PIL import Image

from conftest import make_shape, make_world
from sirl_swarm.environment.medium import MediumConfig, PheromoneMap
from sirl_swarm.environment.world import (
    AGENT_LEVEL,
    OUTLINE_LEVEL,
    Action,
    TargetShape,
    WorldState,
    global_reward,
    run_phase,
)
from sirl_swarm.harness import load_shape


def test_stop_leaves_the_state_unchanged():
    w = make_world(8, 8, [(0, 0)], [(5, 5)])
    assert w.apply_action(0, Action.STOP) is False
    assert w.position(0) == (5, 5)


def test_up_decrements_y():
    w = make_world(8, 8, [(0, 0)], [(5, 5)])
    assert w.apply_action(0, Action.UP) is True
    assert w.position(0) == (5, 4)
    assert w.agent_at((5, 4)) == 0
    assert w.agent_at((5, 5)) is None


def test_move_out_of_the_grid_is_blocked():
    w = make_world(8, 8, [(0, 0)], [(7, 3)])
    assert w.apply_action(0, Action.RIGHT) is False
    assert w.position(0) == (7, 3)


def test_move_into_an_occupied_cell_is_blocked():
    w = make_world(8, 8, [(0, 0)], [(3, 3), (4, 3)])
    assert w.apply_action(0, Action.RIGHT) is False
    assert w.positions.tolist() == [[3, 3], [4, 3]]


def test_invalid_placements():
    shape = make_shape(4, 4, [(0, 0)])
    with pytest.raises(ValueError):
        WorldState(shape, [(1, 1), (1, 1)])
    with pytest.raises(IndexError):
        WorldState(shape, [(4, 0)])
    with pytest.raises(ValueError):
        TargetShape(np.zeros((3, 3), dtype=bool))


def test_similarity_extremes(square3):
    on = WorldState(square3, square3.labeled_cells)
    assert on.similarity() == 1.0
    off = WorldState(square3, [(x, 0) for x in range(7)] + [(0, 6), (6, 6)])
    assert off.similarity() == 0.0


def test_similarity_on_digit_four():
    shape = load_shape("digit4")
    assert shape.num_agents == 119
    outside = [(x, 0) for x in range(3)]
    w = WorldState(shape, shape.labeled_cells[:116] + outside)
    assert w.similarity() == pytest.approx(116 / 119)
    assert round(100 * w.similarity(), 1) == 97.5


def test_global_reward():
    cells = [(x, 0) for x in range(10)]
    before = make_world(10, 10, cells, [(x, 5) for x in range(10)])
    assert global_reward(before, before.copy()) == 0.0

    after = before.copy()
    after.apply_action(0, Action.UP)
    for _ in range(4):
        after.apply_action(0, Action.UP)
    assert after.position(0) == (0, 0)
    assert global_reward(before, after) == pytest.approx(0.1)

    swapped = after.copy()
    for _ in range(5):
        swapped.apply_action(0, Action.DOWN)
    for _ in range(5):
        swapped.apply_action(1, Action.UP)
    assert global_reward(after, swapped) == 0.0


def test_global_reward_rejects_another_shape():
    a = make_world(5, 5, [(0, 0)], [(1, 1)])
    b = make_world(5, 5, [(1, 0)], [(1, 1)])
    with pytest.raises(ValueError):
        global_reward(a, b)


def test_isolated_agent_has_no_neighbors():
    w = make_world(6, 6, [(0, 0)], [(2, 2), (5, 5)])
    assert w.neighbors4(0) == (False, False, False, False)
    assert w.moore8(0) == []


def test_surrounded_agent():
    ring = [(x, y) for y in range(3) for x in range(3) if (x, y) != (1, 1)]
    w = make_world(5, 5, [(0, 0)], [(1, 1)] + ring)
    assert w.neighbors4(0) == (True, True, True, True)
    assert sorted(w.moore8(0)) == list(range(1, 9))
    # row-major order of the Moore slots
    assert w.moore_slots(0) == list(range(1, 9))


def test_occupancy_mirrors_positions_under_random_actions(rng):
    shape = make_shape(6, 6, [(2, 2), (3, 3)])
    w = WorldState.random_placement(shape, rng, num_agents=12)
    for _ in range(2000):
        w.apply_action(int(rng.integers(0, 12)), Action(int(rng.integers(0, 5))))
    cells = {tuple(p) for p in w.positions.tolist()}
    assert len(cells) == 12
    for i, (x, y) in enumerate(w.positions.tolist()):
        assert w.occupancy[y, x] == i
    assert (w.occupancy >= 0).sum() == 12


def test_phase_rewards_telescope(square3, rng):
    w = WorldState.random_placement(square3, rng)
    start = w.similarity()
    total = 0.0
    for _ in range(50):
        outcome = run_phase(w, range(w.num_agents), lambda _: Action(int(rng.integers(0, 5))))
        total += outcome.global_reward
    assert total == pytest.approx(w.similarity() - start, abs=1e-12)


def test_run_phase_acts_in_ascending_index_on_the_current_state():
    w = make_world(5, 1, [(0, 0)], [(1, 0), (0, 0)])
    # agent 0 moves right first, then agent 1 can take its cell
    outcome = run_phase(w, [1, 0], lambda _: Action.RIGHT)
    assert list(outcome.actions) == [0, 1]
    assert outcome.moved == {0: True, 1: True}
    assert w.positions.tolist() == [[2, 0], [1, 0]]
    assert outcome.moves == 2
    assert outcome.global_reward == pytest.approx(-0.5)


def test_run_phase_deposits_for_the_movers_and_decays_occupied_cells():
    cfg = MediumConfig(diffusion_rate=0.0, decay_rate=0.5)
    w = make_world(5, 5, [(1, 1)], [(1, 2), (4, 4)])
    field_map = PheromoneMap(5, 5)
    run_phase(w, [0], lambda _: Action.UP, pheromones=field_map, medium_cfg=cfg)
    assert w.position(0) == (1, 1)
    # deposited 1.0 then decayed at the occupied cell
    assert field_map.get((1, 1)) == 0.5
    assert field_map.get((4, 4)) == 0.0
    assert field_map.total() == 0.5


def test_frame_levels(cross5):
    w = WorldState(cross5, [(0, 0), (1, 0), (2, 0), (3, 3), (6, 6)])
    levels = w.frame_levels()
    assert levels.shape == (cross5.height, cross5.width)
    assert levels[0, 0] == AGENT_LEVEL
    assert levels[3, 3] == AGENT_LEVEL
    assert levels[2, 3] == OUTLINE_LEVEL
    assert levels[5, 5] == 0


def test_png_export(tmp_path, square3):
    w = WorldState(square3, square3.labeled_cells)
    path = tmp_path / "frame.png"
    w.to_png(path, scale=4)
    with Image.open(path) as image:
        assert image.size == (square3.width * 4, square3.height * 4)


def test_outline_of_the_square(square3):
    outline = square3.outline()
    assert outline.sum() == 8
    assert not outline[3, 3]
    assert square3.centroid == (3.0, 3.0)
