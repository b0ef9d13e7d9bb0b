import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wvf.grids import GridLayout, four_rooms_build, parse_map
from wvf.oracle import ConvergenceError, reachable_goals, vi_task, vi_wvf, wvf_backup
from wvf.tables import QTable, WVFTable, dumps_table, load_table, loads_table, save_table
from wvf.world import default_min_penalty, extended_reward_table

from .conftest import closed_form_task_values, layout_bfs

DONE = 4

SEALED = """WVFMAP 1
7 5
#######
#..#..#
#..#..#
#..#..#
#######
"""


def test_goal_value_is_terminal_reward(four_rooms, fr_oracle):
    g = four_rooms.state_of((3, 3))
    assert fr_oracle.for_goal(g)[g, DONE] == 2.0


def test_adjacent_value(four_rooms, fr_oracle):
    g = four_rooms.state_of((3, 3))
    s = four_rooms.state_of((3, 4))
    assert fr_oracle.state_values()[s, fr_oracle.goal_index(g)] == pytest.approx(1.9, abs=1e-12)


def test_wrong_goal_done_is_penalty(four_rooms, fr_oracle):
    g = four_rooms.state_of((3, 3))
    s = four_rooms.state_of((3, 4))
    assert fr_oracle.for_goal(g)[s, DONE] == default_min_penalty(four_rooms.world)


def test_wvf_matches_distance_closed_form(four_rooms, fr_oracle):
    rewards = four_rooms.task.goal_rewards()
    v = fr_oracle.state_values()
    for j, g in enumerate(fr_oracle.goals):
        dist = layout_bfs(four_rooms.layout, four_rooms.cell_of(g))
        expected = [rewards[g] - 0.1 * dist[c] for c in four_rooms.cells]
        assert np.allclose(v[:, j], expected, atol=1e-9)


def test_task_values_match_bfs(four_rooms, fr_q):
    expected = closed_form_task_values(four_rooms, sorted(four_rooms.layout.goals))
    assert np.allclose(fr_q.state_values(), expected, atol=1e-9)
    s = four_rooms.state_of((3, 4))
    assert fr_q.state_values()[s] == pytest.approx(1.9)


def test_theorem_max_over_goals(fr_oracle, fr_q):
    assert np.abs(fr_oracle.values.max(axis=1) - fr_q.values).max() <= 2e-9


def test_bellman_residual_within_tolerance(four_rooms, fr_oracle):
    rbar = extended_reward_table(four_rooms.world, four_rooms.task, fr_oracle.goals, fr_oracle.metadata["penalty"])
    again = wvf_backup(four_rooms.world, rbar, fr_oracle.values)
    assert np.abs(again - fr_oracle.values).max() <= 1e-9


def test_reachable_goals_sealed_rooms():
    env = four_rooms_build(parse_map(SEALED), goal_cells=[(1, 1)])
    left = env.state_of((2, 2))
    right = env.state_of((2, 5))
    assert reachable_goals(env.world, left) == {env.state_of(c) for c in env.cells if c[1] < 3}
    assert env.state_of((1, 1)) not in reachable_goals(env.world, right)
    assert right in reachable_goals(env.world, right)


def test_connected_map_reaches_everything(four_rooms):
    assert reachable_goals(four_rooms.world, 0) == set(range(104))


def test_sealed_rooms_converge():
    env = four_rooms_build(parse_map(SEALED), goal_cells=[(1, 1)])
    table = vi_wvf(env.world, env.task)
    right = env.state_of((2, 5))
    g = env.state_of((1, 1))
    assert table.for_goal(g)[right].max() == default_min_penalty(env.world)


def test_iteration_cap_reports_residual(four_rooms):
    with pytest.raises(ConvergenceError) as err:
        vi_wvf(four_rooms.world, four_rooms.task, max_sweeps=3)
    assert err.value.residual > 0


def test_bad_arguments(four_rooms):
    with pytest.raises(ValueError):
        vi_wvf(four_rooms.world, four_rooms.task, tolerance=0)
    with pytest.raises(ValueError):
        vi_wvf(four_rooms.world, four_rooms.task, goals=[])
    with pytest.raises(ValueError):
        vi_wvf(four_rooms.world, four_rooms.task, penalty=0.0)


def test_world_policy_shared_across_tasks(four_rooms):
    from wvf.grids import bottom_row_task, hallways_task
    w = four_rooms.world
    tables = [vi_wvf(w, t) for t in (four_rooms.task, hallways_task(four_rooms), bottom_row_task(four_rooms))]
    S = w.state_count
    off_diag = np.arange(S)[:, None] != tables[0].goals[None, :]
    for a in tables:
        greedy = a.values.argmax(axis=2)
        for b in tables:
            chosen = np.take_along_axis(b.values, greedy[..., None], axis=2)[..., 0]
            gap = b.values.max(axis=2) - chosen
            assert gap[off_diag].max() <= 1e-9


def test_discounted_values():
    env = four_rooms_build()
    q = vi_task(env.world, env.task, discount=0.9)
    g = env.state_of((3, 3))
    s = env.state_of((3, 5))
    assert q.state_values()[s] == pytest.approx(-0.1 + 0.9 * (-0.1 + 0.9 * 2.0))
    assert q.state_values()[g] == 2.0


def test_table_roundtrip_bit_exact(tmp_path, fr_oracle, fr_q):
    path = save_table(fr_oracle, tmp_path / "w.tbl")
    back = load_table(path)
    assert np.array_equal(back.values, fr_oracle.values)
    assert np.array_equal(back.goals, fr_oracle.goals)
    assert back.metadata == fr_oracle.metadata
    text = path.read_text().splitlines()
    assert text[0] == "WVFTBL 1" and text[1] == "104 104 5"
    assert len(text) == 3 + 104 * 104
    q = loads_table(dumps_table(fr_q))
    assert isinstance(q, QTable) and np.array_equal(q.values, fr_q.values)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=12, max_size=12),
       st.text(min_size=1, max_size=8))
def test_roundtrip_any_floats(vals, name):
    t = WVFTable(np.array(vals).reshape(3, 2, 2), np.array([2, 0]), {"task": name})
    back = loads_table(dumps_table(t))
    assert np.array_equal(back.values, t.values)
    assert back.metadata["task"] == name


def test_numeric_looking_names_stay_strings():
    for name in ("inf", "nan", "1", "2.5", "-3e4", "a b=c"):
        t = WVFTable(np.zeros((1, 1, 1)), np.array([0]), {"task": name, "sweeps": 3, "penalty": -2.5})
        assert loads_table(dumps_table(t)).metadata == {"task": name, "sweeps": 3, "penalty": -2.5}


@st.composite
def room_layouts(draw):
    h, w = draw(st.integers(3, 6)), draw(st.integers(3, 6))
    cells = [(r, c) for r in range(h) for c in range(w)]
    walls = set(draw(st.lists(st.sampled_from(cells), max_size=len(cells) // 3)))
    free = [c for c in cells if c not in walls]
    if not free:
        walls.discard(cells[0])
        free = [cells[0]]
    goals = draw(st.lists(st.sampled_from(free), min_size=1, max_size=3, unique=True))
    return GridLayout(w, h, frozenset(walls)), goals


@settings(max_examples=30, deadline=None)
@given(room_layouts())
def test_random_layouts_against_bfs(data):
    layout, goals = data
    env = four_rooms_build(layout, goal_cells=goals)
    W = vi_wvf(env.world, env.task)
    Q = vi_task(env.world, env.task)
    assert np.abs(W.values.max(axis=1) - Q.values).max() <= 2e-9
    assert np.allclose(Q.state_values(), closed_form_task_values(env, goals), atol=1e-9)
