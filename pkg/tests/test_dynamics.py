import csv

import numpy as np
import pytest

from wvf.algebra import greedy_rollout
from wvf.dynamics import imagined_rollout, infer_model, infer_transition
from wvf.world import extended_reward_table


@pytest.fixture(scope="module")
def oracle_model(four_rooms, fr_oracle):
    return infer_model(fr_oracle, four_rooms)


def test_oracle_inference_exact(four_rooms, oracle_model):
    w = four_rooms.world
    moving = ~w.absorbing
    assert np.array_equal(oracle_model.queried, moving)
    assert np.array_equal(oracle_model.successor[moving], w.next_state[moving])
    assert oracle_model.accuracy == 1.0
    assert np.nanmax(oracle_model.residual) <= 1e-12


def test_oracle_argmin_unique(four_rooms, fr_oracle):
    rbar = extended_reward_table(four_rooms.world, four_rooms.task, fr_oracle.goals, fr_oracle.metadata["penalty"])
    v = fr_oracle.state_values()
    for s, a in [(0, 0), (17, 2), (50, 3), (103, 1)]:
        target = fr_oracle.values[s, :, a] - rbar[s, :, a]
        resid = ((target[None, :] - v) ** 2).sum(axis=1)
        order = np.sort(resid)
        assert order[0] <= 1e-12 < order[1]
        assert infer_transition(fr_oracle, rbar, s, a, range(104), range(104))[0] == int(resid.argmin())


def test_infer_transition_rejects_empty(four_rooms, fr_oracle):
    rbar = extended_reward_table(four_rooms.world, four_rooms.task, fr_oracle.goals, -218.4)
    with pytest.raises(ValueError):
        infer_transition(fr_oracle, rbar, 0, 0, [], range(104))
    with pytest.raises(ValueError):
        infer_transition(fr_oracle, rbar, 0, 0, [1], [])


def test_neighbourhood_beats_full_scope_on_undertrained_table(four_rooms, fr_short_learned):
    full = infer_model(fr_short_learned, four_rooms)
    local = infer_model(fr_short_learned, four_rooms, radius=2)
    assert full.accuracy < 1.0
    assert local.accuracy > full.accuracy


def test_radius_scope_label(four_rooms, fr_oracle):
    m = infer_model(fr_oracle, four_rooms, radius=2, states=[0, 1])
    assert m.scope == "radius=2"
    assert m.queried[:2].any() and not m.queried[2:].any()
    assert m.accuracy == 1.0


def test_imagined_rollouts_match_real(four_rooms, fr_oracle, oracle_model):
    w = four_rooms.world
    for start in range(0, 104, 7):
        for goal in fr_oracle.goals[::9]:
            imagined = imagined_rollout(oracle_model, fr_oracle, start, goal=int(goal), horizon=100)
            real, actions, done = greedy_rollout(w, fr_oracle.for_goal(int(goal)).argmax(axis=1), start, 100)
            assert imagined.terminated and done
            assert imagined.states == list(real) and imagined.actions == list(actions)


def test_start_at_goal_stops_immediately(four_rooms, fr_oracle, oracle_model):
    g = four_rooms.state_of((3, 3))
    t = imagined_rollout(oracle_model, fr_oracle, g, goal=g)
    assert t.states == [g] and t.actions == [four_rooms.terminal_action] and t.terminated


def test_rollout_values_rise_toward_goal(four_rooms, fr_oracle, oracle_model):
    g = four_rooms.state_of((9, 9))
    t = imagined_rollout(oracle_model, fr_oracle, four_rooms.state_of((1, 1)), goal=g)
    assert np.all(np.diff(t.values) > 0)
    norm = t.normalised_values
    assert norm[0] == 0.0 and norm[-1] == 1.0


def test_horizon_zero_rejected(fr_oracle, oracle_model):
    with pytest.raises(ValueError):
        imagined_rollout(oracle_model, fr_oracle, 0, horizon=0)


def test_csv_export(tmp_path, four_rooms, oracle_model):
    path = oracle_model.write_csv(tmp_path / "dyn.csv", four_rooms.world.action_names)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["state", "action", "successor", "residual", "correct"]
    assert len(rows) - 1 == int(oracle_model.queried.sum()) == 104 * 4
    assert all(r[4] == "1" for r in rows[1:])
