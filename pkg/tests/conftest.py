from collections import deque

import numpy as np
import pytest

from wvf import four_rooms_build, learn_wvf, pickup_grid_build, vi_task, vi_wvf
from wvf.grids import attribute_task
from wvf.learning import LearnConfig

CANONICAL = LearnConfig(alpha=0.5, epsilon=0.3, episodes=50_000, max_steps=100, gamma=1.0, seed=0)


def layout_bfs(layout, source):
    """Shortest 4-connected path lengths from ``source`` over free cells.

    Works on the raw layout so it shares no code with the world builder.
    """
    dist = {source: 0}
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (r + dr, c + dc)
            if 0 <= nb[0] < layout.height and 0 <= nb[1] < layout.width \
                    and nb not in layout.walls and nb not in dist:
                dist[nb] = dist[(r, c)] + 1
                queue.append(nb)
    return dist


def closed_form_task_values(env, goal_cells, goal_reward=2.0, step=-0.1, other=-0.1):
    """V*(s) for a four-rooms task: walk to the best goal or stop where you are."""
    out = np.empty(env.state_count)
    dists = [layout_bfs(env.layout, g) for g in goal_cells]
    for s, cell in enumerate(env.cells):
        best = other
        for d in dists:
            if cell in d:
                best = max(best, goal_reward + step * d[cell])
        out[s] = best
    return out


@pytest.fixture(scope="session")
def four_rooms():
    return four_rooms_build()


@pytest.fixture(scope="session")
def fr_oracle(four_rooms):
    return vi_wvf(four_rooms.world, four_rooms.task)


@pytest.fixture(scope="session")
def fr_q(four_rooms):
    return vi_task(four_rooms.world, four_rooms.task)


@pytest.fixture(scope="session")
def fr_learned(four_rooms):
    return learn_wvf(four_rooms, CANONICAL)


@pytest.fixture(scope="session")
def fr_short_learned(four_rooms):
    # deliberately under-trained: full-scope dynamics inference makes mistakes
    return learn_wvf(four_rooms, LearnConfig(episodes=1000, seed=0))[0]


@pytest.fixture(scope="session")
def pickup():
    return pickup_grid_build()


@pytest.fixture(scope="session")
def pickup_tables(pickup):
    w = pickup.world
    tasks = {n: attribute_task(pickup, n) for n in ("blue", "square")}
    return tasks, {n: vi_wvf(w, t) for n, t in tasks.items()}


@pytest.fixture(scope="session")
def pickup_ctx(pickup):
    from wvf.algebra import AlgebraContext
    return AlgebraContext.from_oracle(pickup.world)
