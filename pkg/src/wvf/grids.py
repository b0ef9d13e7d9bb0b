"""Deterministic gridworlds: the four-rooms navigation world and a tabular
object-pickup world.

States are the free cells of a layout, numbered in row-major order.  Both
worlds share one convention: bumping into a wall leaves the agent in place,
and the episode only ends through the terminal action (Done or PickUp).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import expr as bexpr
from .world import DomainError, TaskSpec, WorldSpec

MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1))
MOVE_NAMES = ("North", "South", "East", "West")
FOUR_ROOMS_ACTIONS = MOVE_NAMES + ("Done",)
PICKUP_ACTIONS = MOVE_NAMES + ("PickUp",)

OBJECT_CHARS = {
    "B": ("blue", "square"),
    "b": ("blue", "circle"),
    "Q": ("beige", "square"),
    "q": ("beige", "circle"),
}
ATTRIBUTES = ("blue", "beige", "square", "circle")
MAP_HEADER = "WVFMAP 1"


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class GridObject:
    cell: tuple[int, int]
    colour: str
    shape: str

    @property
    def char(self) -> str:
        for ch, attrs in OBJECT_CHARS.items():
            if attrs == (self.colour, self.shape):
                return ch
        raise LayoutError(f"no map character for {self.colour} {self.shape}")


@dataclass(frozen=True)
class GridLayout:
    width: int
    height: int
    walls: frozenset = frozenset()
    hallways: frozenset = frozenset()
    goals: frozenset = frozenset()
    objects: tuple = ()

    def __post_init__(self):
        bad = []
        for name in ("walls", "hallways", "goals"):
            bad += [(name, c) for c in getattr(self, name) if not self.in_bounds(c)]
        bad += [("objects", o.cell) for o in self.objects if not self.in_bounds(o.cell)]
        bad += [("objects", o.cell) for o in self.objects if o.cell in self.walls]
        bad += [("goals", c) for c in self.goals if c in self.walls]
        bad += [("hallways", c) for c in self.hallways if c in self.walls]
        if bad:
            raise LayoutError("invalid cells: " + ", ".join(f"{k} {c}" for k, c in bad))

    def in_bounds(self, cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and cell not in self.walls

    def free_cells(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.height) for c in range(self.width) if (r, c) not in self.walls]


def parse_map(text: str) -> GridLayout:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != MAP_HEADER:
        raise LayoutError(f"map must start with {MAP_HEADER!r}")
    try:
        width, height = (int(v) for v in lines[1].split())
    except (IndexError, ValueError):
        raise LayoutError("second line must be 'width height'") from None
    rows = lines[2:]
    if len(rows) != height:
        raise LayoutError(f"expected {height} rows, found {len(rows)}")
    walls, halls, goals, objects, unknown = set(), set(), set(), [], []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise LayoutError(f"row {r} has width {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch == "#":
                walls.add((r, c))
            elif ch == "H":
                halls.add((r, c))
            elif ch == "G":
                goals.add((r, c))
            elif ch in OBJECT_CHARS:
                objects.append(GridObject((r, c), *OBJECT_CHARS[ch]))
            elif ch != ".":
                unknown.append(((r, c), ch))
    if unknown:
        raise LayoutError("unknown map characters: " + ", ".join(f"{ch!r} at {cell}" for cell, ch in unknown))
    return GridLayout(width, height, frozenset(walls), frozenset(halls), frozenset(goals), tuple(objects))


def format_map(layout: GridLayout) -> str:
    grid = [["." for _ in range(layout.width)] for _ in range(layout.height)]
    for r, c in layout.walls:
        grid[r][c] = "#"
    for r, c in layout.hallways:
        grid[r][c] = "H"
    for r, c in layout.goals:
        grid[r][c] = "G"
    for o in layout.objects:
        grid[o.cell[0]][o.cell[1]] = o.char
    body = "\n".join("".join(row) for row in grid)
    return f"{MAP_HEADER}\n{layout.width} {layout.height}\n{body}\n"


def load_map(path_or_name) -> GridLayout:
    """Load a map file, or a bundled map by bare name (e.g. ``"four_rooms"``)."""
    p = Path(path_or_name)
    if not p.suffix and not p.exists():
        res = resources.files("wvf") / "maps" / f"{path_or_name}.txt"
        if not res.is_file():
            raise FileNotFoundError(f"no bundled map named {path_or_name!r}")
        return parse_map(res.read_text())
    return parse_map(p.read_text())


@dataclass(frozen=True)
class EnvState:
    agent_cell: tuple[int, int]
    terminated: bool = False


@dataclass(frozen=True, eq=False)
class GridEnv:
    """A layout, its world dynamics, and the task currently being paid out."""

    kind: str
    layout: GridLayout
    world: WorldSpec
    task: TaskSpec
    cells: tuple
    start_states: np.ndarray
    step_reward: float = -0.1
    goal_reward: float = 2.0
    non_goal_reward: float = -0.1
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index.update({cell: i for i, cell in enumerate(self.cells)})

    @property
    def state_count(self) -> int:
        return self.world.state_count

    @property
    def action_count(self) -> int:
        return self.world.action_count

    @property
    def terminal_action(self) -> int:
        return len(MOVES)

    def state_of(self, cell) -> int:
        try:
            return self._index[tuple(cell)]
        except KeyError:
            raise DomainError(f"cell {cell} is not a free cell") from None

    def cell_of(self, s: int) -> tuple[int, int]:
        return self.cells[s]

    def with_task(self, task: TaskSpec) -> "GridEnv":
        if task.world is not self.world:
            raise DomainError(f"task {task.name!r} belongs to a different world")
        return replace(self, task=task, _index=self._index)

    def task_from_cells(self, name: str, cells) -> TaskSpec:
        """Binary task paying ``goal_reward`` for terminating on any of ``cells``."""
        cells = [tuple(c) for c in cells]
        bad = [c for c in cells if not self.layout.is_free(c)]
        if bad:
            raise LayoutError(f"task {name!r} goal cells not free: {bad}")
        return self.world.task(name, {self.state_of(c): self.goal_reward for c in cells},
                               default=self.non_goal_reward)

    def reset(self, rng) -> EnvState:
        s = int(self.start_states[rng.integers(len(self.start_states))])
        return EnvState(self.cells[s])


def _build_world(layout: GridLayout, terminal_states, step_reward, rmin, rmax, action_names):
    cells = tuple(layout.free_cells())
    index = {c: i for i, c in enumerate(cells)}
    S, A = len(cells), len(MOVES) + 1
    nxt = np.zeros((S, A), dtype=np.int64)
    absorbing = np.zeros((S, A), dtype=bool)
    for s, (r, c) in enumerate(cells):
        for a, (dr, dc) in enumerate(MOVES):
            target = (r + dr, c + dc)
            nxt[s, a] = index[target] if layout.is_free(target) else s
        nxt[s, -1] = s
        absorbing[s, -1] = s in terminal_states
    bg = np.full((S, A), float(step_reward))
    world = WorldSpec(nxt, absorbing, bg, rmin, rmax, action_names)
    return world, cells


def _bounds(*rewards):
    return min(rewards), max(rewards)


def four_rooms_build(layout: GridLayout | str = "four_rooms", goal_cells=None, *,
                     step_reward: float = -0.1, goal_reward: float = 2.0,
                     non_goal_reward: float = -0.1, name: str = "task") -> GridEnv:
    """Navigation world with actions North/South/East/West/Done.

    Done terminates at any cell.  The task pays ``goal_reward`` at ``goal_cells``
    (default: the map's ``G`` cells) and ``non_goal_reward`` elsewhere.
    """
    if isinstance(layout, (str, Path)):
        layout = load_map(layout)
    goals = sorted(layout.goals if goal_cells is None else {tuple(c) for c in goal_cells})
    bad = [c for c in goals if not layout.is_free(c)]
    if bad:
        raise LayoutError(f"goal cells not on free cells: {bad}")
    free = layout.free_cells()
    world, cells = _build_world(layout, set(range(len(free))), step_reward,
                                *_bounds(step_reward, goal_reward, non_goal_reward), FOUR_ROOMS_ACTIONS)
    placeholder = world.task(name, {}, default=non_goal_reward)
    env = GridEnv("four_rooms", layout, world, placeholder, cells, np.arange(world.state_count),
                  step_reward, goal_reward, non_goal_reward)
    return env.with_task(env.task_from_cells(name, goals))


def pickup_grid_build(layout: GridLayout | str = "pickup", seed: int | None = None, task: str | None = None, *,
                      step_reward: float = -0.1, goal_reward: float = 2.0,
                      non_goal_reward: float = -0.1) -> GridEnv:
    """Object-collection world with actions North/South/East/West/PickUp.

    PickUp on an object ends the episode; elsewhere it is a costed no-op.
    With ``seed`` given, the layout's objects are re-placed on random free
    cells (fixed for the lifetime of the environment).
    """
    if isinstance(layout, (str, Path)):
        layout = load_map(layout)
    if not layout.objects:
        raise LayoutError("pickup world needs at least one object")
    if seed is not None:
        rng = np.random.default_rng(seed)
        free = [c for c in layout.free_cells() if c not in layout.goals]
        picks = rng.choice(len(free), size=len(layout.objects), replace=False)
        objects = tuple(GridObject(free[i], o.colour, o.shape) for i, o in zip(picks, layout.objects))
        layout = replace(layout, objects=objects)
    cells = layout.free_cells()
    index = {c: i for i, c in enumerate(cells)}
    terminal = {index[o.cell] for o in layout.objects}
    world, cells = _build_world(layout, terminal, step_reward,
                                *_bounds(step_reward, goal_reward, non_goal_reward), PICKUP_ACTIONS)
    starts = np.array([s for s in range(world.state_count) if s not in terminal], dtype=np.int64)
    placeholder = world.task("none", {}, default=non_goal_reward)
    env = GridEnv("pickup", layout, world, placeholder, cells, starts, step_reward, goal_reward, non_goal_reward)
    if task is not None:
        env = env.with_task(attribute_task(env, task))
    return env


def attribute_task(env: GridEnv, expression: str, name: str | None = None) -> TaskSpec:
    """Pickup task defined by a Boolean predicate over object attributes.

    The predicate is evaluated on binary rewards with max/min/negation, so
    ``attribute_task(env, "blue | square")`` pays ``goal_reward`` on every
    object that is blue or square.
    """
    if env.kind != "pickup":
        raise DomainError("attribute tasks need a pickup world")
    hi, lo = env.goal_reward, env.non_goal_reward

    def leaf(attr):
        if attr not in ATTRIBUTES:
            raise bexpr.ExpressionError(f"unknown attribute {attr!r}; expected one of {ATTRIBUTES}")
        return {env.state_of(o.cell): (hi if attr in (o.colour, o.shape) else lo) for o in env.layout.objects}

    rewards = bexpr.evaluate(
        expression, leaf,
        lambda x, y: {k: max(x[k], y[k]) for k in x},
        lambda x, y: {k: min(x[k], y[k]) for k in x},
        lambda x: {k: (hi + lo) - v for k, v in x.items()},
    )
    return env.world.task(name or expression, rewards, default=lo)


def hallways_task(env: GridEnv) -> TaskSpec:
    return env.task_from_cells("hallways", sorted(env.layout.hallways))


def bottom_row_task(env: GridEnv) -> TaskSpec:
    bottom = max(r for r, _ in env.cells)
    return env.task_from_cells("bottom_row", [c for c in env.cells if c[0] == bottom])


def env_step(env: GridEnv, state: EnvState, action: int) -> tuple[EnvState, float, bool]:
    if state.terminated:
        raise RuntimeError("cannot step a terminated episode; reset first")
    s = env.state_of(state.agent_cell)
    s_next, absorbing = env.world.transition(s, action)
    if absorbing:
        reward = float(env.task.terminal_reward[s, action])
    else:
        reward = float(env.world.background_reward[s, action])
    return EnvState(env.cells[s_next], absorbing), reward, absorbing


def neighbourhood(env: GridEnv, s: int, radius: int) -> set[int]:
    """States within ``radius`` movement steps of ``s`` (walls respected)."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    dist = bfs_distances(env.world, s, limit=radius)
    return {int(x) for x in np.flatnonzero(dist >= 0)}


def bfs_distances(world: WorldSpec, source: int, limit: int | None = None) -> np.ndarray:
    """Graph distance from ``source`` over non-terminal transitions (-1 = unreached)."""
    dist = np.full(world.state_count, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        s = queue.popleft()
        if limit is not None and dist[s] >= limit:
            continue
        for a in range(world.action_count):
            if world.absorbing[s, a]:
                continue
            t = int(world.next_state[s, a])
            if dist[t] < 0:
                dist[t] = dist[s] + 1
                queue.append(t)
    return dist


def distances_to(world: WorldSpec, targets) -> np.ndarray:
    """Distance from every state to the nearest of ``targets`` (-1 = unreachable)."""
    S = world.state_count
    # reverse graph BFS
    preds = [[] for _ in range(S)]
    for s in range(S):
        for a in range(world.action_count):
            if not world.absorbing[s, a]:
                preds[int(world.next_state[s, a])].append(s)
    dist = np.full(S, -1, dtype=np.int64)
    queue = deque()
    for t in targets:
        dist[t] = 0
        queue.append(int(t))
    while queue:
        t = queue.popleft()
        for s in preds[t]:
            if dist[s] < 0:
                dist[s] = dist[t] + 1
                queue.append(s)
    return dist
