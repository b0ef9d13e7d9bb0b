"""Tabular Q-learning of world value functions with a growing goal buffer.

Every observed transition updates the values of *all* goals currently in the
buffer, with the wrong-goal penalty substituted on terminal transitions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tables import WVFTable
from .world import ExtendedRewardConfig, GoalBuffer


@dataclass(frozen=True)
class LearnConfig:
    alpha: float = 0.5
    epsilon: float = 0.3
    episodes: int = 50_000
    max_steps: int = 100
    gamma: float = 1.0
    seed: int = 0
    penalty: float | None = None
    init_value: float = 0.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.episodes < 1 or self.max_steps < 1:
            raise ValueError("episodes and max_steps must be positive")


@dataclass
class LearningCurve:
    returns: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    buffer_sizes: list = field(default_factory=list)
    visits: np.ndarray | None = None

    def visited_states(self) -> np.ndarray:
        return np.flatnonzero(self.visits.sum(axis=1) > 0)

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode", "return", "steps", "buffer_size"])
            for i, (ret, n, b) in enumerate(zip(self.returns, self.steps, self.buffer_sizes)):
                w.writerow([i, repr(float(ret)), n, b])
        return path


def td_update(values, s, goal, a, rbar, s_next, absorbing, alpha, gamma=1.0):
    """Move Q(s, goal, a) a step ``alpha`` toward ``rbar + gamma * max_a' Q(s', goal, a')``.

    ``values`` is an (S, G, A) array or a :class:`WVFTable` and is modified in
    place; ``goal`` may be a column index or an index array (one update per
    column).  Returns the updated entries.
    """
    q = values.values if isinstance(values, WVFTable) else values
    future = 0.0 if absorbing else gamma * q[s_next, goal, :].max(axis=-1)
    q[s, goal, a] += alpha * (rbar + future - q[s, goal, a])
    return q[s, goal, a]


def sample_goal(buffer: GoalBuffer, rng):
    """Uniform draw from the buffer, or None while it is empty."""
    if not len(buffer):
        return None
    goals = buffer.as_array()
    return int(goals[rng.integers(len(goals))])


def learn_wvf(env, config: LearnConfig = LearnConfig()):
    """Learn a WVF for ``env.task`` from interaction.

    Returns ``(table, buffer, curve)``.  The table's goal columns are the
    buffer's goals in ascending state order.
    """
    world = env.world
    S, A = world.state_count, world.action_count
    penalty = ExtendedRewardConfig.for_world(world, config.penalty).min_penalty
    rng = np.random.default_rng(config.seed)
    q = np.full((S, S, A), float(config.init_value))
    buffer = GoalBuffer()
    goal_ids = np.empty(0, dtype=np.int64)
    curve = LearningCurve(visits=np.zeros((S, A), dtype=np.int64))
    nxt, absorbing_tab = world.next_state, world.absorbing
    reward_tab = env.task.reward_table()

    for _ in range(config.episodes):
        s = int(env.start_states[rng.integers(len(env.start_states))])
        g = sample_goal(buffer, rng)
        ret, steps = 0.0, 0
        for _ in range(config.max_steps):
            if g is None or rng.random() < config.epsilon:
                a = int(rng.integers(A))
            else:
                a = int(np.argmax(q[s, g]))
            s_next, absorbing = int(nxt[s, a]), bool(absorbing_tab[s, a])
            r = float(reward_tab[s, a])
            curve.visits[s, a] += 1
            ret += r
            steps += 1
            if absorbing and buffer.add(s):
                goal_ids = buffer.as_array()
            if goal_ids.size:
                rbar = np.where(absorbing & (goal_ids != s), penalty, r)
                td_update(q, s, goal_ids, a, rbar, s_next, absorbing, config.alpha, config.gamma)
            if absorbing:
                break
            s = s_next
        curve.returns.append(ret)
        curve.steps.append(steps)
        curve.buffer_sizes.append(len(buffer))

    goals = buffer.sorted()
    meta = {"task": env.task.name, "penalty": float(penalty), "discount": float(config.gamma),
            "episodes": config.episodes, "seed": config.seed, "alpha": config.alpha,
            "epsilon": config.epsilon, "source": "learned"}
    return WVFTable(q[:, goals, :].copy(), goals, meta), buffer, curve
