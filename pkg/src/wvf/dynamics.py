"""Reading the transition function back out of a world value function.

For a deterministic world, the successor of (s, a) is the candidate s' whose
values best satisfy Q(s, g, a) = rbar(s, g, a, s') + V(s', g) across goals g.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grids import neighbourhood
from .tables import WVFTable
from .world import extended_reward_table


def infer_transition(table: WVFTable, rbar: np.ndarray, s: int, a: int, candidates, goal_scope):
    """Best-fitting successor of (s, a) and its summed squared residual.

    Args:
        rbar: (S, G, A) extended reward aligned with ``table``'s goal columns.
        candidates: states that may be the successor.
        goal_scope: goal states whose Bellman equations are used; states that
            are not goals of the table are ignored.
    """
    cands = np.array(sorted(int(c) for c in candidates), dtype=np.int64)
    if not cands.size:
        raise ValueError("no candidate successors")
    scope = set(int(g) for g in goal_scope)
    cols = np.array([j for j, g in enumerate(table.goals) if int(g) in scope], dtype=np.int64)
    if not cols.size:
        raise ValueError("goal scope has no goals in common with the table")
    v = table.state_values()
    target = table.values[s, cols, a] - rbar[s, cols, a]
    resid = ((target[None, :] - v[np.ix_(cands, cols)]) ** 2).sum(axis=1)
    best = int(np.argmin(resid))
    return int(cands[best]), float(resid[best])


@dataclass
class InferredModel:
    """One-hot successor estimates; ``successor`` is -1 where not queried."""

    successor: np.ndarray
    residual: np.ndarray
    absorbing: np.ndarray
    scope: str
    correct: np.ndarray | None = None

    @property
    def queried(self) -> np.ndarray:
        return self.successor >= 0

    @property
    def accuracy(self) -> float:
        if self.correct is None:
            raise ValueError("no ground truth attached")
        return float(self.correct[self.queried].mean())

    def write_csv(self, path, action_names=None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = ["state", "action", "successor", "residual"]
            if self.correct is not None:
                header.append("correct")
            w.writerow(header)
            for s, a in zip(*np.nonzero(self.queried)):
                act = action_names[a] if action_names else int(a)
                row = [int(s), act, int(self.successor[s, a]), repr(float(self.residual[s, a]))]
                if self.correct is not None:
                    row.append(int(self.correct[s, a]))
                w.writerow(row)
        return path


def infer_model(table: WVFTable, env, radius: int | None = None, task=None, states=None) -> InferredModel:
    """Infer the successor of every non-terminal (s, a).

    ``radius=None`` searches all states and uses all goals; an integer
    restricts both candidates and goals to the wall-aware neighbourhood of s.
    ``task`` defaults to the environment's task and must be the task the
    table was learned on.
    """
    world = env.world
    task = env.task if task is None else task
    penalty = table.metadata.get("penalty")
    if penalty is None:
        from .world import default_min_penalty
        penalty = default_min_penalty(world)
    rbar = extended_reward_table(world, task, table.goals, penalty)
    S, A = world.state_count, world.action_count
    successor = np.full((S, A), -1, dtype=np.int64)
    residual = np.full((S, A), np.nan)
    everything = range(S)
    for s in (range(S) if states is None else states):
        scope = everything if radius is None else neighbourhood(env, s, radius)
        for a in range(A):
            if world.absorbing[s, a]:
                continue
            successor[s, a], residual[s, a] = infer_transition(table, rbar, s, a, scope, scope)
    correct = np.where(successor >= 0, successor == world.next_state, False)
    return InferredModel(successor, residual, world.absorbing.copy(),
                         "full" if radius is None else f"radius={radius}", correct)


@dataclass
class Trajectory:
    states: list
    actions: list
    values: list
    terminated: bool
    truncated: bool = False

    @property
    def normalised_values(self) -> list:
        lo, hi = min(self.values), max(self.values)
        if hi == lo:
            return [1.0] * len(self.values)
        return [(v - lo) / (hi - lo) for v in self.values]


def imagined_rollout(model: InferredModel, table: WVFTable, start: int, goal: int | None = None,
                     horizon: int = 100) -> Trajectory:
    """Greedy rollout that steps the inferred model instead of the world.

    ``goal=None`` follows the task policy (max over goals); otherwise the
    goal-conditioned policy for ``goal``.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    q = table.values.max(axis=1) if goal is None else table.for_goal(goal)
    v = q.max(axis=1)
    s = int(start)
    states, actions, values = [s], [], [float(v[s])]
    for _ in range(horizon):
        a = int(q[s].argmax())
        actions.append(a)
        if model.absorbing[s, a]:
            return Trajectory(states, actions, values, True)
        nxt = int(model.successor[s, a])
        if nxt < 0:
            return Trajectory(states, actions, values, False, truncated=True)
        s = nxt
        states.append(s)
        values.append(float(v[s]))
    return Trajectory(states, actions, values, False)
