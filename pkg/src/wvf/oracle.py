"""Exact value iteration for task and world value functions."""
from __future__ import annotations

import math

import numpy as np

from .grids import bfs_distances
from .tables import QTable, WVFTable
from .world import DomainError, TaskSpec, WorldSpec, default_min_penalty, extended_reward_table


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"value iteration did not converge in {sweeps} sweeps (residual {residual:.3e})")
        self.residual = residual
        self.sweeps = sweeps


def sweep_cap(world: WorldSpec, penalty: float) -> int:
    """10 * |S| sweeps, plus the sweeps a step cost needs to walk values down
    to the penalty (the values of unreachable goals fall one step per sweep)."""
    live = world.background_reward[~world.absorbing]
    extra = 0
    if live.size and live.max() < 0:
        extra = int(math.ceil(abs(penalty) / -live.max())) + 1
    return 10 * world.state_count + extra


def _check(penalty, world, discount, tolerance):
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if not 0 < discount <= 1:
        raise ValueError("discount must lie in (0, 1]")
    if not penalty < world.reward_min:
        raise DomainError(f"penalty {penalty} must be below reward_min {world.reward_min}")


def wvf_backup(world: WorldSpec, rbar: np.ndarray, values: np.ndarray, discount: float = 1.0) -> np.ndarray:
    """One application of the goal-conditioned Bellman optimality operator.

    ``rbar`` and ``values`` have shape (S, G, A); returns the backed-up table.
    """
    cont = discount * (~world.absorbing)
    v = values.max(axis=2)  # (S, G)
    succ = v[world.next_state].transpose(0, 2, 1)  # (S, G, A)
    return rbar + cont[:, None, :] * succ


def task_backup(world: WorldSpec, reward: np.ndarray, values: np.ndarray, discount: float = 1.0) -> np.ndarray:
    cont = discount * (~world.absorbing)
    return reward + cont * values.max(axis=1)[world.next_state]


def _iterate(backup, shape, tolerance, cap):
    q = np.zeros(shape)
    residual = math.inf
    for sweep in range(1, cap + 1):
        q_next = backup(q)
        residual = float(np.abs(q_next - q).max()) if q.size else 0.0
        q = q_next
        if residual <= tolerance:
            return q, sweep, residual
    raise ConvergenceError(residual, cap)


def vi_wvf(world: WorldSpec, task: TaskSpec, goals=None, penalty: float | None = None,
           discount: float = 1.0, tolerance: float = 1e-9, max_sweeps: int | None = None) -> WVFTable:
    """Optimal world value function of ``task`` by synchronous value iteration.

    Args:
        goals: goal states; defaults to every state with a terminal action.
        penalty: wrong-goal termination reward; defaults to
            :func:`~wvf.world.default_min_penalty`.
    """
    if goals is None:
        goals = world.terminal_states()
    goals = np.asarray(goals, dtype=np.int64)
    if goals.size == 0:
        raise DomainError("goal set is empty")
    if penalty is None:
        penalty = default_min_penalty(world)
    _check(penalty, world, discount, tolerance)
    rbar = extended_reward_table(world, task, goals, penalty)
    cap = max_sweeps or sweep_cap(world, penalty)
    q, sweeps, residual = _iterate(lambda v: wvf_backup(world, rbar, v, discount), rbar.shape, tolerance, cap)
    meta = {"task": task.name, "penalty": float(penalty), "discount": float(discount),
            "sweeps": sweeps, "residual": residual, "source": "oracle"}
    return WVFTable(q, goals, meta)


def vi_task(world: WorldSpec, task: TaskSpec, discount: float = 1.0, tolerance: float = 1e-9,
            max_sweeps: int | None = None) -> QTable:
    """Optimal task action values Q*(s, a)."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if not 0 < discount <= 1:
        raise ValueError("discount must lie in (0, 1]")
    reward = task.reward_table()
    cap = max_sweeps or 10 * world.state_count
    q, sweeps, residual = _iterate(lambda v: task_backup(world, reward, v, discount), reward.shape, tolerance, cap)
    return QTable(q, {"task": task.name, "discount": float(discount), "sweeps": sweeps,
                      "residual": residual, "source": "oracle"})


def reachable_goals(world: WorldSpec, s: int, goals=None) -> set[int]:
    """Goals reachable from ``s`` by non-terminal moves (``s`` itself included)."""
    world.check(s)
    if goals is None:
        goals = world.terminal_states()
    reach = bfs_distances(world, s) >= 0
    return {int(g) for g in goals if reach[g]}


def reachability(world: WorldSpec, goals) -> np.ndarray:
    """Boolean (S, G) matrix: goal column j reachable from state s."""
    goals = np.asarray(goals, dtype=np.int64)
    out = np.zeros((world.state_count, goals.size), dtype=bool)
    for s in range(world.state_count):
        out[s] = (bfs_distances(world, s) >= 0)[goals]
    return out
