"""Tabular world/task data model and the extended (goal-penalised) reward.

A world is a deterministic MDP skeleton shared by a family of tasks.  Tasks
differ only in the reward they pay on terminal transitions.  All tables are
dense numpy arrays indexed by state and action ordinals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised for out-of-range identifiers or inconsistent tables."""


def _frozen(arr, dtype=None) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class WorldSpec:
    """Deterministic background MDP.

    Attributes:
        next_state: (S, A) int array, successor of each state-action pair.
        absorbing: (S, A) bool array, True where the transition is terminal.
        background_reward: (S, A) reward paid on non-terminal transitions.
        reward_min, reward_max: bounds on every emitted reward.
    """

    next_state: np.ndarray
    absorbing: np.ndarray
    background_reward: np.ndarray
    reward_min: float
    reward_max: float
    action_names: tuple = ()

    def __post_init__(self):
        nxt = _frozen(self.next_state, np.int64)
        absorbing = _frozen(self.absorbing, bool)
        bg = _frozen(self.background_reward, float)
        if nxt.ndim != 2 or nxt.shape[0] < 1 or nxt.shape[1] < 1:
            raise DomainError(f"transition table must be (S, A), got shape {nxt.shape}")
        if absorbing.shape != nxt.shape or bg.shape != nxt.shape:
            raise DomainError("transition, absorbing and background tables differ in shape")
        if nxt.min() < 0 or nxt.max() >= nxt.shape[0]:
            raise DomainError("transition table points outside the state set")
        if self.reward_min > self.reward_max:
            raise DomainError(f"reward_min {self.reward_min} > reward_max {self.reward_max}")
        live = bg[~absorbing]
        if live.size and (live.min() < self.reward_min or live.max() > self.reward_max):
            raise DomainError("background reward outside [reward_min, reward_max]")
        object.__setattr__(self, "next_state", nxt)
        object.__setattr__(self, "absorbing", absorbing)
        object.__setattr__(self, "background_reward", bg)
        object.__setattr__(self, "reward_min", float(self.reward_min))
        object.__setattr__(self, "reward_max", float(self.reward_max))
        if not self.action_names:
            object.__setattr__(self, "action_names", tuple(str(a) for a in range(nxt.shape[1])))

    @property
    def state_count(self) -> int:
        return self.next_state.shape[0]

    @property
    def action_count(self) -> int:
        return self.next_state.shape[1]

    def transition(self, s: int, a: int) -> tuple[int, bool]:
        self.check(s, a)
        return int(self.next_state[s, a]), bool(self.absorbing[s, a])

    def terminal_states(self) -> np.ndarray:
        """States with at least one absorbing action, i.e. the possible goals."""
        return np.flatnonzero(self.absorbing.any(axis=1))

    def check(self, s: int, a: int | None = None) -> None:
        if not 0 <= int(s) < self.state_count:
            raise DomainError(f"unknown state {s}")
        if a is not None and not 0 <= int(a) < self.action_count:
            raise DomainError(f"unknown action {a}")

    def task(self, name: str, rewards, default: float | None = None) -> "TaskSpec":
        """Build a task from per-state terminal rewards.

        ``rewards`` is either a length-S vector or a mapping state -> reward;
        missing states get ``default`` (the background step reward's lowest value
        when omitted).  The reward applies to every absorbing action of a state.
        """
        if default is None:
            default = self.reward_min
        if isinstance(rewards, dict):
            per_state = np.full(self.state_count, float(default))
            for s, r in rewards.items():
                self.check(s)
                per_state[s] = r
        else:
            per_state = np.asarray(rewards, dtype=float)
            if per_state.shape != (self.state_count,):
                raise DomainError(f"expected {self.state_count} state rewards, got {per_state.shape}")
        table = np.where(self.absorbing, per_state[:, None], np.nan)
        return TaskSpec(name, table, self)


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """Task-specific terminal reward over (state, action).

    Entries for non-terminal pairs are NaN: they are never consulted.
    """

    name: str
    terminal_reward: np.ndarray
    world: WorldSpec = field(repr=False)

    def __post_init__(self):
        tr = _frozen(self.terminal_reward, float)
        w = self.world
        if tr.shape != w.next_state.shape:
            raise DomainError(f"terminal reward shape {tr.shape} != world shape {w.next_state.shape}")
        if np.isnan(tr[w.absorbing]).any():
            raise DomainError(f"task {self.name!r} leaves a terminal transition without reward")
        vals = tr[w.absorbing]
        if vals.size and (vals.min() < w.reward_min or vals.max() > w.reward_max):
            raise DomainError(f"task {self.name!r} rewards outside [{w.reward_min}, {w.reward_max}]")
        tr = np.where(w.absorbing, tr, np.nan)
        tr.setflags(write=False)
        object.__setattr__(self, "terminal_reward", tr)

    def goal_rewards(self) -> np.ndarray:
        """Best terminal reward available at each state (NaN if none)."""
        out = np.full(self.world.state_count, np.nan)
        has = self.world.absorbing.any(axis=1)
        out[has] = np.nanmax(self.terminal_reward[has], axis=1)
        return out

    def reward_table(self) -> np.ndarray:
        """Full task reward R_M(s, a) as an (S, A) table."""
        w = self.world
        return np.where(w.absorbing, self.terminal_reward, w.background_reward)


def default_min_penalty(world: WorldSpec) -> float:
    """Penalty for terminating at an unintended goal.

    (reward_min - reward_max) * |S| lower-bounds the return gap between any two
    non-repeating episodes, so a wrong termination is never worth it.
    """
    return (world.reward_min - world.reward_max) * world.state_count


@dataclass(frozen=True)
class ExtendedRewardConfig:
    min_penalty: float
    reward_min: float

    def __post_init__(self):
        if not self.min_penalty < self.reward_min:
            raise DomainError(
                f"min_penalty {self.min_penalty} must be strictly below reward_min {self.reward_min}"
            )

    @classmethod
    def for_world(cls, world: WorldSpec, override: float | None = None) -> "ExtendedRewardConfig":
        penalty = default_min_penalty(world) if override is None else float(override)
        return cls(penalty, world.reward_min)


def compose_task_reward(world: WorldSpec, task: TaskSpec, s: int, a: int, s_next: int, absorbing: bool) -> float:
    world.check(s, a)
    world.check(s_next)
    if absorbing:
        return float(task.terminal_reward[s, a])
    return float(world.background_reward[s, a])


def extended_reward(world: WorldSpec, task: TaskSpec, s: int, g: int, a: int, s_next: int,
                    absorbing: bool, min_penalty: float | None = None) -> float:
    world.check(g)
    if min_penalty is None:
        min_penalty = default_min_penalty(world)
    if absorbing and g != s:
        world.check(s, a)
        return float(min_penalty)
    return compose_task_reward(world, task, s, a, s_next, absorbing)


def extended_reward_table(world: WorldSpec, task: TaskSpec, goals, min_penalty: float) -> np.ndarray:
    """Vectorised extended reward, shape (S, G, A)."""
    goals = np.asarray(goals, dtype=np.int64)
    reward = task.reward_table()
    wrong_goal = goals[None, :] != np.arange(world.state_count)[:, None]
    penalised = world.absorbing[:, None, :] & wrong_goal[:, :, None]
    return np.where(penalised, min_penalty, reward[:, None, :])


class GoalBuffer:
    """Growing set of states where a terminal transition has been seen.

    Iteration follows insertion order so that sampling is reproducible.
    """

    def __init__(self, goals=()):
        self._order: list[int] = []
        self._members: set[int] = set()
        for g in goals:
            self.add(g)

    def add(self, g: int) -> bool:
        g = int(g)
        if g in self._members:
            return False
        self._members.add(g)
        self._order.append(g)
        return True

    def __contains__(self, g) -> bool:
        return int(g) in self._members

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self):
        return iter(self._order)

    def as_array(self) -> np.ndarray:
        return np.array(self._order, dtype=np.int64)

    def sorted(self) -> np.ndarray:
        return np.sort(self.as_array())

    def __repr__(self):
        return f"GoalBuffer({sorted(self._members)})"
