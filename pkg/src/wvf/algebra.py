"""Things computed from a world value function.

* task values and policy by maximising over goals,
* mastery: do the greedy goal-conditioned policies reach every goal,
* zero-shot values/policies for a new task from its terminal rewards,
* Boolean composition of WVFs (max / min / negation about SUP + INF).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import expr as bexpr
from .oracle import reachability, vi_wvf
from .tables import QTable, WVFTable
from .world import DomainError, TaskSpec, WorldSpec


class UsageError(RuntimeError):
    pass


def recover_task(table: WVFTable) -> QTable:
    if table.values.shape[1] == 0:
        raise DomainError("table has no goals")
    meta = {k: v for k, v in table.metadata.items() if k in ("task", "discount", "source")}
    return QTable(table.values.max(axis=1), meta)


def greedy_rollout(world: WorldSpec, policy, start: int, horizon: int):
    """Follow a deterministic policy from ``start`` in the true world.

    ``policy`` is an (S,) action array or an (S, A) value table (greedy,
    lowest ordinal on ties).  Returns ``(states, actions, terminated)`` where
    ``states`` holds every visited state, the last being where the episode
    ended or was cut off.
    """
    policy = np.asarray(policy)
    if policy.ndim == 2:
        policy = policy.argmax(axis=1)
    s = int(start)
    states, actions = [s], []
    for _ in range(horizon):
        a = int(policy[s])
        actions.append(a)
        if world.absorbing[s, a]:
            return states, actions, True
        s = int(world.next_state[s, a])
        states.append(s)
    return states, actions, False


@dataclass
class MasteryReport:
    """Greedy goal-reaching outcome for every (start, goal) pair.

    Arrays are (S, G).  ``eligible`` marks pairs with start != goal and the
    goal reachable; only those count toward ``success_rate``.
    """

    goals: np.ndarray
    reached: np.ndarray
    steps: np.ndarray
    terminal_state: np.ndarray
    eligible: np.ndarray

    @property
    def pair_count(self) -> int:
        return int(self.eligible.sum())

    @property
    def success_rate(self) -> float:
        n = self.pair_count
        return float((self.reached & self.eligible).sum() / n) if n else 1.0


def mastery_eval(table: WVFTable, env, horizon: int | None = None) -> MasteryReport:
    world = env.world
    S, G = table.state_count, table.goals.size
    if horizon is None:
        horizon = 2 * S
    eligible = reachability(world, table.goals) & (np.arange(S)[:, None] != table.goals[None, :])
    reached = np.zeros((S, G), dtype=bool)
    steps = np.full((S, G), -1, dtype=np.int64)
    terminal = np.full((S, G), -1, dtype=np.int64)
    starts = np.arange(S)
    # all starts advance together, one goal column at a time
    for j, g in enumerate(table.goals):
        greedy = table.values[:, j, :].argmax(axis=1)
        s = starts.copy()
        live = np.ones(S, dtype=bool)
        for t in range(horizon):
            if not live.any():
                break
            a = greedy[s]
            ends = live & world.absorbing[s, a]
            terminal[ends, j] = s[ends]
            steps[ends, j] = t + 1
            live &= ~ends
            s = np.where(live, world.next_state[s, a], s)
        reached[:, j] = terminal[:, j] == g
    return MasteryReport(table.goals.copy(), reached, steps, terminal, eligible)


def _goal_terminal_reward(task: TaskSpec, goals) -> np.ndarray:
    best = task.goal_rewards()
    vals = best[goals]
    if np.isnan(vals).any():
        missing = [int(g) for g, v in zip(goals, vals) if np.isnan(v)]
        raise DomainError(f"task {task.name!r} has no terminal reward at goals {missing}")
    return vals


def zero_shot_values(table: WVFTable, new_task: TaskSpec) -> np.ndarray:
    """Estimated goal values of ``new_task`` from another task's WVF, shape (S, G).

    Each goal column is shifted by the difference between the new task's
    terminal reward at that goal and the table's own value of being there.
    """
    if new_task.world.state_count != table.state_count:
        raise DomainError("task and table are defined over different state sets")
    v = table.state_values()
    goal_cols = np.arange(table.goals.size)
    own = v[table.goals, goal_cols]
    shift = _goal_terminal_reward(new_task, table.goals) - own
    return v + shift[None, :]


def zero_shot_policy(table: WVFTable, values_est: np.ndarray) -> np.ndarray:
    """Per-state action: best estimated goal first, then the table's best action for it."""
    g_star = np.asarray(values_est).argmax(axis=1)
    return table.values[np.arange(table.state_count), g_star, :].argmax(axis=1)


@dataclass(eq=False)
class AlgebraContext:
    """WVFs of the SUP (all goals pay R_MAX) and INF (all pay R_MIN) tasks."""

    sup: WVFTable
    inf: WVFTable

    def __post_init__(self):
        if not self.sup.same_index(self.inf):
            raise DomainError("SUP and INF tables have different index maps")
        if (self.sup.values < self.inf.values - 1e-9).any():
            raise DomainError("SUP table must dominate INF table")

    @classmethod
    def from_oracle(cls, world: WorldSpec, goals=None, **vi_kwargs) -> "AlgebraContext":
        sup, inf = extreme_tasks(world)
        return cls(vi_wvf(world, sup, goals, **vi_kwargs), vi_wvf(world, inf, goals, **vi_kwargs))

    def negate(self, q: np.ndarray) -> np.ndarray:
        return affine_negation(q, self.sup.values, self.inf.values)


def affine_negation(q, sup, inf):
    """``(sup + inf) - q``, with entries equal to ``sup`` or ``inf`` mapped to
    the other extreme exactly so that rounding cannot break double negation."""
    out = (sup + inf) - q
    out = np.where(q == inf, sup, out)
    return np.where(q == sup, inf, out)


def extreme_tasks(world: WorldSpec) -> tuple[TaskSpec, TaskSpec]:
    S = world.state_count
    return (world.task("sup", np.full(S, world.reward_max)),
            world.task("inf", np.full(S, world.reward_min)))


CONSTANTS = {"sup": "sup", "inf": "inf", "SUP": "sup", "INF": "inf"}


def compose(expression, ctx: AlgebraContext | None, tables: dict) -> WVFTable:
    """Evaluate a Boolean expression over named WVFs entrywise.

    ``|`` is max, ``&`` is min and ``~q`` is ``(SUP + INF) - q``.  The names
    ``sup``/``inf`` refer to the context tables unless shadowed.
    """
    node = bexpr.parse(expression) if isinstance(expression, str) else expression
    ref = None

    def leaf(name):
        nonlocal ref
        if name in tables:
            t = tables[name]
        elif name in CONSTANTS and ctx is not None:
            t = getattr(ctx, CONSTANTS[name])
        else:
            raise DomainError(f"unknown table {name!r}")
        if ref is None:
            ref = t
        elif not ref.same_index(t):
            raise DomainError(f"table {name!r} has a different index map")
        return t.values

    def negate(q):
        if ctx is None:
            raise UsageError("negation needs SUP/INF tables (an AlgebraContext)")
        return ctx.negate(q)

    if ctx is not None and tables:
        first = next(iter(tables.values()))
        if not first.same_index(ctx.sup):
            raise DomainError("context tables and operand tables have different index maps")
    values = bexpr.evaluate(node, leaf, np.maximum, np.minimum, negate)
    meta = {"task": str(node), "source": "composed"}
    for key in ("penalty", "discount"):
        if key in ref.metadata:
            meta[key] = ref.metadata[key]
    return WVFTable(values, ref.goals.copy(), meta)


def compose_tasks(expression, tasks: dict, world: WorldSpec, name: str | None = None) -> TaskSpec:
    """Task-level counterpart of :func:`compose` on terminal rewards."""
    sup, inf = extreme_tasks(world)
    consts = {"sup": sup, "inf": inf}
    node = bexpr.parse(expression) if isinstance(expression, str) else expression

    def leaf(n):
        if n in tasks:
            return tasks[n].terminal_reward
        if n in CONSTANTS:
            return consts[CONSTANTS[n]].terminal_reward
        raise DomainError(f"unknown task {n!r}")

    reward = bexpr.evaluate(node, leaf, np.fmax, np.fmin,
                            lambda r: affine_negation(r, sup.terminal_reward, inf.terminal_reward))
    return TaskSpec(name or str(node), reward, world)


def count_compositions(n: int) -> int:
    """Number of distinct Boolean functions of ``n`` base tasks."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return 2 ** (2 ** n)


def boolean_functions(names) -> list[tuple[int, str]]:
    """Every Boolean function of the named base tasks as a DNF expression.

    Returns ``(truth_mask, expression)`` pairs; bit ``i`` of the mask is the
    output on the ``i``-th assignment of ``product((0, 1), repeat=n)``.  The
    constant-false function is ``inf``.
    """
    names = list(names)
    rows = list(product((0, 1), repeat=len(names)))
    out = []
    for mask in range(count_compositions(len(names))):
        terms = []
        for i, row in enumerate(rows):
            if mask >> i & 1:
                lits = [n if bit else f"~{n}" for n, bit in zip(names, row)]
                terms.append("(" + " & ".join(lits) + ")" if len(lits) > 1 else (lits[0] if lits else "sup"))
        out.append((mask, " | ".join(terms) if terms else "inf"))
    return out
