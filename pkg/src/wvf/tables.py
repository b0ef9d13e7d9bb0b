"""Dense value tables and their ``WVFTBL 1`` text serialisation."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote, unquote

import numpy as np

from .world import DomainError

TABLE_HEADER = "WVFTBL 1"


@dataclass(eq=False)
class WVFTable:
    """Goal-conditioned action values Q(s, g, a).

    ``values`` has shape (S, G, A); ``goals[j]`` is the state id of goal
    column ``j``.  States and actions are identified with their ordinals.
    """

    values: np.ndarray
    goals: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.goals = np.asarray(self.goals, dtype=np.int64)
        if self.values.ndim != 3:
            raise DomainError(f"WVF values must be 3-d, got shape {self.values.shape}")
        S, G, _ = self.values.shape
        if self.goals.shape != (G,):
            raise DomainError(f"{G} goal columns but {self.goals.shape} goal ids")
        if G and (self.goals.min() < 0 or self.goals.max() >= S):
            raise DomainError("goal ids must be state ids")
        if len(set(self.goals.tolist())) != G:
            raise DomainError("duplicate goal ids")
        if not np.isfinite(self.values).all():
            raise DomainError("WVF values must be finite")

    @property
    def state_count(self) -> int:
        return self.values.shape[0]

    @property
    def action_count(self) -> int:
        return self.values.shape[2]

    def goal_index(self, g: int) -> int:
        hits = np.flatnonzero(self.goals == g)
        if not hits.size:
            raise DomainError(f"state {g} is not a goal of this table")
        return int(hits[0])

    def for_goal(self, g: int) -> np.ndarray:
        """(S, A) slice of values for goal state ``g``."""
        return self.values[:, self.goal_index(g), :]

    def state_values(self) -> np.ndarray:
        """V(s, g) = max_a Q(s, g, a), shape (S, G)."""
        return self.values.max(axis=2)

    def same_index(self, other: "WVFTable") -> bool:
        return self.values.shape == other.values.shape and np.array_equal(self.goals, other.goals)

    def with_values(self, values, **metadata) -> "WVFTable":
        meta = dict(self.metadata)
        meta.update(metadata)
        return WVFTable(values, self.goals.copy(), meta)


@dataclass(eq=False)
class QTable:
    """Task action values Q(s, a), shape (S, A)."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DomainError(f"Q values must be 2-d, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise DomainError("Q values must be finite")

    @property
    def state_count(self) -> int:
        return self.values.shape[0]

    @property
    def action_count(self) -> int:
        return self.values.shape[1]

    def state_values(self) -> np.ndarray:
        return self.values.max(axis=1)

    def greedy(self) -> np.ndarray:
        return self.values.argmax(axis=1)


def _fmt(x: float) -> str:
    return repr(float(x))


_INT = re.compile(r"-?\d+$")
_FLOAT = re.compile(r"-?(\d+\.\d*|\.\d+|\d+)(e[-+]?\d+)?$")


def _meta_value(text: str):
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return float(text)
    return unquote(text)


def _meta_text(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    text = quote(str(v), safe=".,-_")
    if _FLOAT.match(text):
        # keep numeric-looking strings as strings
        text = "%%%02X" % ord(text[0]) + text[1:]
    return text


def _meta_line(meta: dict) -> str:
    return " ".join(f"{quote(str(k), safe='')}={_meta_text(v)}" for k, v in meta.items())


def dumps_table(table: WVFTable | QTable) -> str:
    meta = dict(table.metadata)
    if isinstance(table, WVFTable):
        S, G, A = table.values.shape
        meta["kind"] = "wvf"
        meta["goals"] = ",".join(str(g) for g in table.goals)
        rows = table.values.reshape(S * G, A)
    else:
        S, A = table.values.shape
        G = 1
        meta["kind"] = "q"
        rows = table.values
    lines = [TABLE_HEADER, f"{S} {G} {A}", _meta_line(meta)]
    lines += [" ".join(_fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def loads_table(text: str) -> WVFTable | QTable:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TABLE_HEADER:
        raise DomainError(f"table file must start with {TABLE_HEADER!r}")
    S, G, A = (int(v) for v in lines[1].split())
    meta = {}
    for item in lines[2].split():
        k, _, v = item.partition("=")
        meta[unquote(k)] = _meta_value(v)
    body = lines[3:]
    if len(body) != S * G:
        raise DomainError(f"expected {S * G} value rows, found {len(body)}")
    values = np.array([[float(x) for x in row.split()] for row in body], dtype=float).reshape(S * G, A)
    kind = meta.pop("kind", "wvf")
    if kind == "q":
        return QTable(values.reshape(S, A), meta)
    goals = meta.pop("goals")
    goals = [int(g) for g in str(goals).split(",") if g]
    return WVFTable(values.reshape(S, G, A), np.array(goals, dtype=np.int64), meta)


def save_table(table, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_table(table))
    return path


def load_table(path):
    return loads_table(Path(path).read_text())
