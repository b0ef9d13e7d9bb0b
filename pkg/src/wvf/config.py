"""Flat ``section.key = value`` experiment configuration files."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .expr import ExpressionError, parse
from .learning import LearnConfig


class ConfigError(ValueError):
    pass


STAGES = ("oracle", "learn", "eval", "render", "infer", "zero_shot", "compose")

# key -> (converter, default)
SCHEMA = {
    "env.kind": (str, "four_rooms"),
    "env.map": (str, None),
    "env.task": (str, "map"),
    "env.seed": (int, None),
    "env.step_reward": (float, -0.1),
    "env.goal_reward": (float, 2.0),
    "env.non_goal_reward": (float, -0.1),
    "learner.alpha": (float, 0.5),
    "learner.epsilon": (float, 0.3),
    "learner.episodes": (int, 50_000),
    "learner.max_steps": (int, 100),
    "learner.gamma": (float, 1.0),
    "learner.init_value": (float, 0.0),
    "penalty.override": (float, None),
    "eval.episodes": (int, 1000),
    "eval.horizon": (int, 200),
    "output.dir": (str, "out"),
    "run.seeds": ("ints", [0]),
    "run.stages": ("words", ["learn", "eval", "render"]),
    "run.table": (str, "learned"),
    "infer.radius": (int, 2),
    "infer.probe": ("cells", []),
    "infer.rollouts": (int, 5),
    "zero_shot.tasks": ("words", []),
    "compose.base": ("words", []),
    "compose.exprs": ("named", []),
    "compose.source": (str, "oracle"),
    "compose.enumerate": ("bool", False),
}


def _convert(kind, text: str):
    text = text.strip()
    if kind is str:
        return text
    if kind in (int, float):
        return kind(text)
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind == "ints":
        return [int(v) for v in text.replace(",", " ").split()]
    if kind == "words":
        return [w.strip() for w in text.split(",") if w.strip()]
    if kind == "cells":
        cells = []
        for item in text.split(";"):
            if item.strip():
                r, c = (int(v) for v in item.split(","))
                cells.append((r, c))
        return cells
    if kind == "named":
        out = []
        for item in text.split(";"):
            if not item.strip():
                continue
            name, sep, expression = item.partition(":")
            if not sep:
                name, expression = "", name
            out.append((name.strip() or expression.strip(), expression.strip()))
        return out
    raise AssertionError(kind)


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or "." not in key:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        raw[key] = value.strip()
    values = {}
    for key, (kind, default) in SCHEMA.items():
        if key in raw and raw[key] != "":
            try:
                values[key] = _convert(kind, raw[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            values[key] = default
    return values


@dataclass
class ExperimentConfig:
    values: dict
    base_dir: Path = Path(".")
    digest: str = ""
    source: Path | None = None
    extras: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seeds(self) -> list:
        return self.values["run.seeds"]

    @property
    def stages(self) -> list:
        return self.values["run.stages"]

    def map_ref(self):
        ref = self.values["env.map"] or ("pickup" if self.values["env.kind"] == "pickup" else "four_rooms")
        p = Path(ref)
        if p.suffix or "/" in ref:
            return p if p.is_absolute() else self.base_dir / p
        return ref

    def learn_config(self, seed: int) -> LearnConfig:
        v = self.values
        return LearnConfig(alpha=v["learner.alpha"], epsilon=v["learner.epsilon"],
                           episodes=v["learner.episodes"], max_steps=v["learner.max_steps"],
                           gamma=v["learner.gamma"], seed=seed, penalty=v["penalty.override"],
                           init_value=v["learner.init_value"])

    def validate(self) -> "ExperimentConfig":
        v = self.values
        if v["env.kind"] not in ("four_rooms", "pickup"):
            raise ConfigError(f"env.kind: expected four_rooms or pickup, got {v['env.kind']!r}")
        ref = self.map_ref()
        if isinstance(ref, Path) and not ref.exists():
            raise ConfigError(f"env.map: file not found: {ref}")
        try:
            self.learn_config(0)
        except ValueError as exc:
            field_name = str(exc).split()[0]
            raise ConfigError(f"learner.{field_name}: {exc}") from None
        if not v["run.seeds"]:
            raise ConfigError("run.seeds: at least one seed required")
        for stage in v["run.stages"]:
            if stage not in STAGES:
                raise ConfigError(f"run.stages: unknown stage {stage!r}; expected one of {STAGES}")
        if v["run.table"] not in ("learned", "oracle"):
            raise ConfigError("run.table: expected 'learned' or 'oracle'")
        if v["compose.source"] not in ("learned", "oracle"):
            raise ConfigError("compose.source: expected 'learned' or 'oracle'")
        for key in ("eval.episodes", "eval.horizon", "infer.rollouts"):
            if v[key] < 1:
                raise ConfigError(f"{key}: must be at least 1")
        for name, text in v["compose.exprs"]:
            try:
                parse(text)
            except ExpressionError as exc:
                raise ConfigError(f"compose.exprs: {name}: {exc}") from None
        if v["infer.radius"] < 0:
            raise ConfigError("infer.radius: must be non-negative")
        if v["penalty.override"] is not None and v["penalty.override"] >= min(
                v["env.step_reward"], v["env.goal_reward"], v["env.non_goal_reward"]):
            raise ConfigError("penalty.override: must be below the smallest reward")
        return self


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    data = path.read_bytes()
    values = parse_config_text(data.decode())
    cfg = ExperimentConfig(values, path.parent, hashlib.sha256(data).hexdigest(), path)
    return cfg.validate()
