"""Config-driven experiment pipeline: learn, evaluate, infer, transfer, compose.

Every run writes into ``<out>/seed_<n>/`` plus a ``manifest.json`` at the
output root listing each emitted file with its sha256.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import algebra, grids
from . import expr as bexpr
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import imagined_rollout, infer_model
from .learning import learn_wvf
from .oracle import vi_task, vi_wvf
from .render import render_heatmap, render_transitions
from .tables import WVFTable, load_table, save_table
from .world import default_min_penalty

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalStats:
    mean_return: float
    std_return: float
    episodes: int
    success_rate: float
    truncated: int = 0


def evaluate_policy(env, policy, episodes: int, horizon: int, seed: int):
    """Run ``episodes`` rollouts of a fixed policy from random start states.

    ``policy`` is an (S,) action array or a callable state -> action.
    Returns ``(EvalStats, records)`` with one record per episode.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    act = policy if callable(policy) else (lambda s, p=np.asarray(policy): int(p[s]))
    rng = np.random.default_rng(seed)
    records = []
    for ep in range(episodes):
        state = env.reset(rng)
        start = env.state_of(state.agent_cell)
        ret, steps, last_reward = 0.0, 0, None
        while steps < horizon and not state.terminated:
            s = env.state_of(state.agent_cell)
            state, reward, _ = grids.env_step(env, state, act(s))
            ret += reward
            last_reward = reward
            steps += 1
        records.append({
            "episode": ep, "start": start, "return": ret, "steps": steps,
            "terminal": env.state_of(state.agent_cell) if state.terminated else -1,
            "success": int(state.terminated and last_reward == env.goal_reward),
            "truncated": int(not state.terminated),
        })
    returns = np.array([r["return"] for r in records])
    stats = EvalStats(float(np.mean(returns)), float(np.std(returns)), episodes,
                      float(np.mean([r["success"] for r in records])),
                      int(sum(r["truncated"] for r in records)))
    return stats, records


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return int(v)
    return v


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[h] for h in header]
            w.writerow([_fmt(x) for x in row])
    return path


STAT_FIELDS = ["mean_return", "std_return", "episodes", "success_rate", "truncated"]


def _stats_row(stats: EvalStats) -> list:
    return [stats.mean_return, stats.std_return, stats.episodes, stats.success_rate, stats.truncated]


# ---------------------------------------------------------------- environments

def build_env(cfg: ExperimentConfig, task_spec: str | None = None):
    v = cfg.values
    rewards = dict(step_reward=v["env.step_reward"], goal_reward=v["env.goal_reward"],
                   non_goal_reward=v["env.non_goal_reward"])
    layout = grids.load_map(cfg.map_ref())
    task_spec = task_spec or v["env.task"]
    if v["env.kind"] == "pickup":
        env = grids.pickup_grid_build(layout, seed=v["env.seed"], **rewards)
        return env.with_task(make_task(env, task_spec))
    env = grids.four_rooms_build(layout, **rewards)
    return env.with_task(make_task(env, task_spec))


def make_task(env, spec: str):
    """Resolve a task description.

    Four-rooms: ``map`` (the map's G cells), ``hallways``, ``bottom_row`` or
    ``cells:r,c;r,c``.  Pickup: a Boolean predicate over object attributes.
    """
    if env.kind == "pickup":
        if spec == "map":
            raise ConfigError("env.task: pickup worlds need an attribute predicate such as 'blue'")
        return grids.attribute_task(env, spec)
    if spec == "map":
        return env.task_from_cells("map", sorted(env.layout.goals))
    if spec == "hallways":
        return grids.hallways_task(env)
    if spec == "bottom_row":
        return grids.bottom_row_task(env)
    if spec.startswith("cells:"):
        cells = [tuple(int(x) for x in item.split(",")) for item in spec[6:].split(";") if item.strip()]
        return env.task_from_cells(spec, cells)
    raise ConfigError(f"unknown four-rooms task {spec!r}")


def _penalty(cfg, env):
    override = cfg["penalty.override"]
    return default_min_penalty(env.world) if override is None else override


# ---------------------------------------------------------------- stages

class _SeedRun:
    def __init__(self, cfg: ExperimentConfig, seed: int, out: Path, table_path=None):
        self.cfg, self.seed, self.out = cfg, seed, out
        self.env = build_env(cfg)
        self.penalty = _penalty(cfg, self.env)
        self._oracle = None
        self._learned = None
        if table_path is not None:
            table = load_table(table_path)
            if not isinstance(table, WVFTable):
                raise ConfigError(f"--table: {table_path} is not a WVF table")
            self._learned = table
        self.files: list[Path] = []

    def emit(self, path: Path) -> Path:
        self.files.append(path)
        return path

    def oracle_table(self) -> WVFTable:
        if self._oracle is None:
            self._oracle = vi_wvf(self.env.world, self.env.task, penalty=self.penalty,
                                  discount=self.cfg["learner.gamma"])
        return self._oracle

    def table(self) -> WVFTable:
        if self.cfg["run.table"] == "oracle" and self._learned is None:
            return self.oracle_table()
        if self._learned is None:
            self.stage_learn()
        return self._learned

    def stage_oracle(self):
        W = self.oracle_table()
        self.emit(save_table(W, self.out / "oracle_wvf.tbl"))
        Q = vi_task(self.env.world, self.env.task, discount=self.cfg["learner.gamma"])
        self.emit(save_table(Q, self.out / "oracle_q.tbl"))

    def stage_learn(self):
        table, buffer, curve = learn_wvf(self.env, self.cfg.learn_config(self.seed))
        self._learned = table
        self.emit(save_table(table, self.out / "wvf.tbl"))
        self.emit(curve.write_csv(self.out / "learning_curve.csv"))

    def stage_eval(self):
        table = self.table()
        policy = algebra.recover_task(table).greedy()
        stats, records = evaluate_policy(self.env, policy, self.cfg["eval.episodes"],
                                         self.cfg["eval.horizon"], self.seed)
        fields = ["episode", "start", "return", "steps", "terminal", "success", "truncated"]
        self.emit(write_csv(self.out / "eval_episodes.csv", fields, records))
        report = algebra.mastery_eval(table, self.env, self.cfg["eval.horizon"])
        self.emit(write_csv(self.out / "eval_summary.csv", ["policy"] + STAT_FIELDS + ["mastery_pairs", "mastery_rate"],
                            [["greedy"] + _stats_row(stats) + [report.pair_count, report.success_rate]]))
        return stats

    def stage_render(self):
        table = self.table()
        self.emit(render_heatmap(table.state_values(), self.env, self.out / "wvf_heatmap.svg", goals=table.goals))
        task_values = algebra.recover_task(table).state_values()
        self.emit(render_heatmap(task_values, self.env, self.out / "task_values.svg"))

    def _probe_states(self):
        env = self.env
        cells = self.cfg["infer.probe"]
        if not cells:
            cells = sorted(env.layout.goals) or [env.cells[0]]
        return [env.state_of(c) for c in cells]

    def stage_infer(self):
        table, env = self.table(), self.env
        radius = self.cfg["infer.radius"]
        names = env.world.action_names
        rows = []
        for tag, r in (("full", None), (f"radius{radius}", radius)):
            model = infer_model(table, env, radius=r)
            self.emit(model.write_csv(self.out / f"dynamics_{tag}.csv", names))
            self.emit(render_transitions(env, model, self._probe_states(), self.out / f"transitions_{tag}.svg"))
            rows.append([tag, int(model.queried.sum()), model.accuracy])
            if r is None:
                full_model = model
        self.emit(write_csv(self.out / "dynamics_summary.csv", ["scope", "pairs", "accuracy"], rows))
        rng = np.random.default_rng(self.seed)
        starts = rng.choice(env.start_states, size=min(self.cfg["infer.rollouts"], len(env.start_states)),
                            replace=False)
        traj_rows = []
        for i, start in enumerate(starts):
            traj = imagined_rollout(full_model, table, int(start), None, self.cfg["eval.horizon"])
            for step, (s, v, nv) in enumerate(zip(traj.states, traj.values, traj.normalised_values)):
                r, c = env.cell_of(s)
                traj_rows.append([i, step, s, r, c, v, nv, int(traj.terminated)])
        self.emit(write_csv(self.out / "imagined_rollouts.csv",
                            ["rollout", "step", "state", "row", "col", "value", "normalised_value", "terminated"],
                            traj_rows))

    def stage_zero_shot(self):
        table, env = self.table(), self.env
        rows = []
        for spec in self.cfg["zero_shot.tasks"]:
            task = make_task(env, spec)
            target = env.with_task(task)
            est = algebra.zero_shot_values(table, task)
            policy = algebra.zero_shot_policy(table, est)
            stats, _ = evaluate_policy(target, policy, self.cfg["eval.episodes"], self.cfg["eval.horizon"], self.seed)
            oracle_policy = vi_task(env.world, task).greedy()
            ostats, _ = evaluate_policy(target, oracle_policy, self.cfg["eval.episodes"],
                                        self.cfg["eval.horizon"], self.seed)
            rows.append([spec] + _stats_row(stats) + [ostats.mean_return])
            slug = _slug(spec)
            self.emit(render_heatmap(est, env, self.out / f"zero_shot_{slug}_wvf.svg", goals=table.goals))
            self.emit(render_heatmap(est.max(axis=1), env, self.out / f"zero_shot_{slug}_values.svg"))
        self.emit(write_csv(self.out / "zero_shot.csv", ["task"] + STAT_FIELDS + ["oracle_mean_return"], rows))

    def _base_tables(self, names):
        env, cfg = self.env, self.cfg
        tasks = {n: make_task(env, n) for n in names}
        sup, inf = algebra.extreme_tasks(env.world)
        if cfg["compose.source"] == "oracle":
            solve = lambda t: vi_wvf(env.world, t, penalty=self.penalty)  # noqa: E731
        else:
            def solve(t):
                table, _, _ = learn_wvf(env.with_task(t), cfg.learn_config(self.seed))
                return table
        tables = {n: solve(t) for n, t in tasks.items()}
        ctx = algebra.AlgebraContext(solve(sup), solve(inf))
        return tasks, tables, ctx

    def stage_compose(self, exprs=None):
        env, cfg = self.env, self.cfg
        exprs = exprs or cfg["compose.exprs"]
        names = cfg["compose.base"] or sorted(
            set().union(*(bexpr.names(bexpr.parse(e)) for _, e in exprs)) - set(algebra.CONSTANTS))
        tasks, tables, ctx = self._base_tables(names)
        for n, t in tables.items():
            self.emit(save_table(t, self.out / f"base_{_slug(n)}.tbl"))
        rows = []
        for name, text in exprs:
            composed = algebra.compose(text, ctx, tables)
            task = algebra.compose_tasks(text, tasks, env.world, name)
            direct = vi_wvf(env.world, task, penalty=self.penalty)
            target = env.with_task(task)
            policy = algebra.recover_task(composed).greedy()
            stats, _ = evaluate_policy(target, policy, cfg["eval.episodes"], cfg["eval.horizon"], self.seed)
            dstats, _ = evaluate_policy(target, algebra.recover_task(direct).greedy(), cfg["eval.episodes"],
                                        cfg["eval.horizon"], self.seed)
            err = float(np.abs(composed.values - direct.values).max())
            rows.append([name, text] + _stats_row(stats) + [dstats.mean_return, err])
            self.emit(render_heatmap(algebra.recover_task(composed).state_values(), env,
                                     self.out / f"compose_{_slug(name)}_values.svg"))
        self.emit(write_csv(self.out / "compose_stats.csv",
                            ["name", "expression"] + STAT_FIELDS + ["direct_mean_return", "max_abs_diff_vs_direct"],
                            rows))
        if cfg["compose.enumerate"]:
            self._enumerate(names, tasks, tables, ctx)

    def _enumerate(self, names, tasks, tables, ctx):
        env = self.env
        rows, seen = [], []
        for mask, text in algebra.boolean_functions(names):
            composed = algebra.compose(text, ctx, tables)
            task = algebra.compose_tasks(text, tasks, env.world)
            direct = vi_wvf(env.world, task, penalty=self.penalty)
            match = next((i for i, v in enumerate(seen) if np.array_equal(v, composed.values)), None)
            if match is None:
                seen.append(composed.values)
                match = len(seen) - 1
            rows.append([mask, text, float(np.abs(composed.values - direct.values).max()), match])
        self.emit(write_csv(self.out / "skills.csv", ["mask", "expression", "max_abs_diff_vs_direct", "distinct_id"],
                            rows))
        return len(seen)


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text).strip("_") or "expr"


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(config, seed: int | None = None, out=None, stages=None, table_path=None,
                   exprs=None) -> Path:
    """Run the configured pipeline for every seed and return the output root.

    Raises :class:`ConfigError` for invalid configs and :class:`StageError`
    (after writing a manifest with the failure record) when a stage fails.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    out = Path(out if out is not None else cfg["output.dir"])
    seeds = [seed] if seed is not None else cfg.seeds
    stages = list(stages or cfg.stages)
    for _, text in exprs or ():
        try:
            bexpr.parse(text)
        except bexpr.ExpressionError as exc:
            raise ConfigError(f"--expr: {exc}") from None
    manifest = {"config": str(cfg.source) if cfg.source else None, "config_sha256": cfg.digest,
                "seeds": seeds, "stages": stages, "runs": [], "failure": None}
    all_files = []
    failure = None
    for s in seeds:
        seed_dir = out / f"seed_{s}"
        run = _SeedRun(cfg, s, seed_dir, table_path)
        done = []
        for stage in stages:
            log.info("seed %s: stage %s", s, stage)
            try:
                if stage == "compose":
                    run.stage_compose(exprs)
                else:
                    getattr(run, f"stage_{stage}")()
            except ConfigError:
                raise
            except Exception as exc:  # recorded in the manifest, then re-raised
                failure = {"seed": s, "stage": stage, "error": f"{type(exc).__name__}: {exc}"}
                break
            done.append(stage)
        manifest["runs"].append({"seed": s, "completed": done})
        all_files += run.files
        if failure:
            break
    manifest["failure"] = failure
    manifest["files"] = [{"path": p.relative_to(out).as_posix(), "sha256": _sha(p)} for p in all_files]
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if failure:
        raise StageError(f"stage {failure['stage']} failed for seed {failure['seed']}: {failure['error']}")
    return out
