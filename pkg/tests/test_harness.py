import csv
import dataclasses
import hashlib
import json
import re

import numpy as np
import pytest

from wvf.cli import main
from wvf.config import ConfigError, load_config, parse_config_text
from wvf.harness import StageError, evaluate_policy, run_experiment
from wvf.render import MID, render_heatmap, value_colors
from wvf.tables import save_table
from wvf.world import DomainError

from .conftest import closed_form_task_values

FAST = """env.kind = four_rooms
env.task = map
learner.episodes = 300
eval.episodes = 50
eval.horizon = 100
infer.rollouts = 2
zero_shot.tasks = hallways
run.seeds = 0
run.table = oracle
run.stages = oracle, eval, render, infer, zero_shot
"""


def write_cfg(tmp_path, text=FAST, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------- config

def test_unknown_key_names_field():
    with pytest.raises(ConfigError, match="learner.alhpa"):
        parse_config_text("learner.alhpa = 0.5\n")


@pytest.mark.parametrize("line,field", [
    ("learner.alpha = 1.5", "learner.alpha"),
    ("learner.episodes = many", "learner.episodes"),
    ("run.stages = learn, dance", "run.stages"),
    ("env.kind = hexworld", "env.kind"),
    ("eval.horizon = 0", "eval.horizon"),
    ("penalty.override = 5", "penalty.override"),
    ("compose.enumerate = maybe", "compose.enumerate"),
])
def test_invalid_values_name_field(tmp_path, line, field):
    with pytest.raises(ConfigError, match=re.escape(field)):
        load_config(write_cfg(tmp_path, line + "\n"))


def test_missing_map_is_config_error(tmp_path):
    path = write_cfg(tmp_path, "env.map = nowhere/absent.txt\n")
    with pytest.raises(ConfigError, match="env.map"):
        load_config(path)
    assert main(["oracle", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_defaults_and_digest(tmp_path):
    path = write_cfg(tmp_path, "# only comments\n\n")
    cfg = load_config(path)
    assert cfg["learner.alpha"] == 0.5 and cfg.seeds == [0]
    assert cfg.digest == hashlib.sha256(path.read_bytes()).hexdigest()


def test_named_expressions():
    v = parse_config_text("compose.exprs = or: a | b; a & ~b\n")
    assert v["compose.exprs"] == [("or", "a | b"), ("a & ~b", "a & ~b")]


# ---------------------------------------------------------------- evaluation

def test_adjacent_start_returns_exactly(four_rooms, fr_q):
    s = four_rooms.state_of((3, 4))
    env = dataclasses.replace(four_rooms, start_states=np.array([s]))
    stats, records = evaluate_policy(env, fr_q.greedy(), episodes=20, horizon=50, seed=3)
    assert stats.mean_return == pytest.approx(1.9, abs=1e-12)
    assert stats.std_return == pytest.approx(0.0, abs=1e-12)
    assert stats.success_rate == 1.0 and all(r["steps"] == 2 for r in records)


def test_uniform_starts_match_closed_form(four_rooms, fr_q):
    stats, records = evaluate_policy(four_rooms, fr_q.greedy(), episodes=300, horizon=200, seed=0)
    expected = closed_form_task_values(four_rooms, sorted(four_rooms.layout.goals))
    for r in records:
        assert r["return"] == pytest.approx(expected[r["start"]], abs=1e-9)
    assert stats.mean_return == pytest.approx(np.mean([expected[r["start"]] for r in records]), abs=1e-9)


def test_truncation_counted(four_rooms):
    north = np.zeros(four_rooms.state_count, dtype=int)
    stats, records = evaluate_policy(four_rooms, north, episodes=5, horizon=7, seed=0)
    assert stats.truncated == 5 and stats.success_rate == 0.0
    assert all(r["return"] == pytest.approx(-0.7) for r in records)


# ---------------------------------------------------------------- pipeline

@pytest.fixture(scope="module")
def fast_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("run")
    cfg = write_cfg(base)
    return run_experiment(cfg, out=base / "a"), cfg


def test_manifest_lists_every_file(fast_run):
    out, _ = fast_run
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    on_disk = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()} - {"manifest.json"}
    assert set(listed) == on_disk
    for rel, digest in listed.items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert manifest["failure"] is None and manifest["runs"][0]["completed"] == manifest["stages"]


def test_eval_csv_mean_recomputes(fast_run):
    out, _ = fast_run
    with (out / "seed_0" / "eval_episodes.csv").open() as fh:
        returns = [float(r["return"]) for r in csv.DictReader(fh)]
    with (out / "seed_0" / "eval_summary.csv").open() as fh:
        summary = next(csv.DictReader(fh))
    assert float(np.mean(returns)) == float(summary["mean_return"])
    assert float(summary["mastery_rate"]) == 1.0


def test_pipeline_is_byte_deterministic(fast_run, tmp_path):
    out, cfg = fast_run
    again = run_experiment(cfg, out=tmp_path / "b")
    first = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    second = sorted(p.relative_to(again) for p in again.rglob("*") if p.is_file())
    assert first == second
    for rel in first:
        assert (out / rel).read_bytes() == (again / rel).read_bytes(), rel


def test_dynamics_summary_from_oracle(fast_run):
    out, _ = fast_run
    with (out / "seed_0" / "dynamics_summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["scope"] for r in rows] == ["full", "radius2"]
    assert all(float(r["accuracy"]) == 1.0 for r in rows)


def test_stage_failure_exit_code_and_manifest(tmp_path, pickup, pickup_tables):
    _, tables = pickup_tables
    bad = save_table(tables["blue"], tmp_path / "pickup.tbl")
    cfg = write_cfg(tmp_path)
    out = tmp_path / "fail"
    assert main(["eval", "--config", str(cfg), "--out", str(out), "--table", str(bad)]) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failure"]["stage"] == "eval"
    with pytest.raises(StageError):
        run_experiment(cfg, out=tmp_path / "fail2", stages=["eval"], table_path=bad)


def test_cli_table_reuse(tmp_path, four_rooms, fr_oracle):
    table = save_table(fr_oracle, tmp_path / "w.tbl")
    cfg = write_cfg(tmp_path)
    out = tmp_path / "cli"
    assert main(["eval", "--config", str(cfg), "--out", str(out), "--table", str(table), "--seed", "4"]) == 0
    assert (out / "seed_4" / "eval_summary.csv").exists()
    assert not (out / "seed_4" / "wvf.tbl").exists()


def test_cli_compose_expr(tmp_path):
    cfg = write_cfg(tmp_path, "env.kind = pickup\nenv.task = blue\neval.episodes = 20\n", "p.cfg")
    out = tmp_path / "comp"
    assert main(["compose", "--config", str(cfg), "--out", str(out), "--expr", "blue & ~square"]) == 0
    with (out / "seed_0" / "compose_stats.csv").open() as fh:
        row = next(csv.DictReader(fh))
    assert row["expression"] == "blue & ~square"
    assert float(row["max_abs_diff_vs_direct"]) <= 1e-8


def test_cli_bad_expression_is_config_error(tmp_path):
    cfg = write_cfg(tmp_path, "env.kind = pickup\nenv.task = blue\n", "p.cfg")
    assert main(["compose", "--config", str(cfg), "--out", str(tmp_path / "x"), "--expr", "blue |"]) == 2


# ---------------------------------------------------------------- rendering

def _fills(path):
    return re.findall(r'fill="(#[0-9a-f]{6})"', path.read_text())


def test_constant_values_render_mid_colour(tmp_path, four_rooms):
    path = render_heatmap(np.full(four_rooms.state_count, 3.0), four_rooms, tmp_path / "c.svg")
    mid = "#%02x%02x%02x" % MID
    cell_fills = [f for f in _fills(path) if f != "#303030"]
    assert len(cell_fills) == 104 and set(cell_fills) == {mid}


def test_colour_scale_monotone():
    cols = value_colors(np.linspace(-1, 1, 41))
    warmth = [r - b for r, _, b in cols]
    assert all(x <= y for x, y in zip(warmth, warmth[1:]))


def test_heatmap_warms_toward_goal(tmp_path, four_rooms, fr_q):
    v = fr_q.state_values()
    cols = value_colors(v)
    warmth = np.array([r - b for r, _, b in cols])
    order = np.argsort(v, kind="stable")
    assert np.all(np.diff(warmth[order]) >= 0)
    g = four_rooms.state_of((3, 3))
    assert warmth[g] == warmth.max()


def test_heatmap_size_mismatch(tmp_path, four_rooms):
    with pytest.raises(DomainError):
        render_heatmap(np.zeros(5), four_rooms, tmp_path / "bad.svg")


def test_bad_config_expression(tmp_path):
    with pytest.raises(ConfigError, match="compose.exprs"):
        load_config(write_cfg(tmp_path, "compose.exprs = x: a & (b\n"))
