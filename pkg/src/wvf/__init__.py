"""Tabular world value functions: learning, mastery, dynamics inference,
zero-shot transfer and Boolean composition."""

from .algebra import (AlgebraContext, MasteryReport, compose, compose_tasks, count_compositions,
                      mastery_eval, recover_task, zero_shot_policy, zero_shot_values)
from .dynamics import InferredModel, imagined_rollout, infer_model, infer_transition
from .grids import (EnvState, GridEnv, GridLayout, attribute_task, env_step, four_rooms_build,
                    load_map, neighbourhood, parse_map, pickup_grid_build)
from .harness import EvalStats, evaluate_policy, run_experiment
from .learning import LearnConfig, learn_wvf, sample_goal, td_update
from .oracle import reachable_goals, vi_task, vi_wvf
from .render import render_heatmap
from .tables import QTable, WVFTable, load_table, save_table
from .world import (ExtendedRewardConfig, GoalBuffer, TaskSpec, WorldSpec, compose_task_reward,
                    default_min_penalty, extended_reward)

__version__ = "0.1.0"
