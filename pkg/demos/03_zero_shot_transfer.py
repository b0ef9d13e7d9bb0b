# %% [markdown]
# Zero-shot transfer to new terminal rewards
#
# One table for one task already knows how to reach every goal, so a new
# task only needs its goal rewards swapped in.

# %%
import numpy as np

from wvf import four_rooms_build, vi_task, vi_wvf
from wvf.algebra import greedy_rollout, zero_shot_policy, zero_shot_values
from wvf.grids import bottom_row_task, hallways_task

env = four_rooms_build()
W = vi_wvf(env.world, env.task)

# %%
for task in (hallways_task(env), bottom_row_task(env)):
    est = zero_shot_values(W, task)
    target = vi_wvf(env.world, task).state_values()
    policy = zero_shot_policy(W, est)
    optimal = vi_task(env.world, task).state_values()
    reward = task.reward_table()
    returns = []
    for s in range(env.state_count):
        states, actions, _ = greedy_rollout(env.world, policy, s, 200)
        returns.append(sum(reward[x, a] for x, a in zip(states, actions)))
    print(f"{task.name}: value error {np.abs(est - target).max():.1e}, "
          f"worst return gap {np.max(optimal - np.array(returns)):.1e}")
