# %% [markdown]
# World value functions on the four-rooms grid
#
# Solve the goal-conditioned table exactly, learn it from experience, and
# check that the task values fall out of it by maximising over goals.

# %%
import numpy as np

from wvf import four_rooms_build, learn_wvf, mastery_eval, recover_task, vi_task, vi_wvf
from wvf.learning import LearnConfig

env = four_rooms_build()
print(env.state_count, "states,", env.world.action_count, "actions:", env.world.action_names)
print("goal cells:", sorted(env.layout.goals))

# %%
W = vi_wvf(env.world, env.task)      # shape (S, G, A)
Q = vi_task(env.world, env.task)     # shape (S, A)
print("table shape", W.values.shape, "penalty", W.metadata["penalty"])
print("max_g Q(s,g,a) vs Q*(s,a):", np.abs(recover_task(W).values - Q.values).max())

# %%
# value of reaching (9, 9) from every cell, printed as a grid
g = env.state_of((9, 9))
v = W.state_values()[:, W.goal_index(g)]
grid = np.full((env.layout.height, env.layout.width), np.nan)
for s, (r, c) in enumerate(env.cells):
    grid[r, c] = v[s]
with np.printoptions(precision=1, suppress=True, linewidth=120, nanstr="  #"):
    print(grid)

# %%
rep = mastery_eval(W, env)
print(f"oracle mastery: {rep.success_rate} over {rep.pair_count} (start, goal) pairs")

# %%
# Q-learning over all goals seen so far; 50k episodes takes about ten seconds
table, buffer, curve = learn_wvf(env, LearnConfig(episodes=50_000, seed=0))
visited = curve.visited_states()
err = np.abs(table.values.max(axis=1) - Q.values)[visited].max()
print(f"buffer {len(buffer)} goals, max error on visited states {err:.2e}")
print("learned mastery:", mastery_eval(table, env).success_rate)
print("mean return, last 1000 episodes:", np.mean(curve.returns[-1000:]))
