# %% [markdown]
# Reading the transition function out of a world value function
#
# For each (state, action) pick the successor whose values best satisfy the
# goal-conditioned Bellman equations. Then plan by stepping that model.

# %%
import tempfile
from pathlib import Path

from wvf import four_rooms_build, learn_wvf, vi_wvf
from wvf.dynamics import imagined_rollout, infer_model
from wvf.learning import LearnConfig
from wvf.render import render_transitions

env = four_rooms_build()
W = vi_wvf(env.world, env.task)
model = infer_model(W, env)
print("oracle table, accuracy:", model.accuracy)

# %%
# an under-trained table makes searching every state risky; looking only
# two steps around s fixes most of the mistakes
short, _, _ = learn_wvf(env, LearnConfig(episodes=1000, seed=0))
full = infer_model(short, env)
local = infer_model(short, env, radius=2)
print(f"1000 episodes: full scope {full.accuracy:.3f}, radius 2 {local.accuracy:.3f}")

# %%
start, goal = env.state_of((1, 1)), env.state_of((9, 9))
traj = imagined_rollout(model, W, start, goal=goal)
print("imagined path:", [env.cell_of(s) for s in traj.states])
print("normalised values:", [round(v, 2) for v in traj.normalised_values])

# %%
out = Path(tempfile.mkdtemp())
probes = [env.state_of(c) for c in [(3, 3), (3, 9), (9, 3), (9, 9)]]
print(render_transitions(env, full, probes, out / "full.svg"))
print(render_transitions(env, local, probes, out / "radius2.svg"))
