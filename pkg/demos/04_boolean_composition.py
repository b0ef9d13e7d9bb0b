# %% [markdown]
# Boolean composition in the pickup world
#
# Tables for "blue" and "square" give OR, AND, NOT and everything built from
# them without more learning. Max, min and a SUP/INF reflection do the work.

# %%
import numpy as np

from wvf import pickup_grid_build, vi_wvf
from wvf.algebra import AlgebraContext, boolean_functions, compose, compose_tasks, count_compositions, recover_task
from wvf.grids import attribute_task
from wvf.harness import evaluate_policy

env = pickup_grid_build()
for o in env.layout.objects:
    print(o.cell, o.colour, o.shape)

# %%
tasks = {n: attribute_task(env, n) for n in ("blue", "square")}
tables = {n: vi_wvf(env.world, t) for n, t in tasks.items()}
ctx = AlgebraContext.from_oracle(env.world)

for text in ("blue | square", "blue & square", "(blue | square) & ~(blue & square)"):
    composed = compose(text, ctx, tables)
    task = compose_tasks(text, tasks, env.world)
    direct = vi_wvf(env.world, task)
    stats, _ = evaluate_policy(env.with_task(task), recover_task(composed).greedy(), 1000, 100, seed=0)
    print(f"{text:40s} diff {np.abs(composed.values - direct.values).max():.1e}  mean return {stats.mean_return:.4f}")

# %%
print("functions of two tasks:", count_compositions(2))
distinct = {compose(text, ctx, tables).values.tobytes() for _, text in boolean_functions(["blue", "square"])}
print("distinct composed tables:", len(distinct))
