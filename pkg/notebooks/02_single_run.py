# %% [markdown]
# # One optimization run
#
# Constrained Ackley in 2-D, small budget, with the per-iteration hook used
# to watch the trust region move.

# %%
import numpy as np

from trmei import OptimizerConfig, make_problem, run, run_random_baseline

problem = make_problem("ackley", 2)
cfg = OptimizerConfig(n_init=4, budget=20, seed=1)

boxes = []
trace = run(problem, cfg, hook=lambda info: boxes.append((info.step, *info.box)))

# %%
for step, lo, hi in boxes[::4]:
    print(step, problem.from_unit(lo).round(2), problem.from_unit(hi).round(2))

# %%
best = trace.feasible_best()
print("first feasible at eval", int(np.argmax(~np.isnan(best))), "final", best[-1])
print("incumbent x", trace.best_point.round(3))

# %% [markdown]
# Same budget, uniform random search:

# %%
rand = run_random_baseline(problem, cfg)
rand.feasible_best()[-1]
