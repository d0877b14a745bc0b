# %% [markdown]
# # Surrogates and the penalized acquisition
#
# A 1-D toy: fit a GP to a few noisy-free observations, then look at how the
# big-M penalty reshapes expected improvement once a constraint is modelled.

# %%
import numpy as np

from trmei.acquisition import ei, incumbent_from_data, mei
from trmei.gp import fit, predict
from trmei.penalized import PenaltyConfig, penalized_moments

rng = np.random.default_rng(0)
X = np.sort(rng.uniform(size=(7, 1)), axis=0)
f = np.sin(6 * X[:, 0]) + X[:, 0]
g = X[:, 0] - 0.6  # feasible left of 0.6

obj = fit(X, f, seed=0)
con = fit(X, g, seed=1)
obj.params, con.params

# %%
grid = np.linspace(0, 1, 11)[:, None]
mean, var = predict(obj, grid)
np.c_[grid, mean, np.sqrt(var)].round(3)

# %% [markdown]
# Plain EI ignores the constraint. The penalized version adds `M` times the
# probability of violation to the mean and inflates the variance accordingly,
# which pushes the acquisition back into the feasible part of the line.

# %%
cfg = PenaltyConfig(big_m=10.0)
inc = incumbent_from_data(X, f, g[:, None], obj, cfg)
post = penalized_moments(obj, [con], grid, cfg)
plain = np.array([ei(inc.best_F, m, np.sqrt(v)) for m, v in zip(post.mu_f, post.sigma2_f)])
penalized = mei(inc, post)
np.c_[grid[:, 0], post.p_violation[:, 0], plain, penalized].round(4)

# %%
print("EI argmax:", grid[plain.argmax(), 0], " MEI argmax:", grid[penalized.argmax(), 0])
