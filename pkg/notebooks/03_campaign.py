# %% [markdown]
# # A small campaign and its convergence plot
#
# Three methods, three seeds, 5-D problems. The CLI equivalent is
#
#     trmei campaign --problems ackley,rastrigin --methods tr-mei,tr-ts,random \
#         --seeds 0..2 --dim 5 --budget 15 --out /tmp/trmei_demo
#     trmei plot --curves /tmp/trmei_demo/curves --out /tmp/trmei_demo/plots

# %%
from pathlib import Path

from trmei import CampaignSpec, OptimizerConfig, run_campaign, summarize
from trmei.cli import main

out = Path("/tmp/trmei_demo")
spec = CampaignSpec(
    problems=["ackley", "rastrigin"],
    methods=["tr-mei", "tr-ts", "random"],
    seeds=[0, 1, 2],
    dim=5,
    config=OptimizerConfig(budget=15),
    out_dir=str(out),
)
result = run_campaign(spec)

# %%
for row in summarize(result):
    print(f"{row['problem']:10s} {row['method']:7s} {row['mean']:8.3f} +- {row['se']:.3f}  (median {row['median']:.3f})")

# %% [markdown]
# Runs that never hit a feasible point are scored with the worst objective
# value seen on that problem by any method:

# %%
result.worst

# %%
main(["plot", "--curves", str(out / "curves"), "--out", str(out / "plots")])
sorted(p.name for p in (out / "plots").iterdir())
