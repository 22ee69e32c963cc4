# %% [markdown]
# A forward run: a patch of type 0 in a sea of type 1
#
# A d = 2 torus of side 60 starts with type 0 inside a ball of radius 12.
# Large events (a = 2.6, b = 2) blur the boundary over time; the total
# type-1 frequency is a martingale, so it only fluctuates.

# %%
import numpy as np

from slfv import forward_sim as fs
from slfv.regimes import RegimeParams, schedule_for
from slfv.rng import stream

p = RegimeParams(kind="OneTail", d=2, u0=0.8, mu=0.2, a=2.6, b=2.0, c=0.0)
_, sched = schedule_for(p, 1, 0.5)
field = fs.new_field(fs.TWO_ALLELE, 60.0, 120, fs.TwoAlleleBall((30.0, 30.0), 12.0), d=2)
obs = fs.snapshot_observer([0.0, 0.5, 1.0, 2.0])
field, log = fs.run_forward(stream(3, "demo"), field, p, sched, 2.0, [obs])
print(f"{log.n_events} events, radii truncated at {log.truncation_radius}")
for t, w in obs.values:
    mixed = np.mean((w > 0.05) & (w < 0.95))
    print(f"t={t:.2f}: mean type-1 frequency {w.mean():.4f}, mixed cells {mixed:.3f}")

# %% [markdown]
# A coarse picture of the final field along the middle row.

# %%
row = obs.values[-1][1][60]
print("".join(" .:-=+*#%@"[min(9, int(v * 10))] for v in row[::2]))
