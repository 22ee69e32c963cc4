# %% [markdown]
# Quadratic variation of the fluctuation field
#
# Starting from the uniform type distribution, the summed squared jumps of
# <Z^N, phi x psi> grow linearly in time.  The exact prelimit rate differs
# from the limit q_pairing by terms of order delta^(beta - d), which is
# slow here (beta - d = 1/2).

# %%
import numpy as np

from slfv import forward_sim as fs, kernels, testfunctions
from slfv.regimes import RegimeParams, schedule_for

p = RegimeParams(kind="OneTail", d=1, u0=0.5, mu=0.2, a=1.5, b=1.0, c=0.0)
phi = testfunctions.bump(1, center=10.0, radius=2.0)
psi = fs.type_indicator(0.0, 0.5)
for N in (100, 1000, 10**4, 10**6):
    dp, sched = schedule_for(p, N, theta=1 / 3)
    pre = fs.prelimit_qv_rate(p, sched, phi, 0.25, s_max=10.0)
    q = kernels.q_pairing(dp, 1, phi, 0.25)
    print(f"N={N:>8}: delta={sched.delta:.3f}, prelimit rate {pre:.3f}, limit {q:.3f}, "
          f"ratio {pre / q:.3f}")

# %% [markdown]
# A short simulation at N = 100 lands on the prelimit value.

# %%
dp, sched = schedule_for(p, 100, theta=1 / 3)
est = fs.empirical_qv(1, p, sched, phi, psi, 0.02, 12)
print(f"simulated rate {est.estimate / 0.02:.3f} +- {est.se / 0.02:.3f}")
