# %% [markdown]
# Identity by descent from the dual, against the limit formula
#
# Two lineages are started from uniform densities on [-1.5, -0.5] and
# [0.5, 1.5] (rescaled units) and followed backwards for 10 rescaled time
# units.  The scaled coalescence probability N eta_N P is compared with the
# Wright-Malecot pairing of the two densities.

# %%
from slfv import dual_sim, kernels, testfunctions
from slfv.regimes import RegimeParams, schedule_for

p = RegimeParams(kind="OneTail", d=1, u0=0.5, mu=0.2, a=1.5, b=1.0, c=0.0)
dp, sched = schedule_for(p, 1000, 0.1)
est = dual_sim.estimate_ibd(7, dual_sim.uniform_block_sampler(-1.5, -0.5),
                            dual_sim.uniform_block_sampler(0.5, 1.5), 10.0, p, sched, 200_000)
formula = kernels.wm_pairing(dp, 1, p.mu, testfunctions.uniform_block(-1.5, -0.5),
                             testfunctions.uniform_block(0.5, 1.5))
print(f"Monte Carlo {est.estimate:.4f} +- {est.se:.4f} (95% CI {est.ci_low:.4f}..{est.ci_high:.4f})")
print(f"limit formula {formula:.4f}, z = {(est.estimate - formula) / est.se:.2f}")

# %% [markdown]
# Two lineages at the same point coalesce at a rate given in closed form.

# %%
q = RegimeParams(kind="OneTail", d=1, u0=0.5, mu=0.2, a=1.5, b=1.0, c=0.3)
_, s2 = schedule_for(q, 100, 0.2)
h = dual_sim.coincident_hazard(1, q, s2, 100_000)
print(f"hazard {h.estimate:.5f} +- {h.se:.5f}, exact {dual_sim.coincident_hazard_exact(q, s2):.5f}")
