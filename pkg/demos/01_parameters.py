# %% [markdown]
# Limit parameters of a regime
#
# A regime fixes how event radii and impacts scale.  `derive_params` turns it
# into the exponents of the limit: the dispersal index alpha, the coalescence
# exponent beta, the noise strength gamma and one diffusivity (sigma2 for
# Brownian lineages, zeta for stable ones).

# %%
from slfv.regimes import RegimeParams, check_asymptotics, derive_params, rescaled_rates

regimes = {
    "stable dispersal, local coalescence (d=2)":
        RegimeParams(kind="OneTail", d=2, u0=1.0, mu=0.2, a=1.5, b=1.0, c=0.7),
    "Brownian dispersal, long-range coalescence (d=3)":
        RegimeParams(kind="OneTail", d=3, u0=1.0, mu=0.2, a=2.5, b=0.5, c=0.2),
    "two independent tails (d=1)":
        RegimeParams(kind="TwoTails", d=1, u0=1.0, mu=0.2, a1=1.2, a2=3.0, c1=0.0, c2=0.0),
}

for name, p in regimes.items():
    dp = derive_params(p)
    diff = f"sigma2={dp.sigma2:.4f}" if dp.sigma2 is not None else f"zeta={dp.zeta:.4f}"
    print(f"{name}:\n  alpha={dp.alpha}, beta={dp.beta:.3g}, {dp.coalescence}, "
          f"gamma={dp.gamma:.4f}, {diff}")

# %% [markdown]
# Boundary cases are refused rather than guessed.

# %%
try:
    derive_params(RegimeParams(kind="OneTail", d=1, u0=1.0, mu=0.2, a=2.0, b=0.0, c=0.0))
except ValueError as exc:
    print("rejected:", exc)

# %% [markdown]
# The scaling schedule at N = 1000 with delta = N^(-1/3), and which limit
# theorems hold for that choice of theta.

# %%
p = RegimeParams(kind="OneTail", d=1, u0=0.5, mu=0.2, a=1.5, b=1.0, c=0.0)
dp = derive_params(p)
s = rescaled_rates(p, dp, 1000, 1000 ** (-1 / 3), 1 / 3)
print(f"delta={s.delta:.3f}, u_N={s.uN:.1e}, mu_N={s.muN:.3e}, eta_N={s.etaN:.4f}, "
      f"time factor={s.time_factor:.0f}")
print(check_asymptotics(p, 1 / 3))
