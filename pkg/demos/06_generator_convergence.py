# %% [markdown]
# Convergence of the prelimit lineage generator
#
# For b = 0 the parent radius is fixed, so L^N phi differs from D_alpha phi
# by a term of order delta^(2 - a) = delta^(1/2).  The sup error over a grid
# of x values is printed for a halving sequence of delta.

# %%
import numpy as np

from slfv import cli

body = cli.run("gencheck", {}, out="demo_output/gencheck")
for d, e in zip(body["deltas"], body["sup_errors"]):
    print(f"delta={d:<6} sup error {e:.4f}  error/sqrt(delta) {e / np.sqrt(d):.4f}")

# %% [markdown]
# The last column is nearly constant, which is the delta^(1/2) rate.  At
# this rate the error drops below 1e-2 only near delta = 0.0125.
