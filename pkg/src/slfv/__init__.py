"""Spatial Lambda-Fleming-Viot model with heavy-tailed events.

Submodules:

* geometry: ball volumes, lens volumes and the C1 / C2 integral constants.
* regimes: parameter validation, the limit quantities (alpha, beta, gamma,
  sigma2 or zeta) and the N-dependent scaling schedule.
* kernels: stable generator, prelimit generator, transition densities,
  noise covariance and the Wright-Malecot function.
* dual_sim: exact simulation of two ancestral lineages.
* forward_sim: event-driven forward simulation on a torus.
* cli: the `slfv` command line.
"""

from .geometry import c1_constant, c2_constant, lens_volume, unit_ball_volume
from .regimes import (LOCAL, LONG_RANGE, DerivedParams, RegimeParams, ScalingSchedule,
                      check_asymptotics, derive_params, rescaled_rates, schedule_for)
from .kernels import (KernelSpec, apply_D_alpha, apply_L_N, k_beta_pairing, kernel_spec,
                      q_pairing, stable_density, wm_function, wm_pairing)
from .dual_sim import coincident_hazard, estimate_ibd, simulate_pairs
from .forward_sim import AlleleField, empirical_qv, new_field, run_forward

__version__ = "0.1.0"
