"""Regime parameters, their limit quantities and the rescaling schedule.

Two parameterisations of the event intensity are supported:

* OneTail: r2 has density r2^-(1+d+a-c) on [1, inf), the parent radius is
  r1 = r2^b and the impact is u = u_N r2^-c.
* TwoTails: r1 and r2 are independent with densities r1^-(1+a1-c1) and
  r2^-(1+d+a2-c2) on [1, inf), and u = u_N r1^-c1 r2^-c2.

Under the rescaling u_N = u0/N, mu_N = delta^alpha mu / N, time N/delta^alpha
and space 1/delta, the fluctuations are governed by (alpha, beta, gamma) and
either sigma2 (Brownian limit) or zeta (stable limit).
"""

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

from .geometry import c1_constant, c2_constant, unit_ball_volume

ONE_TAIL = "OneTail"
TWO_TAILS = "TwoTails"
LOCAL = "Local"
LONG_RANGE = "LongRange"

# exponents this close to a boundary are treated as sitting on it
BOUNDARY_TOL = 1e-5
_EQ_TOL = 1e-12


@dataclass(frozen=True)
class RegimeParams:
    kind: str
    d: int
    u0: float
    mu: float
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    a1: Optional[float] = None
    a2: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d: must be a positive integer, got {self.d}")
        if not 0.0 < self.u0 <= 1.0:
            raise ValueError(f"u0: must lie in (0, 1], got {self.u0}")
        if not self.mu > 0:
            raise ValueError(f"mu: must be positive, got {self.mu}")
        if self.kind == ONE_TAIL:
            _require(self, ("a", "b", "c"), ("a1", "a2", "c1", "c2"))
            if not self.a > 0:
                raise ValueError(f"a: must be positive, got {self.a}")
            if self.b < 0 or self.c < 0:
                raise ValueError("b, c: must be nonnegative")
        elif self.kind == TWO_TAILS:
            _require(self, ("a1", "a2", "c1", "c2"), ("a", "b", "c"))
            if not (self.a1 > 0 and self.a2 > 0):
                raise ValueError("a1, a2: must be positive")
            if self.c1 < 0 or self.c2 < 0:
                raise ValueError("c1, c2: must be nonnegative")
        else:
            raise ValueError(f"kind: expected {ONE_TAIL!r} or {TWO_TAILS!r}, got {self.kind!r}")

    @property
    def one_tail(self):
        return self.kind == ONE_TAIL

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def _require(p, needed, forbidden):
    for name in needed:
        if getattr(p, name) is None:
            raise ValueError(f"{name}: required for kind {p.kind}")
    for name in forbidden:
        if getattr(p, name) is not None:
            raise ValueError(f"{name}: not a parameter of kind {p.kind}")


@dataclass(frozen=True)
class DerivedParams:
    alpha: float
    beta: float
    gamma: float
    sigma2: Optional[float]
    zeta: Optional[float]
    coalescence: str


@dataclass(frozen=True)
class ScalingSchedule:
    N: int
    delta: float
    uN: float
    muN: float
    etaN: float
    theta: Optional[float] = None
    time_factor: float = 1.0
    space_factor: float = 1.0


@dataclass(frozen=True)
class ValidityReport:
    lln_ok: bool
    clt_ok: bool
    lln_exponent: float
    clt_exponent: float


def _alpha_candidates(p):
    if p.one_tail:
        ratio = math.inf if p.b == 0 else p.a / p.b
        return {"a": p.a, "a/b": ratio}
    return {"a1": p.a1, "a2": p.a2}


def alpha_of(p):
    """Stability index, rejecting parameters whose alpha sits on the Brownian boundary."""
    cands = _alpha_candidates(p)
    lo = min(cands.values())
    if abs(lo - 2.0) <= BOUNDARY_TOL:
        name = min(cands, key=cands.get)
        raise ValueError(
            f"{name}: equals 2 (within {BOUNDARY_TOL:g}), the boundary between "
            "stable and Brownian limits; use a value strictly away from 2")
    return min(lo, 2.0)


def beta_of(p):
    return p.a + p.c if p.one_tail else p.a2 + p.c2


def gamma_branch(beta, d):
    """Which of the three gamma formulas applies: 'beta>d', 'beta=d' or 'beta<d'."""
    if abs(beta - d) <= _EQ_TOL:
        return "beta=d"
    return "beta>d" if beta > d else "beta<d"


def derive_params(p, zeta_convention="dynamics"):
    """Limit quantities (alpha, beta, gamma, sigma2 or zeta) for a regime.

    For the one-tail regime with b = 1 the stable coefficient is
    u0 V1^2 (d + alpha) C1_{d,alpha}: with r1 = r2 an event moves a lineage by
    the sum of two independent uniform ball draws, whose density is
    V_s(0, z) / V_s^2, and matching the resulting jump kernel with the one of
    zeta times the ball-average operator gives that value.  The older closed
    form C1_{d,alpha} / (V1 (d + alpha)) is available as
    ``zeta_convention="table"``; it does not reproduce the dynamics.
    """
    if zeta_convention not in ("dynamics", "table"):
        raise ValueError(f"unknown zeta_convention {zeta_convention!r}")
    d, u0 = p.d, p.u0
    V1 = unit_ball_volume(d)
    alpha = alpha_of(p)
    beta = beta_of(p)
    branch = gamma_branch(beta, d)
    if branch == "beta>d":
        gamma = u0**2 * V1**2 / (beta - d)
    elif branch == "beta=d":
        gamma = u0**2 * V1**2
    else:
        gamma = u0**2 * c2_constant(d, beta)
    sigma2 = zeta = None
    if p.one_tail:
        a, b = p.a, p.b
        if alpha == 2.0:
            sigma2 = u0 * V1 / (d + 2) * (1.0 / (a - 2 * b) + 1.0 / (a - 2))
        elif b != 1:
            zeta = u0 * V1 / max(1.0, b)
        elif zeta_convention == "dynamics":
            zeta = u0 * V1**2 * (d + alpha) * c1_constant(d, alpha)
        else:
            zeta = c1_constant(d, alpha) / (V1 * (d + alpha))
    else:
        a1, a2 = p.a1, p.a2
        gamma /= a1 + p.c1
        if alpha == 2.0:
            sigma2 = u0 * V1 / (d + 2) * (1.0 / ((a1 - 2) * a2) + 1.0 / (a1 * (a2 - 2)))
        elif a1 != a2:
            zeta = u0 * V1 / max(a1, a2)
        else:
            zeta = u0 * V1 * (1.0 / a1 + 1.0 / a2)
    coal = LOCAL if branch != "beta<d" else LONG_RANGE
    as_float = lambda v: None if v is None else float(v)
    return DerivedParams(alpha=float(alpha), beta=float(beta), gamma=float(gamma),
                         sigma2=as_float(sigma2), zeta=as_float(zeta), coalescence=coal)


def eta_N(dp, p, delta):
    """Vanishing rate of the rescaled identity probability."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta: must lie in (0, 1), got {delta}")
    branch = gamma_branch(dp.beta, p.d)
    if branch == "beta<d":
        return delta ** (dp.alpha - dp.beta)
    if branch == "beta=d":
        return delta ** (dp.alpha - p.d) / math.log(1.0 / delta)
    return delta ** (dp.alpha - p.d)


def check_asymptotics(p, theta):
    """Exponent bookkeeping for delta_N = N^-theta.

    lln_ok: N eta_N -> inf.  clt_ok: sqrt(eta_N / N) delta_N^min(d, c) -> 0,
    with c2 in place of c for two tails.  A log(N)^-1 factor in eta_N (the
    beta = d case) breaks exponent ties in the direction it pushes.
    """
    if not theta > 0:
        raise ValueError(f"theta: must be positive, got {theta}")
    dp = derive_params(p)
    d = p.d
    branch = gamma_branch(dp.beta, d)
    eta_exp = -theta * (dp.alpha - (dp.beta if branch == "beta<d" else d))
    has_log = branch == "beta=d"
    lln_exp = 1.0 + eta_exp
    c = p.c if p.one_tail else p.c2
    clt_exp = 0.5 * (eta_exp - 1.0) - theta * min(d, c)
    lln_ok = lln_exp > _EQ_TOL
    clt_ok = clt_exp < -_EQ_TOL or (has_log and abs(clt_exp) <= _EQ_TOL)
    return ValidityReport(lln_ok=bool(lln_ok), clt_ok=bool(clt_ok),
                          lln_exponent=lln_exp, clt_exponent=clt_exp)


def rescaled_rates(p, dp, N, delta, theta=None):
    """Scaling schedule for one (N, delta) pair."""
    if int(N) != N or N < 1:
        raise ValueError(f"N: must be a positive integer, got {N}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta: must lie in (0, 1), got {delta}")
    scale = delta**dp.alpha
    return ScalingSchedule(N=int(N), delta=float(delta), uN=p.u0 / N,
                           muN=scale * p.mu / N, etaN=eta_N(dp, p, delta),
                           theta=theta, time_factor=N / scale,
                           space_factor=1.0 / delta)


def schedule_for(p, N, delta=None, theta=None):
    """Convenience: derive params and build the schedule, with delta = N^-theta if not given."""
    dp = derive_params(p)
    if delta is None:
        if theta is None:
            raise ValueError("give delta or theta")
        delta = float(N) ** (-theta)
    return dp, rescaled_rates(p, dp, N, delta, theta)


def lineage_jump_rate(p):
    """Rate u0 V1 int nu of events marking a given lineage, before the 1/N thinning.

    Unrescaled time; multiply by 1/N and by the time dilation N/delta^alpha.
    """
    V1 = unit_ball_volume(p.d)
    if p.one_tail:
        return p.u0 * V1 / p.a
    return p.u0 * V1 / (p.a1 * p.a2)


def coincident_coalescence_rate(p):
    """int u^2 V_r2 nu for u0 in place of u_N (multiply by 1/N^2 and the time dilation)."""
    V1 = unit_ball_volume(p.d)
    if p.one_tail:
        return p.u0**2 * V1 / (p.a + p.c)
    return p.u0**2 * V1 / ((p.a1 + p.c1) * (p.a2 + p.c2))


# serialisation

def to_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if v is None and isinstance(obj, RegimeParams):
            continue
        out[f.name] = v
    return out


def from_dict(cls, data):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"unknown field(s) for {cls.__name__}: {', '.join(unknown)}")
    return cls(**data)


def to_json(obj):
    return json.dumps(to_dict(obj), indent=2)


def from_json(cls, text):
    return from_dict(cls, json.loads(text))
