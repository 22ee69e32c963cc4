"""Ball and lens volumes, the C1/C2 lens constants, uniform ball sampling.

The lens volume V_r(x, y) is the volume of B(x, r) n B(y, r).  It only
depends on h = |x - y|, and vanishes for h >= 2r.
"""

import numpy as np
from scipy import integrate, special


def unit_ball_volume(d):
    """Volume V_1 of the unit ball in R^d."""
    d = _check_dim(d)
    return np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0)


def lens_volume(d, r, h):
    """Volume of the intersection of two radius-r balls whose centres are h apart.

    Vectorised over `h` (and `r`).  Closed forms are used for d <= 3; for
    larger d the lens is twice a spherical cap, written with the regularised
    incomplete beta function.
    """
    d = _check_dim(d)
    r = np.asarray(r, dtype=float)
    h = np.abs(np.asarray(h, dtype=float))
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    x = np.clip(h / (2.0 * r), 0.0, 1.0)
    if d == 1:
        out = 2.0 * r * (1.0 - x)
    elif d == 2:
        out = r**2 * (2.0 * np.arccos(x) - 2.0 * x * np.sqrt(1.0 - x * x))
    elif d == 3:
        # pi (4r + h)(2r - h)^2 / 12 written in x = h / 2r
        out = (2.0 * np.pi / 3.0) * r**3 * (2.0 + x) * (1.0 - x) ** 2
    else:
        out = unit_ball_volume(d) * r**d * special.betainc((d + 1) / 2.0, 0.5, 1.0 - x * x)
    out = np.where(x >= 1.0, 0.0, out)
    return out[()] if out.ndim == 0 else out


def _lens_power_integral(d, p):
    # int_0^inf V_r(0, e1) r^(-1-d-p) dr for p > 0.
    # On [1, inf) substitute t = 1/r: V_{1/t}(0, e1) = t^-d V_1(0, t e1), which
    # leaves int_0^1 V_1(0, t e1) t^(p-1) dt, an algebraic endpoint weight.
    def head_f(r):
        return lens_volume(d, r, 1.0) * r ** (-1.0 - d - p)

    head, _ = integrate.quad(head_f, 0.5, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(lambda t: lens_volume(d, 1.0, t), 0.0, 1.0,
                             weight="alg", wvar=(p - 1.0, 0.0),
                             epsabs=0.0, epsrel=1e-12, limit=200)
    return head + tail


def c2_constant(d, beta):
    """C2_{d,beta} = int_0^inf V_r(0, e1) r^(-1-d-beta) dr, defined for 0 < beta < d."""
    d = _check_dim(d)
    if not 0.0 < beta < d:
        raise ValueError(f"c2_constant needs 0 < beta < d, got beta={beta}, d={d}")
    return _lens_power_integral(d, beta)


def c1_constant(d, alpha):
    """C1_{d,alpha} = int_0^inf V_r(0, e1) / V_r^2 r^(-1-alpha) dr for 0 < alpha < 2.

    Since V_r = V_1 r^d this is the C2-type integral at exponent d + alpha
    divided by V_1^2.
    """
    d = _check_dim(d)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"c1_constant needs 0 < alpha < 2, got {alpha}")
    return _lens_power_integral(d, d + alpha) / unit_ball_volume(d) ** 2


def sample_uniform_ball(rng, d, center, r, size=None):
    """Draw point(s) uniformly from B(center, r).

    `r` may be an array broadcasting against `size`; the result has shape
    size + (d,) (or (d,) when size is None).
    """
    d = _check_dim(d)
    n = 1 if size is None else int(np.prod(size))
    shape = () if size is None else tuple(np.atleast_1d(size))
    center = np.asarray(center, dtype=float)
    r = np.asarray(r, dtype=float)
    if d == 1:
        y = 2.0 * rng.random((n, 1)) - 1.0
    else:
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        y = g * rng.random((n, 1)) ** (1.0 / d)
    y = y.reshape(shape + (d,))
    return center + r[..., None] * y if r.ndim else center + r * y


def _check_dim(d):
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    return int(d)
