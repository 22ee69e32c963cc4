"""Limit objects of the fluctuation theory, evaluated numerically.

* D_alpha, the stable generator zeta int_0^inf (ball average - phi) r^-(1+alpha) dr,
  with Fourier symbol -zeta kappa_{d,alpha} |xi|^alpha (or (sigma2/2) Laplacian).
* L^N, the rescaled prelimit generator of a single lineage (d = 1).
* G_t, the transition density of the stable / Brownian limit.
* K_beta pairings, the noise covariance <Q, phi x phi>, and the
  Wright-Malecot function F with its pairing against sampling densities.

All densities and F go through `_fourier.radial_inverse_fourier`.
"""

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, interpolate, signal, special

from . import _fourier
from .geometry import unit_ball_volume
from .regimes import LOCAL, LONG_RANGE, DerivedParams, gamma_branch
from .testfunctions import BOUNDED, TestFunction


@dataclass(frozen=True)
class KernelSpec:
    d: int
    alpha: float
    diffusivity: float
    kappa: Optional[float] = None

    def symbol(self, k):
        """Nonnegative radial symbol: D_alpha e^{i xi x} = -symbol(|xi|) e^{i xi x}."""
        k = np.abs(np.asarray(k, dtype=float))
        if self.alpha == 2.0:
            return 0.5 * self.diffusivity * k**2
        return self.diffusivity * self.kappa * k**self.alpha

    @property
    def rate(self):
        """Coefficient c in symbol = c |xi|^alpha."""
        return 0.5 * self.diffusivity if self.alpha == 2.0 else self.diffusivity * self.kappa


def kernel_spec(dp, d):
    """KernelSpec of the limiting lineage motion for derived parameters `dp`."""
    if dp.alpha == 2.0:
        return KernelSpec(d=d, alpha=2.0, diffusivity=dp.sigma2)
    return KernelSpec(d=d, alpha=dp.alpha, diffusivity=dp.zeta,
                      kappa=symbol_constant(d, dp.alpha))


def ball_transform(d, s):
    """m_d(s): Fourier transform of the uniform law on the unit ball at radius s."""
    s = np.asarray(s, dtype=float)
    nu = d / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        big = special.gamma(nu + 1) * (2.0 / s) ** nu * special.jv(nu, s)
    # 0F1(; nu+1; -s^2/4) near the origin
    small = 1.0 - s**2 / (4 * (nu + 1)) + s**4 / (32 * (nu + 1) * (nu + 2))
    return np.where(s < 1e-3, small, big)


def _bessel_zeros(nu, j0, n):
    # McMahon start, then Newton on J_nu
    j = np.arange(j0, j0 + n, dtype=float)
    b = (j + nu / 2 - 0.25) * np.pi
    x = b - (4 * nu**2 - 1) / (8 * b)
    for _ in range(6):
        x = x - special.jv(nu, x) / special.jvp(nu, x)
    return x


@functools.lru_cache(maxsize=None)
def symbol_constant(d, alpha):
    """kappa_{d,alpha} = int_0^inf (1 - m_d(s)) s^-(1+alpha) ds, for 0 < alpha < 2."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"symbol_constant needs 0 < alpha < 2, got {alpha}")
    nu = d / 2.0
    s0 = 1.0
    # termwise integral of 1 - 0F1(; nu+1; -s^2/4) on [0, s0]
    head = 0.0
    coef = 1.0
    for j in range(1, 30):
        coef *= -0.25 / (j * (nu + j))
        head -= coef * s0 ** (2 * j - alpha) / (2 * j - alpha)
    f = lambda s: ball_transform(d, s) * s ** (-1.0 - alpha)
    z1 = _bessel_zeros(nu, 1, 1)[0]
    zeros = lambda j0, n: _bessel_zeros(nu, j0, n)
    osc = _fourier.oscillatory_integral(f, zeros, np.linspace(s0, z1, 9), rtol=1e-13)
    return head + s0 ** (-alpha) / alpha - osc


def symbol_constant_closed(d, alpha):
    """kappa via the fractional-Laplacian normalising constant (used as a cross-check)."""
    V1 = unit_ball_volume(d)
    return (np.pi ** (d / 2) * abs(special.gamma(-alpha / 2))
            / (V1 * (d + alpha) * 2**alpha * special.gamma((d + alpha) / 2)))


# stable densities

def _stable_series_terms(spec, t, nterms=80):
    # G_t(r) ~ sum_n coef_n r^-(d + n alpha): transform of the non-smooth
    # powers |k|^{n alpha} in exp(-t c |k|^alpha).
    d, al = spec.d, spec.alpha
    n = np.arange(1, nterms + 1, dtype=float)
    x = -n * al / 2
    logmag = (n * np.log(t * spec.rate) - special.gammaln(n + 1) + n * al * np.log(2.0)
              - 0.5 * d * np.log(np.pi) + special.gammaln((d + n * al) / 2)
              - special.gammaln(x))
    sign = (-1.0) ** n * special.gammasgn(x)
    with np.errstate(over="ignore"):
        coef = np.where(np.isfinite(special.gammaln(x)), sign * np.exp(logmag), 0.0)
    # exact poles of Gamma(-n alpha/2) give vanishing terms
    coef = np.where(np.abs(x - np.round(x)) < 1e-12, 0.0, coef)
    return n, coef


def _stable_series(spec, t, r, tol=1e-14):
    """Large-r series value at r, or None when it is not accurate there."""
    n, coef = _stable_series_terms(spec, t)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = coef * r ** (-spec.d - n * spec.alpha)
    mag = np.abs(terms)
    nz = mag > 0
    if not np.any(nz) or not np.all(np.isfinite(mag)):
        return None
    # stop at the smallest nonzero term (asymptotic series for alpha > 1)
    idx = np.flatnonzero(nz)
    stop = idx[np.argmin(mag[idx])]
    total = terms[: stop + 1].sum()
    if total <= 0 or mag[stop] > tol * total or mag[: stop + 1].max() > 1e3 * total:
        return None
    return total


def stable_density(spec, t, r):
    """Radial value of the transition density G_t at |x| = r (vectorised over r)."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    d = spec.d
    if spec.alpha == 2.0:
        v = spec.diffusivity * t
        out = (2 * np.pi * v) ** (-d / 2) * np.exp(-r**2 / (2 * v))
        return out[()] if out.ndim == 0 else out
    c = spec.rate * t
    kscale = c ** (-1.0 / spec.alpha)
    g = lambda k: np.exp(-c * k**spec.alpha)
    out = np.empty(r.shape)
    for i, ri in np.ndenumerate(r):
        val = _stable_series(spec, t, ri) if ri > 3.0 / kscale else None
        if val is None:
            val = _fourier.radial_inverse_fourier(g, d, float(ri), k_scale=kscale)
        out[i] = val
    return out[()] if out.ndim == 0 else out


def stable_tail_mass(spec, t, R):
    """Mass of G_t outside the ball of radius R, from the large-r series."""
    if spec.alpha == 2.0:
        v = spec.diffusivity * t
        return special.gammaincc(spec.d / 2, R**2 / (2 * v))
    if _stable_series(spec, t, R) is None:
        raise ValueError("series not accurate at this radius; take R larger")
    n, coef = _stable_series_terms(spec, t)
    surf = 2 * np.pi ** (spec.d / 2) / special.gamma(spec.d / 2)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = coef * surf * R ** (-n * spec.alpha) / (n * spec.alpha)
    mag = np.abs(terms)
    idx = np.flatnonzero(mag > 0)
    stop = idx[np.argmin(mag[idx])]
    return terms[: stop + 1].sum()


# generators

def _radial_nodes(lo, hi, scale, per_panel_width=0.25):
    # composite GL nodes/weights on [lo, hi]: graded near lo, uniform after
    graded = lo * 2.0 ** np.arange(0, 60)
    graded = graded[graded < min(scale, hi)]
    n_uni = max(1, int(np.ceil((hi - min(scale, hi)) / (per_panel_width * scale))))
    uni = np.linspace(min(scale, hi), hi, n_uni + 1)
    edges = np.unique(np.concatenate([graded, uni, [lo, hi]]))
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * _fourier._GL_X
    w = half[:, None] * _fourier._GL_W
    return x.ravel(), w.ravel()


def _sphere_mean(phi, x, rho):
    """Average of phi over the sphere |y - x| = rho, vectorised over rho."""
    d = phi.d
    x = np.asarray(x, dtype=float).reshape(d)
    rho = np.asarray(rho, dtype=float)
    if d == 1:
        return 0.5 * (phi.f(x + rho[:, None]) + phi.f(x - rho[:, None]))
    reach = float(np.max(rho)) / phi.scale
    m = int(max(64, 24 * reach))
    if d == 2:
        th = 2 * np.pi * np.arange(m) / m
        u = np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts = x + rho[:, None, None] * u[None]
        return phi.f(pts).mean(axis=1)
    if d == 3:
        mu, wmu = np.polynomial.legendre.leggauss(max(32, m // 2))
        th = 2 * np.pi * np.arange(m) / m
        s = np.sqrt(1 - mu**2)
        u = np.stack([np.outer(s, np.cos(th)), np.outer(s, np.sin(th)),
                      np.repeat(mu[:, None], m, axis=1)], axis=-1).reshape(-1, 3)
        w = np.repeat(wmu / 2, m) / m
        out = np.empty(len(rho))
        for i, ri in enumerate(rho):
            out[i] = phi.f(x + ri * u) @ w
        return out
    raise ValueError("sphere means implemented for d <= 3")


def apply_D_alpha(spec, phi, x):
    """D_alpha phi(x).

    For alpha < 2 the ball-average form is rewritten (Fubini) as
    zeta d/(d+alpha) int_0^inf (A(rho) - phi(x)) rho^-(1+alpha) d rho with A
    the sphere mean; the first sliver uses A - phi ~ rho^2 Lap/(2d).
    """
    if phi.laplacian is None:
        raise ValueError("apply_D_alpha needs the Laplacian of the test function")
    d, al = spec.d, spec.alpha
    x = np.asarray(x, dtype=float).reshape(d)
    lap0 = float(phi.lap(x[None])[0])
    if al == 2.0:
        return 0.5 * spec.diffusivity * lap0
    phi0 = float(phi.f(x[None])[0])
    s = phi.scale
    r0 = 1e-4 * s
    taylor = lap0 * r0 ** (2 - al) / (2 * d * (2 - al))
    if phi.bilaplacian is not None:
        taylor += float(phi.bilap(x[None])[0]) * r0 ** (4 - al) / (8 * d * (d + 2) * (4 - al))
    if phi.decay == BOUNDED:
        r1 = 8 * s if phi.period is None else 4 * phi.period
    else:
        r1 = float(np.max(np.linalg.norm(np.stack([phi.lo, phi.hi]) - x, axis=1))) + 2 * s
        r1 = max(r1, 8 * s)
    rho, w = _radial_nodes(r0, r1, s)
    body = np.sum((_sphere_mean(phi, x, rho) - phi0) * rho ** (-1 - al) * w)
    if phi.decay == BOUNDED and _is_constant(phi):
        return spec.diffusivity * d / (d + al) * (taylor + body)
    tail = -phi0 * r1 ** (-al) / al
    if phi.decay == BOUNDED:
        if phi.period is None:
            raise ValueError("bounded test functions need a period for the tail integral")
        half = 0.5 * phi.period
        f = lambda r: _sphere_mean(phi, x, r.ravel()).reshape(r.shape) * r ** (-1 - al)
        edges = lambda j0, n: r1 + half * np.arange(j0, j0 + n)
        tail += _fourier.oscillatory_integral(f, edges, np.array([r1, r1 + half]),
                                              rtol=1e-12, atol=1e-14)
    return spec.diffusivity * d / (d + al) * (taylor + body + tail)


def _is_constant(phi):
    probe = phi.f(phi.center + np.linspace(-3, 3, 7)[:, None] * np.ones(phi.d))
    return np.ptp(probe) == 0


def double_ball_average(phi, x, r1, r2):
    """Mean of phi(x + r1 Y1 + r2 Y2) with Y1, Y2 uniform on [-1, 1] (d = 1)."""
    if phi.antiderivative2 is not None:
        F = phi.antiderivative2
        r1, r2 = float(r1), float(r2)
        if r1 + r2 < 1e-3 * phi.scale and phi.laplacian is not None:
            p = np.array([[x]])
            m2 = (r1**2 + r2**2) / 6.0
            m4 = ((r1**4 + r2**4) / 5.0 + 2.0 * r1**2 * r2**2 / 3.0) / 24.0
            v = float(phi.f(p)[0]) + m2 * float(phi.lap(p)[0])
            if phi.bilaplacian is not None:
                v += m4 * float(phi.bilap(p)[0])
            return v
        return float((F(x + r1 + r2) - F(x + r1 - r2) - F(x - r1 + r2) + F(x - r1 - r2))
                     / (4.0 * r1 * r2))
    # trapezoidal density of r1 Y1 + r2 Y2
    lo, hi = abs(r1 - r2), r1 + r2
    top = 1.0 / (2.0 * max(r1, r2))

    def dens(z):
        z = abs(z)
        return top if z <= lo else top * (hi - z) / (hi - lo)

    g = lambda z: float(phi(np.array([x + z]))[0]) * dens(z)
    pts = sorted({-lo, lo, *(b - x for b in phi.breakpoints if -hi < b - x < hi)})
    return integrate.quad(g, -hi, hi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-11)[0]


def apply_L_N(p, dp, delta, phi, x):
    """Rescaled prelimit lineage generator L^N phi(x) in d = 1."""
    if p.d != 1:
        raise ValueError("apply_L_N is implemented for d = 1 only")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    x = float(x)
    phi0 = float(phi(np.array([x]))[0])
    V1 = unit_ball_volume(1)
    s_far = abs(x - float(phi.center[0])) + 20 * phi.scale
    opts = dict(limit=400, epsabs=1e-11, epsrel=1e-9)
    if p.one_tail:
        a, b = p.a, p.b
        h = lambda s: (double_ball_average(phi, x, delta ** (1 - b) * s**b, s) - phi0) * s ** (-1 - a)
        brk = [q * phi.scale for q in (0.05, 0.2, 0.5, 1, 2, 4) if delta < q * phi.scale < s_far]
        near = integrate.quad(h, delta, max(s_far, 2 * delta), points=brk or None, **opts)[0]
        s1 = max(s_far, 2 * delta)
        hf = lambda s: double_ball_average(phi, x, delta ** (1 - b) * s**b, s) * s ** (-1 - a)
        far = integrate.quad(hf, s1, np.inf, **opts)[0] - phi0 * s1 ** (-a) / a
        total = delta**a * (near + far)
    else:
        a1, a2 = p.a1, p.a2

        def inner(s1):
            h = lambda s2: (double_ball_average(phi, x, s1, s2) - phi0) * s2 ** (-1 - a2)
            return integrate.quad(h, delta, np.inf, limit=200, epsabs=1e-12,
                                  epsrel=1e-9)[0] * s1 ** (-1 - a1)

        total = delta ** (a1 + a2) * integrate.quad(inner, delta, np.inf, limit=200,
                                                    epsabs=1e-12, epsrel=1e-9)[0]
    return p.u0 * V1 * delta ** (-dp.alpha) * total


# correlation measure, noise and Wright-Malecot

def riesz_constant(d, beta):
    """r_{d,beta} with int e^{-i k.x} |x|^-beta dx = r_{d,beta} |k|^(beta - d)."""
    if not 0.0 < beta < d:
        raise ValueError("Riesz transform constant needs 0 < beta < d")
    return (np.pi ** (d / 2) * 2 ** (d - beta) * special.gamma((d - beta) / 2)
            / special.gamma(beta / 2))


def _support_1d(f):
    if not f.integrable:
        raise ValueError("pairing needs integrable (Gaussian or compactly supported) test functions")
    return float(f.lo[0]), float(f.hi[0])


def _cross_correlation_1d(f, g):
    """h -> int f(y + h) g(y) dy with its support [hlo, hhi]."""
    flo, fhi = _support_1d(f)
    glo, ghi = _support_1d(g)

    def C(h):
        lo, hi = max(glo, flo - h), min(ghi, fhi - h)
        if hi <= lo:
            return 0.0
        pts = sorted({q for q in list(g.breakpoints) + [b - h for b in f.breakpoints] if lo < q < hi})
        integrand = lambda y: float(f(np.array([y + h]))[0] * g(np.array([y]))[0])
        return integrate.quad(integrand, lo, hi, points=pts or None, limit=200,
                              epsabs=1e-14, epsrel=1e-11)[0]

    return C, flo - ghi, fhi - glo


def _lag_points(f, g, lo, hi):
    pts = {0.0}
    for a in f.breakpoints:
        for b in g.breakpoints:
            pts.add(a - b)
    return sorted(q for q in pts if lo < q < hi)


def _grid_correlation(f, g, n_per_scale=8):
    """Cross-correlation C(h) = int f(y + h) g(y) dy on a cell-centred lattice (d >= 2)."""
    d = f.d
    step = min(f.scale, g.scale) / n_per_scale

    def sample(fn):
        lo = np.floor(fn.lo / step) * step
        hi = np.ceil(fn.hi / step) * step
        axes = [lo[i] + step * (np.arange(int(round((hi[i] - lo[i]) / step))) + 0.5) for i in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return fn.f(mesh), lo

    fv, flo = sample(f)
    gv, glo = sample(g)
    corr = signal.fftconvolve(fv, gv[(slice(None, None, -1),) * d], mode="full") * step**d
    axes = [flo[i] - glo[i] + step * (np.arange(corr.shape[i]) - (gv.shape[i] - 1)) for i in range(d)]
    lags = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return corr, np.linalg.norm(lags, axis=-1), step


def k_beta_pairing(dp, d, f, g):
    """int int f(x1) g(x2) K_beta(dx1, dx2)."""
    local = gamma_branch(dp.beta, d) != "beta<d"
    if d == 1:
        if local:
            flo, fhi = _support_1d(f)
            glo, ghi = _support_1d(g)
            lo, hi = max(flo, glo), min(fhi, ghi)
            if hi <= lo:
                return 0.0
            pts = sorted({q for q in f.breakpoints + g.breakpoints if lo < q < hi})
            h = lambda y: float(f(np.array([y]))[0] * g(np.array([y]))[0])
            return integrate.quad(h, lo, hi, points=pts or None, limit=400,
                                  epsabs=1e-14, epsrel=1e-11)[0]
        C, hlo, hhi = _cross_correlation_1d(f, g)
        total = 0.0
        opts = dict(weight="alg", wvar=(-dp.beta, 0.0), limit=400, epsabs=1e-14, epsrel=1e-10)
        bps = _lag_points(f, g, hlo, hhi)
        for sign, end in ((1.0, hhi), (-1.0, -hlo)):
            if end <= 0:
                continue
            cuts = [0.0] + sorted(sign * q for q in bps if 0 < sign * q < end) + [end]
            for a, b in zip(cuts[:-1], cuts[1:]):
                if a == 0.0:
                    total += integrate.quad(lambda u: C(sign * u), 0.0, b, **opts)[0]
                else:
                    total += integrate.quad(lambda u: C(sign * u) * u ** (-dp.beta), a, b,
                                            limit=400, epsabs=1e-14, epsrel=1e-10)[0]
        return total
    corr, dist, step = _grid_correlation(f, g)
    if local:
        return float(corr[dist < 0.5 * step].sum())
    beta = dp.beta
    with np.errstate(divide="ignore"):
        w = dist ** (-beta) * step**d
    # cells near the singularity get their exact cell integral of |h|^-beta
    near = dist < (_NEAR_CELLS + 0.5) * step
    w[near] = _riesz_cell_weights(d, beta, step, dist[near])
    return float(np.sum(w * corr))


_NEAR_CELLS = 4


@functools.lru_cache(maxsize=None)
def _riesz_cell_table(d, beta):
    # int over the unit cell centred at integer offset m of |h|^-beta, keyed by |m|^2
    x, wx = np.polynomial.legendre.leggauss(24)
    x, wx = 0.5 * x, 0.5 * wx
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wts = np.prod(np.meshgrid(*([wx] * d), indexing="ij"), axis=0)
    table = {}
    rng = range(-_NEAR_CELLS, _NEAR_CELLS + 1)
    for m in np.stack(np.meshgrid(*([np.array(rng)] * d), indexing="ij"), -1).reshape(-1, d):
        key = int(m @ m)
        if key in table:
            continue
        if key == 0:
            # divergence theorem: d - beta times the integral equals the flux of
            # |h|^-beta h through the faces, a smooth (d-1)-dimensional integral
            yg = np.meshgrid(*([x] * (d - 1)), indexing="ij")
            yw = np.prod(np.meshgrid(*([wx] * (d - 1)), indexing="ij"), axis=0)
            q = 0.25 + sum(g**2 for g in yg)
            table[key] = d / (d - beta) * float(np.sum(yw * q ** (-beta / 2)))
        else:
            r2 = sum((g + mi) ** 2 for g, mi in zip(grids, m))
            table[key] = float(np.sum(wts * r2 ** (-beta / 2)))
    return table


def _riesz_cell_weights(d, beta, step, dist):
    table = _riesz_cell_table(d, float(beta))
    keys = np.rint((dist / step) ** 2).astype(int)
    return step ** (d - beta) * np.array([table[k] for k in keys])


def q_pairing(dp, d, phi_spatial, phi_type_l2):
    """<Q, phi x phi> = gamma K_beta(phi, phi) times the type factor <psi,psi> - (int psi)^2."""
    return dp.gamma * k_beta_pairing(dp, d, phi_spatial, phi_spatial) * phi_type_l2


def _wm_transform(dp, d, mu):
    spec = kernel_spec(dp, d)
    if gamma_branch(dp.beta, d) == "beta<d":
        rc = riesz_constant(d, dp.beta)
        return lambda k: rc * k ** (dp.beta - d) / (2 * mu + 2 * spec.symbol(k))
    if dp.coalescence == LONG_RANGE:
        raise ValueError("long-range coalescence needs beta < d")
    return lambda k: 1.0 / (2 * mu + 2 * spec.symbol(k))


def wm_function(dp, d, mu, r):
    """Wright-Malecot function F(r) (vectorised over r > 0)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("the Wright-Malecot function is evaluated at r > 0 only")
    g = _wm_transform(dp, d, mu)
    out = np.array([_fourier.radial_inverse_fourier(g, d, float(ri)) for ri in r.ravel()])
    out = dp.gamma * out.reshape(r.shape)
    return out[()] if out.ndim == 0 else out


def wm_table(dp, d, mu, r_min, r_max, n=200):
    """Log-spaced (r, F) table and a log-log cubic interpolant of F."""
    rs = np.geomspace(r_min, r_max, n)
    F = wm_function(dp, d, mu, rs)
    spline = interpolate.CubicSpline(np.log(rs), np.log(F))
    return rs, F, lambda r: np.exp(spline(np.log(r)))


def _check_density(phi, name):
    if not phi.integrable:
        raise ValueError(f"{name}: must be a probability density")
    if phi.mass is not None:
        mass = phi.mass
    elif phi.d == 1:
        lo, hi = _support_1d(phi)
        mass = integrate.quad(lambda y: float(phi(np.array([y]))[0]), lo, hi,
                              points=[q for q in phi.breakpoints if lo < q < hi] or None,
                              limit=400)[0]
    else:
        step = phi.scale / 16
        axes = [np.arange(lo + 0.5 * step, hi, step) for lo, hi in zip(phi.lo, phi.hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        mass = float(phi.f(mesh).sum()) * step**phi.d
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"{name}: integrates to {mass}, not 1")
    probe = np.linspace(phi.lo, phi.hi, 101)
    if np.any(phi.f(probe) < 0):
        raise ValueError(f"{name}: takes negative values")


def wm_pairing(dp, d, mu, phi, psi):
    """int int F(|x - y|) phi(x) psi(y) dx dy for probability densities phi, psi."""
    _check_density(phi, "phi")
    _check_density(psi, "psi")
    if d == 1:
        C, hlo, hhi = _cross_correlation_1d(phi, psi)
        Fc = functools.lru_cache(maxsize=None)(lambda h: float(wm_function(dp, d, mu, h)))
        total = 0.0
        bps = _lag_points(phi, psi, hlo, hhi)
        for sign, end in ((1.0, hhi), (-1.0, -hlo)):
            if end <= 0:
                continue
            start = max(0.0, sign * (hlo if sign > 0 else hhi))
            cuts = sorted({start, end, *[sign * q for q in bps if start < sign * q < end]})
            for a, b in zip(cuts[:-1], cuts[1:]):
                total += integrate.quad(lambda u: Fc(u) * C(sign * u) if u > 0 else 0.0,
                                        a, b, limit=200, epsabs=1e-12, epsrel=1e-8)[0]
        return total
    corr, dist, step = _grid_correlation(phi, psi)
    nz = corr != 0
    r_min = max(0.25 * step, 1e-3)
    _, _, F = wm_table(dp, d, mu, r_min, max(float(dist[nz].max()), 2 * r_min) * 1.01, 160)
    vals = np.where(dist > 0.5 * step, F(np.maximum(dist, r_min)), 0.0)
    centre = dist < 0.5 * step
    if np.any(centre & nz):
        rc = step / unit_ball_volume(d) ** (1 / d)
        surf = d * unit_ball_volume(d)
        avg = integrate.quad(lambda r: float(F(max(r, 1e-12))) * surf * r ** (d - 1),
                             0, rc, limit=200)[0] / step**d
        vals[centre] = avg
    return float(np.sum(vals * corr) * step**d)


def unit_diffusivity_params(alpha, beta, d, gamma=1.0):
    """DerivedParams with unit zeta / sigma2, used for the normalised comparison curves."""
    coal = LONG_RANGE if gamma_branch(beta, d) == "beta<d" else LOCAL
    return DerivedParams(alpha=alpha, beta=beta, gamma=gamma,
                         sigma2=1.0 if alpha == 2.0 else None,
                         zeta=None if alpha == 2.0 else 1.0, coalescence=coal)


def normalised_wm_curves(d, pairs, mu, rs, r0=3.0):
    """F(r) / F(r0) for each (alpha, beta) pair; each curve is normalised separately."""
    out = {}
    for alpha, beta in pairs:
        dp = unit_diffusivity_params(alpha, beta, d)
        out[(alpha, beta)] = wm_function(dp, d, mu, rs) / wm_function(dp, d, mu, r0)
    return out
