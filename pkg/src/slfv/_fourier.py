"""Radial Fourier inversion by summation between kernel zeros.

Integrals of the form int_0^inf f(k) K(k r) dk with an oscillating kernel K
are cut at the zeros of K.  The first interval gets a geometrically graded
Gauss-Legendre mesh (it carries any k -> 0 singularity and the scale of f);
the others are single Gauss-Legendre panels.  The partial sums then form an
alternating sequence: it is truncated once the terms fall below tolerance
(the tail of an alternating series is bounded by its next term), and
accelerated with Wynn's epsilon algorithm when f decays only like a power.
"""

import numpy as np
from scipy import integrate, special

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_J0_ZEROS = special.jn_zeros(0, 400)


def panel_integral(f, edges):
    """Sum of Gauss-Legendre integrals of f over consecutive panels; one value per panel."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    k = 0.5 * (a + b)[:, None] + half[:, None] * _GL_X
    return (f(k) @ _GL_W) * half


def graded_edges(top, levels=80, ratio=0.5):
    """Panel edges 0 < top*ratio^levels < ... < top*ratio < top."""
    return np.concatenate([[0.0], top * ratio ** np.arange(levels, -1, -1)])


def kernel_zeros(d, j0, n):
    """Zeros j0 .. j0+n-1 (1-based) of cos x (d=1), J0(x) (d=2), sin x (d=3)."""
    j = np.arange(j0, j0 + n, dtype=float)
    if d == 1:
        return (j - 0.5) * np.pi
    if d == 3:
        return j * np.pi
    out = np.empty(n)
    small = j <= len(_J0_ZEROS)
    out[small] = _J0_ZEROS[(j[small] - 1).astype(int)]
    b = (j[~small] - 0.25) * np.pi
    # McMahon expansion; ample accuracy for panel edges this far out
    out[~small] = b + 1.0 / (8 * b) - 124.0 / (3 * (8 * b) ** 3)
    return out


def wynn_epsilon(seq):
    """Wynn epsilon extrapolation of a sequence of partial sums."""
    prev = np.zeros(len(seq) + 1)
    cur = np.asarray(seq, dtype=float)
    best = cur[-1]
    even = True
    while len(cur) > 1:
        diff = np.diff(cur)
        if np.any(diff == 0) or not np.all(np.isfinite(diff)):
            break
        nxt = prev[1:len(cur)] + 1.0 / diff
        prev, cur = cur, nxt
        even = not even
        if even and np.isfinite(cur[-1]):
            best = cur[-1]
    return best


def oscillatory_integral(f, zeros, first_edges, rtol=1e-11, atol=1e-300,
                         max_segments=400000):
    """int_0^inf f, with `zeros(j0, n)` giving the segment edges beyond the first panel set."""
    total = panel_integral(f, first_edges).sum()
    sums = [total]
    j0, batch = 1, 32
    last_est = None
    while j0 < max_segments:
        edges = zeros(j0, batch + 1)
        c = panel_integral(f, edges)
        part = total + np.cumsum(c)
        total = part[-1]
        sums.extend(part.tolist())
        j0 += batch
        scale = max(abs(total), atol)
        if np.all(np.abs(c[-3:]) <= rtol * scale):
            return total
        if len(sums) >= 24:
            est = wynn_epsilon(sums[-40:])
            est2 = wynn_epsilon(sums[-41:-1])
            if abs(est - est2) <= rtol * max(abs(est), atol):
                if last_est is not None and abs(est - last_est) <= 10 * rtol * max(abs(est), atol):
                    return est
            last_est = est
        batch = min(2 * batch, 4096)
    raise RuntimeError("oscillatory integral did not converge")


def radial_inverse_fourier(g, d, r, k_scale=1.0, rtol=1e-11):
    """(2 pi)^-d int_{R^d} e^{i k.x} g(|k|) dk at |x| = r, for d in {1, 2, 3}.

    `g` is vectorised over k > 0 and `k_scale` is the scale on which it
    varies (used only when r = 0).
    """
    if d not in (1, 2, 3):
        raise ValueError("radial inversion implemented for d <= 3")
    if r == 0:
        surf = 2 * np.pi ** (d / 2) / special.gamma(d / 2)
        h = lambda k: g(np.asarray(k)) * k ** (d - 1)
        head = integrate.quad(h, 0, k_scale, epsabs=0, epsrel=1e-12, limit=200)[0]
        tail = integrate.quad(h, k_scale, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]
        return surf * (head + tail) / (2 * np.pi) ** d
    if d == 1:
        f = lambda k: g(k) * np.cos(k * r)
        pref = 1.0 / np.pi
    elif d == 2:
        f = lambda k: g(k) * special.j0(k * r) * k
        pref = 1.0 / (2 * np.pi)
    else:
        f = lambda k: g(k) * np.sin(k * r) * k
        pref = 1.0 / (2 * np.pi**2 * r)
    z1 = kernel_zeros(d, 1, 1)[0] / r
    zeros = lambda j0, n: kernel_zeros(d, j0, n) / r
    return pref * oscillatory_integral(f, zeros, graded_edges(z1), rtol=rtol)
