"""Spatial test functions with the extra structure the quadratures need.

A TestFunction bundles the evaluator with an effective support box, a
length scale, optional Laplacian / bi-Laplacian, and for d = 1 optional
first and second antiderivatives (which make ball averages exact).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

GAUSSIAN = "Gaussian"
COMPACT = "CompactSupport"
BOUNDED = "Bounded"


@dataclass
class TestFunction:
    f: Callable
    d: int
    decay: str
    center: np.ndarray
    scale: float
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    laplacian: Optional[Callable] = None
    bilaplacian: Optional[Callable] = None
    antiderivative: Optional[Callable] = None
    antiderivative2: Optional[Callable] = None
    period: Optional[float] = None
    mass: Optional[float] = None
    breakpoints: tuple = field(default_factory=tuple)

    __test__ = False  # keep pytest from collecting this class

    def points(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim < 2 or x.shape[-1] != 1):
            x = x[..., None]
        return x

    def __call__(self, x):
        return self.f(self.points(x))

    def lap(self, x):
        if self.laplacian is None:
            raise ValueError("test function has no Laplacian evaluator")
        return self.laplacian(self.points(x))

    def bilap(self, x):
        if self.bilaplacian is None:
            raise ValueError("test function has no bi-Laplacian evaluator")
        return self.bilaplacian(self.points(x))

    @property
    def integrable(self):
        return self.decay in (GAUSSIAN, COMPACT)

    def translated(self, shift):
        """Same function moved by `shift`."""
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (self.d,))
        s1 = float(shift[0])

        def mv(fn, scalar=False):
            if fn is None:
                return None
            if scalar:
                return lambda x: fn(np.asarray(x) - s1)
            return lambda x: fn(x - shift)

        return TestFunction(
            f=mv(self.f), d=self.d, decay=self.decay, center=self.center + shift,
            scale=self.scale,
            lo=None if self.lo is None else self.lo + shift,
            hi=None if self.hi is None else self.hi + shift,
            laplacian=mv(self.laplacian), bilaplacian=mv(self.bilaplacian),
            antiderivative=mv(self.antiderivative, True),
            antiderivative2=mv(self.antiderivative2, True),
            period=self.period, mass=self.mass,
            breakpoints=tuple(b + s1 for b in self.breakpoints) if self.d == 1 else (),
        )


def _vec(v, d):
    return np.broadcast_to(np.asarray(v, dtype=float), (d,)).copy()


def gaussian(d=1, center=0.0, width=1.0, amplitude=1.0):
    """amplitude * exp(-|x - center|^2 / (2 width^2))."""
    c = _vec(center, d)
    w2 = width**2

    def f(x):
        return amplitude * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * w2))

    def lap(x):
        q = np.sum((x - c) ** 2, axis=-1)
        return f(x) * (q / w2**2 - d / w2)

    def bilap(x):
        q = np.sum((x - c) ** 2, axis=-1)
        return f(x) * (q**2 / w2**4 - 2 * (d + 2) * q / w2**3 + d * (d + 2) / w2**2)

    anti = anti2 = None
    if d == 1:
        c0 = float(c[0])
        k1 = amplitude * width * np.sqrt(np.pi / 2)

        def anti(x):
            return k1 * special.erf((np.asarray(x) - c0) / (width * np.sqrt(2)))

        def anti2(x):
            y = np.asarray(x) - c0
            return y * anti(x) + amplitude * w2 * np.exp(-y * y / (2 * w2))

    reach = 12.0 * width
    return TestFunction(f=f, d=d, decay=GAUSSIAN, center=c, scale=float(width),
                        lo=c - reach, hi=c + reach, laplacian=lap, bilaplacian=bilap,
                        antiderivative=anti, antiderivative2=anti2,
                        mass=amplitude * (2 * np.pi * w2) ** (d / 2))


def gaussian_density(d=1, center=0.0, width=1.0):
    """Normal density with covariance width^2 I."""
    return gaussian(d, center, width, amplitude=(2 * np.pi * width**2) ** (-d / 2))


def box(lo, hi, height=1.0):
    """height times the indicator of the box [lo, hi] (an interval when d = 1)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = len(lo)

    def f(x):
        inside = np.all((x >= lo) & (x <= hi), axis=-1)
        return np.where(inside, height, 0.0)

    anti = anti2 = None
    bps = ()
    if d == 1:
        a, b = float(lo[0]), float(hi[0])
        bps = (a, b)

        def anti(x):
            return height * (np.clip(np.asarray(x), a, b) - a)

        def anti2(x):
            x = np.asarray(x)
            inner = np.clip(x, a, b) - a
            return height * (0.5 * inner**2 + (b - a) * np.maximum(x - b, 0.0))

    return TestFunction(f=f, d=d, decay=COMPACT, center=0.5 * (lo + hi),
                        scale=float(np.min(hi - lo)), lo=lo, hi=hi,
                        antiderivative=anti, antiderivative2=anti2,
                        mass=height * float(np.prod(hi - lo)), breakpoints=bps)


def uniform_block(lo, hi):
    """Uniform probability density on the box [lo, hi]."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    return box(lo, hi, height=1.0 / float(np.prod(hi - lo)))


def bump(d=1, center=0.0, radius=1.0, amplitude=1.0):
    """Smooth compactly supported bump exp(1 - 1/(1 - |y|^2/R^2))."""
    c = _vec(center, d)

    def f(x):
        q = np.sum((x - c) ** 2, axis=-1) / radius**2
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = amplitude * np.exp(1.0 - 1.0 / (1.0 - q))
        return np.where(q < 1.0, v, 0.0)

    bps = (float(c[0]) - radius, float(c[0]) + radius) if d == 1 else ()
    return TestFunction(f=f, d=d, decay=COMPACT, center=c, scale=float(radius),
                        lo=c - radius, hi=c + radius, breakpoints=bps)


def plane_wave(xi, phase=0.0):
    """cos(xi x + phase) on the line."""
    xi = float(xi)

    def f(x):
        return np.cos(xi * x[..., 0] + phase)

    return TestFunction(
        f=f, d=1, decay=BOUNDED, center=np.zeros(1), scale=1.0 / abs(xi),
        laplacian=lambda x: -xi**2 * f(x), bilaplacian=lambda x: xi**4 * f(x),
        antiderivative=lambda x: np.sin(xi * np.asarray(x) + phase) / xi,
        antiderivative2=lambda x: -np.cos(xi * np.asarray(x) + phase) / xi**2,
        period=2 * np.pi / abs(xi))


def constant(d=1, value=1.0):
    zero = lambda x: np.zeros(x.shape[:-1])
    anti = anti2 = None
    if d == 1:
        anti = lambda x: value * np.asarray(x, dtype=float)
        anti2 = lambda x: 0.5 * value * np.asarray(x, dtype=float) ** 2
    return TestFunction(f=lambda x: np.full(x.shape[:-1], float(value)), d=d,
                        decay=BOUNDED, center=np.zeros(d), scale=1.0,
                        laplacian=zero, bilaplacian=zero,
                        antiderivative=anti, antiderivative2=anti2)


def linear(slope=1.0):
    """slope * x on the line (only meaningful where odd symmetry is used)."""
    zero = lambda x: np.zeros(x.shape[:-1])
    return TestFunction(
        f=lambda x: slope * x[..., 0], d=1, decay=BOUNDED, center=np.zeros(1), scale=1.0,
        laplacian=zero, bilaplacian=zero,
        antiderivative=lambda x: 0.5 * slope * np.asarray(x) ** 2,
        antiderivative2=lambda x: slope * np.asarray(x) ** 3 / 6.0)
