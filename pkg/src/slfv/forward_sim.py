"""Forward-in-time SLFV on a discretised torus.

The torus [0, L)^d is cut into n^d cells and each cell carries one local
type distribution: a frequency w of type 1 (TwoAllele mode) or a measure
on [0, 1] (Atomic mode).  Lengths and radii are in model (unrescaled)
units; time is rescaled time, so one unit of field time is N / delta^alpha
units of model time and the per-unit mutation rate is simply mu.

Atomic cells store a uniform background (the Lebesgue part, never
materialised) plus finitely many atoms.  Atom weights are kept as
scale[m] * raw[m, j], so that multiplying the whole cell by (1 - u) or by
a mutation factor is O(1); the background weight is 1 - scale * sum(raw).
Mutation is applied lazily when a cell is next touched.
"""

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate
from scipy.interpolate import CubicSpline

from .dual_sim import EstimateWithCI
from .geometry import sample_uniform_ball
from .kernels import _cross_correlation_1d
from .rng import stream

TWO_ALLELE = "TwoAllele"
ATOMIC = "Atomic"
PRUNE_THRESHOLD = 1e-7
_RENORM_BELOW = 1e-150
_MIN_CELLS = 8


# initial conditions

@dataclass(frozen=True)
class UniformLebesgue:
    pass


@dataclass(frozen=True)
class TwoAlleleBall:
    """Type 0 inside the ball, type 1 outside."""
    center: tuple
    radius: float


@dataclass(frozen=True)
class ConstantFrequency:
    w: float


class TypeFunction:
    """A function on the type space [0, 1] with its integral."""

    def __init__(self, f, integral=None):
        self.f = f
        if integral is None:
            integral = integrate.quad(lambda k: float(f(np.array([k]))[0]), 0.0, 1.0,
                                      limit=200)[0]
        self.integral = float(integral)

    def __call__(self, k):
        return self.f(np.asarray(k, dtype=float))


def type_indicator(lo, hi):
    """Indicator of [lo, hi) on the type space."""
    return TypeFunction(lambda k: ((k >= lo) & (k < hi)).astype(float), hi - lo)


def type_constant(value=1.0):
    return TypeFunction(lambda k: np.full(np.shape(k), float(value)), value)


def type_affine(a0, a1):
    """k -> a0 + a1 k."""
    return TypeFunction(lambda k: a0 + a1 * k, a0 + 0.5 * a1)


@dataclass
class ForwardEvent:
    time: float
    center: np.ndarray
    r1: float
    r2: float
    u: float
    parent_type: Optional[float] = None
    parent: Optional[np.ndarray] = None
    draws: Optional[tuple] = None


class AlleleField:
    """Type field on the torus [0, L)^d with n cells per axis."""

    def __init__(self, mode, L, grid, d=1, mu=0.0, capacity=16):
        if mode not in (TWO_ALLELE, ATOMIC):
            raise ValueError(f"mode: expected {TWO_ALLELE!r} or {ATOMIC!r}, got {mode!r}")
        if not L > 0:
            raise ValueError("L: must be positive")
        if int(grid) != grid or grid < _MIN_CELLS:
            raise ValueError(f"grid: need at least {_MIN_CELLS} cells per axis")
        if d not in (1, 2, 3):
            raise ValueError("d: simulators support d in {1, 2, 3}")
        self.mode, self.L, self.n, self.d = mode, float(L), int(grid), int(d)
        self.h = self.L / self.n
        self.M = self.n**self.d
        self.time = 0.0
        self.mu = float(mu)
        self.n_events = 0
        self.trackers = []
        if mode == TWO_ALLELE:
            self.w = np.ones(self.M)
        else:
            self.types = np.zeros((self.M, capacity))
            self.raw = np.zeros((self.M, capacity))
            self.count = np.zeros(self.M, dtype=np.int64)
            self.scale = np.ones(self.M)
            self.sum_raw = np.zeros(self.M)
            self.stamp = np.zeros(self.M)

    # geometry

    def cell_centers(self):
        ax = (np.arange(self.n) + 0.5) * self.h
        mesh = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_of(self, y):
        i = np.floor(np.asarray(y, dtype=float) / self.h).astype(np.int64) % self.n
        return int(np.ravel_multi_index(tuple(i), (self.n,) * self.d))

    def covered_cells(self, center, r):
        """Flat indices of cells whose centre lies within torus distance r of `center`."""
        idx_axes, pos_axes = [], []
        for k in range(self.d):
            lo = int(np.ceil((center[k] - r) / self.h - 0.5))
            hi = int(np.floor((center[k] + r) / self.h - 0.5))
            hi = min(hi, lo + self.n - 1)
            idx = np.arange(lo, hi + 1)
            idx_axes.append(idx % self.n)
            pos_axes.append((idx + 0.5) * self.h - center[k])
        if self.d == 1:
            return idx_axes[0][np.abs(pos_axes[0]) < r]
        grids = np.meshgrid(*pos_axes, indexing="ij")
        mask = sum(g * g for g in grids) < r * r
        ids = np.meshgrid(*idx_axes, indexing="ij")
        return np.ravel_multi_index(tuple(i[mask] for i in ids), (self.n,) * self.d)

    # atomic bookkeeping

    def track(self, psi):
        """Maintain sum_j raw_j psi(k_j) per cell so <rho_m, psi> is O(1)."""
        self._require_atomic()
        acc = np.zeros(self.M)
        for m in np.nonzero(self.count)[0]:
            c = self.count[m]
            acc[m] = self.raw[m, :c] @ psi(self.types[m, :c])
        self.trackers.append((psi, acc))
        return len(self.trackers) - 1

    def _require_atomic(self):
        if self.mode != ATOMIC:
            raise ValueError("operation needs an Atomic field")

    def materialise(self, idx=None):
        """Apply pending mutation decay up to the current time."""
        if self.mode != ATOMIC or self.mu == 0.0:
            return
        if idx is None:
            idx = slice(None)
        self.scale[idx] *= np.exp(-self.mu * (self.time - self.stamp[idx]))
        self.stamp[idx] = self.time

    def background(self, idx=None):
        if idx is None:
            idx = slice(None)
        return 1.0 - self.scale[idx] * self.sum_raw[idx]

    def atoms(self, m):
        """(types, weights) of cell m, the background excluded."""
        self._require_atomic()
        self.materialise([m])
        c = self.count[m]
        return self.types[m, :c].copy(), self.scale[m] * self.raw[m, :c]

    def type_mass(self, psi, idx=None, tracker=None):
        """<rho_m, psi> for cells idx (all cells by default)."""
        if idx is None:
            idx = np.arange(self.M)
        idx = np.asarray(idx)
        if self.mode == TWO_ALLELE:
            p0, p1 = psi(np.array([0.0, 1.0]))
            return p0 + (p1 - p0) * self.w[idx]
        self.materialise(idx)
        if tracker is not None:
            acc = self.trackers[tracker][1][idx]
        else:
            acc = np.zeros(len(idx))
            for j, m in enumerate(idx):
                c = self.count[m]
                if c:
                    acc[j] = self.raw[m, :c] @ psi(self.types[m, :c])
        return self.background(idx) * psi.integral + self.scale[idx] * acc

    def _grow(self):
        cap = self.types.shape[1]
        pad = np.zeros((self.M, cap))
        self.types = np.hstack([self.types, pad])
        self.raw = np.hstack([self.raw, pad.copy()])

    def prune(self):
        """Drop atoms lighter than the threshold into the background and compact."""
        self._require_atomic()
        self.materialise()
        cap = self.raw.shape[1]
        slot = np.arange(cap)
        live = slot < self.count[:, None]
        light = live & (self.scale[:, None] * self.raw < PRUNE_THRESHOLD)
        if not light.any():
            return 0
        for psi, acc in self.trackers:
            acc -= np.sum(np.where(light, self.raw * psi(self.types), 0.0), axis=1)
        self.sum_raw -= np.sum(np.where(light, self.raw, 0.0), axis=1)
        keep = live & ~light
        order = np.argsort(~keep, axis=1, kind="stable")
        self.types = np.take_along_axis(self.types, order, axis=1)
        self.raw = np.take_along_axis(np.where(keep, self.raw, 0.0), order, axis=1)
        self.count = keep.sum(axis=1)
        return int(light.sum())

    def copy(self):
        out = AlleleField.__new__(AlleleField)
        out.__dict__ = {k: (v.copy() if isinstance(v, np.ndarray) else v)
                        for k, v in self.__dict__.items()}
        out.trackers = [(psi, acc.copy()) for psi, acc in self.trackers]
        return out

    def frequency(self, psi=None):
        """Per-cell type-1 frequency (TwoAllele) or <rho_m, psi> (Atomic), as a grid."""
        if self.mode == TWO_ALLELE:
            vals = self.w
        else:
            vals = self.type_mass(psi if psi is not None else type_indicator(0.0, 0.5))
        return np.asarray(vals).reshape((self.n,) * self.d)


def new_field(mode, L, grid, init, d=1, mu=0.0):
    """Field in the given initial state."""
    f = AlleleField(mode, L, grid, d=d, mu=mu)
    if isinstance(init, UniformLebesgue):
        if mode == TWO_ALLELE:
            f.w[:] = 0.5
    elif isinstance(init, ConstantFrequency):
        if not 0.0 <= init.w <= 1.0:
            raise ValueError("ConstantFrequency: w must lie in [0, 1]")
        if mode == TWO_ALLELE:
            f.w[:] = init.w
        else:
            # atoms at type 1 (weight w) and type 0 (weight 1 - w)
            f.types[:, 0], f.raw[:, 0] = 1.0, init.w
            f.types[:, 1], f.raw[:, 1] = 0.0, 1.0 - init.w
            f.count[:] = 2
            f.sum_raw[:] = 1.0
    elif isinstance(init, TwoAlleleBall):
        if init.radius > f.L / 2:
            raise ValueError("TwoAlleleBall: radius exceeds L/2")
        c = np.broadcast_to(np.asarray(init.center, dtype=float), (d,))
        inside = np.zeros(f.M, dtype=bool)
        inside[f.covered_cells(c, init.radius)] = True
        if mode == TWO_ALLELE:
            f.w[:] = np.where(inside, 0.0, 1.0)
        else:
            f.types[:, 0] = np.where(inside, 0.0, 1.0)
            f.raw[:, 0] = 1.0
            f.count[:] = 1
            f.sum_raw[:] = 1.0
    else:
        raise ValueError(f"unknown initial condition {init!r}")
    return f


def resolve_parent(field, ev):
    """Draw the parent type from the local distribution at ev.parent, using ev.draws."""
    m = field.cell_of(ev.parent)
    v1, v2 = ev.draws
    if field.mode == TWO_ALLELE:
        ev.parent_type = 1.0 if v1 < field.w[m] else 0.0
        return ev
    field.materialise([m])
    bg = field.background(m)
    if v1 < bg:
        ev.parent_type = v2
    else:
        c = field.count[m]
        cum = bg + field.scale[m] * np.cumsum(field.raw[m, :c])
        j = min(int(np.searchsorted(cum, v1, side="right")), c - 1)
        ev.parent_type = float(field.types[m, j])
    return ev


def apply_event(field, ev, idx=None):
    """Replace a fraction u of the population in B(centre, r2) by the parent type."""
    if ev.parent_type is None:
        raise ValueError("event has no parent type; call resolve_parent first")
    lim = field.L / 2 + 1e-12
    if ev.r1 > lim or ev.r2 > lim:
        raise ValueError("event radii must not exceed L/2 on the torus")
    if idx is None:
        idx = field.covered_cells(ev.center, ev.r2)
    u, k0 = ev.u, ev.parent_type
    if field.mode == TWO_ALLELE:
        field.w[idx] = (1.0 - u) * field.w[idx] + u * k0
    elif len(idx):
        field.materialise(idx)
        if np.any(field.count[idx] >= field.types.shape[1]):
            field.prune()
            if np.any(field.count[idx] >= field.types.shape[1]):
                field._grow()
        field.scale[idx] *= 1.0 - u
        add = u / field.scale[idx]
        slots = field.count[idx]
        field.types[idx, slots] = k0
        field.raw[idx, slots] = add
        field.count[idx] += 1
        field.sum_raw[idx] += add
        for psi, acc in field.trackers:
            acc[idx] += add * float(psi(np.array([k0]))[0])
        tiny = idx[field.scale[idx] < _RENORM_BELOW]
        if len(tiny):
            s = field.scale[tiny]
            field.raw[tiny] *= s[:, None]
            field.sum_raw[tiny] *= s
            for psi, acc in field.trackers:
                acc[tiny] *= s
            field.scale[tiny] = 1.0
    field.n_events += 1
    return field


# event generation

def _pareto_mass(e, R):
    """int_1^R r^(-1-e) dr."""
    if abs(e) < 1e-14:
        return np.log(R)
    return (1.0 - R ** (-e)) / e


def _pareto_draw(u, e, R):
    """Inverse CDF of the density proportional to r^(-1-e) on [1, R]."""
    if abs(e) < 1e-14:
        return R**u
    return (1.0 - u * (1.0 - R ** (-e))) ** (-1.0 / e)


@dataclass(frozen=True)
class EventLaw:
    """Radius law of the torus simulation, truncated so both radii stay below L/2."""
    rate: float
    R1: float
    R2: float
    e1: float
    e2: float
    one_tail: bool


def event_law(p, sched, L):
    half = L / 2.0
    if p.one_tail:
        e2 = p.d + p.a - p.c
        R2 = half if p.b <= 0 else min(half, half ** (1.0 / p.b))
        if R2 <= 1.0:
            return EventLaw(0.0, 1.0, R2, 0.0, e2, True)
        intensity = _pareto_mass(e2, R2)
        return EventLaw(L**p.d * intensity * sched.time_factor, half, R2, 0.0, e2, True)
    e1, e2 = p.a1 - p.c1, p.d + p.a2 - p.c2
    if half <= 1.0:
        return EventLaw(0.0, half, half, e1, e2, False)
    intensity = _pareto_mass(e1, half) * _pareto_mass(e2, half)
    return EventLaw(L**p.d * intensity * sched.time_factor, half, half, e1, e2, False)


def draw_events(rng, field, p, sched, t0, t_end, batch=4096):
    """Poisson stream of events on (t0, t_end], generated in batches."""
    law = event_law(p, sched, field.L)
    d = field.d
    if law.rate <= 0 or t_end <= t0:
        return
    t = t0
    while True:
        times = t + np.cumsum(rng.exponential(1.0 / law.rate, batch))
        centers = rng.random((batch, d)) * field.L
        ur = rng.random((batch, 2))
        r2 = _pareto_draw(ur[:, 1], law.e2, law.R2)
        if law.one_tail:
            r1 = r2**p.b
            u = sched.uN * r2 ** (-p.c)
        else:
            r1 = _pareto_draw(ur[:, 0], law.e1, law.R1)
            u = sched.uN * r1 ** (-p.c1) * r2 ** (-p.c2)
        offs = sample_uniform_ball(rng, d, np.zeros(d), r1, size=batch)
        parents = np.mod(centers + offs, field.L)
        draws = rng.random((batch, 2))
        for i in range(batch):
            if times[i] > t_end:
                return
            yield ForwardEvent(time=float(times[i]), center=centers[i], r1=float(r1[i]),
                               r2=float(r2[i]), u=float(u[i]), parent=parents[i],
                               draws=(float(draws[i, 0]), float(draws[i, 1])))
        t = times[-1]


@dataclass
class Observer:
    """Calls fn(field) at each time in `times`; values are stored in `values`."""
    name: str
    times: tuple
    fn: Callable
    values: list = dc_field(default_factory=list)


def snapshot_observer(times, name="snapshot", psi=None):
    return Observer(name, tuple(times), lambda f: f.frequency(psi).copy())


@dataclass
class ObserverLog:
    observers: list
    n_events: int
    truncation_radius: float
    event_rate: float


def run_forward(rng, field, p, sched, t_end, observers=(), event_hook=None):
    """Run the field forward to rescaled time t_end.

    `event_hook(field, ev, idx)` is called for every event after its parent
    type is drawn and before the update, with idx the covered cells.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if field.d != p.d:
        raise ValueError("field and parameters disagree on d")
    pending = sorted((t, k) for k, ob in enumerate(observers) for t in ob.times)
    start = field.n_events
    law = event_law(p, sched, field.L)

    def observe_until(t):
        while pending and pending[0][0] <= t:
            tt, k = pending.pop(0)
            field.time = max(field.time, tt)
            observers[k].values.append((tt, observers[k].fn(field)))

    observe_until(field.time)
    for ev in draw_events(rng, field, p, sched, field.time, t_end):
        observe_until(ev.time)
        field.time = ev.time
        resolve_parent(field, ev)
        idx = field.covered_cells(ev.center, ev.r2)
        if event_hook is not None:
            event_hook(field, ev, idx)
        apply_event(field, ev, idx)
    field.time = t_end
    observe_until(t_end)
    return field, ObserverLog(list(observers), field.n_events - start,
                              max(law.R1, law.R2), law.rate)


# fluctuation field

def _spatial_weights(field, phi, sched):
    """delta^d h^d phi(delta x_m): cell weights of the rescaled spatial pairing."""
    vol = (field.h * sched.delta) ** field.d
    return vol * phi(field.cell_centers() * sched.delta)


def fluctuation_projection(field, phi, psi, sched):
    """sqrt(N eta_N) (<rho^N, phi x psi> - <lambda, phi x psi>), phi in rescaled coordinates."""
    if field.mode == TWO_ALLELE:
        k = np.array([0.0, 0.5, 1.0])
        v = psi(k)
        if abs(v[1] - 0.5 * (v[0] + v[2])) > 1e-12:
            raise ValueError("TwoAllele projection needs an affine type function")
    wts = _spatial_weights(field, phi, sched)
    vals = field.type_mass(psi)
    return float(np.sqrt(sched.N * sched.etaN) * wts @ (vals - psi.integral))


def _qv_replicate(seed, key, rep, p, sched, phi, psi, t_end, L_resc, grid, mutation):
    rng = stream(seed, "qv", key, rep)
    L = L_resc / sched.delta
    f = new_field(ATOMIC, L, grid, UniformLebesgue(), d=p.d, mu=p.mu if mutation else 0.0)
    tr = f.track(psi)
    wts = _spatial_weights(f, phi, sched)
    amp = np.sqrt(sched.N * sched.etaN)
    acc = [0.0]

    def hook(field, ev, idx):
        if len(idx) == 0:
            return
        w = wts[idx]
        if not np.any(w):
            return
        before = field.type_mass(psi, idx, tracker=tr)
        jump = amp * ev.u * (w @ (float(psi(np.array([ev.parent_type]))[0]) - before))
        acc[0] += jump * jump

    _, log = run_forward(rng, f, p, sched, t_end, event_hook=hook)
    return acc[0], log.n_events


def empirical_qv(seed, p, sched, phi, psi, t_end, reps, L=20.0, grid=None,
                 threads=1, mutation=True, stream_key=0):
    """Mean over replicates of the summed squared jumps of <Z^N, phi x psi> on [0, t_end].

    L is the torus side in rescaled units; `grid` defaults to cells of
    a quarter of the minimal event radius.  Replicate r uses the stream
    (seed, "qv", stream_key, r).
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if grid is None:
        grid = int(np.ceil(L / sched.delta / 0.25))
    args = (p, sched, phi, psi, t_end, L, grid, mutation)
    jobs = [delayed(_qv_replicate)(seed, stream_key, r, *args) for r in range(reps)]
    if threads <= 1:
        out = [j[0](*j[1], **j[2]) for j in jobs]
    else:
        out = Parallel(n_jobs=threads)(jobs)
    vals = np.array([o[0] for o in out])
    n_ev = np.array([o[1] for o in out])
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else float("nan")
    return EstimateWithCI(estimate=mean, se=se, ci_low=mean - 1.96 * se,
                          ci_high=mean + 1.96 * se, reps=int(reps), successes=0,
                          extra={"seed": int(seed), "values": vals.tolist(),
                                 "mean_events": float(n_ev.mean()), "t_end": t_end})


def prelimit_qv_rate(p, sched, phi, psi_l2, s_max=None):
    """QV rate per rescaled time when the field equals lambda (d = 1, one tail).

    u0^2 delta^(beta-d) psi_l2 int_delta^s_max s^(-1-d-beta) <phi x phi, V_s> ds,
    where psi_l2 = int psi^2 - (int psi)^2 and V_s(x, y) is the lens volume.
    It differs from the limit rate by terms of order delta^(beta - d).
    """
    if p.d != 1 or not p.one_tail:
        raise ValueError("prelimit oracle implemented for d = 1, one tail")
    beta = p.a + p.c
    C, _, hmax = _cross_correlation_1d(phi, phi)
    hs = np.linspace(0.0, hmax, 801)
    acf = CubicSpline(hs, [C(h) for h in hs])
    top = np.inf if s_max is None else s_max

    def pair(s):
        reach = min(2 * s, hmax)
        return 2 * integrate.quad(lambda h: acf(h) * (2 * s - h), 0, reach, limit=200)[0]

    g = lambda s: s ** (-2.0 - beta) * pair(s)
    delta = sched.delta
    cut = min(hmax / 2, top)
    I = integrate.quad(g, delta, cut, limit=400, points=[min(1.0, cut)])[0]
    if top > cut:
        I += integrate.quad(g, cut, top, limit=200)[0]
    return p.u0**2 * delta ** (beta - p.d) * psi_l2 * I
