"""Backward-in-time simulation of two ancestral lineages.

The pair is simulated exactly in unrescaled coordinates.  Events marking a
given lineage arrive at rate u_N V1 / a (one tail) or u_N V1 / (a1 a2) (two
tails); for each lineage we propose events at that rate, drawing (r1, r2)
from the size-biased unit-Pareto laws and the centre uniformly in the
replacement ball around the proposing lineage.  The other lineage is marked
with probability u if it lies in the same ball.  A proposal is accepted with
probability 1/(number of marked lineages), which corrects for an event
being proposable by both lineages.  Two marked lineages coalesce; a single
marked lineage jumps to a parent drawn uniformly in B(centre, r1).
Mutation kills the pair at rate 2 mu_N.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .geometry import sample_uniform_ball
from .regimes import coincident_coalescence_rate, lineage_jump_rate
from .rng import block_ranges, stream

BOTH_ALIVE = "BothAlive"
COALESCED = "Coalesced"
KILLED = "Killed"

# integer outcome codes used by the vectorised engine
ALIVE, COAL, KILL, SURVIVED = 0, 1, 2, 3
OUTCOME_NAMES = {COAL: "coal", KILL: "killed", SURVIVED: "survived"}


@dataclass
class DualPairState:
    x1: np.ndarray
    x2: np.ndarray
    status: str = BOTH_ALIVE
    clock: float = 0.0
    event_time: Optional[float] = None
    n_events: int = 0


@dataclass
class EventDraw:
    r1: float
    r2: float
    u: float
    center: np.ndarray
    parent: np.ndarray


@dataclass
class EstimateWithCI:
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    reps: int
    successes: int
    extra: dict = field(default_factory=dict)


def sample_radius_pair(rng, p, size=None):
    """(r1, r2) under the law of an event marking a fixed lineage."""
    n = 1 if size is None else size
    if p.one_tail:
        r2 = rng.random(n) ** (-1.0 / p.a)
        r1 = r2**p.b
    else:
        r1 = rng.random(n) ** (-1.0 / p.a1)
        r2 = rng.random(n) ** (-1.0 / p.a2)
    if size is None:
        return float(r1[0]), float(r2[0])
    return r1, r2


def impact(p, sched, r1, r2):
    if p.one_tail:
        return sched.uN * r2 ** (-p.c)
    return sched.uN * r1 ** (-p.c1) * r2 ** (-p.c2)


def marked_rate(p, sched):
    """Per-lineage rate of events marking it, in unrescaled time."""
    return lineage_jump_rate(p) * sched.uN / p.u0


def pair_event_rate(p, sched, h=0.0):
    """Thinning bound: twice the per-lineage marked rate, per rescaled time unit."""
    return 2.0 * marked_rate(p, sched) * sched.time_factor


def step_pair(rng, state, p, sched):
    """Advance a pair to its next accepted event or to the kill (scalar reference version)."""
    if state.status != BOTH_ALIVE:
        raise ValueError("step_pair called on a terminal state")
    lam = marked_rate(p, sched)
    total = 2 * lam + 2 * sched.muN
    d = p.d
    while True:
        state.clock += rng.exponential(1.0 / total)
        if rng.random() * total < 2 * sched.muN:
            state.status, state.event_time = KILLED, state.clock
            return state
        i = rng.integers(2)
        r1, r2 = sample_radius_pair(rng, p)
        xs = [state.x1, state.x2]
        center = sample_uniform_ball(rng, d, xs[i], r2)
        covered = np.linalg.norm(xs[1 - i] - center) < r2
        other = covered and rng.random() < impact(p, sched, r1, r2)
        if other:
            if rng.random() < 0.5:
                state.status, state.event_time = COALESCED, state.clock
                return state
            continue
        parent = sample_uniform_ball(rng, d, center, r1)
        if i == 0:
            state.x1 = parent
        else:
            state.x2 = parent
        state.n_events += 1
        return state


def run_pair(rng, x1, x2, t_max, p, sched):
    """Run one pair until it coalesces, is killed, or reaches t_max (rescaled time)."""
    state = DualPairState(np.atleast_1d(np.asarray(x1, dtype=float)).copy(),
                          np.atleast_1d(np.asarray(x2, dtype=float)).copy())
    horizon = t_max * sched.time_factor
    while state.status == BOTH_ALIVE:
        prev = (state.x1.copy(), state.x2.copy(), state.clock, state.n_events)
        step_pair(rng, state, p, sched)
        if state.clock > horizon:
            state.x1, state.x2, _, state.n_events = prev
            state.clock, state.status, state.event_time = horizon, BOTH_ALIVE, None
            break
    return state


def simulate_pairs(rng, x1, x2, t_max, p, sched, first_event_only=False):
    """Vectorised pair simulation, one replicate per row of x1, x2 (unrescaled).

    Returns a dict of arrays: outcome (codes ALIVE/COAL/KILL/SURVIVED), time
    (unrescaled time of the terminal event, or the horizon), n_events
    (relocations), and the r2 and separation of the coalescing event.
    With `first_event_only` each replicate stops at its first accepted event
    (relocation or coalescence); outcome stays ALIVE for a relocation.
    """
    x1 = np.array(x1, dtype=float, copy=True)
    x2 = np.array(x2, dtype=float, copy=True)
    m, d = x1.shape
    lam = marked_rate(p, sched)
    total = 2 * lam + 2 * sched.muN
    p_kill = 2 * sched.muN / total
    horizon = np.inf if t_max is None else t_max * sched.time_factor
    clock = np.zeros(m)
    outcome = np.full(m, ALIVE, dtype=np.int8)
    n_ev = np.zeros(m, dtype=np.int64)
    coal_r2 = np.full(m, np.nan)
    coal_h = np.full(m, np.nan)
    done = np.zeros(m, dtype=bool)
    idx = np.arange(m)
    while idx.size:
        n = idx.size
        clock[idx] += rng.exponential(1.0 / total, n)
        u_kill = rng.random(n)
        who = rng.integers(0, 2, n).astype(bool)
        r1, r2 = sample_radius_pair(rng, p, n)
        off = sample_uniform_ball(rng, d, np.zeros(d), r2, size=n)
        jump = sample_uniform_ball(rng, d, np.zeros(d), r1, size=n)
        u_mark = rng.random(n)
        u_acc = rng.random(n)

        over = clock[idx] > horizon
        kill = ~over & (u_kill < p_kill)
        prop = ~over & ~kill
        a, b = x1[idx], x2[idx]
        xi = np.where(who[:, None], b, a)
        xj = np.where(who[:, None], a, b)
        center = xi + off
        covered = np.linalg.norm(xj - center, axis=1) < r2
        both = prop & covered & (u_mark < impact(p, sched, r1, r2))
        coal = both & (u_acc < 0.5)
        move = prop & ~both

        parent = center + jump
        mv0 = move & ~who
        mv1 = move & who
        x1[idx[mv0]] = parent[mv0]
        x2[idx[mv1]] = parent[mv1]
        n_ev[idx[move]] += 1

        ci = idx[coal]
        coal_r2[ci] = r2[coal]
        coal_h[ci] = np.linalg.norm(a[coal] - b[coal], axis=1)
        outcome[ci] = COAL
        outcome[idx[kill]] = KILL
        oi = idx[over]
        outcome[oi] = SURVIVED
        clock[oi] = horizon
        finished = over | kill | coal
        if first_event_only:
            finished |= move
        done[idx[finished]] = True
        idx = idx[~finished]
    return {"outcome": outcome, "time": clock, "n_events": n_ev,
            "coal_r2": coal_r2, "coal_h": coal_h, "x1": x1, "x2": x2}


def _ibd_block(seed, b, start, stop, phi_sampler, psi_sampler, t, p, sched):
    rng = stream(seed, "dual", b)
    n = stop - start
    y1 = phi_sampler(rng, n) / sched.delta
    y2 = psi_sampler(rng, n) / sched.delta
    res = simulate_pairs(rng, y1, y2, t, p, sched)
    return {k: res[k] for k in ("outcome", "time", "n_events")}


def run_blocks(fn, seed, reps, block_size, threads, *args):
    blocks = block_ranges(reps, block_size)
    jobs = (delayed(fn)(seed, b, s, e, *args) for b, (s, e) in enumerate(blocks))
    if threads <= 1:
        parts = [job[0](*job[1], **job[2]) for job in jobs]
    else:
        parts = Parallel(n_jobs=threads)(jobs)
    return {k: np.concatenate([part[k] for part in parts]) for k in parts[0]}


def scaled_binomial(successes, reps, factor, level=0.95):
    """Scaled success fraction with its standard error and Wilson interval."""
    phat = successes / reps
    z = stats.norm.ppf(0.5 + level / 2)
    denom = 1 + z**2 / reps
    mid = (phat + z**2 / (2 * reps)) / denom
    half = z * np.sqrt(phat * (1 - phat) / reps + z**2 / (4 * reps**2)) / denom
    se = np.sqrt(phat * (1 - phat) / reps)
    return EstimateWithCI(estimate=factor * phat, se=factor * se,
                          ci_low=factor * (mid - half), ci_high=factor * (mid + half),
                          reps=int(reps), successes=int(successes))


def estimate_ibd(seed, phi_sampler, psi_sampler, t, p, sched, reps, threads=1,
                 block_size=8192, return_log=False):
    """Monte Carlo estimate of N eta_N P_t^N(phi, psi).

    Samplers take (rng, n) and return n points in rescaled coordinates.
    Replicates are processed in fixed blocks, block b drawing from the
    stream (seed, "dual", b), so the result does not depend on `threads`.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    res = run_blocks(_ibd_block, seed, reps, block_size, threads,
                     phi_sampler, psi_sampler, t, p, sched)
    succ = int(np.sum(res["outcome"] == COAL))
    est = scaled_binomial(succ, reps, sched.N * sched.etaN)
    est.extra["seed"] = int(seed)
    if return_log:
        return est, res
    return est


def _hazard_block(seed, b, start, stop, p, sched):
    rng = stream(seed, "hazard", b)
    z = np.zeros((stop - start, p.d))
    res = simulate_pairs(rng, z, z, None, p, sched, first_event_only=True)
    return {"outcome": res["outcome"], "time": res["time"]}


def coincident_hazard(seed, p, sched, reps, threads=1, block_size=8192):
    """Coalescence hazard of two lineages at the same point, per rescaled time, without mutation.

    Each replicate is followed to its first accepted event; the hazard is
    the number of coalescences over the total exposure time.
    """
    sched0 = dataclasses.replace(sched, muN=0.0)
    res = run_blocks(_hazard_block, seed, reps, block_size, threads, p, sched0)
    n_coal = int(np.sum(res["outcome"] == COAL))
    exposure = float(np.sum(res["time"])) / sched.time_factor
    rate = n_coal / exposure
    se = rate / np.sqrt(max(n_coal, 1))
    return EstimateWithCI(estimate=rate, se=se, ci_low=rate - 1.96 * se,
                          ci_high=rate + 1.96 * se, reps=int(reps), successes=n_coal,
                          extra={"seed": int(seed), "exposure": exposure})


def coincident_hazard_exact(p, sched):
    """Closed form of int u^2 V_r2 nu, per rescaled time."""
    return coincident_coalescence_rate(p) / sched.N**2 * sched.time_factor


def uniform_block_sampler(lo, hi):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    return lambda rng, n: lo + (hi - lo) * rng.random((n, len(lo)))


def point_sampler(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return lambda rng, n: np.tile(x, (n, 1))


def gaussian_sampler(center, width):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return lambda rng, n: c + width * rng.standard_normal((n, len(c)))
