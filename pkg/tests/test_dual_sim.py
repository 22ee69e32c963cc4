import dataclasses

import numpy as np
import pytest
from scipy import integrate, stats

from slfv import dual_sim as ds
from slfv.regimes import RegimeParams, schedule_for


def one(u0=0.5, mu=0.2, a=1.5, b=1.0, c=0.0, d=1):
    return RegimeParams(kind="OneTail", d=d, u0=u0, mu=mu, a=a, b=b, c=c)


def headline():
    p = one()
    _, sched = schedule_for(p, 1000, 0.1)
    return p, sched


def test_pareto_tail_and_b0():
    rng = np.random.default_rng(1)
    n = 10**6
    r1, r2 = ds.sample_radius_pair(rng, one(b=0.0), size=n)
    assert np.all(r1 == 1.0)
    assert np.all(r2 >= 1.0)
    ref = 2 ** -1.5
    assert abs(np.mean(r2 > 2) - ref) < 4 * np.sqrt(ref * (1 - ref) / n)


def test_one_tail_power_relation():
    r1, r2 = ds.sample_radius_pair(np.random.default_rng(2), one(b=0.7), size=1000)
    np.testing.assert_allclose(r1, r2**0.7)


def test_two_tails_independent_marginals():
    p = RegimeParams(kind="TwoTails", d=1, u0=0.5, mu=0.2, a1=1.2, a2=3.0, c1=0.0, c2=0.0)
    n = 10**6
    r1, r2 = ds.sample_radius_pair(np.random.default_rng(3), p, size=n)
    for r, a in ((r1, 1.2), (r2, 3.0)):
        ref = 2.0**-a
        assert abs(np.mean(r > 2) - ref) < 4 * np.sqrt(ref * (1 - ref) / n)
    # independence of the two tail events
    joint = np.mean((r1 > 2) & (r2 > 1.5))
    ref = 2**-1.2 * 1.5**-3
    assert abs(joint - ref) < 4 * np.sqrt(ref / n)


def test_headline_rates():
    p, sched = headline()
    assert ds.marked_rate(p, sched) * sched.time_factor == pytest.approx(21.08, rel=1e-3)
    assert ds.pair_event_rate(p, sched) == pytest.approx(42.16, rel=1e-3)


def test_first_event_coalescence_fraction_coincident():
    # lineages at one point: P(first event coalesces) = C / (2 lam - C)
    p = one(u0=0.5, a=1.5, c=0.3, b=0.0)
    sched = dataclasses.replace(schedule_for(p, 1, 0.999999)[1], muN=0.0)
    lam = 0.5 * 2 / 1.5
    C = 0.25 * 2 / 1.8
    ref = C / (2 * lam - C)
    n = 200_000
    z = np.zeros((n, 1))
    res = ds.simulate_pairs(np.random.default_rng(4), z, z, None, p, sched, first_event_only=True)
    frac = np.mean(res["outcome"] == ds.COAL)
    assert abs(frac - ref) < 4 * np.sqrt(ref * (1 - ref) / n)


def test_coincident_hazard_small():
    p = one(u0=0.5, a=1.5, c=0.3, mu=0.2)
    _, sched = schedule_for(p, 100, 0.2)
    est = ds.coincident_hazard(7, p, sched, 20_000)
    exact = ds.coincident_hazard_exact(p, sched)
    assert abs(est.estimate - exact) < 4 * est.se
    # the closed form against the defining integral, by quadrature
    q = integrate.quad(lambda r: (sched.uN * r**-0.3) ** 2 * 2 * r * r ** (-3.2), 1, np.inf,
                       epsabs=0, epsrel=1e-12, limit=200)[0]
    assert exact == pytest.approx(q * sched.time_factor, rel=1e-8)


def test_jump_characteristic_function():
    # displacement of a lone lineage: E cos(xi D) = E m(r1 xi) m(r2 xi), m(s) = sin s / s
    p = one(u0=0.5, a=1.5, b=0.5)
    sched = dataclasses.replace(schedule_for(p, 1000, 0.5)[1], muN=0.0)
    n = 200_000
    x1 = np.zeros((n, 1))
    x2 = np.full((n, 1), 1e9)
    res = ds.simulate_pairs(np.random.default_rng(5), x1, x2, None, p, sched, first_event_only=True)
    moved = np.where(res["x1"][:, 0] != 0.0, res["x1"][:, 0], res["x2"][:, 0] - 1e9)
    m = lambda s: np.sinc(s / np.pi)
    for xi in (0.3, 1.0):
        emp = np.mean(np.cos(xi * moved))
        ref = integrate.quad(lambda r: m(r**0.5 * xi) * m(r * xi) * 1.5 * r**-2.5, 1, np.inf,
                             limit=400)[0]
        assert abs(emp - ref) < 4 * np.std(np.cos(xi * moved)) / np.sqrt(n)


def test_run_pair_zero_horizon_and_kill():
    p, sched = headline()
    st = ds.run_pair(np.random.default_rng(0), [0.0], [1.0], 0.0, p, sched)
    assert st.status == ds.BOTH_ALIVE and st.clock == 0.0 and st.n_events == 0
    np.testing.assert_array_equal(st.x1, [0.0])
    hot = dataclasses.replace(sched, muN=1e6)
    st = ds.run_pair(np.random.default_rng(0), [0.0], [1.0], 10.0, p, hot)
    assert st.status == ds.KILLED


def test_relocation_count_matches_rate():
    p = one(u0=0.5, b=0.0)
    sched = dataclasses.replace(schedule_for(p, 1000, 0.1)[1], muN=0.0)
    n, t = 4000, 0.5
    x1 = np.zeros((n, 1))
    x2 = np.full((n, 1), 1e9)
    res = ds.simulate_pairs(np.random.default_rng(6), x1, x2, t, p, sched)
    assert np.all(res["outcome"] == ds.SURVIVED)
    mean = 2 * ds.marked_rate(p, sched) * sched.time_factor * t
    assert abs(res["n_events"].mean() - mean) < 4 * np.sqrt(mean / n)


def small_regime():
    p = one(u0=0.5, mu=0.2, b=1.0)
    _, sched = schedule_for(p, 5, 0.5)
    return p, sched


def test_scalar_and_vectorised_engines_agree():
    p, sched = small_regime()
    n = 3000
    rng = np.random.default_rng(8)
    scalar = [ds.run_pair(rng, [0.0], [1.0], 1.0, p, sched).status for _ in range(n)]
    ps = np.mean([s == ds.COALESCED for s in scalar])
    res = ds.simulate_pairs(np.random.default_rng(9), np.zeros((n, 1)), np.ones((n, 1)), 1.0, p, sched)
    pv = np.mean(res["outcome"] == ds.COAL)
    assert abs(ps - pv) < 4 * np.sqrt(2 * pv * (1 - pv) / n)


def test_exchangeability_and_translation():
    p, sched = small_regime()
    n = 20_000
    a, b = np.zeros((n, 1)), np.full((n, 1), 1.5)
    base = ds.simulate_pairs(np.random.default_rng(10), a, b, 1.0, p, sched)
    swap = ds.simulate_pairs(np.random.default_rng(11), b, a, 1.0, p, sched)
    moved = ds.simulate_pairs(np.random.default_rng(12), a + 37.0, b + 37.0, 1.0, p, sched)
    t0 = base["time"][base["outcome"] == ds.COAL]
    for other in (swap, moved):
        t1 = other["time"][other["outcome"] == ds.COAL]
        assert stats.ks_2samp(t0, t1).pvalue > 1e-3
        p0, p1 = np.mean(base["outcome"] == ds.COAL), np.mean(other["outcome"] == ds.COAL)
        assert abs(p0 - p1) < 4 * np.sqrt(2 * p0 * (1 - p0) / n)


def test_coalescence_needs_overlapping_balls():
    p, sched = small_regime()
    n = 20_000
    res = ds.simulate_pairs(np.random.default_rng(13), np.zeros((n, 1)), np.full((n, 1), 2.5),
                            2.0, p, sched)
    c = res["outcome"] == ds.COAL
    assert c.sum() > 100
    assert np.all(res["coal_h"][c] <= 2 * res["coal_r2"][c])


def test_estimate_ibd_thread_invariance_and_errors():
    p, sched = small_regime()
    phi = ds.uniform_block_sampler(-1.5, -0.5)
    psi = ds.uniform_block_sampler(0.5, 1.5)
    e1 = ds.estimate_ibd(42, phi, psi, 1.0, p, sched, 5000, threads=1, block_size=1000)
    e2 = ds.estimate_ibd(42, phi, psi, 1.0, p, sched, 5000, threads=2, block_size=1000)
    assert e1 == e2
    assert e1.successes > 0
    assert e1.ci_low <= e1.estimate <= e1.ci_high
    with pytest.raises(ValueError):
        ds.estimate_ibd(42, phi, psi, 1.0, p, sched, 0)
    hot = dataclasses.replace(sched, muN=1e9)
    assert ds.estimate_ibd(42, phi, psi, 1.0, p, hot, 2000).estimate == 0.0


def test_samplers():
    rng = np.random.default_rng(0)
    x = ds.uniform_block_sampler(0.5, 1.5)(rng, 1000)
    assert x.shape == (1000, 1) and x.min() >= 0.5 and x.max() <= 1.5
    assert np.all(ds.point_sampler([1.0, 2.0])(rng, 3) == [[1.0, 2.0]] * 3)
    g = ds.gaussian_sampler([0.0], 2.0)(rng, 100_000)
    assert g.std() == pytest.approx(2.0, rel=0.02)
