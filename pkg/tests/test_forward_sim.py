import numpy as np
import pytest
from scipy import stats

from slfv import forward_sim as fs
from slfv import testfunctions as tf
from slfv.regimes import RegimeParams, schedule_for


def regime(N=1000, delta=0.1, b=1.0, u0=0.5, d=1, a=1.5):
    p = RegimeParams(kind="OneTail", d=d, u0=u0, mu=0.2, a=a, b=b, c=0.0)
    return p, schedule_for(p, N, delta)[1]


def event(center, r, u, k, d=1):
    return fs.ForwardEvent(time=0.0, center=np.atleast_1d(np.asarray(center, dtype=float)),
                           r1=r, r2=r, u=u, parent_type=k)


def test_initial_conditions():
    f = fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.UniformLebesgue())
    assert np.all(f.w == 0.5)
    g = fs.new_field(fs.ATOMIC, 20.0, 80, fs.UniformLebesgue())
    np.testing.assert_allclose(g.background(), 1.0)
    h = fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.TwoAlleleBall((10.0,), 2.0))
    x = f.cell_centers()[:, 0]
    np.testing.assert_array_equal(h.w, np.where(np.abs(x - 10) < 2, 0.0, 1.0))
    a = fs.new_field(fs.ATOMIC, 20.0, 80, fs.ConstantFrequency(0.3))
    np.testing.assert_allclose(a.type_mass(fs.type_indicator(0.5, 1.01)), 0.3)
    with pytest.raises(ValueError):
        fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.TwoAlleleBall((10.0,), 10.5))
    with pytest.raises(ValueError):
        fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.ConstantFrequency(1.5))
    with pytest.raises(ValueError):
        fs.AlleleField("Other", 20.0, 80)
    with pytest.raises(ValueError):
        fs.AlleleField(fs.ATOMIC, 20.0, 4)


def test_ball_init_2d_and_wraparound():
    f = fs.new_field(fs.TWO_ALLELE, 10.0, 20, fs.TwoAlleleBall((0.0, 0.0), 2.0), d=2)
    c = f.cell_centers()
    dist = np.linalg.norm(np.minimum(c, 10.0 - c), axis=1)
    np.testing.assert_array_equal(f.w, np.where(dist < 2, 0.0, 1.0))


def test_event_update_rules():
    f = fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.UniformLebesgue())
    fs.apply_event(f, event(5.0, 1.0, 1.0, 1.0))
    x = f.cell_centers()[:, 0]
    inside = np.abs(x - 5.0) < 1.0
    assert np.all(f.w[inside] == 1.0) and np.all(f.w[~inside] == 0.5)
    fs.apply_event(f, event(15.0, 1.0, 0.3, 1.0))
    assert f.w[np.abs(x - 15.0) < 1.0] == pytest.approx(0.65)
    g = fs.new_field(fs.ATOMIC, 20.0, 80, fs.UniformLebesgue())
    fs.apply_event(g, event(15.0, 1.0, 0.3, 0.2))
    m = g.type_mass(fs.type_indicator(0.0, 0.5))
    np.testing.assert_allclose(m[np.abs(x - 15.0) < 1.0], 0.65)
    np.testing.assert_allclose(m[np.abs(x - 15.0) > 1.0], 0.5)


def test_event_rejections():
    f = fs.new_field(fs.TWO_ALLELE, 20.0, 80, fs.UniformLebesgue())
    with pytest.raises(ValueError):
        fs.apply_event(f, event(5.0, 10.5, 0.5, 1.0))
    with pytest.raises(ValueError):
        fs.apply_event(f, fs.ForwardEvent(0.0, np.array([1.0]), 1.0, 1.0, 0.5))


def test_translation_equivariance_cell_aligned():
    # events on a lattice with h = 1 and shifts by whole cells commute with np.roll
    rng = np.random.default_rng(0)
    a = fs.new_field(fs.TWO_ALLELE, 16.0, 16, fs.TwoAlleleBall((8.0,), 3.0))
    b = fs.new_field(fs.TWO_ALLELE, 16.0, 16, fs.TwoAlleleBall((13.0,), 3.0))
    for _ in range(40):
        c = float(rng.integers(0, 32)) / 2
        r = float(rng.integers(1, 12)) / 4 + 0.125
        u, k = float(rng.random()), float(rng.integers(0, 2))
        fs.apply_event(a, event(c, r, u, k))
        fs.apply_event(b, event((c + 5.0) % 16, r, u, k))
    np.testing.assert_array_equal(np.roll(a.w, 5), b.w)


def test_frequencies_in_range_and_atomic_mass_one():
    p, sched = regime(N=10, delta=0.5, u0=0.8)
    f = fs.new_field(fs.TWO_ALLELE, 40.0, 80, fs.TwoAlleleBall((20.0,), 5.0))
    fs.run_forward(np.random.default_rng(1), f, p, sched, 0.3)
    assert np.all((f.w >= 0) & (f.w <= 1))
    g = fs.new_field(fs.ATOMIC, 40.0, 80, fs.UniformLebesgue(), mu=0.5)
    _, log = fs.run_forward(np.random.default_rng(2), g, p, sched, 0.3)
    assert log.n_events > 100
    g.materialise()
    total = g.background() + g.scale * g.sum_raw
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    assert np.all(g.background() >= -1e-12)
    for m in range(0, 80, 7):
        types, wts = g.atoms(m)
        assert np.all((types >= 0) & (types <= 1)) and np.all(wts >= 0)
        assert g.background(m) + wts.sum() == pytest.approx(1.0, abs=1e-12)


def test_prune_preserves_mass_and_trackers(monkeypatch):
    p, sched = regime(N=10, delta=0.5, u0=0.8)
    g = fs.new_field(fs.ATOMIC, 40.0, 80, fs.UniformLebesgue())
    psi = fs.type_indicator(0.0, 0.5)
    tr = g.track(psi)
    fs.run_forward(np.random.default_rng(3), g, p, sched, 0.2)
    before = g.type_mass(psi)
    monkeypatch.setattr(fs, "PRUNE_THRESHOLD", 0.05)
    dropped = g.prune()
    assert dropped > 0
    np.testing.assert_allclose(g.background() + g.scale * g.sum_raw, 1.0, atol=1e-12)
    # pruned atoms become uniform background: masses change by at most the dropped weight
    after_tr = g.type_mass(psi, tracker=tr)
    np.testing.assert_allclose(after_tr, g.type_mass(psi), atol=1e-12)
    assert np.max(np.abs(after_tr - before)) < 0.05 * 80


def test_mutation_decay_is_exponential():
    g = fs.new_field(fs.ATOMIC, 20.0, 40, fs.ConstantFrequency(1.0), mu=0.7)
    g.time = 2.0
    g.materialise()
    np.testing.assert_allclose(g.background(), 1 - np.exp(-1.4))
    psi = fs.type_indicator(0.5, 1.01)
    np.testing.assert_allclose(g.type_mass(psi), np.exp(-1.4) + 0.51 * (1 - np.exp(-1.4)))


def test_resolve_parent_background_draw():
    g = fs.new_field(fs.ATOMIC, 20.0, 40, fs.UniformLebesgue())
    ev = fs.ForwardEvent(0.0, np.array([3.0]), 1.0, 1.0, 0.5, parent=np.array([3.0]),
                         draws=(0.4, 0.123))
    assert fs.resolve_parent(g, ev).parent_type == 0.123
    f = fs.new_field(fs.TWO_ALLELE, 20.0, 40, fs.ConstantFrequency(0.3))
    ev.draws = (0.29, 0.0)
    assert fs.resolve_parent(f, ev).parent_type == 1.0
    ev.draws = (0.31, 0.0)
    assert fs.resolve_parent(f, ev).parent_type == 0.0


def test_event_law_truncation():
    p, sched = regime(b=1.0)
    law = fs.event_law(p, sched, 40.0)
    assert law.R2 == 20.0
    p2, s2 = regime(b=2.0)
    assert fs.event_law(p2, s2, 40.0).R2 == pytest.approx(np.sqrt(20.0))
    ref = 40.0 * (1 - 20.0**-2.5) / 2.5 * sched.time_factor
    assert law.rate == pytest.approx(ref, rel=1e-12)


def test_event_counts_are_poisson():
    p, sched = regime(N=10, delta=0.5)
    law = fs.event_law(p, sched, 20.0)
    t = 40.0 / law.rate
    counts = []
    for k in range(200):
        f = fs.new_field(fs.TWO_ALLELE, 20.0, 20, fs.UniformLebesgue())
        _, log = fs.run_forward(np.random.default_rng(100 + k), f, p, sched, t)
        counts.append(log.n_events)
    counts = np.array(counts)
    assert abs(counts.mean() - 40.0) < 4 * np.sqrt(40.0 / 200)
    disp = counts.var(ddof=1) * 199 / 40.0
    assert stats.chi2.cdf(disp, 199) > 1e-4 and stats.chi2.sf(disp, 199) > 1e-4


def test_total_frequency_martingale():
    p, sched = regime(N=10, delta=0.5, u0=0.8)
    means = []
    for k in range(60):
        f = fs.new_field(fs.TWO_ALLELE, 20.0, 40, fs.TwoAlleleBall((10.0,), 4.0))
        fs.run_forward(np.random.default_rng(500 + k), f, p, sched, 0.1)
        means.append(f.w.mean())
    means = np.array(means)
    w0 = fs.new_field(fs.TWO_ALLELE, 20.0, 40, fs.TwoAlleleBall((10.0,), 4.0)).w.mean()
    assert abs(means.mean() - w0) < 4 * means.std(ddof=1) / np.sqrt(len(means))
    assert means.std() > 0


def test_observers_and_zero_duration():
    p, sched = regime(N=10, delta=0.5)
    f = fs.new_field(fs.TWO_ALLELE, 20.0, 40, fs.TwoAlleleBall((10.0,), 4.0))
    init = f.w.copy()
    ob = fs.snapshot_observer([0.0])
    _, log = fs.run_forward(np.random.default_rng(0), f, p, sched, 0.0, observers=[ob])
    assert log.n_events == 0
    assert len(ob.values) == 1 and np.array_equal(ob.values[0][1], init)
    ob2 = fs.snapshot_observer([0.0, 0.05, 0.1])
    g = fs.new_field(fs.TWO_ALLELE, 20.0, 40, fs.TwoAlleleBall((10.0,), 4.0))
    fs.run_forward(np.random.default_rng(0), g, p, sched, 0.1, observers=[ob2])
    assert [t for t, _ in ob2.values] == [0.0, 0.05, 0.1]
    with pytest.raises(ValueError):
        fs.run_forward(np.random.default_rng(0), g, p, sched, -1.0)


def test_run_is_deterministic_given_stream():
    p, sched = regime(N=10, delta=0.5)
    outs = []
    for _ in range(2):
        f = fs.new_field(fs.ATOMIC, 20.0, 40, fs.UniformLebesgue(), mu=0.2)
        fs.run_forward(np.random.default_rng(9), f, p, sched, 0.1)
        outs.append(f.frequency())
    assert np.array_equal(outs[0], outs[1])


def test_forward_2d_runs():
    p = RegimeParams(kind="OneTail", d=2, u0=0.8, mu=0.2, a=2.6, b=2.0, c=0.0)
    sched = schedule_for(p, 1, 0.5)[1]
    f = fs.new_field(fs.TWO_ALLELE, 30.0, 30, fs.TwoAlleleBall((15.0, 15.0), 5.0), d=2)
    _, log = fs.run_forward(np.random.default_rng(0), f, p, sched, 0.05)
    assert log.n_events > 0
    assert f.frequency().shape == (30, 30)
    assert np.all((f.w >= 0) & (f.w <= 1))


def test_projection_zero_cases_and_jump_formula():
    p, sched = regime(N=100, delta=0.2)
    phi = tf.bump(1, center=4.0, radius=2.0)
    psi = fs.type_indicator(0.0, 0.5)
    g = fs.new_field(fs.ATOMIC, 40.0, 160, fs.UniformLebesgue())
    assert fs.fluctuation_projection(g, phi, psi, sched) == pytest.approx(0.0, abs=1e-14)
    ev = event(20.0, 3.0, 0.4, 0.1)
    idx = g.covered_cells(ev.center, ev.r2)
    before_cells = g.type_mass(psi, idx)
    z0 = fs.fluctuation_projection(g, phi, psi, sched)
    fs.apply_event(g, ev, idx)
    z1 = fs.fluctuation_projection(g, phi, psi, sched)
    w = fs._spatial_weights(g, phi, sched)[idx]
    jump = np.sqrt(sched.N * sched.etaN) * 0.4 * (w @ (1.0 - before_cells))
    assert z1 - z0 == pytest.approx(jump, rel=1e-10)
    one = fs.type_constant(1.0)
    assert fs.fluctuation_projection(g, phi, one, sched) == pytest.approx(0.0, abs=1e-12)
    t = fs.new_field(fs.TWO_ALLELE, 40.0, 160, fs.UniformLebesgue())
    with pytest.raises(ValueError):
        fs.fluctuation_projection(t, phi, psi, sched)


def test_empirical_qv_zero_for_constant_type_function():
    p, sched = regime(N=100, delta=0.5)
    phi = tf.bump(1, center=5.0, radius=2.0)
    est = fs.empirical_qv(1, p, sched, phi, fs.type_constant(1.0), 0.01, 2, L=10.0)
    assert est.estimate == pytest.approx(0.0, abs=1e-20)
    assert est.extra["mean_events"] > 0
    with pytest.raises(ValueError):
        fs.empirical_qv(1, p, sched, phi, fs.type_constant(1.0), 0.0, 2)


def test_empirical_qv_matches_prelimit_oracle_coarse():
    # a coarse regime where the exact prelimit rate is cheap to reach by simulation
    p, sched = regime(N=100, delta=0.5)
    phi = tf.bump(1, center=5.0, radius=2.0)
    psi = fs.type_indicator(0.0, 0.5)
    est = fs.empirical_qv(3, p, sched, phi, psi, 0.05, 40, L=10.0)
    rate = est.estimate / 0.05
    ref = fs.prelimit_qv_rate(p, sched, phi, 0.25, s_max=5.0)
    assert abs(rate - ref) < 4 * est.se / 0.05
