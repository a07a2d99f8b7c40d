"""
The exclusion process simulator: initial laws, rates, events and both schemes.
"""
import numpy as np
import pytest

from longjump.kernel import get_kernel
from longjump.model import ModelParams, ReservoirVariant
from longjump.observables import DynkinObserver
from longjump.profile import Profile, sine_mode
from longjump.sampling import RandomStream
from longjump.simulator import (
    EventKind, SimulationError, Simulator, SnapshotObserver, closed_form_flip_rate, exchange_total_rate,
    make_simulator, profile_values)


def params(N=20, theta=0.0, kappa=1.0, alpha=0.2, beta=0.8, reservoir=ReservoirVariant.EXTENDED, gamma=3.0):
    return ModelParams(N=N, gamma=gamma, theta=theta, kappa=kappa, alpha=alpha, beta=beta, reservoir=reservoir)


class TestInitialConfiguration:
    """Product Bernoulli measures associated to a profile."""

    def test_full(self):
        sim = make_simulator(params(N=30))
        cfg = sim.init_from_profile(1.0, 0)
        assert cfg.particle_count == 29
        assert np.all(cfg.as_array() == 1)

    def test_empty(self):
        sim = make_simulator(params(N=30))
        cfg = sim.init_from_profile(lambda q: 0.0 * q, 0)
        assert cfg.particle_count == 0

    def test_mean_density(self):
        """g = 0.5 at N = 1001 over 500 seeds: mean within 3 binomial standard errors."""
        sim = make_simulator(params(N=1001))
        total = sum(sim.init_from_profile(0.5, seed).particle_count for seed in range(500))
        mean = total / (500 * 1000)
        assert abs(mean - 0.5) < 3.0 * 0.5 / np.sqrt(500 * 1000)

    @pytest.mark.parametrize("g", [1.5, -0.1, lambda q: 2.0 * q])
    def test_out_of_range(self, g):
        sim = make_simulator(params(N=10))
        with pytest.raises(ValueError):
            sim.init_from_profile(g, 0)

    def test_profile_values(self):
        assert np.allclose(profile_values(lambda q: q, 5), [0.2, 0.4, 0.6, 0.8])
        assert np.allclose(profile_values(Profile([0.3, 0.3]), 4), 0.3)
        assert np.allclose(profile_values(0.7, 4), 0.7)
        site_values = np.array([0.1, 0.2, 0.3])
        assert np.array_equal(profile_values(site_values, 4), site_values)

    def test_configuration_rejects_bad_values(self):
        sim = make_simulator(params(N=5))
        with pytest.raises(ValueError):
            sim.configuration([0, 1, 2, 0])
        with pytest.raises(ValueError):
            sim.configuration([0, 1, 1])


class TestRates:
    """Flip and exchange rates against their definitions."""

    @pytest.mark.parametrize("variant", list(ReservoirVariant))
    def test_flip_rate_matches_closed_form(self, variant):
        p = params(N=12, theta=0.5, kappa=1.3, reservoir=variant)
        sim = make_simulator(p)
        kernel = get_kernel(3.0)
        for eta in (np.zeros(11, dtype=int), np.ones(11, dtype=int)):
            cfg = sim.configuration(eta)
            for x in range(1, 12):
                assert sim.flip_rate(x, cfg) == pytest.approx(
                    closed_form_flip_rate(x, int(eta[x - 1]), p, kernel), rel=1e-13, abs=1e-300)

    def test_extended_flip_rate_by_hand(self):
        """Occupied site 1 at theta = 0, kappa = 1: r^-(1)(1-alpha) + r^+(1)(1-beta)."""
        p = params(N=10)
        sim = make_simulator(p)
        kernel = get_kernel(3.0)
        cfg = sim.configuration([1, 0, 0, 0, 0, 0, 0, 0, 0])
        expected = 0.5 * 0.8 + kernel.upper_tail(9) * 0.2
        assert sim.flip_rate(1, cfg) == pytest.approx(expected, rel=1e-13)

    def test_exchange_total_rate(self):
        """Sum of p(y-x) over unordered pairs, brute force."""
        p = params(N=11)
        kernel = get_kernel(3.0)
        brute = sum(kernel.prob(y - x) for x in range(1, 11) for y in range(x + 1, 11))
        assert exchange_total_rate(p) == pytest.approx(brute, rel=1e-13)
        assert exchange_total_rate(params(N=2)) == 0.0

    def test_rate_table_consistent_after_events(self):
        """The incremental Fenwick table equals a fresh closed-form evaluation after many events."""
        sim = make_simulator(params(N=25, theta=-0.5, kappa=2.0), "gillespie")
        rng = np.random.default_rng(12)
        cfg = sim.init_from_profile(0.5, rng)
        stream = RandomStream(rng)
        kinds = set()
        for _ in range(3000):
            event, dt = sim.step(cfg, stream)
            kinds.add(event.kind)
            assert dt > 0
        assert kinds == {EventKind.FLIP, EventKind.EXCHANGE}
        assert sim.rate_mismatch(cfg) < 1e-12
        assert cfg.particle_count == int(cfg.as_array().sum())

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            Simulator(params(), scheme="tau-leap")


class TestRun:
    """Trajectories under both schemes."""

    def test_exchanges_conserve_particles(self):
        """kappa = 0 switches the reservoirs off."""
        sim = make_simulator(params(N=30, kappa=0.0))
        cfg = sim.init_from_profile(0.5, 1)
        before = cfg.particle_count
        traj = sim.run(cfg, 0.05, rng=2)
        assert traj.event_count > 0
        assert cfg.particle_count == before == int(cfg.as_array().sum())

    @pytest.mark.parametrize("scheme", ["gillespie", "lazy"])
    def test_deterministic_given_seed(self, scheme):
        sim = make_simulator(params(N=30, theta=-0.5), scheme)
        finals = []
        for _ in range(2):
            rng = np.random.default_rng(99)
            cfg = sim.init_from_profile(0.5, rng)
            sim.run(cfg, 0.02, rng=rng)
            finals.append(cfg.as_array())
        assert np.array_equal(finals[0], finals[1])

    def test_time_zero_leaves_configuration(self):
        sim = make_simulator(params(N=15))
        cfg = sim.init_from_profile(0.5, 3)
        before = cfg.as_array()
        traj = sim.run(cfg, 0.0, rng=4, keep_snapshots=True)
        assert np.array_equal(cfg.as_array(), before)
        assert traj.event_count == 0
        assert len(traj.records) == 1 and traj.records[0][0] == 0.0

    def test_observers_see_each_time(self):
        sim = make_simulator(params(N=15))
        cfg = sim.init_from_profile(0.5, 5)
        snapshots = SnapshotObserver()
        traj = sim.run(cfg, 0.03, [snapshots], rng=6, times=[0.03, 0.0, 0.01])
        assert [t for t, _ in snapshots.snapshots] == [0.0, 0.01, 0.03]
        assert traj.times == [0.0, 0.01, 0.03]
        assert traj.micro_time == pytest.approx(0.03 * sim.time_scale)

    def test_observation_times_in_range(self):
        sim = make_simulator(params(N=15))
        cfg = sim.init_from_profile(0.5, 5)
        with pytest.raises(ValueError):
            sim.run(cfg, 0.1, times=[0.2])
        with pytest.raises(ValueError):
            sim.run(cfg, -1.0)

    def test_lazy_scheme_keeps_rates_consistent(self):
        sim = make_simulator(params(N=40, theta=-2.0), "lazy")
        rng = np.random.default_rng(8)
        cfg = sim.init_from_profile(0.5, rng)
        traj = sim.run(cfg, 0.2, rng=rng)
        assert traj.scheme == "lazy"
        assert sim.rate_mismatch(cfg) < 1e-12
        assert cfg.particle_count == int(cfg.as_array().sum())

    def test_scheme_selection(self):
        fast = make_simulator(params(N=64, theta=-2.0))
        slow = make_simulator(params(N=64, theta=3.0))
        assert fast.choose_scheme([]) == "lazy"
        assert slow.choose_scheme([]) == "gillespie"
        observer = DynkinObserver(fast, sine_mode(1))
        assert fast.choose_scheme([observer]) == "gillespie"

    def test_lazy_rejects_path_observers(self):
        sim = make_simulator(params(N=20), "lazy")
        cfg = sim.init_from_profile(0.5, 0)
        with pytest.raises(SimulationError):
            sim.run(cfg, 0.01, [DynkinObserver(sim, sine_mode(1))], rng=1)

    def test_frozen_chain(self):
        """N = 2 without reservoirs has no clock at all."""
        sim = make_simulator(params(N=2, kappa=0.0), "gillespie")
        cfg = sim.init_from_profile(0.5, 0)
        with pytest.raises(SimulationError):
            sim.run(cfg, 1.0, rng=1)

    def test_fast_reservoirs_pin_boundary_sites(self):
        """theta = -2: the first and last sites relax to alpha and beta almost instantly."""
        sim = make_simulator(params(N=64, theta=-2.0, alpha=0.0, beta=1.0))
        first, last = [], []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            cfg = sim.init_from_profile(0.5, rng)
            sim.run(cfg, 0.05, rng=rng)
            first.append(cfg.eta(1))
            last.append(cfg.eta(63))
        assert sum(first) == 0
        assert sum(last) == 20


class TestSchemeAgreement:
    """Both schemes sample the same law."""

    def test_mean_profiles_agree(self):
        p = params(N=24, theta=0.0, alpha=0.1, beta=0.9)
        t = 0.05
        means = {}
        for scheme in ("gillespie", "lazy"):
            sim = make_simulator(p, scheme)
            counts = []
            for seed in range(400):
                rng = np.random.default_rng(seed)
                cfg = sim.init_from_profile(0.5, rng)
                sim.run(cfg, t, rng=rng)
                a = cfg.as_array()
                counts.append((a[:12].mean(), a[12:].mean()))
            means[scheme] = np.array(counts)
        for half in (0, 1):
            g = means["gillespie"][:, half]
            lz = means["lazy"][:, half]
            stderr = np.sqrt(g.var(ddof=1) / len(g) + lz.var(ddof=1) / len(lz))
            assert abs(g.mean() - lz.mean()) < 4.0 * stderr
