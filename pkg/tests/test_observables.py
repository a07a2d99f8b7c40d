"""
Empirical observables and the Dynkin martingale.
"""
import numpy as np
import pytest

from longjump.generator import generator_matrix, state_occupation
from longjump.model import ModelParams, ReservoirVariant
from longjump.observables import (
    DynkinObserver, bin_index, boxcar_left, boxcar_right, boxcar_width, density_histogram, dynkin_residual,
    empirical_pairing, run_martingale_ensemble, site_positions)
from longjump.profile import bump, polynomial_bubble, sine_mode
from longjump.simulator import make_simulator


def simulator(N=9, theta=0.0, kappa=1.0, alpha=0.2, beta=0.8, reservoir=ReservoirVariant.EXTENDED, scheme="auto"):
    params = ModelParams(N=N, gamma=3.0, theta=theta, kappa=kappa, alpha=alpha, beta=beta, reservoir=reservoir)
    return make_simulator(params, scheme)


class TestEmpirical:
    """Pairings, histograms and boxcars."""

    def test_pairing(self):
        sim = simulator(N=9)
        full = sim.configuration(np.ones(8, dtype=int))
        assert empirical_pairing(full, lambda q: 1.0 + 0.0 * q) == pytest.approx(1.0)
        half = sim.configuration([1, 0, 1, 0, 1, 0, 1, 0])
        expected = np.sum(site_positions(9)[::2]) / 8
        assert empirical_pairing(half, lambda q: q) == pytest.approx(expected)

    def test_bin_index(self):
        assert list(bin_index(9, 4)) == [0, 0, 1, 1, 2, 2, 3, 3]

    def test_histogram_alternating(self):
        sim = simulator(N=9)
        cfg = sim.configuration([1, 0, 1, 0, 1, 0, 1, 0])
        hist = density_histogram(cfg, 4)
        assert hist.M == 4
        assert np.allclose(hist.values, 0.5)

    def test_histogram_extremes(self):
        sim = simulator(N=17)
        assert np.all(density_histogram(sim.configuration(np.ones(16, dtype=int)), 16).values == 1.0)
        assert np.all(density_histogram(sim.configuration(np.zeros(16, dtype=int)), 5).values == 0.0)

    @pytest.mark.parametrize("bins", [0, 9])
    def test_histogram_bins_range(self, bins):
        sim = simulator(N=9)
        with pytest.raises(ValueError):
            density_histogram(sim.configuration(np.zeros(8, dtype=int)), bins)

    def test_boxcars(self):
        sim = simulator(N=9)
        cfg = sim.configuration([1, 1, 0, 0, 0, 0, 0, 1])
        assert boxcar_width(9, 0.25) == 2
        assert boxcar_left(cfg, 0.25) == 1.0
        assert boxcar_right(cfg, 0.25) == 0.5

    def test_empty_boxcar(self):
        with pytest.raises(ValueError):
            boxcar_width(9, 0.05)
        with pytest.raises(ValueError):
            boxcar_width(9, 0.0)


class TestDynkinAlgebra:
    """Drift and quadratic-variation rate against the dense generator."""

    @pytest.mark.parametrize("variant", list(ReservoirVariant))
    def test_drift_and_qv_match_generator(self, variant):
        """L f and L f^2 - 2 f L f for f = <pi, G>, state by state."""
        sim = simulator(N=6, theta=0.3, kappa=1.4, reservoir=variant)
        G = sine_mode(1)
        Q = generator_matrix(sim)
        N = sim.params.N
        g = G(site_positions(N))
        states = [np.array(state_occupation(s, N)) for s in range(Q.shape[0])]
        f = np.array([np.dot(g, eta) / (N - 1) for eta in states])
        Lf = Q @ f
        carre = Q @ (f * f) - 2.0 * f * Lf
        for s, eta in enumerate(states):
            observer = DynkinObserver(sim, G)
            observer.advance(sim.configuration(eta), 0.0)
            assert observer.drift() == pytest.approx(Lf[s], abs=1e-12)
            assert observer.qv_rate() == pytest.approx(carre[s], abs=1e-12)

    def test_incremental_state_matches_recomputation(self):
        sim = simulator(N=20, theta=-0.3, scheme="gillespie")
        G = polynomial_bubble()
        rng = np.random.default_rng(4)
        cfg = sim.init_from_profile(0.5, rng)
        observer = DynkinObserver(sim, G)
        sim.run(cfg, 0.05, [observer], rng=rng, times=[0.0, 0.05])

        fresh = DynkinObserver(sim, G)
        fresh.advance(cfg, 0.0)
        assert observer.linear == pytest.approx(fresh.linear, abs=1e-9)
        assert np.allclose(observer.u, fresh.u, atol=1e-9)
        assert observer.qv_bulk == pytest.approx(fresh.qv_bulk, abs=1e-9)
        assert observer.qv_boundary == pytest.approx(fresh.qv_boundary, abs=1e-9)

    def test_records(self):
        sim = simulator(N=12, scheme="gillespie")
        rng = np.random.default_rng(1)
        cfg = sim.init_from_profile(0.5, rng)
        observer = DynkinObserver(sim, sine_mode(1))
        sim.run(cfg, 0.02, [observer], rng=rng, times=[0.0, 0.01, 0.02])
        m0, qv0 = observer.value_at(0.0)
        assert m0 == 0.0 and qv0 == 0.0
        _, qv1 = observer.value_at(0.01)
        _, qv2 = observer.value_at(0.02)
        assert 0.0 <= qv1 <= qv2
        with pytest.raises(KeyError):
            observer.value_at(0.5)
        mean, stderr = dynkin_residual([observer], 0.02)
        assert stderr == 0.0
        with pytest.raises(ValueError):
            dynkin_residual([], 0.02)


@pytest.mark.slow
class TestMartingaleStatistics:
    """M_t(G) has mean zero and variance given by the integrated quadratic variation."""

    @pytest.mark.parametrize("G", [sine_mode(1), bump(0.2, 0.8)])
    def test_mean_zero_and_variance(self, G):
        sim = simulator(N=64, theta=0.0)
        stats = run_martingale_ensemble(sim, G, 0.05, range(200))
        assert abs(stats.mean) < 3.0 * stats.stderr
        assert 0.5 <= stats.variance_ratio <= 2.0
        assert len(stats.seeds) == 200
