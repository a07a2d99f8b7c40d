"""
Small-N generator matrices.

The reference rates are written out from the definition of the dynamics,
with the reservoir tails taken from the Hurwitz zeta function.
"""
import numpy as np
import pytest
from scipy.special import zeta

from longjump.generator import generator_matrix, product_measure, state_occupation, stationarity_defect
from longjump.model import ModelParams, ReservoirVariant
from longjump.simulator import make_simulator

GAMMA = 3.0
C_GAMMA = 1.0 / (2.0 * zeta(GAMMA + 1.0))


def p(z: int) -> float:
    return 0.0 if z == 0 else C_GAMMA * abs(z) ** (-GAMMA - 1.0)


def tail(x: int) -> float:
    """sum_{y >= x} p(y)"""
    return C_GAMMA * zeta(GAMMA + 1.0, x)


def reference_generator(N: int, theta: float, kappa: float, alpha: float, beta: float, variant) -> np.ndarray:
    b = kappa * N ** (-theta)
    sites = N - 1
    Q = np.zeros((1 << sites, 1 << sites))
    for s in range(1 << sites):
        eta = state_occupation(s, N)
        for x in range(1, N):
            for y in range(1, N):
                if x < y and eta[x - 1] != eta[y - 1]:
                    Q[s, s ^ (1 << (x - 1)) ^ (1 << (y - 1))] += p(y - x)
            match variant:
                case ReservoirVariant.EXTENDED:
                    left, right = tail(x), tail(N - x)
                case ReservoirVariant.CASE1:
                    left, right = p(x), p(N - x)
                case _:
                    left, right = float(x == 1), float(x == N - 1)
            if eta[x - 1]:
                rate = b * (left * (1 - alpha) + right * (1 - beta))
            else:
                rate = b * (left * alpha + right * beta)
            Q[s, s ^ (1 << (x - 1))] += rate
        Q[s, s] = -Q[s].sum()
    return Q


class TestGeneratorMatrix:
    """Eight-state generator at N = 4."""

    @pytest.mark.parametrize("variant", list(ReservoirVariant))
    def test_matches_reference(self, variant):
        params = ModelParams(N=4, gamma=GAMMA, theta=0.5, kappa=1.7, alpha=0.3, beta=0.6, reservoir=variant)
        Q = generator_matrix(make_simulator(params))
        expected = reference_generator(4, 0.5, 1.7, 0.3, 0.6, variant)
        assert Q.shape == (8, 8)
        assert np.allclose(Q, expected, rtol=1e-9, atol=1e-14)

    def test_rows_sum_to_zero(self):
        params = ModelParams(N=5, gamma=GAMMA, theta=0.0, kappa=1.0, alpha=0.2, beta=0.9)
        Q = generator_matrix(make_simulator(params))
        assert np.max(np.abs(Q.sum(axis=1))) < 1e-13
        off_diagonal = Q - np.diag(np.diag(Q))
        assert np.all(off_diagonal >= 0)

    @pytest.mark.parametrize("variant", list(ReservoirVariant))
    def test_product_measure_invariant_at_equal_densities(self, variant):
        """Bernoulli(alpha) product measure is stationary when alpha = beta."""
        params = ModelParams(N=4, gamma=GAMMA, theta=0.0, kappa=1.0, alpha=0.35, beta=0.35, reservoir=variant)
        Q = generator_matrix(make_simulator(params))
        assert stationarity_defect(Q, product_measure(4, 0.35)) < 1e-12

    def test_product_measure_not_invariant_with_gradient(self):
        params = ModelParams(N=4, gamma=GAMMA, theta=0.0, kappa=1.0, alpha=0.1, beta=0.9)
        Q = generator_matrix(make_simulator(params))
        assert stationarity_defect(Q, product_measure(4, 0.5)) > 1e-3

    def test_product_measure_normalised(self):
        assert product_measure(6, 0.3).sum() == pytest.approx(1.0)

    def test_size_limit(self):
        params = ModelParams(N=14, gamma=GAMMA, theta=0.0, kappa=1.0, alpha=0.2, beta=0.8)
        with pytest.raises(ValueError):
            generator_matrix(make_simulator(params))
