"""
Dense generator matrix of the chain for very small N, used to check the
simulator's rates and the invariance of product measures.
"""
import numpy as np
from .simulator import Simulator

MAX_SITES = 12

def state_occupation(state: int, N: int) -> list[int]:
    """eta_1..eta_{N-1} of the state with bit x-1 holding eta_x."""
    return [(state >> (x - 1)) & 1 for x in range(1, N)]

def generator_matrix(sim: Simulator) -> np.ndarray:
    """
    Q with Q[s, s'] the jump rate from state s to s' and rows summing to zero,
    assembled from the simulator's exchange and flip rates.
    """
    N = sim.params.N
    sites = N - 1
    if sites > MAX_SITES:
        raise ValueError(f"Generator assembly is limited to {MAX_SITES} sites (got {sites}).")
    size = 1 << sites
    Q = np.zeros((size, size))
    for s in range(size):
        eta = state_occupation(s, N)
        for x in range(1, N):
            for y in range(x + 1, N):
                if eta[x - 1] != eta[y - 1]:
                    Q[s, s ^ (1 << (x - 1)) ^ (1 << (y - 1))] += sim.kernel.prob(y - x)
            rate = sim.rate_if_occupied[x] if eta[x - 1] else sim.rate_if_empty[x]
            Q[s, s ^ (1 << (x - 1))] += rate
        Q[s, s] = -Q[s].sum()
    return Q

def product_measure(N: int, rho: float) -> np.ndarray:
    """Bernoulli(rho) product measure over the 2^(N-1) states."""
    pi = np.empty(1 << (N - 1))
    for s in range(len(pi)):
        k = bin(s).count("1")
        pi[s] = rho**k * (1.0 - rho) ** (N - 1 - k)
    return pi

def stationarity_defect(Q: np.ndarray, pi: np.ndarray) -> float:
    """max |(pi Q)_s|; zero for an invariant measure."""
    return float(np.max(np.abs(pi @ Q)))
