"""
Functionals of a configuration: empirical measure pairings, binned densities,
boundary boxcar averages and the Dynkin martingale of <pi, G>.
"""
from dataclasses import dataclass, field
import logging
from typing import Optional, Sequence
import numpy as np
from .profile import Profile, SmoothFunction
from .simulator import Configuration, Event, EventKind, Simulator

logger = logging.getLogger(__name__)

def site_positions(N: int) -> np.ndarray:
    """x/N for x in Lambda_N."""
    return np.arange(1, N) / N

def empirical_pairing(cfg: Configuration, G) -> float:
    """<pi^N, G> = (1/(N-1)) sum_x G(x/N) eta_x."""
    q = site_positions(cfg.N)
    weights = np.zeros(cfg.N - 1) + np.asarray(G(q), dtype=float)
    return float(np.dot(weights, cfg.as_array()) / (cfg.N - 1))

def bin_index(N: int, bins: int) -> np.ndarray:
    """Bin of each site x = 1..N-1: floor(x * bins / N)."""
    return (np.arange(1, N) * bins) // N

def density_histogram(cfg: Configuration, bins: int) -> Profile:
    """Average occupation per spatial bin, as a cell-centred profile with `bins` cells."""
    if not 1 <= bins <= cfg.N - 1:
        raise ValueError(f"bins must lie in 1..{cfg.N - 1} (got {bins}).")
    index = bin_index(cfg.N, bins)
    counts = np.bincount(index, minlength=bins)
    occupied = np.bincount(index, weights=cfg.as_array(), minlength=bins)
    return Profile(occupied / counts)

def boxcar_width(N: int, eps: float) -> int:
    width = int(np.floor(eps * N))
    if not eps > 0 or width < 1:
        raise ValueError(f"Boxcar window floor(eps*N) is empty (eps={eps}, N={N}).")
    return min(width, N - 1)

def boxcar_left(cfg: Configuration, eps: float) -> float:
    """Mean of eta_1..eta_l, l = floor(eps N)."""
    width = boxcar_width(cfg.N, eps)
    return sum(cfg.occupancy[1:width + 1]) / width

def boxcar_right(cfg: Configuration, eps: float) -> float:
    """Mean of eta_{N-l}..eta_{N-1}, the mirror of boxcar_left."""
    width = boxcar_width(cfg.N, eps)
    return sum(cfg.occupancy[cfg.N - width:cfg.N]) / width

class DynkinObserver:
    """
    Tracks M_t(G) = <pi_t,G> - <pi_0,G> - int_0^t Theta(N) L_N <pi_s,G> ds along a
    trajectory, together with the integrated quadratic-variation rate.

    Both integrands are linear or quadratic in eta and are kept up to date
    event by event:
        L_N <pi,G>  = (w . eta + c) / (N-1)
        QV rate     = (sum_x eta_x b_x - eta.B.eta + sum_x G_x^2 flip_rate_x) / (N-1)^2
    with B_xy = (G_x - G_y)^2 p(y-x) over bulk pairs.
    G is taken at s = 0 (static test functions).
    """
    def __init__(self, sim: Simulator, G: SmoothFunction):
        N = sim.params.N
        self.sim = sim
        self.G = G
        self.norm = 1.0 / (N - 1)
        g = np.zeros(N - 1) + np.asarray(G(site_positions(N)), dtype=float)
        self.g = g

        # Bulk pair weights p(y-x) on Lambda_N x Lambda_N
        x = np.arange(1, N)
        pair = sim.kernel.pmf(x[None, :] - x[:, None])
        bulk_action = pair @ g - g * pair.sum(axis=1)

        b = sim.params.boundary_strength
        left, right = sim.left_weight, sim.right_weight
        alpha, beta = sim.params.alpha, sim.params.beta
        self.w = bulk_action - b * g * (left + right)
        self.c = b * float(np.sum(g * (alpha * left + beta * right)))

        self.B = (g[:, None] - g[None, :]) ** 2 * pair
        self.b_row = self.B.sum(axis=1)
        on = np.array(sim.rate_if_empty[1:])
        off = np.array(sim.rate_if_occupied[1:])
        self.boundary_on = g * g * on
        self.boundary_delta = g * g * (off - on)

        self._ready = False
        self.records: list[tuple[float, float, float]] = []

    def _start(self, cfg: Configuration):
        eta = cfg.as_array().astype(float)
        self.initial_pairing = float(np.dot(self.g, eta)) * self.norm
        self.linear = float(np.dot(self.w, eta))
        self.u = self.B @ eta
        self.qv_bulk = float(np.dot(self.b_row, eta) - np.dot(eta, self.u))
        self.qv_boundary = float(np.sum(self.boundary_on + self.boundary_delta * eta))
        self.drift_integral = 0.0
        self.qv_integral = 0.0
        self._ready = True

    def drift(self) -> float:
        return (self.linear + self.c) * self.norm

    def qv_rate(self) -> float:
        return (self.qv_bulk + self.qv_boundary) * self.norm * self.norm

    def advance(self, cfg: Configuration, dt_micro: float):
        if not self._ready:
            self._start(cfg)
        self.drift_integral += self.drift() * dt_micro
        self.qv_integral += self.qv_rate() * dt_micro

    def _site_changed(self, i: int, delta: int):
        # i is the 0-based site index, delta = +1 or -1
        self.linear += delta * self.w[i]
        self.qv_bulk += delta * self.b_row[i] - 2.0 * delta * self.u[i]
        self.u += delta * self.B[:, i]
        self.qv_boundary += delta * self.boundary_delta[i]

    def on_event(self, cfg: Configuration, event: Event):
        if not event.changed:
            return
        eta = cfg.occupancy
        if event.kind == EventKind.FLIP:
            self._site_changed(event.x - 1, 1 if eta[event.x] else -1)
        else:
            self._site_changed(event.x - 1, 1 if eta[event.x] else -1)
            self._site_changed(event.y - 1, 1 if eta[event.y] else -1)

    def observe(self, t: float, cfg: Configuration):
        if not self._ready:
            self._start(cfg)
        pairing = float(np.dot(self.g, cfg.as_array())) * self.norm
        martingale = pairing - self.initial_pairing - self.drift_integral
        self.records.append((t, martingale, self.qv_integral))

    def value_at(self, t: float) -> tuple[float, float]:
        """(M_t, integrated quadratic variation) recorded at observation time t."""
        for s, m, qv in self.records:
            if s == t:
                return m, qv
        raise KeyError(f"No observation recorded at t={t}.")

@dataclass
class MartingaleStats:
    t: float
    G_name: str
    samples: np.ndarray
    qv: np.ndarray
    seeds: list[int] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def stderr(self) -> float:
        n = len(self.samples)
        return float(np.std(self.samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    @property
    def variance(self) -> float:
        return float(np.var(self.samples, ddof=1)) if len(self.samples) > 1 else 0.0

    @property
    def qv_mean(self) -> float:
        return float(np.mean(self.qv))

    @property
    def variance_ratio(self) -> float:
        """Empirical variance of M_t over the mean integrated quadratic variation."""
        return self.variance / self.qv_mean if self.qv_mean > 0 else float("nan")

def dynkin_residual(observers: Sequence[DynkinObserver], t: float) -> tuple[float, float]:
    """Ensemble mean and standard error of M_t(G) over independent trajectories."""
    samples = np.array([o.value_at(t)[0] for o in observers])
    n = len(samples)
    if n == 0:
        raise ValueError("No trajectories supplied.")
    stderr = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(samples)), stderr

def run_martingale_ensemble(
        sim: Simulator,
        G: SmoothFunction,
        t: float,
        seeds: Sequence[int],
        initial=0.5) -> MartingaleStats:
    """
    Simulate one trajectory per seed with a DynkinObserver attached. Test functions
    are closures, so the ensemble runs in-process.
    """
    observers = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        cfg = sim.init_from_profile(initial, rng)
        observer = DynkinObserver(sim, G)
        sim.run(cfg, t, [observer], rng=rng, times=[0.0, t], seed=seed)
        observers.append(observer)
    samples = np.array([o.value_at(t)[0] for o in observers])
    qv = np.array([o.value_at(t)[1] for o in observers])
    logger.debug("Martingale ensemble G=%s t=%s seeds=%d mean=%.3g", G.name, t, len(seeds), samples.mean())
    return MartingaleStats(t=t, G_name=G.name, samples=samples, qv=qv, seeds=list(seeds))
