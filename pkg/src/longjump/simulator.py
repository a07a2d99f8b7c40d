"""
Exact continuous-time simulation of the exclusion process with long jumps and
boundary reservoirs.

Two schemes are provided. Both are exact in law.
  gillespie: event by event. Exchange clocks ring at the configuration
      independent total rate R_ex (exchanges between equal occupations are
      no-ops) and reservoir flips are selected through a Fenwick tree.
  lazy: between exchange rings every site is an independent two-state chain,
      so a site is only advanced (with its closed-form transition law) when an
      exchange touches it or an observation is taken. Preferable when the
      reservoirs are fast.
"""
from abc import abstractmethod
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import NamedTuple, Optional, Protocol, Sequence, runtime_checkable
import numpy as np
from .kernel import JumpKernel, get_kernel, check_site
from .model import ModelParams, ReservoirVariant, reservoir_rate_factor
from .profile import Profile
from .ratetree import RateTree
from .regime import time_scale
from .sampling import AliasTable, RandomStream

logger = logging.getLogger(__name__)

SCHEMES = ("auto", "gillespie", "lazy")

class SimulationError(RuntimeError):
    """Raised when the dynamics cannot proceed, e.g. every clock has rate zero."""

class EventKind(Enum):
    FLIP = "flip"
    EXCHANGE = "exchange"

class Event(NamedTuple):
    kind: EventKind
    x: int
    y: int
    changed: bool

class Configuration:
    """
    Occupancy eta_x for x in 1..N-1 (index 0 is unused) with the current
    per-site reservoir flip rates.
    """
    def __init__(self, N: int, occupancy: bytearray, flip_rates: RateTree):
        if len(occupancy) != N:
            raise ValueError(f"Occupancy must have length N={N} (got {len(occupancy)}).")
        self.N = N
        self.occupancy = occupancy
        self.particle_count = sum(occupancy[1:])
        self.flip_rates = flip_rates

    def eta(self, x: int) -> int:
        return self.occupancy[x]

    def as_array(self) -> np.ndarray:
        """eta_1..eta_{N-1} as an int array."""
        return np.frombuffer(bytes(self.occupancy), dtype=np.uint8)[1:].astype(np.int64)

@runtime_checkable
class Observer(Protocol):
    """Called at each requested macroscopic observation time."""
    @abstractmethod
    def observe(self, t: float, cfg: Configuration):
        ...

@runtime_checkable
class PathObserver(Observer, Protocol):
    """
    An observer that integrates along the path. advance() is called with the
    microscopic holding time before each event, on_event() after it.
    Path observers require the gillespie scheme.
    """
    @abstractmethod
    def advance(self, cfg: Configuration, dt_micro: float):
        ...

    @abstractmethod
    def on_event(self, cfg: Configuration, event: Event):
        ...

class SnapshotObserver:
    """Keeps a copy of the occupancy at every observation time."""
    def __init__(self):
        self.snapshots: list[tuple[float, np.ndarray]] = []

    def observe(self, t: float, cfg: Configuration):
        self.snapshots.append((t, cfg.as_array()))

@dataclass
class Trajectory:
    seed: Optional[int]
    times: list[float]
    event_count: int
    micro_time: float
    scheme: str
    final: Configuration
    records: list[tuple[float, np.ndarray]] = field(default_factory=list)

def exchange_total_rate(params: ModelParams, kernel: Optional[JumpKernel] = None) -> float:
    """R_ex = sum over unordered pairs {x,y} in Lambda_N of p(y-x)."""
    kernel = kernel or get_kernel(params.gamma)
    N = params.N
    if N < 3:
        return 0.0
    d = np.arange(N - 2, 0, -1)
    return float(np.sum(kernel.pmf(d) * (N - 1 - d)))

def closed_form_flip_rate(x: int, eta_x: int, params: ModelParams, kernel: JumpKernel) -> float:
    """The reservoir flip rate at x, evaluated directly from its definition."""
    N = params.N
    check_site(x, N)
    b = params.boundary_strength
    c_left = reservoir_rate_factor(eta_x, params.alpha)
    c_right = reservoir_rate_factor(eta_x, params.beta)
    match params.reservoir:
        case ReservoirVariant.EXTENDED:
            return b * (kernel.tail_left(x, N) * c_left + kernel.tail_right(x, N) * c_right)
        case ReservoirVariant.CASE1:
            return b * (kernel.prob(x) * c_left + kernel.prob(N - x) * c_right)
        case ReservoirVariant.CASE2:
            return b * ((c_left if x == 1 else 0.0) + (c_right if x == N - 1 else 0.0))
    raise ValueError(f"Unknown reservoir variant {params.reservoir}.")

def profile_values(g, N: int) -> np.ndarray:
    """
    g evaluated at x/N for x = 1..N-1; g is a Profile, a function of q, a constant
    or an array of the N-1 site values.
    """
    q = np.arange(1, N) / N
    if isinstance(g, np.ndarray) and g.shape == (N - 1,):
        return g.astype(float)
    if isinstance(g, Profile):
        return g.at(q)
    if callable(g):
        return np.zeros(N - 1) + np.asarray(g(q), dtype=float)
    return np.full(N - 1, float(g))

class Simulator:
    """
    The microscopic model for one ModelParams. Rate tables and the exchange
    proposal are built once and shared by every trajectory.
    """
    def __init__(self, params: ModelParams, kernel: Optional[JumpKernel] = None, scheme: str = "auto"):
        params.check()
        if scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme '{scheme}'. Expected one of {', '.join(SCHEMES)}.")
        self.params = params
        self.kernel = kernel or get_kernel(params.gamma)
        self.scheme = scheme
        self.time_scale = time_scale(params.N, params.gamma, params.theta, params.reservoir)
        N = params.N

        # Flip rates by occupation: empty sites fill at rate_if_empty, occupied sites empty at rate_if_occupied
        left, right = params.reservoir_weights(self.kernel)
        b = params.boundary_strength
        self.left_weight = left
        self.right_weight = right
        on = np.zeros(N)
        off = np.zeros(N)
        on[1:] = b * (left * params.alpha + right * params.beta)
        off[1:] = b * (left * (1.0 - params.alpha) + right * (1.0 - params.beta))
        self.rate_if_empty: list[float] = on.tolist()
        self.rate_if_occupied: list[float] = off.tolist()
        self.total_flip_scale = float(0.5 * (on.sum() + off.sum()))

        # Exchange proposal: distance d with weight p(d)(N-1-d), then a uniform offset
        self.exchange_rate = exchange_total_rate(params, self.kernel)
        self._distance: Optional[AliasTable] = None
        if N >= 3:
            d = np.arange(1, N - 1)
            self._distance = AliasTable(self.kernel.pmf(d) * (N - 1 - d))

    def flip_rate(self, x: int, cfg: Configuration) -> float:
        check_site(x, self.params.N)
        return self.rate_if_occupied[x] if cfg.occupancy[x] else self.rate_if_empty[x]

    def site_rates(self, occupancy: bytearray) -> list[float]:
        on, off = self.rate_if_empty, self.rate_if_occupied
        return [off[x] if occupancy[x] else on[x] for x in range(1, self.params.N)]

    def configuration(self, eta) -> Configuration:
        """A configuration from 0/1 values for sites 1..N-1."""
        eta = np.asarray(eta)
        N = self.params.N
        if eta.shape != (N - 1,):
            raise ValueError(f"Expected {N - 1} occupation values (got shape {eta.shape}).")
        if np.any((eta != 0) & (eta != 1)):
            raise ValueError("Occupation values must be 0 or 1.")
        occupancy = bytearray(N)
        occupancy[1:] = eta.astype(np.uint8).tobytes()
        return Configuration(N, occupancy, RateTree(self.site_rates(occupancy)))

    def init_from_profile(self, g, rng: int | np.random.Generator | None = None) -> Configuration:
        """Independent Bernoulli(g(x/N)) occupations (product measure associated to g)."""
        values = profile_values(g, self.params.N)
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("Initial profile must take values in [0,1].")
        generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        eta = (generator.random(self.params.N - 1) < values).astype(np.uint8)
        return self.configuration(eta)

    def rebuild_rates(self, cfg: Configuration):
        cfg.flip_rates = RateTree(self.site_rates(cfg.occupancy))
        cfg.particle_count = sum(cfg.occupancy[1:])

    def rate_mismatch(self, cfg: Configuration) -> float:
        """Largest difference between the incremental rate table and a fresh closed-form evaluation."""
        worst = 0.0
        for x in range(1, self.params.N):
            fresh = closed_form_flip_rate(x, cfg.occupancy[x], self.params, self.kernel)
            worst = max(worst, abs(cfg.flip_rates[x - 1] - fresh))
        worst = max(worst, abs(cfg.flip_rates.total() - sum(cfg.flip_rates.rates)))
        return worst

    def _propose_pair(self, stream: RandomStream) -> tuple[int, int]:
        d = self._distance.draw(stream.uniform(), stream.uniform()) + 1
        span = self.params.N - 1 - d
        x = 1 + min(int(stream.uniform() * span), span - 1)
        return x, x + d

    def _fire(self, cfg: Configuration, u: float, stream: RandomStream) -> Event:
        eta = cfg.occupancy
        tree = cfg.flip_rates
        if u < self.exchange_rate:
            x, y = self._propose_pair(stream)
            if eta[x] == eta[y]:
                return Event(EventKind.EXCHANGE, x, y, False)
            eta[x], eta[y] = eta[y], eta[x]
            tree.update(x - 1, self.rate_if_occupied[x] if eta[x] else self.rate_if_empty[x])
            tree.update(y - 1, self.rate_if_occupied[y] if eta[y] else self.rate_if_empty[y])
            return Event(EventKind.EXCHANGE, x, y, True)

        x = tree.find(u - self.exchange_rate) + 1
        if eta[x]:
            eta[x] = 0
            cfg.particle_count -= 1
            tree.update(x - 1, self.rate_if_empty[x])
        else:
            eta[x] = 1
            cfg.particle_count += 1
            tree.update(x - 1, self.rate_if_occupied[x])
        return Event(EventKind.FLIP, x, x, True)

    def step(self, cfg: Configuration, stream: RandomStream) -> tuple[Event, float]:
        """One event of the chain and the microscopic holding time before it."""
        total = self.exchange_rate + cfg.flip_rates.total()
        if total <= 0.0:
            raise SimulationError("Total event rate is zero; the chain cannot move.")
        dt = stream.exponential(total)
        return self._fire(cfg, stream.uniform() * total, stream), dt

    def choose_scheme(self, observers: Sequence[Observer]) -> str:
        path = any(isinstance(o, PathObserver) for o in observers)
        if self.scheme == "lazy" and path:
            raise SimulationError("Path observers need the event-by-event 'gillespie' scheme.")
        if self.scheme != "auto":
            return self.scheme
        if path:
            return "gillespie"
        return "lazy" if self.total_flip_scale > self.exchange_rate else "gillespie"

    def run(
            self,
            cfg: Configuration,
            t_macro: float,
            observers: Sequence[Observer] = (),
            rng: int | np.random.Generator | RandomStream | None = None,
            times: Optional[Sequence[float]] = None,
            seed: Optional[int] = None,
            keep_snapshots: bool = False) -> Trajectory:
        """
        Advance cfg in place to macroscopic time t_macro (microscopic time
        t_macro * Theta(N)), calling the observers at each of the macroscopic
        times (default: t_macro only).
        """
        if not t_macro >= 0:
            raise ValueError(f"t_macro must be non-negative (got {t_macro}).")
        obs_times = sorted(set([t_macro] if times is None else [float(t) for t in times]))
        if obs_times and (obs_times[0] < 0 or obs_times[-1] > t_macro):
            raise ValueError(f"Observation times must lie in [0, {t_macro}].")

        stream = rng if isinstance(rng, RandomStream) else RandomStream(rng if rng is not None else seed)
        observers = list(observers)
        snapshots = SnapshotObserver()
        if keep_snapshots:
            observers.append(snapshots)
        scheme = self.choose_scheme(observers)
        targets = [(t, t * self.time_scale) for t in obs_times]

        if scheme == "lazy":
            events = self._run_lazy(cfg, targets, observers, stream)
        else:
            path_observers = [o for o in observers if isinstance(o, PathObserver)]
            events = self._run_gillespie(cfg, targets, observers, path_observers, stream)
        logger.debug("Trajectory seed=%s scheme=%s events=%d", seed, scheme, events)

        return Trajectory(
            seed=seed,
            times=obs_times,
            event_count=events,
            micro_time=t_macro * self.time_scale,
            scheme=scheme,
            final=cfg,
            records=snapshots.snapshots)

    def _run_gillespie(self, cfg, targets, observers, path_observers, stream) -> int:
        r_ex = self.exchange_rate
        now = 0.0
        events = 0
        for t_obs, target in targets:
            while True:
                total = r_ex + cfg.flip_rates.total()
                if total <= 0.0:
                    if now >= target:
                        break
                    raise SimulationError("Total event rate is zero; the chain cannot move.")
                dt = stream.exponential(total)
                if now + dt > target:
                    # Memoryless clocks: the pending event is redrawn after the observation
                    for o in path_observers:
                        o.advance(cfg, target - now)
                    now = target
                    break
                for o in path_observers:
                    o.advance(cfg, dt)
                now += dt
                event = self._fire(cfg, stream.uniform() * total, stream)
                events += 1
                for o in path_observers:
                    o.on_event(cfg, event)
            for o in observers:
                o.observe(t_obs, cfg)
        return events

    def _run_lazy(self, cfg, targets, observers, stream) -> int:
        N = self.params.N
        eta = cfg.occupancy
        on, off = self.rate_if_empty, self.rate_if_occupied
        last = [0.0] * N
        r_ex = self.exchange_rate
        now = 0.0
        events = 0

        def propagate(x: int, t: float):
            lam = on[x] + off[x]
            tau = t - last[x]
            last[x] = t
            if lam <= 0.0 or tau <= 0.0:
                return
            bar = on[x] / lam
            p1 = bar + (eta[x] - bar) * math.exp(-lam * tau)
            new = 1 if stream.uniform() < p1 else 0
            cfg.particle_count += new - eta[x]
            eta[x] = new

        for t_obs, target in targets:
            while r_ex > 0.0:
                dt = stream.exponential(r_ex)
                if now + dt > target:
                    break
                now += dt
                x, y = self._propose_pair(stream)
                propagate(x, now)
                propagate(y, now)
                if eta[x] != eta[y]:
                    eta[x], eta[y] = eta[y], eta[x]
                events += 1
            now = target
            self._propagate_all(cfg, last, now, stream.generator)
            for o in observers:
                o.observe(t_obs, cfg)

        self.rebuild_rates(cfg)
        return events

    def _propagate_all(self, cfg: Configuration, last: list[float], now: float, generator: np.random.Generator):
        N = self.params.N
        eta = cfg.as_array().astype(float)
        on = np.array(self.rate_if_empty[1:])
        off = np.array(self.rate_if_occupied[1:])
        lam = on + off
        tau = now - np.array(last[1:])
        with np.errstate(divide="ignore", invalid="ignore"):
            bar = np.where(lam > 0, on / np.where(lam > 0, lam, 1.0), eta)
        p1 = np.where(tau > 0, bar + (eta - bar) * np.exp(-lam * tau), eta)
        new = (generator.random(N - 1) < p1).astype(np.uint8)
        cfg.occupancy[1:] = new.tobytes()
        cfg.particle_count = int(new.sum())
        last[:] = [now] * N

def make_simulator(params: ModelParams, scheme: str = "auto") -> Simulator:
    return Simulator(params, get_kernel(params.gamma), scheme)
