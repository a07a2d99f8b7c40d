"""
Seed-parallel ensembles of trajectories, reduced to binned mean profiles.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
import time
from typing import Optional
import numpy as np
from .config import ExperimentConfig
from .model import ModelParams
from .observables import boxcar_left, boxcar_right, density_histogram
from .simulator import Configuration, Simulator, make_simulator, profile_values
from .util import ordered_map

logger = logging.getLogger(__name__)

class EnsembleError(RuntimeError):
    """Raised when one trajectory of an ensemble fails; names the seed."""
    def __init__(self, seed: int, message: str):
        super().__init__(seed, message)
        self.seed = seed
        self.message = message

    def __str__(self) -> str:
        return f"Trajectory with seed {self.seed} failed: {self.message}"

class BinnedObserver:
    """Binned density and boundary boxcar averages at each observation time."""
    def __init__(self, bins: int, eps: float):
        self.bins = bins
        self.eps = eps
        self.densities: list[np.ndarray] = []
        self.boxcars: list[tuple[float, float]] = []

    def observe(self, t: float, cfg: Configuration):
        self.densities.append(density_histogram(cfg, self.bins).values)
        self.boxcars.append((boxcar_left(cfg, self.eps), boxcar_right(cfg, self.eps)))

@dataclass(frozen=True)
class TrajectoryTask:
    params: ModelParams
    scheme: str
    initial: tuple[float, ...]
    times: tuple[float, ...]
    bins: int
    eps: float
    seed: int

@dataclass
class TrajectorySummary:
    seed: int
    densities: np.ndarray
    boxcars: np.ndarray
    event_count: int
    wall_time: float
    scheme: str

@lru_cache(maxsize=8)
def cached_simulator(params: ModelParams, scheme: str) -> Simulator:
    """One simulator per worker process and parameter set."""
    return make_simulator(params, scheme)

def run_trajectory(task: TrajectoryTask) -> TrajectorySummary:
    started = time.perf_counter()
    try:
        sim = cached_simulator(task.params, task.scheme)
        rng = np.random.default_rng(task.seed)
        cfg = sim.init_from_profile(np.array(task.initial), rng)
        observer = BinnedObserver(task.bins, task.eps)
        traj = sim.run(cfg, max(task.times), [observer], rng=rng, times=task.times, seed=task.seed)
    except Exception as exc:
        raise EnsembleError(task.seed, str(exc)) from exc
    return TrajectorySummary(
        seed=task.seed,
        densities=np.array(observer.densities),
        boxcars=np.array(observer.boxcars),
        event_count=traj.event_count,
        wall_time=time.perf_counter() - started,
        scheme=traj.scheme)

@dataclass
class EnsembleStats:
    """Per observation time: mean binned profile and its standard error over seeds."""
    params: ModelParams
    times: list[float]
    bins: int
    seeds: list[int]
    mean: np.ndarray
    stderr: np.ndarray
    boxcar_mean: np.ndarray
    boxcar_stderr: np.ndarray
    per_seed: np.ndarray
    time_scale: float
    event_counts: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    scheme: str = ""

    @property
    def bin_centres(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) / self.bins

    @property
    def seed_count(self) -> int:
        return len(self.seeds)

    def index_of(self, t: float) -> int:
        return self.times.index(t)

def mean_and_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over axis 0, summed in the given order."""
    n = samples.shape[0]
    mean = np.mean(samples, axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, np.std(samples, axis=0, ddof=1) / np.sqrt(n)

def run_ensemble(cfg: ExperimentConfig, N: Optional[int] = None, seeds: Optional[list[int]] = None) -> EnsembleStats:
    """
    One trajectory per seed (in parallel when cfg.workers > 1), reduced in seed
    order so the result does not depend on scheduling.
    """
    params = cfg.model_params(N)
    seeds = cfg.seed_list() if seeds is None else seeds
    times = tuple(sorted(set(float(t) for t in cfg.times)))
    initial = tuple(profile_values(cfg.initial_profile(), params.N).tolist())
    tasks = [
        TrajectoryTask(params, cfg.scheme, initial, times, cfg.bins, cfg.boxcar_eps, seed)
        for seed in seeds
    ]

    started = time.perf_counter()
    summaries = ordered_map(run_trajectory, tasks, cfg.workers)
    wall_time = time.perf_counter() - started

    per_seed = np.array([s.densities for s in summaries])
    boxcars = np.array([s.boxcars for s in summaries])
    mean, stderr = mean_and_stderr(per_seed)
    boxcar_mean, boxcar_stderr = mean_and_stderr(boxcars)
    sim = cached_simulator(params, cfg.scheme)
    logger.info("Ensemble N=%d seeds=%d finished in %.2fs", params.N, len(seeds), wall_time)

    return EnsembleStats(
        params=params,
        times=list(times),
        bins=cfg.bins,
        seeds=list(seeds),
        mean=mean,
        stderr=stderr,
        boxcar_mean=boxcar_mean,
        boxcar_stderr=boxcar_stderr,
        per_seed=per_seed,
        time_scale=sim.time_scale,
        event_counts=[s.event_count for s in summaries],
        wall_time=wall_time,
        scheme=summaries[0].scheme if summaries else cfg.scheme)
