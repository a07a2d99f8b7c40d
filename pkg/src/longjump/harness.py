"""
Experiment orchestration: Monte Carlo ensembles against the hydrodynamic
equation, convergence in N and the regime map over (gamma, theta).
"""
from dataclasses import dataclass, field
import logging
import time
from typing import Optional, Sequence
import numpy as np
from .config import ConfigError, ExperimentConfig
from .ensemble import EnsembleStats, run_ensemble
from .kernel import get_kernel
from .model import ReservoirVariant
from .pde import PDESolution, robin_boundary_values, solve
from .regime import Regime, RegimeKind, classify_regime, time_scale_exponent
from .stationary import StationaryProfile, stationary_profile

logger = logging.getLogger(__name__)

@dataclass
class ValidationRow:
    t: float
    l1: float
    linf: float
    mean_stderr: float
    boxcar_left: float
    boxcar_right: float
    rho_left: float
    rho_right: float

@dataclass
class ValidationReport:
    regime: Regime
    N: int
    rows: list[ValidationRow]
    l1_tolerance: float
    linf_tolerance: Optional[float]
    stats: EnsembleStats
    solution: PDESolution
    passed: bool = False
    failures: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.kind.value,
            "sigma_hat": self.regime.sigma_hat,
            "kappa_hat": self.regime.kappa_hat,
            "m_hat": self.regime.m_hat,
            "N": self.N,
            "seeds": self.stats.seed_count,
            "l1_tolerance": self.l1_tolerance,
            "linf_tolerance": self.linf_tolerance,
            "passed": self.passed,
            "failures": self.failures,
            "rows": [row.__dict__ for row in self.rows],
        }

def regime_for_config(cfg: ExperimentConfig) -> Regime:
    p = cfg.params
    kernel = get_kernel(p.gamma)
    return classify_regime(p.gamma, p.theta, kernel, p.kappa, p.reservoir)

def solve_for_config(cfg: ExperimentConfig, record_every: int = 0) -> PDESolution:
    """The hydrodynamic equation of the configured regime, recorded at the observation times."""
    p = cfg.params
    return solve(
        regime_for_config(cfg),
        cfg.initial_profile(),
        p.alpha,
        p.beta,
        cfg.t_end,
        dt=cfg.pde.dt,
        M=cfg.pde.M,
        times=cfg.times,
        record_every=record_every)

def stationary_for_config(cfg: ExperimentConfig) -> StationaryProfile:
    p = cfg.params
    return stationary_profile(regime_for_config(cfg), p.alpha, p.beta, cfg.pde.M, g=cfg.initial_profile())

def boundary_density(sol: PDESolution, t: float) -> tuple[float, float]:
    """rho_t(0), rho_t(1): the Dirichlet data where the regime pins them, extrapolated otherwise."""
    kind = sol.regime.kind
    if kind.has_dirichlet_values or (kind == RegimeKind.REACTION_ONLY and t > 0):
        return sol.alpha, sol.beta
    left, right = robin_boundary_values(sol.profile_at(t).values)
    return float(left[0]), float(right[0])

def check_regime(cfg: ExperimentConfig, regime: Regime):
    """The reaction regimes are driven by the reservoirs alone and have no limit without them."""
    issues = []
    if regime.kind in (RegimeKind.REACTION_ONLY, RegimeKind.RD_DIRICHLET) and regime.kappa_hat <= 0:
        issues.append(f"params.kappa: regime '{regime.kind.value}' needs kappa > 0 (got {cfg.params.kappa}).")
    if issues:
        raise ConfigError("Inconsistent regime parameters.", issues)

def validate(cfg: ExperimentConfig, N: Optional[int] = None, l1_tolerance: Optional[float] = None) -> ValidationReport:
    """
    Run the ensemble and the matching PDE solve and compare the mean binned
    profile with the solution at the bin centres at every observation time.
    """
    regime = regime_for_config(cfg)
    check_regime(cfg, regime)
    tol_l1 = cfg.tolerance.l1 if l1_tolerance is None else l1_tolerance
    tol_linf = cfg.tolerance.linf

    stats = run_ensemble(cfg, N)
    solution = solve_for_config(cfg)
    centres = stats.bin_centres

    rows = []
    failures = []
    for k, t in enumerate(stats.times):
        predicted = solution.profile_at(t).at(centres)
        diff = np.abs(stats.mean[k] - predicted)
        rho_left, rho_right = boundary_density(solution, t)
        row = ValidationRow(
            t=t,
            l1=float(np.mean(diff)),
            linf=float(np.max(diff)),
            mean_stderr=float(np.mean(stats.stderr[k])),
            boxcar_left=float(stats.boxcar_mean[k, 0]),
            boxcar_right=float(stats.boxcar_mean[k, 1]),
            rho_left=rho_left,
            rho_right=rho_right)
        rows.append(row)
        if row.l1 > tol_l1:
            failures.append(f"t={t:g}: L1 distance {row.l1:.4g} exceeds {tol_l1:g}")
        if tol_linf is not None and row.linf > tol_linf:
            failures.append(f"t={t:g}: Linf distance {row.linf:.4g} exceeds {tol_linf:g}")

    report = ValidationReport(
        regime=regime,
        N=stats.params.N,
        rows=rows,
        l1_tolerance=tol_l1,
        linf_tolerance=tol_linf,
        stats=stats,
        solution=solution,
        passed=not failures,
        failures=failures)
    logger.info("Validation %s N=%d: %s", regime.kind.value, report.N, "PASS" if report.passed else "FAIL")
    return report

@dataclass
class ConvergenceRow:
    N: int
    l1: float
    linf: float
    seeds: int

def convergence_table(cfg: ExperimentConfig, N_list: Sequence[int]) -> list[ConvergenceRow]:
    """Validation distance at the last observation time for each N, same seeds and bins."""
    if list(N_list) != sorted(N_list):
        raise ValueError("N_list must be ascending.")
    rows = []
    for N in N_list:
        report = validate(cfg, N)
        last = report.rows[-1]
        rows.append(ConvergenceRow(N=N, l1=last.l1, linf=last.linf, seeds=report.stats.seed_count))
    return rows

@dataclass
class RegimeRow:
    gamma: float
    theta: float
    regime: RegimeKind
    sigma_hat: float
    kappa_hat: float
    m_hat: float
    time_scale_exponent: float

def phase_sweep(
        gamma_list: Sequence[float],
        theta_list: Sequence[float],
        kappa: float = 1.0,
        variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> list[RegimeRow]:
    """classify_regime over the (gamma, theta) grid, gamma-major."""
    rows = []
    for gamma in gamma_list:
        kernel = get_kernel(float(gamma))
        for theta in theta_list:
            regime = classify_regime(gamma, theta, kernel, kappa, variant)
            rows.append(RegimeRow(
                gamma=gamma,
                theta=theta,
                regime=regime.kind,
                sigma_hat=regime.sigma_hat,
                kappa_hat=regime.kappa_hat,
                m_hat=regime.m_hat,
                time_scale_exponent=time_scale_exponent(gamma, theta, variant)))
    return rows

class Experiment:
    """
    A loaded experiment configuration with its regime, ready to run in any mode.
    """
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.regime = regime_for_config(cfg)
        self.timings: dict[str, float] = {}

    def timed(self, name: str, fn, *args, **kwargs):
        started = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[name] = time.perf_counter() - started
        return result

    def describe(self) -> list[str]:
        p = self.cfg.params
        return [
            f"  Mode:      {self.cfg.mode.value}",
            f"  N:         {p.N}   gamma: {p.gamma:g}   theta: {p.theta:g}   kappa: {p.kappa:g}",
            f"  Reservoir: {p.reservoir.value}   alpha: {p.alpha:g}   beta: {p.beta:g}",
            f"  Regime:    {self.regime.kind.value}",
        ]
