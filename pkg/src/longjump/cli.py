import json
import logging
from pathlib import Path
import sys
from typing import Optional, Sequence
from . import __version__
from .args import parse_main_args
from .config import ConfigError, ExperimentConfig, Mode, config_to_dict, load_config
from .ensemble import EnsembleError, run_ensemble
from .harness import (
    Experiment, check_regime, convergence_table, phase_sweep, solve_for_config, stationary_for_config, validate)
from .kernel import KernelDomainError, get_kernel
from .model import ReservoirVariant
from .output import OutputWriter, run_manifest, to_plain
from .pde import NumericError
from .regime import RegimeKind, regime_for_kind
from .simulator import SimulationError
from .stationary import StationaryProfile, shape_check, stationary_profile
from .util import parse_range

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

REGIME_MAP_HEADER = ["gamma", "theta", "regime", "sigma_hat", "kappa_hat", "m_hat", "time_scale_exponent"]
CONVERGENCE_HEADER = ["N", "l1", "linf", "seeds"]

def print_banner(lines: Sequence[str]):
    print()
    print("**************************************************")
    print(f"Longjump v{__version__}")
    for line in lines:
        print(line)
    print("**************************************************")

def load_experiment(args) -> Experiment:
    cfg = load_config(args.config)
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    experiment = Experiment(cfg)
    print_banner([f"  Config:    {args.config}"] + experiment.describe())
    return experiment

def output_writer(args, cfg: Optional[ExperimentConfig] = None) -> OutputWriter:
    folder = args.output if args.output is not None else Path(cfg.output if cfg else "out")
    return OutputWriter(folder)

def write_manifest(writer: OutputWriter, experiment: Experiment, seeds: list[int], extra: Optional[dict] = None):
    cfg = experiment.cfg
    manifest = run_manifest(config_to_dict(cfg)["params"], seeds, experiment.timings, extra)
    manifest["mode"] = cfg.mode.value
    manifest["regime"] = experiment.regime.kind.value
    writer.write_json("manifest", manifest)

def simulate_command(experiment: Experiment, writer: OutputWriter) -> int:
    stats = experiment.timed("ensemble", run_ensemble, experiment.cfg)
    writer.write_ensemble(stats)
    writer.write_snapshots(stats)
    write_manifest(writer, experiment, stats.seeds, {
        "time_scale": stats.time_scale,
        "scheme": stats.scheme,
        "event_counts": stats.event_counts,
    })
    return EXIT_PASS

def pde_command(experiment: Experiment, writer: OutputWriter) -> int:
    sol = experiment.timed("pde", solve_for_config, experiment.cfg)
    writer.write_solution(sol)
    write_manifest(writer, experiment, [], {"M": sol.M, "dt": sol.dt, "steps": sol.steps, "scheme": sol.scheme})
    return EXIT_PASS

SHAPE_CHECKED = (RegimeKind.REACTION_ONLY, RegimeKind.RD_DIRICHLET, RegimeKind.HEAT_DIRICHLET)

def report_stationary(sp: StationaryProfile, alpha: float, beta: float) -> dict:
    if sp.regime.kind not in SHAPE_CHECKED:
        print(f"Stationary profile ({sp.closed_form})")
        return {}
    tol = 1e-6 if sp.regime.kind == RegimeKind.RD_DIRICHLET else 1e-10
    report = shape_check(sp, alpha, beta, tol)
    status = "passed" if report.passed else "FAILED"
    print(f"Stationary profile ({sp.closed_form}): shape check {status}")
    for line in report.violations + report.notes:
        print(f"- {line}")
    return report.as_dict()

def config_stationary_command(experiment: Experiment, writer: OutputWriter) -> int:
    cfg = experiment.cfg
    check_regime(cfg, experiment.regime)
    sp = experiment.timed("stationary", stationary_for_config, cfg)
    writer.write_stationary(sp)
    shape = report_stationary(sp, cfg.params.alpha, cfg.params.beta)
    write_manifest(writer, experiment, [], {"closed_form": sp.closed_form, "shape": shape})
    return EXIT_PASS

def stationary_command(args) -> int:
    if args.config is not None:
        return run_config_command(args, Mode.STATIONARY)
    if args.regime is None:
        raise ConfigError("The stationary command needs --config or --regime.")
    kernel = get_kernel(args.gamma)
    try:
        regime = regime_for_kind(RegimeKind(args.regime), kernel, args.kappa, ReservoirVariant(args.variant))
    except ValueError as exc:
        raise ConfigError("Invalid regime.", [str(exc)]) from exc
    if regime.kind == RegimeKind.HEAT_NEUMANN:
        raise ConfigError("The Neumann stationary profile depends on the initial profile; use --config.")
    print_banner([
        f"  Regime:    {regime.kind.value}   variant: {args.variant}",
        f"  gamma: {args.gamma:g}   kappa: {args.kappa:g}   alpha: {args.alpha:g}   beta: {args.beta:g}",
    ])
    sp = stationary_profile(regime, args.alpha, args.beta, args.M)
    writer = output_writer(args)
    writer.write_stationary(sp)
    report_stationary(sp, args.alpha, args.beta)
    return EXIT_PASS

def validate_command(experiment: Experiment, writer: OutputWriter, tolerance: Optional[float] = None) -> int:
    cfg = experiment.cfg
    report = experiment.timed("validate", validate, cfg, None, tolerance)
    writer.write_ensemble(report.stats)
    writer.write_solution(report.solution)
    writer.write_json("validation", report.as_dict())

    passed = report.passed
    extra = {
        "passed": report.passed,
        "time_scale": report.stats.time_scale,
        "scheme": report.stats.scheme,
        "event_counts": report.stats.event_counts,
    }
    if cfg.convergence and cfg.convergence.N_list:
        rows = experiment.timed("convergence", convergence_table, cfg, cfg.convergence.N_list)
        writer.write_csv("convergence", CONVERGENCE_HEADER, [(r.N, r.l1, r.linf, r.seeds) for r in rows])
        decreasing = len(rows) < 2 or rows[-1].l1 < rows[0].l1
        if not decreasing:
            print(f"- Distance at N={rows[-1].N} is not below the distance at N={rows[0].N}.")
        passed = passed and decreasing
        extra["convergence_decreasing"] = decreasing
    write_manifest(writer, experiment, report.stats.seeds, extra)

    for row in report.rows:
        print(f"t={row.t:g}  L1={row.l1:.4g}  Linf={row.linf:.4g}  "
              f"boundary {row.boxcar_left:.3f}/{row.rho_left:.3f}  {row.boxcar_right:.3f}/{row.rho_right:.3f}")
    for failure in report.failures:
        print(f"- {failure}")
    print("PASS" if passed else "FAIL")
    return EXIT_PASS if passed else EXIT_FAIL

def sweep_rows(gammas, thetas, kappa: float, variant: ReservoirVariant):
    for row in phase_sweep(gammas, thetas, kappa, variant):
        yield (row.gamma, row.theta, row.regime.value, row.sigma_hat, row.kappa_hat, row.m_hat, row.time_scale_exponent)

def sweep_command(args) -> int:
    try:
        gammas = parse_range(args.gamma_range)
        thetas = parse_range(args.theta_range)
    except ValueError as exc:
        raise ConfigError("Invalid sweep range.", [str(exc)]) from exc
    if any(not g > 2 for g in gammas):
        raise ConfigError("Invalid sweep range.", ["every gamma must exceed 2."])
    writer = OutputWriter(args.output)
    writer.write_csv("regime_map", REGIME_MAP_HEADER, sweep_rows(gammas, thetas, args.kappa, ReservoirVariant(args.variant)))
    return EXIT_PASS

def config_sweep_command(experiment: Experiment, writer: OutputWriter) -> int:
    cfg = experiment.cfg
    rows = sweep_rows(cfg.sweep.gammas, cfg.sweep.thetas, cfg.params.kappa, cfg.params.reservoir)
    writer.write_csv("regime_map", REGIME_MAP_HEADER, rows)
    return EXIT_PASS

def kernel_info_command(args) -> int:
    kernel = get_kernel(args.gamma)
    info = {
        "gamma": kernel.gamma,
        "c_gamma": kernel.c_gamma,
        "sigma_sq": kernel.sigma_sq,
        "m": kernel.m,
        "tail_error_bound": kernel.tail_error_bound,
        "upper_tail": {str(j): kernel.upper_tail(j) for j in (1, 2, 5, 10, 100)},
        "N": args.N,
        "boundary_mass": kernel.boundary_mass(args.N),
        "boundary_flux_moment": kernel.boundary_flux_moment(args.N),
    }
    print(json.dumps(to_plain(info), indent=2))
    return EXIT_PASS

def run_config_command(args, mode: Optional[Mode] = None) -> int:
    experiment = load_experiment(args)
    cfg = experiment.cfg
    writer = output_writer(args, cfg)
    match mode or cfg.mode:
        case Mode.SIMULATE:
            return simulate_command(experiment, writer)
        case Mode.PDE:
            return pde_command(experiment, writer)
        case Mode.VALIDATE:
            return validate_command(experiment, writer, getattr(args, "tolerance", None))
        case Mode.SWEEP:
            return config_sweep_command(experiment, writer)
        case Mode.STATIONARY:
            return config_stationary_command(experiment, writer)
    raise ConfigError(f"Unknown mode '{cfg.mode}'.")

def run(argv: Optional[Sequence[str]] = None) -> int:

    # Parse arguments
    args = parse_main_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")

    try:
        match args.command:
            case "run":
                return run_config_command(args)
            case "simulate":
                return run_config_command(args, Mode.SIMULATE)
            case "pde":
                return run_config_command(args, Mode.PDE)
            case "validate":
                return run_config_command(args, Mode.VALIDATE)
            case "stationary":
                return stationary_command(args)
            case "sweep":
                return sweep_command(args)
            case "kernel-info":
                return kernel_info_command(args)

    except ConfigError as exc:
        print(exc)
        return EXIT_CONFIG

    except KernelDomainError as exc:
        print(exc)
        return EXIT_CONFIG

    except (EnsembleError, SimulationError, NumericError, ValueError) as exc:
        print(exc)
        return EXIT_FAIL

    # Output folder problems
    except (RuntimeError, OSError) as exc:
        print(exc)
        return EXIT_FAIL

    return EXIT_FAIL

def main() -> None:
    sys.exit(run())

if __name__ == "__main__":
    main()
