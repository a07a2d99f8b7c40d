import argparse
from pathlib import Path
from typing import Optional, Sequence
from .model import ReservoirVariant
from .regime import RegimeKind

def add_config_argument(parser: argparse.ArgumentParser, required: bool = True):
    parser.add_argument(
        "--config",
        type=Path,
        required=required,
        help="Path to an experiment YAML or JSON file"
    )
    parser.add_argument(
        "--output",
        type=Path,
        required=False,
        help="Output folder (overrides 'output' in the configuration)"
    )

def add_variant_argument(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--variant",
        type=str,
        default=ReservoirVariant.EXTENDED.value,
        choices=[v.value for v in ReservoirVariant],
        help="Reservoir variant"
    )

def parse_main_args(argv: Optional[Sequence[str]] = None):
    parser = argparse.ArgumentParser(
        prog="longjump",
        description="Longjump - exclusion process with long jumps and slow/fast reservoirs")
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log progress at debug level"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run the experiment in the mode its configuration names")
    add_config_argument(run)

    simulate = commands.add_parser("simulate", help="Monte Carlo ensemble of binned density profiles")
    add_config_argument(simulate)
    simulate.add_argument(
        "--workers",
        type=int,
        required=False,
        help="Worker processes (overrides 'workers')"
    )

    pde = commands.add_parser("pde", help="Solve the hydrodynamic equation of the configured regime")
    add_config_argument(pde)

    stationary = commands.add_parser("stationary", help="Stationary profile of a regime")
    add_config_argument(stationary, required=False)
    stationary.add_argument(
        "--regime",
        type=str,
        choices=[k.value for k in RegimeKind],
        help="Regime kind (when no --config is given)"
    )
    stationary.add_argument("--gamma", type=float, default=3.0)
    stationary.add_argument("--kappa", type=float, default=1.0)
    stationary.add_argument("--alpha", type=float, default=0.2)
    stationary.add_argument("--beta", type=float, default=0.8)
    stationary.add_argument("--M", type=int, default=200, help="Cells of the spatial grid")
    add_variant_argument(stationary)

    validate = commands.add_parser("validate", help="Compare the Monte Carlo ensemble with the PDE solution")
    add_config_argument(validate)
    validate.add_argument(
        "--tolerance",
        type=float,
        required=False,
        help="L1 tolerance (overrides 'tolerance.l1')"
    )
    validate.add_argument(
        "--workers",
        type=int,
        required=False,
        help="Worker processes (overrides 'workers')"
    )

    sweep = commands.add_parser("sweep", help="Regime map over a (gamma, theta) grid")
    sweep.add_argument(
        "--gamma-range",
        type=str,
        required=True,
        help="Gamma values as 'start:stop:step' (inclusive) or a single value"
    )
    sweep.add_argument(
        "--theta-range",
        type=str,
        required=True,
        help="Theta values as 'start:stop:step' (inclusive) or a single value"
    )
    sweep.add_argument("--kappa", type=float, default=1.0)
    add_variant_argument(sweep)
    sweep.add_argument(
        "--output",
        type=Path,
        default=Path("out"),
        help="Output folder"
    )

    kernel_info = commands.add_parser("kernel-info", help="Kernel constants as JSON")
    kernel_info.add_argument("--gamma", type=float, required=True)
    kernel_info.add_argument(
        "--N",
        type=int,
        default=100,
        help="System size for the boundary tail diagnostics"
    )

    return parser.parse_args(argv)
