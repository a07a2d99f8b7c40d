from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional
from dacite import from_dict, Config
from dacite.exceptions import DaciteError, MissingValueError, UnexpectedDataError, WrongTypeError
import numpy as np
import yaml
from .model import ModelParams, ReservoirVariant
from .profile import Profile
from .simulator import SCHEMES

class ConfigError(RuntimeError):
    """Raised when an experiment configuration cannot be loaded or fails validation."""
    def __init__(self, message: str, issues: Optional[list[str]] = None):
        self.issues = issues or []
        if self.issues:
            issue_lines = "\n".join(f"- {issue}" for issue in self.issues)
            message = f"{message}\n{issue_lines}"
        super().__init__(message)

class Mode(Enum):
    SIMULATE = "simulate"
    PDE = "pde"
    STATIONARY = "stationary"
    VALIDATE = "validate"
    SWEEP = "sweep"

# Keys of older configuration layouts and their replacements
LEGACY_KEYS = {
    "n_sites": "params.N",
    "seed_count": "seeds",
    "num_bins": "bins",
    "t_max": "times",
    "reservoir_type": "params.reservoir",
}

@dataclass
class ParamsSpec:
    N: int
    gamma: float
    theta: float
    alpha: float
    beta: float
    kappa: float = 1.0
    reservoir: ReservoirVariant = ReservoirVariant.EXTENDED

@dataclass
class InitialSpec:
    """Initial density profile: constant value, linear from left to right, or a table on cell centres."""
    kind: str = "constant"
    value: Optional[float] = None
    left: Optional[float] = None
    right: Optional[float] = None
    table: list[float] = field(default_factory=list)

@dataclass
class PDESpec:
    M: int = 200
    dt: Optional[float] = None

@dataclass
class ToleranceSpec:
    l1: float = 0.05
    linf: Optional[float] = None

@dataclass
class ConvergenceSpec:
    N_list: list[int] = field(default_factory=list)

@dataclass
class SweepSpec:
    gammas: list[float] = field(default_factory=list)
    thetas: list[float] = field(default_factory=list)

@dataclass
class ExperimentConfig:
    """
    One experiment, loaded from a YAML or JSON file.
    """
    mode: Mode
    params: ParamsSpec
    initial: InitialSpec = field(default_factory=InitialSpec)
    times: list[float] = field(default_factory=lambda: [0.1])
    seeds: int | list[int] = 1
    bins: int = 16
    pde: PDESpec = field(default_factory=PDESpec)
    output: str = "out"
    workers: int = 1
    scheme: str = "auto"
    boxcar_eps: float = 0.05
    tolerance: ToleranceSpec = field(default_factory=ToleranceSpec)
    convergence: Optional[ConvergenceSpec] = None
    sweep: Optional[SweepSpec] = None

    def model_params(self, N: Optional[int] = None) -> ModelParams:
        p = self.params
        return ModelParams(
            N=p.N if N is None else N,
            gamma=p.gamma,
            theta=p.theta,
            kappa=p.kappa,
            alpha=p.alpha,
            beta=p.beta,
            reservoir=p.reservoir)

    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, list):
            return list(self.seeds)
        return list(range(self.seeds))

    @property
    def t_end(self) -> float:
        return max(self.times)

    def initial_profile(self) -> Callable[[np.ndarray], np.ndarray]:
        init = self.initial
        match init.kind:
            case "constant":
                value = init.value if init.value is not None else 0.5
                return lambda q: np.full(np.shape(q), value)
            case "linear":
                left, right = init.left, init.right
                return lambda q: left + (right - left) * np.asarray(q)
            case "table":
                return Profile(np.array(init.table, dtype=float)).at
        raise ConfigError(f"Unknown initial profile kind '{init.kind}'.")

    def validate(self) -> list[str]:
        issues = [f"params: {issue}" for issue in self.model_params().validate()]

        # Times and seeds
        if not self.times:
            issues.append("times: at least one observation time is required.")
        elif min(self.times) < 0:
            issues.append("times: observation times must be non-negative.")
        if isinstance(self.seeds, list):
            if not self.seeds:
                issues.append("seeds: the seed list is empty.")
            if len(set(self.seeds)) != len(self.seeds):
                issues.append("seeds: the seed list has duplicates.")
        elif self.seeds < 1:
            issues.append(f"seeds: need at least one seed (got {self.seeds}).")

        if not 1 <= self.bins <= max(1, self.params.N - 1):
            issues.append(f"bins: must lie in 1..N-1 (got {self.bins}).")
        if self.workers < 1:
            issues.append(f"workers: must be at least 1 (got {self.workers}).")
        if self.scheme not in SCHEMES:
            issues.append(f"scheme: expected one of {', '.join(SCHEMES)} (got '{self.scheme}').")
        if not self.boxcar_eps > 0 or int(self.boxcar_eps * self.params.N) < 1:
            issues.append(f"boxcar_eps: floor(eps*N) must be at least 1 (got eps={self.boxcar_eps}).")

        # Discretisation
        if self.pde.M < 3:
            issues.append(f"pde.M: need at least 3 cells (got {self.pde.M}).")
        if self.pde.dt is not None and not self.pde.dt > 0:
            issues.append(f"pde.dt: must be positive (got {self.pde.dt}).")
        if not self.tolerance.l1 > 0:
            issues.append("tolerance.l1: must be positive.")

        self.validate_initial(issues)

        # Mode specific sections
        if self.convergence and self.convergence.N_list != sorted(self.convergence.N_list):
            issues.append("convergence.N_list: must be ascending.")
        if self.convergence and any(N < 2 for N in self.convergence.N_list):
            issues.append("convergence.N_list: every N must be at least 2.")
        if self.mode == Mode.SWEEP:
            if not self.sweep or not self.sweep.gammas or not self.sweep.thetas:
                issues.append("sweep: mode 'sweep' needs non-empty 'gammas' and 'thetas'.")
            elif any(not g > 2 for g in self.sweep.gammas):
                issues.append("sweep.gammas: every gamma must exceed 2.")
        return issues

    def validate_initial(self, issues: list[str]):
        init = self.initial
        match init.kind:
            case "constant":
                values = [init.value if init.value is not None else 0.5]
            case "linear":
                if init.left is None or init.right is None:
                    issues.append("initial: kind 'linear' needs 'left' and 'right'.")
                    return
                values = [init.left, init.right]
            case "table":
                if not init.table:
                    issues.append("initial: kind 'table' needs a non-empty 'table'.")
                    return
                values = init.table
            case _:
                issues.append(f"initial.kind: expected constant, linear or table (got '{init.kind}').")
                return
        if any(not 0.0 <= v <= 1.0 for v in values):
            issues.append("initial: densities must lie in [0,1].")

def find_legacy_keys(data: Any, path: str = "") -> list[str]:
    issues = []
    if isinstance(data, dict):
        for key, value in data.items():
            key_path = f"{path}.{key}" if path else str(key)
            if key in LEGACY_KEYS:
                issues.append(f"'{key_path}' is no longer supported; use '{LEGACY_KEYS[key]}'.")
            issues.extend(find_legacy_keys(value, key_path))
    return issues

def config_from_dict(data: dict, source: str = "<dict>") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration {source} must be a mapping.")
    legacy = find_legacy_keys(data)
    if legacy:
        raise ConfigError(f"Configuration {source} uses legacy keys.", legacy)

    dacite_config = Config(
        strict=True,
        cast=[Enum],
        type_hooks={float: float},
    )
    try:
        cfg = from_dict(ExperimentConfig, data, config=dacite_config)
    except MissingValueError as exc:
        raise ConfigError(f"Configuration {source} is invalid.", [f"{exc.field_path}: missing value."]) from exc
    except WrongTypeError as exc:
        raise ConfigError(f"Configuration {source} is invalid.", [f"{exc.field_path}: wrong type (got {exc.value!r})."]) from exc
    except UnexpectedDataError as exc:
        keys = ", ".join(sorted(exc.keys))
        raise ConfigError(f"Configuration {source} is invalid.", [f"unexpected keys: {keys}."]) from exc
    except (DaciteError, ValueError) as exc:
        raise ConfigError(f"Configuration {source} is invalid.", [str(exc)]) from exc

    issues = cfg.validate()
    if issues:
        raise ConfigError(f"Configuration {source} failed validation.", issues)
    return cfg

def load_config(path: Path) -> ExperimentConfig:
    """Load and validate a YAML or JSON experiment file."""
    if not path.exists():
        raise ConfigError(f"Configuration file {path} does not exist.")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"Configuration file {path} is not valid YAML/JSON.", [str(exc)]) from exc
    return config_from_dict(data, str(path))

def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data form of a configuration (enums as their values)."""
    def plain(value):
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, dict):
            return {k: plain(v) for k, v in value.items()}
        if isinstance(value, list):
            return [plain(v) for v in value]
        return value
    return plain(asdict(cfg))
