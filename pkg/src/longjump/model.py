from dataclasses import dataclass
from enum import Enum
import numpy as np
from .kernel import JumpKernel

class ReservoirVariant(Enum):
    """How the two reservoirs couple to the bulk sites."""
    # Infinitely extended reservoirs: site x feels the tails r_N^-(x/N), r_N^+(x/N)
    EXTENDED = "extended"
    # A single Glauber dynamics weighted by p(x), resp. p(N-x)
    CASE1 = "case1"
    # A single Glauber dynamics at the sites 1 and N-1 only
    CASE2 = "case2"

@dataclass(frozen=True)
class ModelParams:
    N: int
    gamma: float
    theta: float
    kappa: float
    alpha: float
    beta: float
    reservoir: ReservoirVariant = ReservoirVariant.EXTENDED

    def validate(self) -> list[str]:
        issues = []
        if self.N < 2:
            issues.append(f"N must be at least 2 (got {self.N}).")
        if not self.gamma > 2:
            issues.append(f"gamma must exceed 2 (got {self.gamma}).")
        if not np.isfinite(self.theta):
            issues.append(f"theta must be finite (got {self.theta}).")
        # kappa = 0 switches the reservoirs off (bulk-only test mode)
        if not self.kappa >= 0:
            issues.append(f"kappa must be non-negative (got {self.kappa}).")
        for name, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 <= value <= 1.0:
                issues.append(f"{name} must lie in [0,1] (got {value}).")
        return issues

    def check(self):
        issues = self.validate()
        if issues:
            raise ValueError(" ".join(issues))

    @property
    def boundary_strength(self) -> float:
        """kappa / N^theta"""
        return self.kappa * float(self.N) ** (-self.theta)

    def reservoir_weights(self, kernel: JumpKernel) -> tuple[np.ndarray, np.ndarray]:
        """
        Per-site weights (l_x, r_x), x = 1..N-1, multiplying c_x(eta;alpha) and
        c_x(eta;beta) in the flip rate (before the kappa/N^theta factor).
        """
        N = self.N
        match self.reservoir:
            case ReservoirVariant.EXTENDED:
                left, right = kernel.tail_tables(N)
                return np.array(left), np.array(right)
            case ReservoirVariant.CASE1:
                x = np.arange(1, N)
                return kernel.pmf(x), kernel.pmf(N - x)
            case ReservoirVariant.CASE2:
                left = np.zeros(N - 1)
                right = np.zeros(N - 1)
                left[0] = 1.0
                right[-1] = 1.0
                return left, right
        raise ValueError(f"Unknown reservoir variant {self.reservoir}.")

def reservoir_rate_factor(eta_x: int, phi: float) -> float:
    """c_x(eta;phi): create with rate phi when empty, remove with rate 1-phi when occupied."""
    return (1.0 - phi) if eta_x else phi
