"""
Classification of (gamma, theta) into the five hydrodynamic regimes, with the
coefficients of the limiting equation and the time scale Theta(N).
"""
from dataclasses import dataclass
from enum import Enum
import numpy as np
from .kernel import JumpKernel
from .model import ReservoirVariant

# Points within this distance of a critical line are taken to lie on it
LINE_TOLERANCE = 1e-12

class RegimeKind(Enum):
    REACTION_ONLY = "reaction"
    RD_DIRICHLET = "rd-dirichlet"
    HEAT_DIRICHLET = "dirichlet"
    HEAT_ROBIN = "robin"
    HEAT_NEUMANN = "neumann"

    @property
    def has_dirichlet_values(self) -> bool:
        return self in (RegimeKind.RD_DIRICHLET, RegimeKind.HEAT_DIRICHLET)

@dataclass(frozen=True)
class Regime:
    """
    The limiting equation
        d_t rho = (sigma_hat^2/2) rho'' - kappa_hat V1 rho + kappa_hat V0
    with V0 = alpha q^-a + beta (1-q)^-a, V1 = q^-a + (1-q)^-a, a = reaction_exponent,
    and, for Robin, d_q rho(0) = (2 m_hat / sigma_hat^2)(rho(0) - alpha) and mirrored at 1.
    """
    kind: RegimeKind
    sigma_hat: float
    kappa_hat: float
    m_hat: float
    reaction_exponent: float

    @property
    def robin_coefficient(self) -> float:
        """k' = 2 m_hat / sigma_hat^2"""
        if self.sigma_hat == 0.0:
            return 0.0
        return 2.0 * self.m_hat / self.sigma_hat**2

    def v0(self, q, alpha: float, beta: float) -> np.ndarray:
        a = self.reaction_exponent
        q = np.asarray(q, dtype=float)
        return alpha * q ** (-a) + beta * (1.0 - q) ** (-a)

    def v1(self, q) -> np.ndarray:
        a = self.reaction_exponent
        q = np.asarray(q, dtype=float)
        return q ** (-a) + (1.0 - q) ** (-a)

def reaction_line(gamma: float, variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> float | None:
    """theta below which the reaction term dominates; None if there is no such regime."""
    match variant:
        case ReservoirVariant.EXTENDED:
            return 2.0 - gamma
        case ReservoirVariant.CASE1:
            return 1.0 - gamma
        case ReservoirVariant.CASE2:
            return None
    raise ValueError(f"Unknown reservoir variant {variant}.")

def reaction_exponent(gamma: float, variant: ReservoirVariant) -> float:
    return gamma + 1.0 if variant == ReservoirVariant.CASE1 else gamma

def classify_regime(
        gamma: float,
        theta: float,
        kernel: JumpKernel,
        kappa: float,
        variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> Regime:
    """
    Closed intervals at the critical lines: theta on the reaction line is
    reaction-diffusion, theta = 1 is Robin.
    """
    if not gamma > 2:
        raise ValueError(f"gamma must exceed 2 (got {gamma}).")
    sigma = float(np.sqrt(kernel.sigma_sq))
    exponent = reaction_exponent(gamma, variant)
    line = reaction_line(gamma, variant)

    match variant:
        case ReservoirVariant.EXTENDED:
            reaction_weight = kappa * kernel.c_gamma / gamma
            robin_mass = kernel.m
        case ReservoirVariant.CASE1:
            reaction_weight = kappa * kernel.c_gamma
            robin_mass = 0.5
        case _:
            reaction_weight = 0.0
            robin_mass = 1.0

    if line is not None and theta < line - LINE_TOLERANCE:
        return Regime(RegimeKind.REACTION_ONLY, 0.0, reaction_weight, 0.0, exponent)
    if line is not None and abs(theta - line) <= LINE_TOLERANCE:
        return Regime(RegimeKind.RD_DIRICHLET, sigma, reaction_weight, 0.0, exponent)
    if theta < 1.0 - LINE_TOLERANCE:
        return Regime(RegimeKind.HEAT_DIRICHLET, sigma, 0.0, 0.0, exponent)
    if abs(theta - 1.0) <= LINE_TOLERANCE:
        return Regime(RegimeKind.HEAT_ROBIN, sigma, 0.0, robin_mass * kappa, exponent)
    return Regime(RegimeKind.HEAT_NEUMANN, sigma, 0.0, 0.0, exponent)

def regime_for_kind(
        kind: RegimeKind,
        kernel: JumpKernel,
        kappa: float,
        variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> Regime:
    """The regime of the given kind, with coefficients as classify_regime assigns them."""
    gamma = kernel.gamma
    line = reaction_line(gamma, variant)
    match kind:
        case RegimeKind.REACTION_ONLY | RegimeKind.RD_DIRICHLET:
            if line is None:
                raise ValueError(f"Regime '{kind.value}' does not occur for reservoir variant '{variant.value}'.")
            theta = line - 1.0 if kind == RegimeKind.REACTION_ONLY else line
        case RegimeKind.HEAT_DIRICHLET:
            theta = 0.5 if line is None else 0.5 * (line + 1.0)
        case RegimeKind.HEAT_ROBIN:
            theta = 1.0
        case _:
            theta = 2.0
    return classify_regime(gamma, theta, kernel, kappa, variant)

def time_scale_exponent(
        gamma: float,
        theta: float,
        variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> float:
    line = reaction_line(gamma, variant)
    if line is not None and theta < line - LINE_TOLERANCE:
        return reaction_exponent(gamma, variant) + theta
    return 2.0

def time_scale(
        N: int,
        gamma: float,
        theta: float,
        variant: ReservoirVariant = ReservoirVariant.EXTENDED) -> float:
    """Theta(N): N^2 in the diffusive regimes, N^(gamma+theta) below the reaction line."""
    if N < 2:
        raise ValueError(f"N must be at least 2 (got {N}).")
    return float(N) ** time_scale_exponent(gamma, theta, variant)
