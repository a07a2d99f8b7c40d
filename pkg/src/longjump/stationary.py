from dataclasses import dataclass, field
import numpy as np
from .pde import DEFAULT_M, build_laplacian, reaction_diffusion_steady_state, reaction_equilibrium
from .profile import Profile, as_profile, cell_centres
from .regime import Regime, RegimeKind

CLOSED_FORMS = {
    RegimeKind.HEAT_DIRICHLET: "linear",
    RegimeKind.HEAT_ROBIN: "robin-linear",
    RegimeKind.HEAT_NEUMANN: "constant",
    RegimeKind.REACTION_ONLY: "V0-over-V1",
    RegimeKind.RD_DIRICHLET: "numeric-bvp",
}

@dataclass
class StationaryProfile:
    regime: Regime
    profile: Profile
    closed_form: str

    @property
    def values(self) -> np.ndarray:
        return self.profile.values

def robin_line(regime: Regime, alpha: float, beta: float) -> tuple[float, float]:
    """
    (a, b) of the linear stationary profile a + b q under the Robin conditions
    rho'(0) = k'(rho(0) - alpha), rho'(1) = k'(beta - rho(1)), k' = 2 m_hat / sigma_hat^2.
    """
    k = regime.robin_coefficient
    if k == 0.0:
        return 0.5 * (alpha + beta), 0.0
    b = k * (beta - alpha) / (2.0 + k)
    return alpha + b / k, b

def robin_boundary_values(regime: Regime, alpha: float, beta: float) -> tuple[float, float]:
    """(rho_bar(0), rho_bar(1)); their sum is alpha + beta for every kappa."""
    a, b = robin_line(regime, alpha, beta)
    return a, a + b

def stationary_profile(regime: Regime, alpha: float, beta: float, M: int = DEFAULT_M, g=None) -> StationaryProfile:
    """The stationary solution of the regime's equation; g is needed (only) for Neumann."""
    q = cell_centres(M)
    match regime.kind:
        case RegimeKind.HEAT_DIRICHLET:
            values = alpha + (beta - alpha) * q
        case RegimeKind.HEAT_ROBIN:
            a, b = robin_line(regime, alpha, beta)
            values = a + b * q
        case RegimeKind.HEAT_NEUMANN:
            if g is None:
                raise ValueError("The Neumann stationary profile depends on the initial profile g.")
            values = np.full(M, as_profile(g, M).integral())
        case RegimeKind.REACTION_ONLY:
            if regime.kappa_hat <= 0:
                raise ValueError("The reaction stationary profile needs kappa_hat > 0.")
            values = reaction_equilibrium(regime, q, alpha, beta)
        case RegimeKind.RD_DIRICHLET:
            values = solve_rd_bvp(regime, alpha, beta, M)
        case _:
            raise ValueError(f"Unknown regime {regime.kind}.")
    return StationaryProfile(regime, Profile(values), CLOSED_FORMS[regime.kind])

def solve_rd_bvp(regime: Regime, alpha: float, beta: float, M: int) -> np.ndarray:
    """
    (sigma_hat^2/2) rho'' + kappa_hat (V0 - V1 rho) = 0 with Dirichlet closure,
    using the same discrete operators as the time-dependent solver.
    """
    if regime.sigma_hat <= 0 or regime.kappa_hat <= 0:
        raise ValueError("The reaction-diffusion boundary value problem needs sigma_hat > 0 and kappa_hat > 0.")
    return reaction_diffusion_steady_state(regime, build_laplacian(regime, M, alpha, beta), alpha, beta)

@dataclass
class ShapeReport:
    passed: bool
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "violations": self.violations, "notes": self.notes}

def shape_check(sp: StationaryProfile, alpha: float, beta: float, tol: float = 1e-10) -> ShapeReport:
    """
    Increasing, convex on (0,1/2), concave on (1/2,1), and reaching alpha, beta at
    the ends within grid resolution.
    """
    values = sp.values
    M = len(values)
    if alpha == beta:
        return ShapeReport(True, notes=["degenerate: alpha = beta"])
    if alpha > beta:
        mirrored = StationaryProfile(sp.regime, Profile(values[::-1].copy()), sp.closed_form)
        report = shape_check(mirrored, beta, alpha, tol)
        report.notes.append("alpha > beta: checked the mirrored profile")
        return report

    violations = []
    steps = np.diff(values)
    if np.any(steps <= 0):
        first = int(np.flatnonzero(steps <= 0)[0])
        violations.append(f"not increasing between cells {first} and {first + 1}")

    q = cell_centres(M)
    second = values[:-2] - 2.0 * values[1:-1] + values[2:]
    centre = q[1:-1]
    if np.any(second[centre < 0.5] < -tol):
        violations.append(f"not convex on (0,1/2): min second difference {second[centre < 0.5].min():.3g}")
    if np.any(second[centre > 0.5] > tol):
        violations.append(f"not concave on (1/2,1): max second difference {second[centre > 0.5].max():.3g}")

    resolution = abs(beta - alpha) * 2.0 / M
    if abs(values[0] - alpha) > resolution:
        violations.append(f"left end {values[0]:.6g} is not within {resolution:.3g} of alpha={alpha}")
    if abs(values[-1] - beta) > resolution:
        violations.append(f"right end {values[-1]:.6g} is not within {resolution:.3g} of beta={beta}")
    return ShapeReport(not violations, violations)

def difference_norms(p1: Profile, p2: Profile, gamma: float) -> tuple[float, float, float]:
    """
    Discrete L2 norm, H1 seminorm (forward differences) and L2(V1 dq) norm of p1 - p2,
    with V1(q) = q^-gamma + (1-q)^-gamma.
    """
    if not p1.same_grid(p2):
        raise ValueError(f"Profiles live on different grids (M={p1.M} and M={p2.M}).")
    d = p1.values - p2.values
    h = p1.h
    q = p1.grid
    v1 = q ** (-gamma) + (1.0 - q) ** (-gamma)
    l2 = float(np.sqrt(h * np.sum(d * d)))
    h1 = float(np.sqrt(h * np.sum((np.diff(d) / h) ** 2)))
    weighted = float(np.sqrt(h * np.sum(d * d * v1)))
    return l2, h1, weighted

def long_time_distance(final: Profile, sp: StationaryProfile) -> float:
    return float(np.max(np.abs(final.values - sp.values)))
