"""
Finite-volume solvers for the limiting equations on the cell-centred grid,
weak-formulation residuals and the discrete generator diagnostic.

Time stepping is a Strang splitting: half a step of the exact reaction flow
u exp(-kappa_hat V1 tau), a Crank-Nicolson diffusion step, then the second
reaction half step, applied to the deviation u = rho - rho_star from the
discrete stationary solution. Boundary conditions enter through ghost cells
that are affine in the adjacent cell value.
"""
from dataclasses import dataclass
import logging
import math
from typing import Optional, Sequence
import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded
from .kernel import JumpKernel
from .profile import Profile, SmoothFunction, as_profile, cell_centres
from .regime import Regime, RegimeKind

logger = logging.getLogger(__name__)

DEFAULT_M = 200

class NumericError(RuntimeError):
    """Raised when a solver produces non-finite values."""

def default_dt(M: int) -> float:
    return 0.25 / M**2

def ghost_closure(regime: Regime, M: int, alpha: float, beta: float) -> tuple[float, float, float, float]:
    """
    (a_left, b_left, a_right, b_right) with rho_0 = a_left rho_1 + b_left and
    rho_{M+1} = a_right rho_M + b_right.
    Dirichlet: the linear interpolant through ghost and first cell hits alpha (beta)
    at the endpoint. Robin and Neumann: centred difference and mean at the
    endpoint satisfy the flux condition; Neumann is Robin with m_hat = 0.
    """
    if regime.kind.has_dirichlet_values or regime.kind == RegimeKind.REACTION_ONLY:
        return -1.0, 2.0 * alpha, -1.0, 2.0 * beta
    hk = regime.robin_coefficient / M
    denominator = 1.0 + 0.5 * hk
    a = (1.0 - 0.5 * hk) / denominator
    return a, hk * alpha / denominator, a, hk * beta / denominator

@dataclass
class Laplacian:
    """Discrete Laplacian with ghost closure: (Delta_h rho) = T rho + f."""
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    forcing: np.ndarray
    a_left: float
    a_right: float

    def apply(self, rho: np.ndarray, forced: bool = True) -> np.ndarray:
        out = self.diag * rho
        if forced:
            out += self.forcing
        out[:-1] += self.upper * rho[1:]
        out[1:] += self.lower * rho[:-1]
        return out

    def banded(self, scale: float, shift: float = 1.0, extra_diag: Optional[np.ndarray] = None) -> np.ndarray:
        """Banded form of shift*I + scale*T (+ extra_diag) for solve_banded((1,1), ...)."""
        M = len(self.diag)
        ab = np.zeros((3, M))
        ab[0, 1:] = scale * self.upper
        ab[1, :] = shift + scale * self.diag
        ab[2, :-1] = scale * self.lower
        if extra_diag is not None:
            ab[1, :] += extra_diag
        return ab

def build_laplacian(regime: Regime, M: int, alpha: float, beta: float) -> Laplacian:
    a_l, b_l, a_r, b_r = ghost_closure(regime, M, alpha, beta)
    inv_h2 = float(M) ** 2
    diag = np.full(M, -2.0)
    forcing = np.zeros(M)
    diag[0] += a_l
    diag[-1] += a_r
    forcing[0] += b_l
    forcing[-1] += b_r
    off = np.ones(M - 1)
    return Laplacian(off * inv_h2, diag * inv_h2, off * inv_h2, forcing * inv_h2, a_l, a_r)

def reaction_equilibrium(regime: Regime, q: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """V0/V1 written without the singular factors: [alpha (1-q)^a + beta q^a] / [(1-q)^a + q^a]."""
    a = regime.reaction_exponent
    left = (1.0 - q) ** a
    right = q**a
    return (alpha * left + beta * right) / (left + right)

def reaction_diffusion_steady_state(regime: Regime, lap: Laplacian, alpha: float, beta: float) -> np.ndarray:
    """Discrete stationary solution of c (T rho + f) + kappa_hat (V0 - V1 rho) = 0, c = sigma_hat^2/2."""
    q = cell_centres(len(lap.diag))
    c = 0.5 * regime.sigma_hat**2
    ab = lap.banded(c, shift=0.0, extra_diag=-regime.kappa_hat * regime.v1(q))
    rhs = -c * lap.forcing - regime.kappa_hat * regime.v0(q, alpha, beta)
    return solve_banded((1, 1), ab, rhs)

def monotone_limit(lap: Laplacian) -> float:
    """Largest mu = dt sigma^2 / (2 h^2) for which the explicit CN half step has non-negative weights."""
    return min(1.0, 2.0 / (2.0 - lap.a_left), 2.0 / (2.0 - lap.a_right))

@dataclass
class PDESolution:
    regime: Regime
    alpha: float
    beta: float
    M: int
    dt: float
    times: np.ndarray
    values: np.ndarray
    scheme: str = "strang-cn"
    steps: int = 0

    @property
    def grid(self) -> np.ndarray:
        return cell_centres(self.M)

    @property
    def initial(self) -> Profile:
        return Profile(self.values[0].copy())

    @property
    def final(self) -> Profile:
        return Profile(self.values[-1].copy())

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"No record at t={t}.")
        return i

    def profile_at(self, t: float) -> Profile:
        """The recorded profile at t, or the linear interpolation between the neighbouring records."""
        if t <= self.times[0]:
            return Profile(self.values[0].copy())
        if t >= self.times[-1]:
            return Profile(self.values[-1].copy())
        j = int(np.searchsorted(self.times, t))
        if abs(self.times[j] - t) <= 1e-12 * max(1.0, abs(t)):
            return Profile(self.values[j].copy())
        s0, s1 = self.times[j - 1], self.times[j]
        w = (t - s0) / (s1 - s0)
        return Profile((1.0 - w) * self.values[j - 1] + w * self.values[j])

def solve_pure_reaction(g, alpha: float, beta: float, kappa_hat: float, gamma: float, t: float, M: Optional[int] = None) -> Profile:
    """
    Exact solution of d_t rho = kappa_hat (V0 - V1 rho) at every cell centre:
    rho_t = rho_bar + (g - rho_bar) exp(-kappa_hat V1 t), rho_bar = V0/V1.
    gamma is the exponent appearing in V0 and V1.
    """
    if M is None:
        M = g.M if isinstance(g, Profile) else DEFAULT_M
    start = as_profile(g, M)
    q = cell_centres(M)
    left = (1.0 - q) ** gamma
    right = q**gamma
    bar = (alpha * left + beta * right) / (left + right)
    v1 = q ** (-gamma) + (1.0 - q) ** (-gamma)
    return Profile(bar + (start.values - bar) * np.exp(-kappa_hat * v1 * t))

def _checkpoints(t_end: float, times: Optional[Sequence[float]]) -> list[float]:
    points = sorted(set([float(t) for t in (times or [])] + [float(t_end)]))
    if points[0] < 0:
        raise ValueError("Times must be non-negative.")
    return [t for t in points if t > 0.0]

def solve(
        regime: Regime,
        g,
        alpha: float,
        beta: float,
        t_end: float,
        dt: Optional[float] = None,
        M: int = DEFAULT_M,
        times: Optional[Sequence[float]] = None,
        record_every: int = 0) -> PDESolution:
    """
    Solve the regime's equation from g up to t_end. Records are kept at t = 0,
    at every requested time and, if record_every > 0, every record_every steps.
    Each interval between requested times is split into equal steps no longer than dt.
    """
    if M < 1:
        raise ValueError(f"M must be positive (got {M}).")
    dt = default_dt(M) if dt is None else dt
    if not dt > 0 or not t_end >= 0:
        raise ValueError(f"dt must be positive and t_end non-negative (got dt={dt}, t_end={t_end}).")
    start = as_profile(g, M)
    start.check_density("initial profile", tol=1e-12)

    checkpoints = _checkpoints(t_end, times)
    record_times = [0.0]
    record_values = [start.values.copy()]

    # Reaction only: the explicit formula, no time stepping
    if regime.kind == RegimeKind.REACTION_ONLY:
        targets = list(checkpoints)
        if record_every > 0:
            spacing = dt * record_every
            dense = [k * spacing for k in range(1, int(t_end / spacing) + 1)]
            targets = sorted(set(targets) | set(t for t in dense if t < t_end))
        for t in targets:
            record_times.append(t)
            record_values.append(
                solve_pure_reaction(start, alpha, beta, regime.kappa_hat, regime.reaction_exponent, t).values)
        return PDESolution(regime, alpha, beta, M, dt, np.array(record_times), np.array(record_values), scheme="exact")

    lap = build_laplacian(regime, M, alpha, beta)
    c = 0.5 * regime.sigma_hat**2
    q = cell_centres(M)

    # With a reaction term the split steps act on u = rho - rho_star, which
    # obeys the homogeneous equation; u = 0 is then a fixed point for every dt
    if regime.kappa_hat > 0:
        rate = regime.kappa_hat * regime.v1(q)
        offset = reaction_diffusion_steady_state(regime, lap, alpha, beta)
        forced = False
    else:
        rate = None
        offset = np.zeros(M)
        forced = True

    u = start.values - offset
    now = 0.0
    step = 0
    warned = False
    for target in checkpoints:
        n = max(1, int(math.ceil((target - now) / dt * (1.0 - 1e-12))))
        tau = (target - now) / n
        mu = tau * c * M * M
        if not warned and mu > monotone_limit(lap):
            logger.warning("Crank-Nicolson step is not monotone (mu=%.3g > %.3g); expect small oscillations.", mu, monotone_limit(lap))
            warned = True
        ab = lap.banded(-0.5 * tau * c)
        decay = np.exp(-rate * 0.5 * tau) if rate is not None else None
        start_time = now
        for k in range(1, n + 1):
            if decay is not None:
                u = u * decay
            rhs = u + 0.5 * tau * c * lap.apply(u, forced)
            if forced:
                rhs += 0.5 * tau * c * lap.forcing
            u = solve_banded((1, 1), ab, rhs)
            if decay is not None:
                u = u * decay
            step += 1
            if not np.all(np.isfinite(u)):
                bad = np.flatnonzero(~np.isfinite(u))
                raise NumericError(f"Non-finite values at step {step} (t={start_time + k * tau:.6g}) in cells {bad[:10].tolist()}.")
            if record_every > 0 and k < n and step % record_every == 0:
                record_times.append(start_time + k * tau)
                record_values.append(offset + u)
        now = target
        record_times.append(now)
        record_values.append(offset + u)

    logger.debug("Solved %s to t=%s with M=%d dt=%.3g in %d steps", regime.kind.value, t_end, M, dt, step)
    return PDESolution(regime, alpha, beta, M, dt, np.array(record_times), np.array(record_values), steps=step)

def robin_boundary_values(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint values from the first three cell centres (quadratic extrapolation), vectorised over rows."""
    values = np.atleast_2d(values)
    left = (15.0 * values[:, 0] - 10.0 * values[:, 1] + 3.0 * values[:, 2]) / 8.0
    right = (15.0 * values[:, -1] - 10.0 * values[:, -2] + 3.0 * values[:, -3]) / 8.0
    return left, right

def _extended(q: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], q, [1.0]))

def _space_integral(interior: np.ndarray, left: float, right: float, nodes: np.ndarray) -> float:
    return float(trapezoid(np.concatenate(([left], interior, [right])), nodes))

def _weak_residual(sol: PDESolution, G: SmoothFunction, t: float, robin: bool) -> float:
    if G.identically_zero:
        return 0.0
    end = sol.index_of(t)
    times = sol.times[:end + 1]
    values = sol.values[:end + 1]
    q = sol.grid
    nodes = _extended(q)
    regime = sol.regime
    c = 0.5 * regime.sigma_hat**2
    alpha, beta = sol.alpha, sol.beta

    if robin:
        if sol.M < 3:
            raise ValueError("Robin residual needs at least three cells.")
        rho0, rho1 = robin_boundary_values(values)
    else:
        rho0 = np.full(len(times), alpha)
        rho1 = np.full(len(times), beta)

    def pairing(rho, r0, r1, s, f):
        return _space_integral(rho * f(q, s), r0 * f(np.array([0.0]), s)[0], r1 * f(np.array([1.0]), s)[0], nodes)

    residual = pairing(values[-1], rho0[-1], rho1[-1], times[-1], G) - pairing(values[0], rho0[0], rho1[0], 0.0, G)

    # Midpoint in time with the averaged neighbouring records
    for n in range(len(times) - 1):
        ds = times[n + 1] - times[n]
        s = 0.5 * (times[n] + times[n + 1])
        rho = 0.5 * (values[n] + values[n + 1])
        r0 = 0.5 * (rho0[n] + rho0[n + 1])
        r1 = 0.5 * (rho1[n] + rho1[n + 1])
        h_interior = c * G.laplacian(q, s) + G.time_derivative(q, s)
        h_ends = c * G.laplacian(np.array([0.0, 1.0]), s) + G.time_derivative(np.array([0.0, 1.0]), s)
        residual -= ds * _space_integral(rho * h_interior, r0 * h_ends[0], r1 * h_ends[1], nodes)

        if robin:
            grad = G.grad(np.array([0.0, 1.0]), s)
            ends = G(np.array([0.0, 1.0]), s)
            residual += ds * c * (r1 * grad[1] - r0 * grad[0])
            residual -= ds * regime.m_hat * (ends[0] * (alpha - r0) + ends[1] * (beta - r1))
        elif regime.kappa_hat > 0:
            # G vanishes at and near the endpoints, so the singular weights never meet a nonzero G
            weight = G(q, s)
            source = regime.v0(q, alpha, beta) - regime.v1(q) * rho
            residual -= ds * regime.kappa_hat * _space_integral(weight * source, 0.0, 0.0, nodes)

    return residual

def _check_rd_support(sol: PDESolution, G: SmoothFunction, t: float):
    if G.identically_zero:
        return
    q = sol.grid
    ends = np.array([0.0, q[0], q[-1], 1.0])
    if not G.vanishes_near_boundary() or any(np.any(G(ends, s) != 0.0) for s in (0.0, t)):
        raise ValueError(
            f"Test function {G.name} must vanish near the endpoints; the Dirichlet boundary terms are not part of this residual.")

def weak_residual_rd(sol: PDESolution, G: SmoothFunction, g=None, t: Optional[float] = None) -> float:
    """
    F_RD(t, rho, G, g): the reaction-diffusion weak formulation with Dirichlet data,
    for G compactly supported in (0,1). Trapezoid in space over {0, q_i, 1},
    midpoint in time. g defaults to the solution's initial record.
    """
    t = sol.times[-1] if t is None else t
    _check_rd_support(sol, G, t)
    if g is not None:
        sol = _with_initial(sol, g)
    return _weak_residual(sol, G, t, robin=False)

def weak_residual_robin(sol: PDESolution, G: SmoothFunction, g=None, t: Optional[float] = None) -> float:
    """
    F_Rob(t, rho, G, g) for any G in C^{1,2}; boundary values of rho come from
    second-order extrapolation of the cell values. Neumann is the case m_hat = 0.
    """
    t = sol.times[-1] if t is None else t
    if g is not None:
        sol = _with_initial(sol, g)
    return _weak_residual(sol, G, t, robin=True)

def _with_initial(sol: PDESolution, g) -> PDESolution:
    values = sol.values.copy()
    values[0] = as_profile(g, sol.M).values
    return PDESolution(sol.regime, sol.alpha, sol.beta, sol.M, sol.dt, sol.times, values, sol.scheme, sol.steps)

def jump_window(G: SmoothFunction, N: int) -> Optional[int]:
    """Largest jump after which G vanishes at both x+k and x-k for every site, or None."""
    if G.support is None:
        return None
    a, b = G.support
    return int(math.ceil(N * (max(b, 1.0) - min(a, 0.0)))) + 1

def discrete_generator_check(G: SmoothFunction, N: int, kernel: JumpKernel, chunk: int = 256) -> float:
    """
    max_x |N^2 (K_N G)(x/N) - (sigma^2/2) G''(x/N)| over x in Lambda_N, with
    (K_N G)(x/N) = sum_{k>=1} p(k) [G((x+k)/N) + G((x-k)/N) - 2 G(x/N)].
    For compactly supported G the pair sum stops once both shifts leave the
    support and the rest is -2 G(x/N) times the exact upper tail of p.
    Without a support the sum runs over |k| <= N, exact for affine G.
    """
    window = jump_window(G, N)
    tail_weight = 2.0 * kernel.upper_tail(window + 1) if window is not None else 0.0
    width = window if window is not None else N
    k = np.arange(1, width + 1)
    pk = kernel.pmf(k)
    x = np.arange(1, N)
    g_x = G(x / N)
    generator = np.empty(N - 1)
    for start in range(0, N - 1, chunk):
        xs = x[start:start + chunk, None]
        pair = G((xs + k[None, :]) / N) + G((xs - k[None, :]) / N) - 2.0 * g_x[start:start + chunk, None]
        generator[start:start + chunk] = pair @ pk
    generator -= tail_weight * g_x
    limit = 0.5 * kernel.sigma_sq * G.laplacian(x / N)
    return float(np.max(np.abs(N * N * generator - limit)))
