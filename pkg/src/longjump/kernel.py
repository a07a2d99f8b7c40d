"""
The symmetric heavy-tailed jump law p(z) = c_gamma |z|^(-gamma-1), z != 0.

Every series is truncated at a finite radius and completed with an
Euler-Maclaurin tail (integral plus the first end corrections), so the
quantities below are certified to the tolerance the kernel was built with.
"""
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import logging
import numpy as np
from .sampling import AliasTable

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_TRUNCATION_RADIUS = 10**6
DEFAULT_TAIL_RADIUS = 10**5
DEFAULT_SAMPLER_RADIUS = 2**16

class KernelDomainError(ValueError):
    """Raised for tail exponents outside the finite-variance regime gamma > 2."""

def series_tail(s: float, a: int) -> float:
    """sum_{k > a} k^(-s) for a >= 1, s > 1 (Euler-Maclaurin, three end terms)."""
    a = float(a)
    return (
        a ** (1.0 - s) / (s - 1.0)
        - 0.5 * a ** (-s)
        + s * a ** (-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a ** (-s - 3.0) / 720.0
    )

def series_tail_error(s: float, a: int) -> float:
    """Size of the first omitted Euler-Maclaurin term of series_tail."""
    return s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * float(a) ** (-s - 5.0) / 30240.0

def power_sum(s: float, radius: int) -> tuple[float, float]:
    """
    sum_{k >= 1} k^(-s) as truncated sum up to radius plus analytic tail.
    Returns (value, error bound). Terms are added smallest first.
    """
    k = np.arange(radius, 0, -1, dtype=float)
    head = float(np.sum(k ** (-s)))
    return head + series_tail(s, radius), series_tail_error(s, radius)

def suffix_sums(s: float, radius: int) -> np.ndarray:
    """
    Array S with S[j] = sum_{k >= j} k^(-s) for j = 1..radius (S[0] unused).
    """
    k = np.arange(1, radius + 1, dtype=float)
    terms = k ** (-s)
    out = np.empty(radius + 1)
    out[0] = np.nan
    # Reverse cumulative sum accumulates the small terms first
    out[1:] = np.cumsum(terms[::-1])[::-1] + series_tail(s, radius)
    return out

@dataclass(frozen=True)
class JumpKernel:
    gamma: float
    c_gamma: float
    truncation_radius: int
    sigma_sq: float
    m: float
    tol: float
    tail_radius: int = DEFAULT_TAIL_RADIUS
    sampler_radius: int = DEFAULT_SAMPLER_RADIUS
    tail_error_bound: float = 0.0
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def prob(self, z: int) -> float:
        if z == 0:
            return 0.0
        return self.c_gamma * abs(z) ** (-self.gamma - 1.0)

    def pmf(self, z) -> np.ndarray:
        """Vectorised prob over an integer array."""
        z = np.abs(np.asarray(z, dtype=float))
        with np.errstate(divide="ignore"):
            out = self.c_gamma * z ** (-self.gamma - 1.0)
        return np.where(z == 0, 0.0, out)

    def variance(self) -> float:
        return self.sigma_sq

    def mean_m(self) -> float:
        return self.m

    @cached_property
    def _mass_suffix(self) -> np.ndarray:
        # S[j] = sum_{k>=j} k^(-gamma-1)
        return suffix_sums(self.gamma + 1.0, self.tail_radius)

    @cached_property
    def _moment_suffix(self) -> np.ndarray:
        # S[j] = sum_{k>=j} k^(-gamma)
        return suffix_sums(self.gamma, self.tail_radius)

    def _mass_from(self, j: int) -> float:
        """sum_{k >= j} k^(-gamma-1) for j >= 1."""
        if j <= self.tail_radius:
            return float(self._mass_suffix[j])
        s = self.gamma + 1.0
        return j ** (-s) + series_tail(s, j)

    def upper_tail(self, j: int) -> float:
        """sum_{y >= j} p(y) for j >= 1; exactly 1/2 at j = 1."""
        if j < 1:
            raise ValueError(f"Upper tail index must be >= 1 (got {j}).")
        return 0.5 * self._mass_from(j) / float(self._mass_suffix[1])

    def tail_left(self, x: int, N: int) -> float:
        """r_N^-(x/N) = sum_{y >= x} p(y)."""
        check_site(x, N)
        return self.upper_tail(x)

    def tail_right(self, x: int, N: int) -> float:
        """r_N^+(x/N) = sum_{y <= x-N} p(y)."""
        check_site(x, N)
        return self.upper_tail(N - x)

    def tail_tables(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        """
        (r_N^-, r_N^+) evaluated at x = 1..N-1, as arrays of length N-1.
        Cached per N; r_N^+ is the reversal of r_N^-, so the mirror identity is exact.
        """
        key = ("tails", N)
        if key not in self._tables:
            if N < 2:
                raise ValueError(f"N must be >= 2 (got {N}).")
            left = np.array([self.upper_tail(x) for x in range(1, N)]) if N - 1 > self.tail_radius \
                else 0.5 * self._mass_suffix[1:N] / self._mass_suffix[1]
            right = left[::-1].copy()
            left.setflags(write=False)
            right.setflags(write=False)
            self._tables[key] = (left, right)
        return self._tables[key]

    def _moment_from(self, j: int) -> float:
        """sum_{k >= j} k^(-gamma) for j >= 1."""
        if j <= self.tail_radius:
            return float(self._moment_suffix[j])
        return j ** (-self.gamma) + series_tail(self.gamma, j)

    def theta_minus(self, x: int) -> float:
        """Theta_x^- = sum_{y <= 0} (x-y) p(x-y) = sum_{y >= x} y p(y)."""
        if x < 1:
            raise ValueError(f"Site must be >= 1 (got {x}).")
        return self.c_gamma * self._moment_from(x)

    def theta_plus(self, x: int, N: int) -> float:
        """Theta_x^+ = sum_{y >= N} (y-x) p(x-y)."""
        check_site(x, N)
        return self.theta_minus(N - x)

    def boundary_mass(self, N: int) -> float:
        """sum_{x in Lambda_N} r_N^-(x/N); tends to m as N grows."""
        left, _ = self.tail_tables(N)
        return float(np.sum(left[::-1]))

    def boundary_flux_moment(self, N: int) -> float:
        """sum_{x in Lambda_N} Theta_x^-; tends to sigma^2/2 as N grows."""
        return float(sum(self.theta_minus(x) for x in range(N - 1, 0, -1)))

    @cached_property
    def _magnitude_sampler(self) -> AliasTable:
        k = np.arange(1, self.sampler_radius + 1, dtype=float)
        return AliasTable(k ** (-self.gamma - 1.0))

    @cached_property
    def sampler_tail_mass(self) -> float:
        """P(|z| > sampler_radius)."""
        return 2.0 * self.upper_tail(self.sampler_radius + 1)

    def sample_jumps(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw size independent jumps z ~ p. Never returns 0."""
        magnitude = self._magnitude_sampler.draw_many(rng, size) + 1
        in_tail = rng.random(size) < self.sampler_tail_mass
        n_tail = int(np.count_nonzero(in_tail))
        if n_tail:
            # Inverse CDF of the continuous power tail on [R + 1/2, inf), rounded to the lattice
            start = self.sampler_radius + 0.5
            u = 1.0 - rng.random(n_tail)
            tail = np.floor(start * u ** (-1.0 / self.gamma) + 0.5).astype(np.int64)
            magnitude[in_tail] = np.maximum(tail, self.sampler_radius + 1)
        sign = np.where(rng.random(size) < 0.5, -1, 1)
        return sign * magnitude

    def sample_jump(self, rng: np.random.Generator) -> int:
        return int(self.sample_jumps(rng, 1)[0])

def check_site(x: int, N: int):
    if not 1 <= x <= N - 1:
        raise ValueError(f"Site {x} is outside Lambda_N = {{1..{N - 1}}}.")

def make_kernel(
        gamma: float,
        tol: float = DEFAULT_TOLERANCE,
        truncation_radius: int = DEFAULT_TRUNCATION_RADIUS,
        tail_radius: int = DEFAULT_TAIL_RADIUS,
        sampler_radius: int = DEFAULT_SAMPLER_RADIUS) -> JumpKernel:
    """
    Build the kernel for tail exponent gamma. Normalisation and moments are
    truncated series plus analytic tails whose error bound must stay below tol.
    """
    if not gamma > 2:
        raise KernelDomainError(f"gamma must exceed 2 (got {gamma}); the infinite-variance regime is not supported.")
    if not tol > 0:
        raise ValueError(f"tol must be positive (got {tol}).")

    zeta_mass, err_mass = power_sum(gamma + 1.0, truncation_radius)
    zeta_var, err_var = power_sum(gamma - 1.0, truncation_radius)
    zeta_m, err_m = power_sum(gamma, truncation_radius)
    c_gamma = 1.0 / (2.0 * zeta_mass)
    bound = max(err_mass, c_gamma * (2.0 * err_var + err_m))
    if bound >= tol:
        raise ValueError(f"Truncation radius {truncation_radius} leaves a tail error {bound:.3g} above tol {tol:.3g}.")

    kernel = JumpKernel(
        gamma=float(gamma),
        c_gamma=c_gamma,
        truncation_radius=truncation_radius,
        sigma_sq=2.0 * c_gamma * zeta_var,
        m=c_gamma * zeta_m,
        tol=tol,
        tail_radius=tail_radius,
        sampler_radius=sampler_radius,
        tail_error_bound=bound,
    )
    logger.debug("Kernel gamma=%s c=%.12g sigma^2=%.12g m=%.12g", gamma, kernel.c_gamma, kernel.sigma_sq, kernel.m)
    return kernel

@lru_cache(maxsize=16)
def get_kernel(gamma: float, tol: float = DEFAULT_TOLERANCE) -> JumpKernel:
    """Process-wide shared kernel; kernels are immutable once built."""
    return make_kernel(gamma, tol)
