"""
Density profiles on the cell-centred grid of (0,1) and smooth test functions
with analytic derivatives.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional
import numpy as np

def cell_centres(M: int) -> np.ndarray:
    """q_i = (i - 1/2)/M, i = 1..M. The endpoints 0 and 1 are never nodes."""
    if M < 1:
        raise ValueError(f"Grid needs at least one cell (got M={M}).")
    return (np.arange(1, M + 1) - 0.5) / M

@dataclass
class Profile:
    """A function of q in (0,1) sampled at the M cell centres."""
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ValueError("Profile values must be a non-empty 1-d array.")

    @property
    def M(self) -> int:
        return len(self.values)

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def grid(self) -> np.ndarray:
        return cell_centres(self.M)

    @classmethod
    def from_function(cls, g: Callable[[np.ndarray], np.ndarray], M: int) -> "Profile":
        q = cell_centres(M)
        return cls(np.zeros(M) + np.asarray(g(q), dtype=float))

    @classmethod
    def constant(cls, value: float, M: int) -> "Profile":
        return cls(np.full(M, float(value)))

    def at(self, q) -> np.ndarray:
        """Linear interpolation between cell centres, constant beyond the outer centres."""
        return np.interp(np.asarray(q, dtype=float), self.grid, self.values)

    def integral(self) -> float:
        """Midpoint rule over (0,1)."""
        return float(np.sum(self.values) * self.h)

    def check_density(self, what: str = "profile", tol: float = 0.0):
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"The {what} has non-finite values.")
        if self.values.min() < -tol or self.values.max() > 1.0 + tol:
            raise ValueError(f"The {what} must take values in [0,1] (range {self.values.min():.6g}..{self.values.max():.6g}).")

    def same_grid(self, other: "Profile") -> bool:
        return self.M == other.M

def as_profile(g, M: int) -> Profile:
    """Accept a Profile (resampled if needed), a constant or a function of q."""
    if isinstance(g, Profile):
        if g.M == M:
            return g
        return Profile(g.at(cell_centres(M)))
    if callable(g):
        return Profile.from_function(g, M)
    return Profile.constant(float(g), M)

# A function of (q, s), vectorised in q
SpaceTimeFunction = Callable[[np.ndarray, float], np.ndarray]

def _zero(q, s=0.0):
    return 0.0

@dataclass(frozen=True)
class SmoothFunction:
    """
    A test function G(q, s) on R x [0,T] with analytic first and second space
    derivatives and time derivative. support, when given, is a closed interval
    outside which G and all its derivatives vanish.
    """
    value: SpaceTimeFunction
    dq: SpaceTimeFunction
    dqq: SpaceTimeFunction
    ds: SpaceTimeFunction = _zero
    support: Optional[tuple[float, float]] = None
    name: str = "G"
    identically_zero: bool = field(default=False, compare=False)

    @staticmethod
    def _eval(f: SpaceTimeFunction, q, s: float) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape) + np.asarray(f(q, s), dtype=float)

    def __call__(self, q, s: float = 0.0) -> np.ndarray:
        return self._eval(self.value, q, s)

    def grad(self, q, s: float = 0.0) -> np.ndarray:
        return self._eval(self.dq, q, s)

    def laplacian(self, q, s: float = 0.0) -> np.ndarray:
        return self._eval(self.dqq, q, s)

    def time_derivative(self, q, s: float = 0.0) -> np.ndarray:
        return self._eval(self.ds, q, s)

    def vanishes_near_boundary(self) -> bool:
        return self.identically_zero or (
            self.support is not None and self.support[0] > 0.0 and self.support[1] < 1.0)

def zero_function() -> SmoothFunction:
    return SmoothFunction(_zero, _zero, _zero, support=(0.5, 0.5), name="zero", identically_zero=True)

def constant_function(c: float) -> SmoothFunction:
    return SmoothFunction(lambda q, s: c, _zero, _zero, name=f"const({c:g})")

def affine_function(a: float, b: float) -> SmoothFunction:
    """G(q) = a + b q on all of R."""
    return SmoothFunction(lambda q, s: a + b * q, lambda q, s: b, _zero, name=f"affine({a:g},{b:g})")

def sine_mode(k: int) -> SmoothFunction:
    """sin(k pi q); vanishes at 0 and 1 but not outside [0,1]."""
    w = k * np.pi
    return SmoothFunction(
        lambda q, s: np.sin(w * q),
        lambda q, s: w * np.cos(w * q),
        lambda q, s: -w * w * np.sin(w * q),
        name=f"sin({k}pi q)")

def polynomial_bubble() -> SmoothFunction:
    """q^2 (1-q)^2."""
    return SmoothFunction(
        lambda q, s: q**2 * (1 - q) ** 2,
        lambda q, s: 2 * q * (1 - q) * (1 - 2 * q),
        lambda q, s: 2 - 12 * q + 12 * q**2,
        name="q^2(1-q)^2")

def bump(a: float, b: float) -> SmoothFunction:
    """The C-infinity bump exp(-1/(1-u^2)), u mapping [a,b] onto [-1,1]."""
    if not a < b:
        raise ValueError(f"Bump support must be a non-empty interval (got [{a}, {b}]).")
    scale = 2.0 / (b - a)
    mid = 0.5 * (a + b)

    def parts(q):
        u = (np.asarray(q, dtype=float) - mid) * scale
        inside = np.abs(u) < 1.0
        w = np.where(inside, 1.0 - u * u, 1.0)
        phi = np.where(inside, np.exp(-1.0 / w), 0.0)
        g = -2.0 * u / w**2
        dg = -2.0 / w**2 - 8.0 * u * u / w**3
        return phi, g, dg

    def value(q, s):
        return parts(q)[0]

    def dq(q, s):
        phi, g, _ = parts(q)
        return phi * g * scale

    def dqq(q, s):
        phi, g, dg = parts(q)
        return phi * (g * g + dg) * scale * scale

    return SmoothFunction(value, dq, dqq, support=(a, b), name=f"bump[{a:g},{b:g}]")

def product(f: SmoothFunction, g: SmoothFunction) -> SmoothFunction:
    """Pointwise product of two static test functions."""
    if f.support is None:
        support = g.support
    elif g.support is None:
        support = f.support
    else:
        support = (max(f.support[0], g.support[0]), min(f.support[1], g.support[1]))
    return SmoothFunction(
        lambda q, s: f(q, s) * g(q, s),
        lambda q, s: f.grad(q, s) * g(q, s) + f(q, s) * g.grad(q, s),
        lambda q, s: f.laplacian(q, s) * g(q, s) + 2 * f.grad(q, s) * g.grad(q, s) + f(q, s) * g.laplacian(q, s),
        support=support,
        name=f"{f.name}*{g.name}")

def decaying(f: SmoothFunction, rate: float) -> SmoothFunction:
    """e^(-rate s) f(q): a time-dependent test function."""
    return SmoothFunction(
        lambda q, s: np.exp(-rate * s) * f(q),
        lambda q, s: np.exp(-rate * s) * f.grad(q),
        lambda q, s: np.exp(-rate * s) * f.laplacian(q),
        lambda q, s: -rate * np.exp(-rate * s) * f(q),
        support=f.support,
        name=f"exp(-{rate:g}s)*{f.name}")
