"""
Expanding circle maps, roof functions and the skew product on the torus.

A system is the triple (k, g, tau): E(x) = k*g(x) mod 1 expands the circle,
and f(x, s) = (E(x), s + tau(x)/(2 pi)) is the partially expanding map on
the torus. Every other module evaluates the dynamics through this one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from config import (
    DEFAULT_EMIN_GRID, INVERSE_TOLERANCE, PERIODICITY_TOLERANCE, PRESETS,
)
from validators import (
    ConvergenceError, ExpansionError, ValidationError, validate_emin_grid,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Grid used for the periodicity and positivity checks at construction
CHECK_GRID = 256
BISECTION_STEPS = 24


def wrap_unit(v):
    """v mod 1 folded into [0, 1); np.mod rounds tiny negatives up to 1.0."""
    v = np.mod(v, 1.0)
    return np.where(v >= 1.0, 0.0, v)[()]


@dataclass(frozen=True)
class TrigSeries:
    """Finite real series c + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x), j >= 1."""

    constant: float = 0.0
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", _trim(self.cos))
        object.__setattr__(self, "sin", _trim(self.sin))

    @property
    def degree(self):
        return max(len(self.cos), len(self.sin))

    def coefficients(self):
        """Arrays (j, a_j, b_j) padded to the series degree."""
        d = self.degree
        a = np.zeros(d)
        b = np.zeros(d)
        a[:len(self.cos)] = self.cos
        b[:len(self.sin)] = self.sin
        return np.arange(1, d + 1), a, b

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j, a, b = self.coefficients()
        if j.size == 0:
            return np.full_like(x, self.constant)
        phase = TWO_PI * np.multiply.outer(x, j)
        return self.constant + np.cos(phase) @ a + np.sin(phase) @ b

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        j, a, b = self.coefficients()
        if j.size == 0:
            return np.zeros_like(x)
        phase = TWO_PI * np.multiply.outer(x, j)
        return (-np.sin(phase) @ (TWO_PI * j * a)) + np.cos(phase) @ (TWO_PI * j * b)

    def scaled(self, factor):
        return TrigSeries(factor * self.constant,
                          tuple(factor * c for c in self.cos),
                          tuple(factor * s for s in self.sin))

    def __add__(self, other):
        d = max(self.degree, other.degree)
        _, a1, b1 = self.coefficients()
        _, a2, b2 = other.coefficients()
        a = np.zeros(d)
        b = np.zeros(d)
        a[:a1.size] += a1
        a[:a2.size] += a2
        b[:b1.size] += b1
        b[:b2.size] += b2
        return TrigSeries(self.constant + other.constant, tuple(a), tuple(b))

    def composed_with_multiple(self, k):
        """The series of x -> self(k*x) for an integer k."""
        a = np.zeros(self.degree * k)
        b = np.zeros(self.degree * k)
        j, aj, bj = self.coefficients()
        a[j * k - 1] = aj
        b[j * k - 1] = bj
        return TrigSeries(self.constant, tuple(a), tuple(b))

    def is_zero(self):
        return self.constant == 0.0 and not self.cos and not self.sin


def _trim(values):
    values = [float(v) for v in values]
    while values and values[-1] == 0.0:
        values.pop()
    return tuple(values)


@dataclass(frozen=True)
class PeriodicFunction:
    """A smooth 1-periodic real function with its derivative."""

    value: Callable
    derivative: Callable
    series: Optional[TrigSeries] = None

    @classmethod
    def from_series(cls, series: TrigSeries) -> "PeriodicFunction":
        return cls(series, series.derivative, series)

    @classmethod
    def zero(cls) -> "PeriodicFunction":
        return cls.from_series(TrigSeries())

    def __call__(self, x):
        return self.value(x)

    def scaled(self, factor) -> "PeriodicFunction":
        if self.series is not None:
            return PeriodicFunction.from_series(self.series.scaled(factor))
        value, derivative = self.value, self.derivative
        return PeriodicFunction(lambda x: factor * value(x), lambda x: factor * derivative(x))

    def check_periodic(self, name, grid_size=CHECK_GRID):
        x = np.arange(grid_size) / grid_size
        defect = np.max(np.abs(self.value(x + 1.0) - self.value(x)))
        if defect > PERIODICITY_TOLERANCE:
            raise ValidationError(f"{name} is not 1-periodic (defect {defect:.3g})")


# Gauge functions are plain periodic functions
GaugeFunction = PeriodicFunction


@dataclass(frozen=True)
class CircleDiffeo:
    """Lift g of a circle diffeomorphism with g(x+1) = g(x)+1 and g' > 0."""

    lift: Callable
    derivative: Callable
    inverse: Optional[Callable] = None
    perturbation: Optional[TrigSeries] = None

    @classmethod
    def identity(cls) -> "CircleDiffeo":
        return cls(lambda x: np.asarray(x, dtype=float) * 1.0,
                   lambda x: np.ones_like(np.asarray(x, dtype=float)),
                   inverse=lambda t: np.asarray(t, dtype=float) * 1.0,
                   perturbation=TrigSeries())

    @classmethod
    def from_series(cls, perturbation: TrigSeries) -> "CircleDiffeo":
        """g(x) = x + perturbation(x)."""
        if perturbation.is_zero():
            return cls.identity()
        return cls(lambda x: np.asarray(x, dtype=float) + perturbation(x),
                   lambda x: 1.0 + perturbation.derivative(x),
                   perturbation=perturbation)

    @property
    def is_identity(self):
        return self.perturbation is not None and self.perturbation.is_zero()

    def check(self, grid_size=CHECK_GRID):
        x = np.arange(grid_size) / grid_size
        defect = np.max(np.abs(self.lift(x + 1.0) - self.lift(x) - 1.0))
        if defect > PERIODICITY_TOLERANCE:
            raise ValidationError(f"g is not a lift of a circle map (defect {defect:.3g})")
        if np.min(self.derivative(x)) <= 0.0:
            raise ValidationError("g' must be strictly positive")

    def invert(self, t):
        """
        Solve g(x) = t on the cover.

        Bisection brackets the root, Newton polishes it to 1e-14.
        """
        t = np.asarray(t, dtype=float)
        if self.inverse is not None:
            return self.inverse(t)
        flat = np.atleast_1d(t).ravel()
        # g(x) - x lies within g(0) +/- 1, which brackets every root
        g0 = float(self.lift(0.0))
        lo = flat - g0 - 1.0
        hi = flat - g0 + 1.0
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = self.lift(mid) > flat
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        start = 0.5 * (lo + hi)
        # newton switches to its vectorized path for more than one start value
        target = flat if flat.size > 1 else float(flat[0])
        start = start if flat.size > 1 else float(start[0])
        try:
            root = optimize.newton(lambda x: self.lift(x) - target, start,
                                   fprime=self.derivative, tol=INVERSE_TOLERANCE, maxiter=50)
        except RuntimeError as e:
            raise ConvergenceError(f"inverse of g did not converge: {e}")
        root = np.atleast_1d(root)
        residual = np.max(np.abs(self.lift(root) - flat))
        if not np.isfinite(residual) or residual > 1e-12:
            raise ConvergenceError(f"inverse of g did not converge (residual {residual:.3g})")
        return root.reshape(t.shape) if t.shape else float(root[0])


@dataclass(frozen=True)
class MapSystem:
    """
    The skew product f(x, s) = (k*g(x) mod 1, s + tau(x)/(2 pi)).

    Immutable after construction; checks periodicity, monotonicity and
    uniform expansion up front.
    """

    k: int
    g: CircleDiffeo
    tau: PeriodicFunction
    name: str = "custom"
    emin_grid: int = DEFAULT_EMIN_GRID
    _emin: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 2:
            raise ValidationError(f"branch count k must be an integer >= 2, got {self.k!r}")
        self.g.check()
        self.tau.check_periodic("tau")
        object.__setattr__(self, "_emin", emin(self, self.emin_grid))

    @property
    def E_min(self):
        return self._emin

    @property
    def is_linear(self):
        """True when E(x) = kx, i.e. g is the identity."""
        return self.g.is_identity

    def lift(self, x):
        """The lift k*g(x) on the cover."""
        return self.k * self.g.lift(x)

    def expand(self, x):
        """E(x) = k*g(x) mod 1."""
        return wrap_unit(self.lift(x))

    def expand_derivative(self, x):
        return self.k * self.g.derivative(x)

    def tau_derivative_range(self, grid_size=DEFAULT_EMIN_GRID):
        x = np.arange(grid_size) / grid_size
        d = self.tau.derivative(x)
        return float(np.min(d)), float(np.max(d))

    def tau_derivative_max(self, grid_size=DEFAULT_EMIN_GRID):
        lo, hi = self.tau_derivative_range(grid_size)
        return max(abs(lo), abs(hi))

    def tau_max(self, grid_size=DEFAULT_EMIN_GRID):
        """max |tau| on the sample grid."""
        x = np.arange(grid_size) / grid_size
        return float(np.max(np.abs(self.tau(x))))

    def with_tau(self, tau: PeriodicFunction, name=None) -> "MapSystem":
        return MapSystem(self.k, self.g, tau, name or self.name, self.emin_grid)


def evaluate_f(sys: MapSystem, point):
    """
    One step of the skew product.

    Args:
        sys: the map system
        point: (x, s) with components in [0, 1); arrays are mapped elementwise

    Returns:
        tuple: (E(x) mod 1, s + tau(x)/(2 pi) mod 1)
    """
    x, s = point
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    x_new = sys.expand(x)
    s_new = wrap_unit(s + sys.tau(x) / TWO_PI)
    if x_new.ndim == 0:
        return float(x_new), float(s_new)
    return x_new, s_new


def jacobian(sys: MapSystem, x):
    """|Df| at x, which is E'(x) since the fibre direction is isometric."""
    return sys.expand_derivative(x)


def inverse_branch(sys: MapSystem, y, eps):
    """
    The branch eps of E^{-1}: g^{-1}(y/k + eps/k) mod 1.

    Raises:
        ValidationError: eps outside 0..k-1
        ConvergenceError: the root finder failed
    """
    eps_arr = np.asarray(eps)
    if np.any(eps_arr < 0) or np.any(eps_arr >= sys.k):
        raise ValidationError(f"branch index must lie in 0..{sys.k - 1}, got {eps!r}")
    t = (np.asarray(y, dtype=float) + eps_arr) / sys.k
    x = wrap_unit(sys.g.invert(t))
    return float(x) if np.ndim(x) == 0 else x


def inverse_lift(sys: MapSystem, x):
    """Monotone inverse of the lift k*g on the whole real line."""
    return sys.g.invert(np.asarray(x, dtype=float) / sys.k)


def emin(sys: MapSystem, grid_size: int = DEFAULT_EMIN_GRID) -> float:
    """
    min of E' = k*g' over a uniform grid of grid_size points.

    Raises:
        ValidationError: grid_size below the minimum
        ExpansionError: E_min <= 1
    """
    is_valid, message = validate_emin_grid(grid_size)
    if not is_valid:
        raise ValidationError(message)
    x = np.arange(grid_size) / grid_size
    value = float(np.min(sys.k * sys.g.derivative(x)))
    if value <= 1.0:
        raise ExpansionError(f"E is not uniformly expanding: E_min = {value:.6g} <= 1")
    return value


def coboundary_system(sys: MapSystem, eta: PeriodicFunction) -> MapSystem:
    """
    Same (k, g) with roof zeta = tau + eta - eta o E.

    The result is conjugate to the input by T(x, s) = (x, s + eta(x)/(2 pi)).
    """
    tau, E, dE = sys.tau, sys.expand, sys.expand_derivative

    series = None
    if tau.series is not None and eta.series is not None and sys.is_linear:
        # eta(E(x)) = eta(kx) for linear E
        shifted = eta.series.composed_with_multiple(sys.k)
        series = tau.series + eta.series + shifted.scaled(-1.0)

    if series is not None:
        zeta = PeriodicFunction.from_series(series)
    else:
        zeta = PeriodicFunction(
            lambda x: tau(x) + eta(x) - eta(E(x)),
            lambda x: tau.derivative(x) + eta.derivative(x) - eta.derivative(E(x)) * dE(x),
        )
    logger.debug("coboundary roof built for %s (closed series: %s)", sys.name, series is not None)
    return sys.with_tau(zeta, name=f"{sys.name}+coboundary")


def system_from_coefficients(k: int, g_cos: Sequence[float] = (), g_sin: Sequence[float] = (),
                             tau_constant: float = 0.0, tau_cos: Sequence[float] = (),
                             tau_sin: Sequence[float] = (), name: str = "custom") -> MapSystem:
    """Build a system with g = x + series and tau a finite series."""
    g = CircleDiffeo.from_series(TrigSeries(0.0, tuple(g_cos), tuple(g_sin)))
    tau = PeriodicFunction.from_series(TrigSeries(tau_constant, tuple(tau_cos), tuple(tau_sin)))
    return MapSystem(int(k), g, tau, name)


def gauge_from_coefficients(eta_cos: Sequence[float] = (), eta_sin: Sequence[float] = ()) -> PeriodicFunction:
    return PeriodicFunction.from_series(TrigSeries(0.0, tuple(eta_cos), tuple(eta_sin)))


_PRESET_COEFFICIENTS = {
    "doubling-cos": dict(k=2, tau_cos=(1.0,)),
    "doubling-sin": dict(k=2, tau_sin=(1.0,)),
    "doubling-flat": dict(k=2),
    "tripling-cos": dict(k=3, tau_cos=(1.0,)),
    "perturbed-doubling": dict(k=2, g_sin=(0.05,), tau_cos=(1.0,)),
}


def preset_system(name: str) -> MapSystem:
    """
    A named map preset.

    Raises:
        ValidationError: unknown preset name
    """
    if name not in PRESETS:
        raise ValidationError(f"Unknown preset '{name}' (choose from: {', '.join(PRESETS)})")
    return system_from_coefficients(name=name, **_PRESET_COEFFICIENTS[name])


def system_from_config(config) -> MapSystem:
    """The system described by a RunConfig (preset or custom coefficients)."""
    if config.preset != "custom":
        return preset_system(config.preset)
    return system_from_coefficients(config.k, config.g_cos, config.g_sin,
                                    config.tau_constant, config.tau_cos, config.tau_sin)
