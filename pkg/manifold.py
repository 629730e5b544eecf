"""
Lifted dynamics on the cover R x R and the stable manifold of its fixed point.

On the cover the canonical map is single valued:
    x' = E^{-1}(x),   xi' = E'(x') xi + tau'(x').
The graph xi = S(x) of
    S(x) = - sum_{p>=1} tau'(x_p) / (E'(x_1) ... E'(x_p)),   x_p = E^{-p}(x),
is the set of bounded trajectories, and its projection to the cylinder is
the trapped set. Translating a start point by an integer p selects the
branch word whose base-k digits spell p, least significant digit first.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from config import DEFAULT_CAPTIVITY_GRID, DEFAULT_ENUMERATION_CAP, DEFAULT_SERIES_TOLERANCE
from maps import MapSystem, inverse_lift
from validators import ConventionError, EnumerationCapError, ValidationError, validate_grid

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
FRACTAL_TAIL = 1e-10
CONVENTION_TOLERANCE = 1e-12
DIFFERENCE_STEP = 1e-5


@dataclass(frozen=True)
class LiftedPoint:
    x: float
    xi: float


def _check_convention(sys):
    if abs(float(sys.lift(0.0))) > CONVENTION_TOLERANCE:
        raise ConventionError("lifted dynamics need E(0) = 0 on the cover (k*g(0) = 0)")


def lifted_step(sys: MapSystem, p: LiftedPoint) -> LiftedPoint:
    """One step of the lifted map."""
    x_new = float(inverse_lift(sys, p.x))
    xi_new = float(sys.expand_derivative(x_new) * p.xi + sys.tau.derivative(x_new))
    return LiftedPoint(x_new, xi_new)


def lifted_orbit(sys: MapSystem, p0: LiftedPoint, n: int) -> List[LiftedPoint]:
    """p0 and its first n images."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    orbit = [p0]
    for _ in range(n):
        orbit.append(lifted_step(sys, orbit[-1]))
    return orbit


def lifted_trajectory(sys: MapSystem, p0: LiftedPoint, n: int) -> LiftedPoint:
    """The n-th image of p0."""
    return lifted_orbit(sys, p0, n)[-1]


def fixed_point(sys: MapSystem) -> LiftedPoint:
    """
    The hyperbolic fixed point (0, -tau'(0) / (E'(0) - 1)).

    Raises:
        ConventionError: E(0) != 0 on the cover
    """
    _check_convention(sys)
    slope = float(sys.expand_derivative(0.0))
    return LiftedPoint(0.0, -float(sys.tau.derivative(0.0)) / (slope - 1.0))


def fixed_point_jacobian(sys: MapSystem):
    """
    Differential of the lifted map at the fixed point and its eigenvalues.

    The matrix is lower triangular with diagonal (1/E'(0), E'(0)).
    """
    point = fixed_point(sys)
    h = DIFFERENCE_STEP
    slope = float(sys.expand_derivative(0.0))
    second_e = float(sys.expand_derivative(h) - sys.expand_derivative(-h)) / (2 * h)
    second_tau = float(sys.tau.derivative(h) - sys.tau.derivative(-h)) / (2 * h)
    matrix = np.array([
        [1.0 / slope, 0.0],
        [(second_e * point.xi + second_tau) / slope, slope],
    ])
    return matrix, np.sort(np.linalg.eigvals(matrix).real)


class StableManifold:
    """
    Evaluator of S(x) with the series cut at the a priori tail bound.

    The first p terms are kept, p the least integer with
    max|tau'| E_min^-p / (E_min - 1) < tol.
    """

    def __init__(self, sys: MapSystem, tol: float = DEFAULT_SERIES_TOLERANCE):
        if tol <= 0:
            raise ValidationError("series tolerance must be positive")
        self.sys = sys
        self.tol = tol
        self.slope_bound = sys.tau_derivative_max()
        self.bound = self.slope_bound / (sys.E_min - 1.0)
        if self.slope_bound == 0.0:
            self.terms = 0
        else:
            self.terms = max(1, math.ceil(math.log(self.bound / tol) / math.log(sys.E_min)) + 1)
        logger.debug("stable manifold series with %d terms (tol %.1e)", self.terms, tol)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.terms == 0:
            return np.zeros_like(x) if x.ndim else 0.0
        y = x
        product = np.ones_like(x)
        terms = []
        for _ in range(self.terms):
            y = inverse_lift(self.sys, y)
            product = product * self.sys.expand_derivative(y)
            terms.append(self.sys.tau.derivative(y) / product)
        # smallest terms first
        total = np.zeros_like(x)
        for term in reversed(terms):
            total = total + term
        value = -total
        return value if value.ndim else float(value)

    def residual(self, x):
        """|S(E^-1 x) - E'(E^-1 x) S(x) - tau'(E^-1 x)|."""
        y = inverse_lift(self.sys, np.asarray(x, dtype=float))
        return np.abs(self(y) - self.sys.expand_derivative(y) * self(x) - self.sys.tau.derivative(y))


def stable_manifold(sys: MapSystem, tol: float = DEFAULT_SERIES_TOLERANCE) -> StableManifold:
    return StableManifold(sys, tol)


def word_for_translate(p: int, n: int, k: int) -> List[int]:
    """Base-k digits of p, least significant first: the branch word of translate p."""
    if p < 0 or p >= k ** n:
        raise ValidationError(f"translate {p} outside [0, {k}^{n})")
    word = []
    for _ in range(n):
        p, digit = divmod(p, k)
        word.append(digit)
    return word


def translate_for_word(word: Sequence[int], k: int) -> int:
    """Inverse of word_for_translate."""
    return sum(int(e) * k ** j for j, e in enumerate(word))


def _require_linear(sys, what):
    if not sys.is_linear:
        raise ValidationError(f"{what} needs a linear expanding map E(x) = kx")


def alt_captivity_count(sys: MapSystem, n: int, R_tilde: float, grid=DEFAULT_CAPTIVITY_GRID,
                        tol: float = DEFAULT_SERIES_TOLERANCE,
                        cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """
    max over (x, xi) of #{p in [0, k^n) : |xi - S(x+p)| <= R_tilde / k^n}.

    x runs over the grid columns; the max over xi is exact (sliding window
    over the sorted values).

    Raises:
        ValidationError: nonlinear E
        EnumerationCapError: k^n above cap
    """
    _require_linear(sys, "the manifold captivity count")
    if n < 0:
        raise ValidationError("n must be non-negative")
    if n == 0:
        return 1
    is_valid, message = validate_grid(grid)
    if not is_valid:
        raise ValidationError(message)
    translates = sys.k ** n
    if translates > cap:
        raise EnumerationCapError(f"{translates} translates exceed the enumeration cap {cap}")

    manifold = StableManifold(sys, tol)
    width = 2.0 * R_tilde / translates
    x = np.arange(grid[0]) / grid[0]
    best = 0
    for x0 in x:
        values = np.sort(manifold(x0 + np.arange(translates)))
        ends = np.searchsorted(values, values + width * (1 + 1e-12), side="right")
        best = max(best, int(np.max(ends - np.arange(translates))))
    return best


def _slice_coefficients(sys):
    if sys.tau.series is None:
        raise ValidationError("the fractal slice needs tau given as a trigonometric series")
    j, a, b = sys.tau.series.coefficients()
    return j, TWO_PI * j * (a - 1j * b)


def fractal_terms_needed(sys: MapSystem, tail: float = FRACTAL_TAIL) -> int:
    """Terms P with sum_j |c_j| k^-P / (k-1) < tail."""
    _, c = _slice_coefficients(sys)
    scale = float(np.sum(np.abs(c)))
    if scale == 0.0:
        return 1
    return max(1, math.ceil(math.log(scale / ((sys.k - 1) * tail)) / math.log(sys.k)) + 1)


def fractal_bound(sys: MapSystem) -> float:
    """|S^c| <= sum_j |c_j| / (k-1)."""
    _, c = _slice_coefficients(sys)
    return float(np.sum(np.abs(c))) / (sys.k - 1)


def fractal_slice(sys: MapSystem, x: float, m_range: int, p_terms: Optional[int] = None) -> np.ndarray:
    """
    Points S^c(x+m) for m = -m_range..m_range, where
        S^c(y) = sum_p k^-p sum_j 2 pi j (a_j - i b_j) exp(i 2 pi j y / k^p)
    and Im S^c = S.

    Raises:
        ValidationError: nonlinear E, tau without a series, m_range < 1
    """
    _require_linear(sys, "the fractal slice")
    if m_range < 1:
        raise ValidationError("m_range must be at least 1")
    needed = fractal_terms_needed(sys)
    terms = needed if p_terms is None else max(int(p_terms), needed)
    j, c = _slice_coefficients(sys)
    y = x + np.arange(-m_range, m_range + 1, dtype=float)
    total = np.zeros(y.size, dtype=complex)
    # largest p (smallest weight) first
    for p in range(terms, 0, -1):
        scale = float(sys.k) ** p
        phases = np.exp(1j * TWO_PI * np.multiply.outer(y / scale, j))
        total += (phases @ c) / scale
    return total
