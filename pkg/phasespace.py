"""
Phase-space dynamics of the k-valued canonical map on S^1 x R.

A branch eps sends (x, xi) to (x', E'(x') xi + tau'(x')) with x' the eps-th
preimage of x. Outside Z = S^1 x [-R, R] every branch expands |xi| by more
than kappa, so enumerations prune a branch as soon as it leaves Z: it can
never come back.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import (
    DEFAULT_CAPTIVITY_GRID, DEFAULT_ENUMERATION_CAP, DEFAULT_TRAPPED_GRID, ESCAPE_RADIUS_MARGIN,
)
from maps import MapSystem, PeriodicFunction, inverse_branch
from validators import (
    EnumerationCapError, ValidationError, validate_grid, validate_kappa, validate_sobolev_order,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    xi: float

    def __post_init__(self):
        if not 0.0 <= self.x < 1.0:
            raise ValidationError(f"phase point x must lie in [0, 1), got {self.x}")


@dataclass(frozen=True)
class BranchSequence:
    """A word eps_1 ... eps_n; eps_1 is applied first."""

    word: Tuple[int, ...] = ()

    def __len__(self):
        return len(self.word)

    def check(self, k):
        if any(e < 0 or e >= k for e in self.word):
            raise ValidationError(f"branch word {self.word} uses letters outside 0..{k - 1}")


@dataclass(frozen=True)
class CompactZone:
    """
    Z = {(x, xi): |xi - c(x)| <= R}, with c = 0 unless a centre is given.

    kappa is the expansion rate the radius was derived from.
    """

    R: float
    kappa: Optional[float] = None
    center: Optional[PeriodicFunction] = None

    def offset(self, x):
        if self.center is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.center(x)

    def contains(self, x, xi):
        return np.abs(np.asarray(xi) - self.offset(x)) <= self.R

    def half_height(self):
        """Largest |xi| inside the zone, for laying out grids."""
        if self.center is None:
            return self.R
        x = np.arange(1024) / 1024
        return self.R + float(np.max(np.abs(self.center(x))))

    def escape_constant(self):
        """C = sqrt((R^2+1)/(kappa R^2+1))."""
        if self.kappa is None:
            raise ValidationError("zone has no kappa; build it with escape_radius")
        return math.sqrt((self.R ** 2 + 1.0) / (self.kappa * self.R ** 2 + 1.0))

    def sheared(self, eta: PeriodicFunction) -> "CompactZone":
        """The zone moved by xi -> xi + eta'(x)."""
        if self.center is not None:
            raise ValidationError("zone is already sheared")
        centre = PeriodicFunction(eta.derivative, lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        return CompactZone(self.R, self.kappa, centre)


@dataclass(frozen=True)
class CaptivityRow:
    n: int
    count: int
    exponent: float
    gap_estimate: float


@dataclass(frozen=True)
class CaptivityTable:
    rows: List[CaptivityRow]
    grid: Tuple[int, int]
    R: float
    kappa: Optional[float]

    @property
    def counts(self):
        """N(n) keyed by n, N(0) = 1 included."""
        values = {0: 1}
        values.update({row.n: row.count for row in self.rows})
        return values

    @property
    def gap_estimate(self):
        return self.rows[-1].gap_estimate if self.rows else math.nan

    def subadditivity_violations(self):
        """Pairs (m, n) with N(m+n) > N(m) N(n) among the computed rows."""
        counts = self.counts
        top = max(counts)
        return [(m, n) for m in range(1, top) for n in range(1, top - m + 1)
                if counts[m + n] > counts[m] * counts[n]]


@dataclass(frozen=True)
class OccupancyGrid:
    """occupied[i, j] marks the cell centred at (x[i], xi[j])."""

    x: np.ndarray
    xi: np.ndarray
    occupied: np.ndarray
    depth: int
    R: float
    metadata: dict = field(default_factory=dict)

    @property
    def cell_area(self):
        height = (self.xi[-1] - self.xi[0]) / (self.xi.size - 1) if self.xi.size > 1 else 2 * self.R
        return (1.0 / self.x.size) * height

    @property
    def measure(self):
        """Upper-bound estimate of mu(K): cell area times occupied cells."""
        return self.cell_area * int(np.count_nonzero(self.occupied))

    def column(self, x_index):
        """Occupied xi values at one x."""
        return self.xi[self.occupied[x_index]]


def _check_eps(sys, eps):
    if eps < 0 or eps >= sys.k:
        raise ValidationError(f"branch index must lie in 0..{sys.k - 1}, got {eps}")


def _step_arrays(sys, x, xi, eps):
    x_new = inverse_branch(sys, x, eps)
    xi_new = sys.expand_derivative(x_new) * xi + sys.tau.derivative(x_new)
    return np.asarray(x_new, dtype=float), np.asarray(xi_new, dtype=float)


def _expand_all(sys, x, xi):
    """Every branch of every point, children of point i at k*i .. k*i+k-1."""
    k = sys.k
    eps = np.tile(np.arange(k), x.size)
    return _step_arrays(sys, np.repeat(x, k), np.repeat(xi, k), eps)


def _check_cap(sys, n, cap):
    if sys.k ** n > cap:
        raise EnumerationCapError(f"{sys.k}^{n} branches exceed the enumeration cap {cap}")


def canonical_step(sys: MapSystem, p: PhasePoint, eps: int) -> PhasePoint:
    """F_eps(x, xi) = (x', E'(x') xi + tau'(x'))."""
    _check_eps(sys, eps)
    x_new, xi_new = _step_arrays(sys, p.x, p.xi, eps)
    return PhasePoint(float(x_new), float(xi_new))


def escape_radius(sys: MapSystem, kappa: Optional[float] = None) -> CompactZone:
    """
    R = max|tau'| / (E_min - kappa) + margin, so |xi'| > kappa |xi| for |xi| > R.

    kappa defaults to (1 + E_min)/2.

    Raises:
        ValidationError: kappa outside (1, E_min)
    """
    if kappa is None:
        kappa = 0.5 * (1.0 + sys.E_min)
    is_valid, message = validate_kappa(kappa, sys.E_min)
    if not is_valid:
        raise ValidationError(message)
    radius = sys.tau_derivative_max() / (sys.E_min - kappa) + ESCAPE_RADIUS_MARGIN
    logger.debug("escape radius R=%.6g for kappa=%.4g", radius, kappa)
    return CompactZone(radius, kappa)


def branch_tree(sys: MapSystem, p: PhasePoint, n: int,
                cap: int = DEFAULT_ENUMERATION_CAP) -> List[Tuple[BranchSequence, PhasePoint]]:
    """
    All k^n endpoints F_eps^n(p) with their words, in depth-first order.

    Raises:
        EnumerationCapError: k^n above cap
    """
    if n < 0:
        raise ValidationError("depth n must be non-negative")
    _check_cap(sys, n, cap)
    x = np.array([p.x])
    xi = np.array([p.xi])
    for _ in range(n):
        x, xi = _expand_all(sys, x, xi)
    words = np.array(np.unravel_index(np.arange(x.size), (sys.k,) * n)).T if n else [()]
    return [(BranchSequence(tuple(int(e) for e in word)), PhasePoint(float(a), float(b)))
            for word, a, b in zip(words, x, xi)]


def zone_grid(zone: CompactZone, grid):
    """
    Lattice x_i = i/nx and xi_j = H * linspace(-1, 1, nxi) with H the zone half height.

    For odd nxi the middle row is exactly xi = 0.
    """
    is_valid, message = validate_grid(grid)
    if not is_valid:
        raise ValidationError(message)
    nx, nxi = grid
    x = np.arange(nx) / nx
    xi = zone.half_height() * np.linspace(-1.0, 1.0, nxi) if nxi > 1 else np.zeros(1)
    if nxi % 2 == 1:
        xi[nxi // 2] = 0.0
    return x, xi


def _survivor_counts(sys, zone, x, xi, depth, cap):
    """
    Per-level counts of branches that stayed in Z at every step.

    Returns a (depth + 1, npoints) integer array; row 0 marks points in Z.
    """
    _check_cap(sys, depth, cap)
    npoints = x.size
    counts = np.zeros((depth + 1, npoints), dtype=np.int64)
    origin = np.arange(npoints)
    keep = zone.contains(x, xi)
    x, xi, origin = x[keep], xi[keep], origin[keep]
    counts[0] = np.bincount(origin, minlength=npoints)
    for level in range(1, depth + 1):
        if origin.size == 0:
            break
        x, xi = _expand_all(sys, x, xi)
        origin = np.repeat(origin, sys.k)
        keep = zone.contains(x, xi)
        x, xi, origin = x[keep], xi[keep], origin[keep]
        counts[level] = np.bincount(origin, minlength=npoints)
        logger.debug("level %d: %d surviving branches", level, origin.size)
    return counts


def captivity_count(sys: MapSystem, zone: CompactZone, n: int, grid=DEFAULT_CAPTIVITY_GRID,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """
    max over the grid of #{eps : F_eps^n(x, xi) in Z}.

    The supremum over Z is realised on the lattice of zone_grid.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    if n == 0:
        return 1
    x, xi = zone_grid(zone, grid)
    xx, ss = np.meshgrid(x, xi, indexing="ij")
    counts = _survivor_counts(sys, zone, xx.ravel(), ss.ravel(), n, cap)
    return int(counts[n].max())


def captivity_table(sys: MapSystem, zone: CompactZone, n_max: int, grid=DEFAULT_CAPTIVITY_GRID,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> CaptivityTable:
    """
    N(n), log N(n)/n and the gap estimate exp(exponent/2)/sqrt(E_min) for n = 1..n_max.
    """
    if n_max < 1:
        raise ValidationError("n_max must be at least 1")
    x, xi = zone_grid(zone, grid)
    xx, ss = np.meshgrid(x, xi, indexing="ij")
    counts = _survivor_counts(sys, zone, xx.ravel(), ss.ravel(), n_max, cap)
    rows = []
    for n in range(1, n_max + 1):
        count = int(counts[n].max())
        exponent = math.log(count) / n if count > 0 else -math.inf
        gap = math.exp(0.5 * exponent) / math.sqrt(sys.E_min) if count > 0 else 0.0
        rows.append(CaptivityRow(n, count, exponent, gap))
    logger.info("captivity table up to n=%d on grid %s: N(n_max)=%d",
                n_max, tuple(grid), rows[-1].count)
    return CaptivityTable(rows, tuple(grid), zone.R, zone.kappa)


def trapped_membership(sys: MapSystem, zone: CompactZone, depth: int, x, xi,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """True where some word of length depth keeps every image inside Z."""
    if depth < 1:
        raise ValidationError("depth must be at least 1")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    counts = _survivor_counts(sys, zone, x.ravel(), xi.ravel(), depth, cap)
    return (counts[depth] > 0).reshape(x.shape)


def trapped_set_estimate(sys: MapSystem, zone: CompactZone, depth: int,
                         grid=DEFAULT_TRAPPED_GRID, cap: int = DEFAULT_ENUMERATION_CAP) -> OccupancyGrid:
    """
    Finite-depth outer approximation of the trapped set on the zone lattice.

    The measure shrinks as depth grows.
    """
    x, xi = zone_grid(zone, grid)
    xx, ss = np.meshgrid(x, xi, indexing="ij")
    occupied = trapped_membership(sys, zone, depth, xx, ss, cap)
    result = OccupancyGrid(x, xi, occupied, depth, zone.R)
    logger.info("trapped set depth %d on grid %s: %d cells, measure %.6g",
                depth, tuple(grid), int(np.count_nonzero(occupied)), result.measure)
    return result


def transport_occupancy(sys: MapSystem, zone: CompactZone, depth: int, eta: PeriodicFunction,
                        grid=DEFAULT_TRAPPED_GRID, cap: int = DEFAULT_ENUMERATION_CAP) -> OccupancyGrid:
    """
    Trapped set of (E, tau) carried by the shear xi -> xi + eta'(x).

    Sampled on the lattice of the sheared zone, so it can be compared cell by
    cell with the trapped set of the coboundary system in that zone.
    """
    target = zone.sheared(eta)
    x, xi = zone_grid(target, grid)
    xx, ss = np.meshgrid(x, xi, indexing="ij")
    occupied = trapped_membership(sys, zone, depth, xx, ss - eta.derivative(xx), cap)
    return OccupancyGrid(x, xi, occupied, depth, zone.R, {"transported": True})


def occupancy_overlap(a: OccupancyGrid, b: OccupancyGrid, tolerance_rows: int = 1) -> float:
    """
    Fraction of occupied cells with an occupied partner within tolerance_rows in
    the same column, taken in the worse of the two directions.
    """
    if a.occupied.shape != b.occupied.shape:
        raise ValidationError("occupancy grids must share a resolution")

    def covered(source, target):
        dilated = target.copy()
        for shift in range(1, tolerance_rows + 1):
            dilated[:, shift:] |= target[:, :-shift]
            dilated[:, :-shift] |= target[:, shift:]
        total = np.count_nonzero(source)
        return 1.0 if total == 0 else np.count_nonzero(source & dilated) / total

    return float(min(covered(a.occupied, b.occupied), covered(b.occupied, a.occupied)))


def escape_function(zone: CompactZone, m: float, xi):
    """A_m(xi) = <max(|xi|, R)>^m, flat on Z."""
    level = np.maximum(np.abs(np.asarray(xi, dtype=float)), zone.R)
    return (1.0 + level ** 2) ** (0.5 * m)


def escape_function_ratio(sys: MapSystem, zone: CompactZone, m: float, p: PhasePoint, eps: int) -> float:
    """
    A_m(F_eps(p)) / A_m(p).

    At most 1 everywhere, and at most C^|m| when |p.xi| > R.
    """
    is_valid, message = validate_sobolev_order(m)
    if not is_valid:
        raise ValidationError(message)
    image = canonical_step(sys, p, eps)
    return float(escape_function(zone, m, image.xi) / escape_function(zone, m, p.xi))


def escape_contraction(zone: CompactZone, m: float) -> float:
    """C^|m|, the decay of A_m per step outside Z."""
    return zone.escape_constant() ** abs(m)


def egorov_symbol(sys: MapSystem, zone: CompactZone, m: float, p: PhasePoint, n: int,
                  cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    sum over words of (1/E'_n) A_m^2(F_eps^n p) / A_m^2(p), E'_n the product of E' along the word.
    """
    is_valid, message = validate_sobolev_order(m)
    if not is_valid:
        raise ValidationError(message)
    _check_cap(sys, n, cap)
    x = np.array([p.x])
    xi = np.array([p.xi])
    weight = np.ones(1)
    for _ in range(n):
        x, xi = _expand_all(sys, x, xi)
        weight = np.repeat(weight, sys.k) / sys.expand_derivative(x)
    ratio = (escape_function(zone, m, xi) / escape_function(zone, m, p.xi)) ** 2
    return float(np.sum(weight * ratio))


def egorov_bound(sys: MapSystem, zone: CompactZone, m: float, n: int, captive_count: int) -> float:
    """
    (k/E_min)^n C^{2|m|} + k N(n-1) / E_min^n.

    captive_count is N(n-1); each captive prefix of length n-1 has k extensions.
    """
    c = zone.escape_constant()
    return ((sys.k / sys.E_min) ** n * c ** (2 * abs(m))
            + sys.k * captive_count / sys.E_min ** n)
