"""
Direct simulations on the torus: point clouds, density push-forward and
correlation functions with decay-rate fits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from config import (
    DEFAULT_CLOUD_SIGMA, DEFAULT_CLOUD_SIZE, DEFAULT_HISTOGRAM_BINS, DEFAULT_QUAD_FACTOR,
    DEFAULT_SEED, FIT_UNDERFLOW,
)
from maps import MapSystem, evaluate_f, inverse_branch, wrap_unit
from transfer import BANDWIDTH_MARGIN, FourierTruncation, assemble
from validators import (
    FitWindowError, TruncationOverflowError, ValidationError, validate_observable, validate_seed,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PointCloud:
    """Points (x, s) on the torus at time index n."""

    x: np.ndarray
    s: np.ndarray
    seed: Optional[int] = None
    time: int = 0

    def __post_init__(self):
        if self.x.shape != self.s.shape:
            raise ValidationError("cloud coordinates must have the same shape")

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class CorrelationSeries:
    """C(n) = (psi2, F_nu^n psi1) for n = 0..n_max."""

    nu: float
    values: np.ndarray
    psi1: Dict[str, object]
    psi2: Dict[str, object]
    N: Optional[int] = None
    source: str = "matrix"

    @property
    def moduli(self):
        return np.abs(self.values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DecayFit:
    rate: float
    slope: float
    intercept: float
    residual: float
    window: tuple = field(default=(0, 0))


def _generator(seed):
    is_valid, message = validate_seed(seed)
    if not is_valid:
        raise ValidationError(message)
    return np.random.Generator(np.random.Philox(seed))


def gaussian_cloud(center=(0.0, 0.0), sigma: float = DEFAULT_CLOUD_SIGMA,
                   size: int = DEFAULT_CLOUD_SIZE, seed: int = DEFAULT_SEED) -> PointCloud:
    """Gaussian cloud wrapped onto the torus, drawn from a Philox stream keyed by seed."""
    if size < 1:
        raise ValidationError("cloud size must be at least 1")
    if sigma <= 0:
        raise ValidationError("cloud sigma must be positive")
    rng = _generator(seed)
    offsets = sigma * rng.standard_normal((size, 2))
    x = wrap_unit(center[0] + offsets[:, 0])
    s = wrap_unit(center[1] + offsets[:, 1])
    return PointCloud(x, s, seed, 0)


def evolve_cloud(sys: MapSystem, cloud: PointCloud, steps: int) -> PointCloud:
    """Map every point forward steps times."""
    if steps < 0:
        raise ValidationError("steps must be non-negative")
    x, s = cloud.x, cloud.s
    for _ in range(steps):
        x, s = evaluate_f(sys, (x, s))
    return PointCloud(np.asarray(x, dtype=float), np.asarray(s, dtype=float),
                      cloud.seed, cloud.time + steps)


def cloud_snapshots(sys: MapSystem, cloud: PointCloud, times: Sequence[int]) -> List[PointCloud]:
    """Clouds at each requested time, evolved incrementally."""
    if any(t < 0 for t in times):
        raise ValidationError("snapshot times must be non-negative")
    snapshots = []
    current = cloud
    for t in sorted(set(int(t) for t in times)):
        current = evolve_cloud(sys, current, t - current.time)
        snapshots.append(current)
    return snapshots


def uniformity_chi2(cloud: PointCloud, bins: int = DEFAULT_HISTOGRAM_BINS) -> float:
    """Chi-square per degree of freedom of the bins x bins histogram against the uniform law."""
    if bins < 2:
        raise ValidationError("histogram needs at least 2 bins per axis")
    counts, _, _ = np.histogram2d(cloud.x, cloud.s, bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    expected = len(cloud) / bins ** 2
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return chi2 / (bins ** 2 - 1)


def perron_frobenius_step(sys: MapSystem, density: np.ndarray) -> np.ndarray:
    """
    (P rho)(x, s) = sum_eps rho(y_eps, s - tau(y_eps)/2pi) / E'(y_eps), y_eps = E^-1_eps(x).

    density is sampled at x_i = i/nx, s_j = j/ns; off-grid values are
    interpolated linearly with periodic wrap.
    """
    density = np.asarray(density, dtype=float)
    if density.ndim != 2:
        raise ValidationError("density must be a 2-D (nx, ns) array")
    nx, ns = density.shape
    xx, ss = np.meshgrid(np.arange(nx) / nx, np.arange(ns) / ns, indexing="ij")
    result = np.zeros_like(density)
    for eps in range(sys.k):
        y = inverse_branch(sys, xx, eps)
        source_s = np.mod(ss - sys.tau(y) / TWO_PI, 1.0)
        coords = np.array([y * nx, source_s * ns])
        values = ndimage.map_coordinates(density, coords, order=1, mode="grid-wrap")
        result += values / sys.expand_derivative(y)
    return result


def _coefficient(value):
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def observable_vector(psi: Dict[str, object], trunc: FourierTruncation) -> np.ndarray:
    """
    Coefficient vector of an observable given as {mode: value}.

    Raises:
        ValidationError: malformed table
        TruncationOverflowError: a mode outside |n| <= N
    """
    is_valid, message = validate_observable(psi, "observable")
    if not is_valid:
        raise ValidationError(message)
    vector = np.zeros(trunc.dim, dtype=complex)
    for mode, value in psi.items():
        n = int(mode)
        if abs(n) > trunc.N:
            raise TruncationOverflowError(f"observable mode {n} lies outside |n| <= {trunc.N}")
        vector[n + trunc.N] += _coefficient(value)
    return vector


def observable_values(psi: Dict[str, object], x) -> np.ndarray:
    """Pointwise values sum_n c_n exp(i 2 pi n x)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape, dtype=complex)
    for mode, value in psi.items():
        total += _coefficient(value) * np.exp(2j * np.pi * int(mode) * x)
    return total


def _check_bandwidth(sys, nu, trunc):
    spread = math.ceil(abs(nu) * sys.tau_max()) + BANDWIDTH_MARGIN
    if spread > (sys.k - 1) * trunc.N:
        raise TruncationOverflowError(
            f"N={trunc.N} is too small for nu={nu}: modes leaving the window could return "
            f"(need (k-1)N >= {spread})"
        )


def correlation_series(sys: MapSystem, nu: float, psi1, psi2, n_max: int,
                       trunc: FourierTruncation, assembly: str = "auto",
                       quad_factor=DEFAULT_QUAD_FACTOR) -> CorrelationSeries:
    """
    C(n) by repeated application of the transfer matrix to psi1's coefficients.

    Raises:
        TruncationOverflowError: observables or their bandwidth spread do not fit in N
    """
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    v = observable_vector(psi1, trunc)
    w = observable_vector(psi2, trunc)
    _check_bandwidth(sys, nu, trunc)
    matrix = assemble(sys, nu, trunc, assembly, quad_factor).entries

    values = np.empty(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        values[n] = np.vdot(w, v)
        v = matrix @ v
    logger.info("correlation nu=%g: |C(%d)| = %.3g", nu, n_max, abs(values[-1]))
    return CorrelationSeries(float(nu), values, dict(psi1), dict(psi2), trunc.N)


def monte_carlo_correlation(sys: MapSystem, nu: float, psi1, psi2, n_max: int,
                            samples: int = DEFAULT_CLOUD_SIZE, seed: int = DEFAULT_SEED) -> CorrelationSeries:
    """
    Monte Carlo estimate of mean(conj psi2(x_0) psi1(x_n) exp(i nu sum_{j<n} tau(x_j))).

    Only the base orbit is iterated; the Birkhoff sum of tau carries the fibre phase
    for any real nu.
    """
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    rng = _generator(seed)
    x = rng.random(samples)
    weight = np.conj(observable_values(psi2, x))
    phase = np.zeros(samples)
    values = np.empty(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        values[n] = np.mean(weight * observable_values(psi1, x) * np.exp(1j * nu * phase))
        phase = phase + sys.tau(x)
        x = sys.expand(x)
    return CorrelationSeries(float(nu), values, dict(psi1), dict(psi2), None, "monte-carlo")


def fit_decay_rate(series: CorrelationSeries, n_lo: int, n_hi: int) -> DecayFit:
    """
    Least-squares line through log|C(n)| on [n_lo, n_hi]; rate = exp(slope).

    Raises:
        ValidationError: empty or out-of-range window
        FitWindowError: |C(n)| <= 1e-14 inside the window
    """
    if not 0 <= n_lo < n_hi < len(series):
        raise ValidationError(f"fit window [{n_lo}, {n_hi}] must satisfy 0 <= lo < hi <= {len(series) - 1}")
    n = np.arange(n_lo, n_hi + 1)
    moduli = series.moduli[n_lo:n_hi + 1]
    if np.any(moduli <= FIT_UNDERFLOW):
        raise FitWindowError(f"|C(n)| underflows inside the fit window [{n_lo}, {n_hi}]")
    logs = np.log(moduli)
    slope, intercept = np.polyfit(n, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * n + intercept)) ** 2)))
    logger.debug("decay fit nu=%g: slope %.6g, rms residual %.3g", series.nu, slope, residual)
    return DecayFit(float(math.exp(slope)), float(slope), float(intercept), residual, (n_lo, n_hi))
