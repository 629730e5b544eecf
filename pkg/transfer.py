"""
Truncated Fourier matrices of the reduced transfer operator.

The operator acts on the nu-th fibre mode as
    (F_nu phi)(x) = phi(E(x)) * exp(i nu tau(x)),
and its matrix in the basis phi_n(x) = exp(i 2 pi n x), |n| <= N, is
assembled by trapezoid quadrature (one FFT per column) or, for the
doubling map with tau = cos 2 pi x, from Bessel functions.
Rows and columns are ordered n = -N..N.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from bessel import bessel_j
from config import DEFAULT_QUAD_FACTOR, MIN_QUAD_FACTOR, OSCILLATION_MARGIN, auto_truncation
from maps import MapSystem, PeriodicFunction, TrigSeries, coboundary_system, inverse_lift
from validators import QuadratureResolutionError, ValidationError, validate_sobolev_order

logger = logging.getLogger(__name__)

__all__ = [
    "FourierTruncation", "TransferMatrix", "SpectralBoundReport",
    "auto_truncation", "required_quad_points", "default_quad_points",
    "assemble_quadrature", "assemble_bessel", "assemble_adjoint", "assemble",
    "bound_report", "regularity_order", "gauge_conjugation_matrix",
    "gauge_covariance_defect", "is_exemplar",
]

METHOD_QUADRATURE = "quadrature"
METHOD_BESSEL = "bessel-closed-form"

# Columns transformed per FFT batch
COLUMN_BATCH = 64
# Modes kept beyond |nu| before warning about the Bessel turning point
BANDWIDTH_MARGIN = 8

# i^m for m mod 4
_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


@dataclass(frozen=True)
class FourierTruncation:
    """Modes |n| <= N, dim = 2N+1."""

    N: int

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"truncation N must be an integer >= 1, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dim(self):
        return 2 * self.N + 1

    @property
    def modes(self):
        return np.arange(-self.N, self.N + 1)

    def index(self, n):
        """Row/column index of mode n."""
        if abs(n) > self.N:
            raise ValidationError(f"mode {n} outside the truncation |n| <= {self.N}")
        return n + self.N


@dataclass(frozen=True)
class TransferMatrix:
    """Dense matrix entries[n' + N, n + N] = <phi_n', F_nu phi_n> with provenance."""

    entries: np.ndarray
    nu: float
    truncation: FourierTruncation
    method: str
    quad_points: Optional[int] = None
    adjoint: bool = False

    def entry(self, n_row, n_col):
        t = self.truncation
        return self.entries[t.index(n_row), t.index(n_col)]


@dataclass(frozen=True)
class SpectralBoundReport:
    """Essential radius bound r_m, gap bound and Weyl count bound."""

    m: float
    r_m: float
    gap_bound: float
    weyl_bound: float
    conjectured_bound: float
    escape_constant: Optional[float] = None


def is_exemplar(sys: MapSystem) -> bool:
    """True for E(x) = 2x, tau(x) = cos 2 pi x, where the Bessel form applies."""
    return (sys.k == 2 and sys.is_linear and sys.tau.series is not None
            and sys.tau.series == TrigSeries(0.0, (1.0,), ()))


def _oscillation_count(sys, nu, N):
    return sys.k * N + N + math.ceil(abs(nu) * sys.tau_max()) + OSCILLATION_MARGIN


def required_quad_points(sys: MapSystem, nu: float, N: int) -> int:
    """Minimum node count 4*(kN + N + ceil(|nu| max|tau|) + 16)."""
    return MIN_QUAD_FACTOR * _oscillation_count(sys, nu, N)


def default_quad_points(sys: MapSystem, nu: float, N: int, factor=DEFAULT_QUAD_FACTOR) -> int:
    return int(math.ceil(factor * _oscillation_count(sys, nu, N)))


def _check_resolution(quad_points, required):
    if quad_points < required:
        raise QuadratureResolutionError(
            f"{quad_points} quadrature points cannot resolve the integrand (need >= {required})"
        )


def _project_columns(samples_for, trunc, quad_points):
    """
    Fourier coefficients of each column integrand.

    samples_for(modes) returns the integrand values on the grid, shape
    (quad_points, len(modes)); row n' of the result is FFT bin n' mod Q.
    """
    modes = trunc.modes
    rows = np.mod(modes, quad_points)
    entries = np.empty((trunc.dim, trunc.dim), dtype=complex)
    for start in range(0, trunc.dim, COLUMN_BATCH):
        block = modes[start:start + COLUMN_BATCH]
        coefficients = np.fft.fft(samples_for(block), axis=0) / quad_points
        entries[:, start:start + block.size] = coefficients[rows, :]
    return entries


def assemble_quadrature(sys: MapSystem, nu: float, trunc: FourierTruncation,
                        quad_points: Optional[int] = None) -> TransferMatrix:
    """
    Matrix of F_nu by the trapezoid rule on quad_points uniform nodes.

    Entry (n', n) = (1/Q) sum_j exp(-i2pi n' x_j) exp(i2pi n k g(x_j)) exp(i nu tau(x_j)).

    Raises:
        QuadratureResolutionError: quad_points below the oscillation requirement
    """
    required = required_quad_points(sys, nu, trunc.N)
    if quad_points is None:
        quad_points = default_quad_points(sys, nu, trunc.N)
    _check_resolution(quad_points, required)

    x = np.arange(quad_points) / quad_points
    lift = sys.lift(x)
    weight = np.exp(1j * nu * sys.tau(x))

    def samples_for(modes):
        # reduce n * k g(x) mod 1 before scaling by 2 pi
        phase = np.mod(np.multiply.outer(lift, modes), 1.0)
        return np.exp(2j * np.pi * phase) * weight[:, None]

    entries = _project_columns(samples_for, trunc, quad_points)
    return TransferMatrix(entries, float(nu), trunc, METHOD_QUADRATURE, quad_points)


def assemble_bessel(nu: float, trunc: FourierTruncation) -> TransferMatrix:
    """
    Closed form for E(x) = 2x, tau = cos 2 pi x.

    Entry (n', n) = exp(-i 2pi (3/4) m) J_m(nu) with m = 2n - n', and
    exp(-i 3 pi m / 2) = i^m.
    """
    modes = trunc.modes
    m = 2 * modes[None, :] - modes[:, None]
    entries = _I_POWERS[np.mod(m, 4)] * bessel_j(m, nu)
    return TransferMatrix(entries.astype(complex), float(nu), trunc, METHOD_BESSEL)


def assemble_adjoint(sys: MapSystem, nu: float, trunc: FourierTruncation,
                     quad_points: Optional[int] = None) -> TransferMatrix:
    """
    Matrix of the adjoint, (F_nu* psi)(x) = sum_eps exp(-i nu tau(x_eps)) psi(x_eps) / E'(x_eps).

    The branch sum is periodic in x, so the same trapezoid rule applies.
    """
    required = required_quad_points(sys, nu, trunc.N)
    if quad_points is None:
        quad_points = default_quad_points(sys, nu, trunc.N)
    _check_resolution(quad_points, required)

    x = np.arange(quad_points) / quad_points
    preimages = np.stack([inverse_lift(sys, x + eps) for eps in range(sys.k)])
    weights = np.exp(-1j * nu * sys.tau(preimages)) / sys.expand_derivative(preimages)

    def samples_for(modes):
        total = np.zeros((quad_points, modes.size), dtype=complex)
        for branch, weight in zip(preimages, weights):
            phase = np.mod(np.multiply.outer(branch, modes), 1.0)
            total += np.exp(2j * np.pi * phase) * weight[:, None]
        return total

    entries = _project_columns(samples_for, trunc, quad_points)
    return TransferMatrix(entries, float(nu), trunc, METHOD_QUADRATURE, quad_points, adjoint=True)


def assemble(sys: MapSystem, nu: float, trunc: FourierTruncation, method="auto",
             quad_factor=DEFAULT_QUAD_FACTOR) -> TransferMatrix:
    """
    Assemble with the requested method; "auto" picks the closed form when it applies.

    Raises:
        ValidationError: "bessel" requested for a system it does not describe
    """
    if method == "bessel" and not is_exemplar(sys):
        raise ValidationError("the Bessel closed form only holds for E(x) = 2x, tau = cos 2 pi x")
    if trunc.N < math.ceil(abs(nu)) + BANDWIDTH_MARGIN:
        logger.warning("N=%d is close to the Bessel bandwidth at nu=%g; spectra may be unconverged",
                       trunc.N, nu)
    if method == "bessel" or (method == "auto" and is_exemplar(sys)):
        logger.info("assembling nu=%g N=%d by closed form", nu, trunc.N)
        return assemble_bessel(nu, trunc)
    quad_points = default_quad_points(sys, nu, trunc.N, quad_factor)
    logger.info("assembling nu=%g N=%d by quadrature with %d points", nu, trunc.N, quad_points)
    return assemble_quadrature(sys, nu, trunc, quad_points)


def bound_report(sys: MapSystem, m: float, nu: float, trapped_measure: float,
                 radius: Optional[float] = None) -> SpectralBoundReport:
    """
    Spectral bounds for Sobolev order m < 0.

    r_m = E_min^-|m| sqrt(k/E_min), gap bound 1/sqrt(E_min), Weyl bound
    (|nu|/2pi) mu(K). With a zone radius R the fixed-nu escape constant
    C = sqrt((R^2+1)/(E_min R^2+1)) is included.

    Raises:
        ValidationError: m >= 0 or a negative trapped measure
    """
    is_valid, message = validate_sobolev_order(m)
    if not is_valid:
        raise ValidationError(message)
    if trapped_measure < 0:
        raise ValidationError("trapped measure must be non-negative")
    e_min, k = sys.E_min, sys.k
    r_m = e_min ** (-abs(m)) * math.sqrt(k / e_min)
    escape_constant = None
    if radius is not None:
        escape_constant = math.sqrt((radius ** 2 + 1.0) / (e_min * radius ** 2 + 1.0))
    return SpectralBoundReport(
        m=float(m),
        r_m=r_m,
        gap_bound=1.0 / math.sqrt(e_min),
        weyl_bound=abs(nu) / (2.0 * math.pi) * trapped_measure,
        conjectured_bound=1.0 / math.sqrt(k),
        escape_constant=escape_constant,
    )


def regularity_order(sys: MapSystem, modulus: float) -> float:
    """
    Largest m0 <= 0 with r_m0 <= modulus.

    Eigenfunctions of modulus |lambda| are visible in Sobolev spaces of
    order m below m0.
    """
    if modulus <= 0.0:
        return -math.inf
    ceiling = math.sqrt(sys.k / sys.E_min)
    if modulus >= ceiling:
        return 0.0
    return -math.log(ceiling / modulus) / math.log(sys.E_min)


def _gauge_coefficients(eta: PeriodicFunction, nu, quad_points):
    x = np.arange(quad_points) / quad_points
    return np.fft.fft(np.exp(1j * nu * eta(x))) / quad_points


def gauge_required_points(eta: PeriodicFunction, nu: float, N: int, grid_size=4096) -> int:
    x = np.arange(grid_size) / grid_size
    eta_max = float(np.max(np.abs(eta(x))))
    return MIN_QUAD_FACTOR * (2 * N + math.ceil(abs(nu) * eta_max) + OSCILLATION_MARGIN)


def gauge_conjugation_matrix(eta: PeriodicFunction, nu: float, trunc: FourierTruncation,
                             quad_points: Optional[int] = None) -> np.ndarray:
    """
    Fourier matrix of multiplication by exp(i nu eta(x)).

    Entry (n', n) is the (n' - n)-th Fourier coefficient, so the matrix is Toeplitz.
    """
    required = gauge_required_points(eta, nu, trunc.N)
    if quad_points is None:
        quad_points = 2 * required
    _check_resolution(quad_points, required)
    c = _gauge_coefficients(eta, nu, quad_points)
    offsets = np.arange(trunc.dim)
    column = c[np.mod(offsets, quad_points)]
    row = c[np.mod(-offsets, quad_points)]
    return linalg.toeplitz(column, row)


def gauge_covariance_defect(sys: MapSystem, eta: PeriodicFunction, nu: float,
                            trunc: FourierTruncation, margin: int = 24) -> float:
    """
    max |M_zeta - X M_tau X^-1| over the central modes, zeta = tau + eta - eta o E.

    The central block drops ceil(|nu| max|eta'| / 2pi) + margin modes at each end.
    """
    x = np.arange(4096) / 4096
    width = math.ceil(abs(nu) * float(np.max(np.abs(eta.derivative(x)))) / (2.0 * math.pi))
    inner = trunc.N - width - margin
    if inner < 0:
        raise ValidationError(f"N={trunc.N} leaves no central block for nu={nu} and margin {margin}")

    shifted = coboundary_system(sys, eta)
    m_tau = assemble_quadrature(sys, nu, trunc).entries
    m_zeta = assemble_quadrature(shifted, nu, trunc).entries
    chi = gauge_conjugation_matrix(eta, nu, trunc)
    chi_inv = gauge_conjugation_matrix(eta, -nu, trunc)
    conjugated = chi @ m_tau @ chi_inv

    centre = slice(trunc.N - inner, trunc.N + inner + 1)
    defect = float(np.max(np.abs(m_zeta[centre, centre] - conjugated[centre, centre])))
    logger.debug("gauge covariance defect %.3g on |n| <= %d", defect, inner)
    return defect
