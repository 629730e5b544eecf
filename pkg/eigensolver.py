"""
Eigenvalues of dense complex non-Hermitian matrices and spectral statistics.

Two backends compute the full spectrum:

  lapack  scipy.linalg.eigvals (zgeev)
  qr      balancing, Hessenberg reduction and a single-shift complex QR
          iteration with Wilkinson shifts, implemented here

Spectra are sorted by descending modulus, ties by ascending phase in [0, 2pi).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from config import DEFLATION_TOLERANCE, QR_ITERATION_FACTOR
from transfer import FourierTruncation, TransferMatrix, assemble
from validators import ConvergenceError, ValidationError

logger = logging.getLogger(__name__)

EXCEPTIONAL_PERIOD = 10
EXCEPTIONAL_SHIFT = 0.75 + 0.5j
INVERSE_ITERATIONS = 4
MODULUS_DIGITS = 12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with multiplicity, sorted by modulus then phase."""

    eigenvalues: np.ndarray
    nu: Optional[float] = None
    N: Optional[int] = None
    method: Optional[str] = None
    residual_bound: Optional[float] = None
    eigenvectors: Optional[np.ndarray] = None

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class GapVerdict:
    spectral_radius: float
    bound: float
    satisfied: bool
    margin: float


def sort_eigenvalues(values):
    """Order by descending modulus (rounded to 12 digits), then ascending phase."""
    values = np.asarray(values, dtype=complex)
    phase = np.mod(np.angle(values), 2.0 * np.pi)
    order = np.lexsort((phase, -np.round(np.abs(values), MODULUS_DIGITS)))
    return values[order], order


def _as_array(matrix):
    if isinstance(matrix, TransferMatrix):
        return matrix.entries
    return np.asarray(matrix)


def _check_matrix(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"eigenvalues need a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValidationError("eigenvalues need a matrix of dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")


def _wilkinson_shift(block):
    """Eigenvalue of the trailing 2x2 block closest to its last diagonal entry."""
    a, b = block[-2, -2], block[-2, -1]
    c, d = block[-1, -2], block[-1, -1]
    p = 0.5 * (a - d)
    disc = np.sqrt(p * p + b * c)
    denom = p + disc if abs(p + disc) >= abs(p - disc) else p - disc
    if denom == 0:
        return d
    return d - b * c / denom


def _qr_sweep(block, shift):
    """One explicit shifted QR step on an upper Hessenberg block, in place."""
    m = block.shape[0]
    idx = np.arange(m)
    block[idx, idx] -= shift
    rotations = []
    for j in range(m - 1):
        a, b = block[j, j], block[j + 1, j]
        r = math.hypot(abs(a), abs(b))
        if r == 0.0:
            c, s = 1.0 + 0j, 0j
        else:
            c, s = a / r, b / r
        row_j = block[j, j:].copy()
        row_next = block[j + 1, j:].copy()
        block[j, j:] = np.conj(c) * row_j + np.conj(s) * row_next
        block[j + 1, j:] = -s * row_j + c * row_next
        rotations.append((c, s))
    for j, (c, s) in enumerate(rotations):
        col_j = block[:j + 2, j].copy()
        col_next = block[:j + 2, j + 1].copy()
        block[:j + 2, j] = col_j * c + col_next * s
        block[:j + 2, j + 1] = -col_j * np.conj(s) + col_next * np.conj(c)
    block[idx, idx] += shift


def qr_eigenvalues(matrix):
    """
    All eigenvalues by balancing, Hessenberg reduction and shifted QR.

    Raises:
        ConvergenceError: more than 60*dim sweeps
    """
    a = np.array(_as_array(matrix), dtype=complex)
    _check_matrix(a)
    n = a.shape[0]
    if n == 1:
        return a[0].copy()

    balanced, _ = linalg.matrix_balance(a, permute=False)
    h = linalg.hessenberg(balanced)
    h = np.triu(h, -1)
    eigs = np.empty(n, dtype=complex)
    safe_min = np.finfo(float).tiny / np.finfo(float).eps

    cap = QR_ITERATION_FACTOR * n
    sweeps = 0
    since_deflation = 0
    hi = n - 1
    while hi >= 0:
        if hi == 0:
            eigs[0] = h[0, 0]
            break
        lo = hi
        while lo > 0:
            scale = abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])
            if abs(h[lo, lo - 1]) <= max(DEFLATION_TOLERANCE * scale, safe_min):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs[hi] = h[hi, hi]
            hi -= 1
            since_deflation = 0
            continue

        sweeps += 1
        since_deflation += 1
        if sweeps > cap:
            raise ConvergenceError(f"QR iteration did not converge within {cap} sweeps")
        block = h[lo:hi + 1, lo:hi + 1]
        if since_deflation % EXCEPTIONAL_PERIOD == 0:
            shift = block[-1, -1] + EXCEPTIONAL_SHIFT * abs(block[-1, -2])
        else:
            shift = _wilkinson_shift(block)
        _qr_sweep(block, shift)

    logger.debug("QR converged in %d sweeps for dim %d", sweeps, n)
    return eigs


def eigenvalues(matrix, method="lapack") -> Spectrum:
    """
    Full eigenvalue multiset of a dense square matrix.

    Args:
        matrix: TransferMatrix or 2-D array
        method: "lapack" or "qr"

    Returns:
        Spectrum tagged with the matrix provenance when available
    """
    a = _as_array(matrix)
    _check_matrix(a)
    if method == "lapack":
        values = linalg.eigvals(a, check_finite=False)
    elif method == "qr":
        values = qr_eigenvalues(a)
    else:
        raise ValidationError(f"unknown eigenvalue method '{method}'")
    values, _ = sort_eigenvalues(values)
    if isinstance(matrix, TransferMatrix):
        return Spectrum(values, matrix.nu, matrix.truncation.N, matrix.method)
    return Spectrum(values)


def eigenpairs(matrix, count=None, method="lapack") -> Spectrum:
    """
    Leading eigenvalues with eigenvectors by inverse iteration.

    residual_bound is the largest ||Mv - lambda v|| / ||v|| over the pairs.
    """
    a = np.asarray(_as_array(matrix), dtype=complex)
    spectrum = eigenvalues(matrix, method)
    count = len(spectrum) if count is None else min(count, len(spectrum))
    norm = max(linalg.norm(a, 2), 1.0)
    eye = np.eye(a.shape[0])
    rng = np.random.default_rng(0)

    vectors = np.empty((a.shape[0], count), dtype=complex)
    residual = 0.0
    for i, lam in enumerate(spectrum.eigenvalues[:count]):
        # nudge the shift off the eigenvalue so the factorisation stays regular
        sigma = lam + 1e-10 * norm
        lu = linalg.lu_factor(a - sigma * eye, check_finite=False)
        v = rng.standard_normal(a.shape[0]) + 1j * rng.standard_normal(a.shape[0])
        for _ in range(INVERSE_ITERATIONS):
            v = linalg.lu_solve(lu, v, check_finite=False)
            v /= linalg.norm(v)
        vectors[:, i] = v
        residual = max(residual, float(linalg.norm(a @ v - lam * v)))

    return Spectrum(spectrum.eigenvalues, spectrum.nu, spectrum.N, spectrum.method,
                    residual_bound=residual, eigenvectors=vectors)


def spectral_radius(spec: Spectrum) -> float:
    """Modulus of the leading eigenvalue."""
    if len(spec) == 0:
        raise ValidationError("spectral radius of an empty spectrum")
    return float(abs(spec.eigenvalues[0]))


def count_above(spec: Spectrum, lam: float) -> int:
    """Number of eigenvalues with modulus >= lam."""
    if lam <= 0:
        raise ValidationError("threshold lambda must be positive")
    return int(np.count_nonzero(spec.moduli >= lam))


def _points(values):
    return np.column_stack([values.real, values.imag])


def hausdorff_gap(spec_a: Spectrum, spec_b: Spectrum, floor: float) -> float:
    """
    Symmetric Hausdorff distance between the eigenvalues of modulus >= floor.

    Both sub-multisets empty gives 0; exactly one empty gives infinity.
    """
    if floor <= 0:
        raise ValidationError("floor must be positive")
    a = spec_a.eigenvalues[spec_a.moduli >= floor]
    b = spec_b.eigenvalues[spec_b.moduli >= floor]
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    d = cdist(_points(a), _points(b))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def gap_verdict(spec: Spectrum, bound: float, tolerance: float = 1e-9) -> GapVerdict:
    radius = spectral_radius(spec)
    return GapVerdict(radius, bound, radius <= bound + tolerance, bound - radius)


def nearest_neighbor_spacings(spec: Spectrum, floor: float) -> np.ndarray:
    """
    Distances to the nearest other eigenvalue, divided by their mean.

    Only eigenvalues of modulus >= floor take part.
    """
    values = spec.eigenvalues[spec.moduli >= floor]
    if values.size < 2:
        return np.empty(0)
    distances, _ = cKDTree(_points(values)).query(_points(values), k=2)
    spacing = distances[:, 1]
    mean = spacing.mean()
    return spacing / mean if mean > 0 else spacing


def spectrum_for(sys, nu, N, assembly="auto", method="lapack", quad_factor=8) -> Spectrum:
    """Assemble the matrix for (nu, N) and return its spectrum."""
    matrix = assemble(sys, nu, FourierTruncation(N), assembly, quad_factor)
    return eigenvalues(matrix, method)


def truncation_convergence(sys, nu, N, floor, assembly="auto", method="lapack") -> float:
    """Hausdorff distance between the spectra at N and 2N above floor."""
    coarse = spectrum_for(sys, nu, N, assembly, method)
    fine = spectrum_for(sys, nu, 2 * N, assembly, method)
    gap = hausdorff_gap(coarse, fine, floor)
    logger.info("truncation convergence nu=%g N=%d vs %d: %.3g", nu, N, 2 * N, gap)
    return gap
