import math

import numpy as np
import pytest

from eigensolver import (
    Spectrum, count_above, eigenpairs, eigenvalues, gap_verdict, hausdorff_gap,
    nearest_neighbor_spacings, qr_eigenvalues, sort_eigenvalues, spectral_radius, spectrum_for,
    truncation_convergence,
)
from maps import coboundary_system, gauge_from_coefficients
from transfer import FourierTruncation, assemble_bessel
from validators import ValidationError


def _random_matrix(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


# Sorting and backends

def test_sort_by_modulus_then_phase():
    values, order = sort_eigenvalues([0.5, -1.0, 1j, 1.0])
    np.testing.assert_allclose(values, [1.0, 1j, -1.0, 0.5])
    assert list(order) == [3, 2, 1, 0]


def test_qr_matches_lapack_on_random_matrix():
    a = _random_matrix(30, 3)
    reference = eigenvalues(a, "lapack")
    ours = eigenvalues(a, "qr")
    assert len(ours) == 30
    assert hausdorff_gap(reference, ours, floor=1e-12) <= 1e-9


def test_qr_matches_lapack_on_transfer_matrix():
    matrix = assemble_bessel(5.0, FourierTruncation(16))
    reference = eigenvalues(matrix, "lapack")
    ours = eigenvalues(matrix, "qr")
    assert ours.nu == 5.0
    assert ours.N == 16
    assert hausdorff_gap(reference, ours, floor=0.3) <= 1e-7


def test_qr_triangular_input():
    a = np.triu(_random_matrix(6, 1))
    np.testing.assert_allclose(np.sort_complex(qr_eigenvalues(a)), np.sort_complex(np.diag(a)), atol=1e-12)


def test_one_by_one():
    assert eigenvalues(np.array([[2.0 - 1j]]), "qr").eigenvalues[0] == 2.0 - 1j


BACKENDS = ["lapack", "qr"]


@pytest.mark.parametrize("method", BACKENDS)
@pytest.mark.parametrize("matrix, expected", [
    (np.eye(3), [1.0, 1.0, 1.0]),
    (np.array([[0.0, 1.0], [0.0, 0.0]]), [0.0, 0.0]),
    (np.array([[0.0, 1.0], [-2.0, 3.0]]), [2.0, 1.0]),
])
def test_small_known_spectra(method, matrix, expected):
    spectrum = eigenvalues(matrix, method)
    np.testing.assert_allclose(spectrum.eigenvalues, expected, atol=1e-12)


@pytest.mark.parametrize("method", BACKENDS)
def test_similarity_invariance(method):
    a = _random_matrix(24, 5)
    p = np.eye(24) + 0.02 * _random_matrix(24, 7)
    assert np.linalg.cond(p) <= 1e3
    similar = p @ a @ np.linalg.inv(p)
    gap = hausdorff_gap(eigenvalues(a, method), eigenvalues(similar, method), floor=1e-12)
    assert gap <= 1e-8 * np.linalg.norm(a, 2)


@pytest.mark.parametrize("method", BACKENDS)
def test_trace_and_determinant(method):
    a = _random_matrix(16, 8)
    values = eigenvalues(a, method).eigenvalues
    norm = np.linalg.norm(a, 2)
    assert abs(values.sum() - np.trace(a)) <= 16 * 1e-11 * norm
    det = np.linalg.det(a)
    assert abs(np.prod(values) - det) <= 1e-8 * abs(det)


@pytest.mark.parametrize("method", BACKENDS)
def test_adjoint_spectrum_is_conjugate(method):
    a = _random_matrix(20, 9)
    direct = eigenvalues(a, method)
    adjoint = eigenvalues(a.conj().T, method)
    assert hausdorff_gap(Spectrum(np.conj(direct.eigenvalues)), adjoint, floor=1e-12) <= 1e-9


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros(4), np.array([[np.nan]])])
def test_bad_matrices(bad):
    with pytest.raises(ValidationError):
        eigenvalues(bad)


def test_unknown_method():
    with pytest.raises(ValidationError):
        eigenvalues(np.eye(2), "arnoldi")


def test_constant_mode_eigenvalue(doubling_cos):
    spec = spectrum_for(doubling_cos, 0.0, 64)
    assert np.min(np.abs(spec.eigenvalues - 1.0)) <= 1e-10
    assert spectral_radius(spec) == pytest.approx(1.0, abs=1e-10)
    assert count_above(spec, 0.5) == 1


def test_eigenpairs_residual():
    a = _random_matrix(20, 7)
    spec = eigenpairs(a, count=3)
    assert spec.eigenvectors.shape == (20, 3)
    assert spec.residual_bound <= 1e-8
    v = spec.eigenvectors[:, 0]
    assert np.linalg.norm(v) == pytest.approx(1.0)


# Statistics

def test_count_above():
    spec = Spectrum(np.array([0.9, 0.5j, -0.3, 0.1]))
    assert count_above(spec, 0.3) == 3
    assert count_above(spec, 0.95) == 0
    with pytest.raises(ValidationError):
        count_above(spec, 0.0)


def test_hausdorff_edge_cases():
    empty = Spectrum(np.array([0.01]))
    full = Spectrum(np.array([0.5, 0.6j]))
    assert hausdorff_gap(empty, empty, 0.1) == 0.0
    assert hausdorff_gap(empty, full, 0.1) == math.inf
    assert hausdorff_gap(full, full, 0.1) == 0.0
    with pytest.raises(ValidationError):
        hausdorff_gap(full, full, 0.0)


def test_hausdorff_is_symmetric():
    a = Spectrum(np.array([0.5, 0.8]))
    b = Spectrum(np.array([0.52, 0.7, 0.81]))
    assert hausdorff_gap(a, b, 0.1) == pytest.approx(0.1)
    assert hausdorff_gap(b, a, 0.1) == pytest.approx(0.1)


def test_gap_verdict():
    verdict = gap_verdict(Spectrum(np.array([0.6, 0.1])), bound=0.7)
    assert verdict.satisfied
    assert verdict.margin == pytest.approx(0.1)
    assert not gap_verdict(Spectrum(np.array([0.8])), bound=0.7).satisfied


def test_spectral_radius_of_empty():
    with pytest.raises(ValidationError):
        spectral_radius(Spectrum(np.array([], dtype=complex)))


def test_nearest_neighbor_spacings():
    spec = eigenvalues(np.diag([1.0, 1.1, 1.3]))
    spacings = nearest_neighbor_spacings(spec, 0.5)
    np.testing.assert_allclose(np.sort(spacings), [0.75, 0.75, 1.5])
    assert nearest_neighbor_spacings(spec, 1.2).size == 0


# Resonance spectra

def test_truncation_convergence(doubling_cos):
    assert truncation_convergence(doubling_cos, 20.0, 64, floor=0.2) <= 1e-6


def test_gauge_invariance_of_spectrum(doubling_cos):
    shifted = coboundary_system(doubling_cos, gauge_from_coefficients(eta_sin=(0.3,)))
    original = spectrum_for(doubling_cos, 20.0, 128, assembly="quadrature")
    gauged = spectrum_for(shifted, 20.0, 128, assembly="quadrature")
    assert hausdorff_gap(original, gauged, floor=0.3) <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("nu", [50.0, 100.0, 150.0])
def test_spectral_gap(doubling_cos, nu):
    from config import auto_truncation

    spec = spectrum_for(doubling_cos, nu, auto_truncation(nu))
    assert spectral_radius(spec) <= 1 / math.sqrt(2) + 0.10


# Regression values

@pytest.mark.parametrize("nu, N, radius", [
    (10.0, 48, 0.788449980925),
    (100.0, 160, 0.730160464840),
])
def test_spectral_radius_regression(doubling_cos, nu, N, radius):
    spec = spectrum_for(doubling_cos, nu, N)
    assert spectral_radius(spec) == pytest.approx(radius, abs=1e-8)


def test_resonance_count_regression(doubling_cos):
    assert count_above(spectrum_for(doubling_cos, 100.0, 192), 0.3) == 101
