import math

import numpy as np
import pytest

from eigensolver import count_above, spectrum_for
from maps import coboundary_system, gauge_from_coefficients, inverse_branch
from phasespace import (
    CompactZone, PhasePoint, branch_tree, canonical_step, captivity_count, captivity_table,
    egorov_bound, egorov_symbol, escape_contraction, escape_function, escape_function_ratio,
    escape_radius, occupancy_overlap, transport_occupancy, trapped_membership, trapped_set_estimate,
    zone_grid,
)
from validators import EnumerationCapError, ValidationError

SMALL_GRID = (16, 9)


# Zone and canonical map

def test_escape_radius_doubling(doubling_cos):
    zone = escape_radius(doubling_cos)
    assert zone.kappa == pytest.approx(1.5)
    assert zone.R == pytest.approx(4 * math.pi, abs=1e-6)


def test_kappa_must_lie_below_emin(doubling_cos):
    with pytest.raises(ValidationError):
        escape_radius(doubling_cos, kappa=2.5)
    with pytest.raises(ValidationError):
        escape_radius(doubling_cos, kappa=1.0)


@pytest.mark.parametrize("name", ["doubling_cos", "perturbed", "tripling_cos"])
def test_escape_lemma(request, name):
    system = request.getfixturevalue(name)
    zone = escape_radius(system)
    rng = np.random.default_rng(11)
    size = 10_000
    x = rng.random(size)
    xi = rng.uniform(zone.R, 10 * zone.R, size) * rng.choice([-1.0, 1.0], size)
    eps = rng.integers(0, system.k, size)
    x_new = inverse_branch(system, x, eps)
    xi_new = system.expand_derivative(x_new) * xi + system.tau.derivative(x_new)
    violations = np.count_nonzero(np.abs(xi_new) <= zone.kappa * np.abs(xi))
    assert violations == 0


def test_canonical_step(doubling_cos):
    image = canonical_step(doubling_cos, PhasePoint(0.5, 1.0), 1)
    # preimage 3/4, E' = 2, tau'(3/4) = 2 pi
    assert image.x == pytest.approx(0.75)
    assert image.xi == pytest.approx(2.0 + 2 * math.pi)


def test_phase_point_range():
    with pytest.raises(ValidationError):
        PhasePoint(1.0, 0.0)


def test_branch_tree_words(perturbed):
    start = PhasePoint(0.3, 0.5)
    tree = branch_tree(perturbed, start, 3)
    assert len(tree) == 8
    word, end = tree[5]
    assert word.word == (1, 0, 1)
    p = start
    for eps in word.word:
        p = canonical_step(perturbed, p, eps)
    assert end.x == pytest.approx(p.x, abs=1e-12)
    assert end.xi == pytest.approx(p.xi, abs=1e-10)


def test_branch_tree_cap(doubling_cos):
    with pytest.raises(EnumerationCapError):
        branch_tree(doubling_cos, PhasePoint(0.0, 0.0), 5, cap=16)


def test_zone_grid_has_zero_row(doubling_cos):
    zone = escape_radius(doubling_cos)
    x, xi = zone_grid(zone, (8, 5))
    assert list(x) == [i / 8 for i in range(8)]
    assert xi[2] == 0.0
    assert xi[0] == pytest.approx(-zone.R)


def test_sheared_zone():
    eta = gauge_from_coefficients(eta_sin=(0.3,))
    zone = CompactZone(1.0, 1.5).sheared(eta)
    # eta'(0) = 0.6 pi
    assert zone.contains(0.0, 0.6 * math.pi + 0.9)
    assert not zone.contains(0.0, -0.9)
    assert zone.half_height() == pytest.approx(1.0 + 0.6 * math.pi, rel=1e-6)
    with pytest.raises(ValidationError):
        zone.sheared(eta)


# Captivity

def test_flat_roof_keeps_every_branch(doubling_flat):
    zone = escape_radius(doubling_flat)
    table = captivity_table(doubling_flat, zone, 10, grid=SMALL_GRID)
    assert [row.count for row in table.rows] == [2 ** n for n in range(1, 11)]
    assert table.rows[-1].exponent == pytest.approx(math.log(2))


def test_doubling_cos_small_counts(doubling_cos):
    zone = escape_radius(doubling_cos)
    table = captivity_table(doubling_cos, zone, 6, grid=(32, 17))
    counts = table.counts
    assert counts[0] == 1
    assert counts[1] == 2
    assert counts[2] == 4
    assert all(counts[n] <= 2 ** n for n in counts)
    assert captivity_count(doubling_cos, zone, 4, grid=(32, 17)) == counts[4]


def test_captivity_cap(doubling_cos):
    zone = escape_radius(doubling_cos)
    with pytest.raises(EnumerationCapError):
        captivity_count(doubling_cos, zone, 5, grid=SMALL_GRID, cap=16)


def test_captivity_rejects_negative_depth(doubling_cos):
    with pytest.raises(ValidationError):
        captivity_count(doubling_cos, escape_radius(doubling_cos), -1)
    assert captivity_count(doubling_cos, escape_radius(doubling_cos), 0) == 1


@pytest.mark.slow
def test_captivity_at_default_grid(doubling_cos, doubling_flat):
    flat = captivity_table(doubling_flat, escape_radius(doubling_flat), 10)
    assert [row.count for row in flat.rows] == [2 ** n for n in range(1, 11)]
    table = captivity_table(doubling_cos, escape_radius(doubling_cos), 10)
    assert all(table.counts[n] < 2 ** n for n in range(3, 11))
    assert table.subadditivity_violations() == []


# Trapped set

def test_flat_roof_trapped_set_is_the_zero_section(doubling_flat):
    zone = escape_radius(doubling_flat)
    grid = trapped_set_estimate(doubling_flat, zone, 4, grid=(32, 9))
    assert np.all(grid.occupied[:, 4])
    assert np.count_nonzero(grid.occupied) == 32
    assert grid.measure == pytest.approx(32 * grid.cell_area)


def test_trapped_set_is_nested_in_depth(doubling_cos):
    zone = escape_radius(doubling_cos)
    shallow = trapped_set_estimate(doubling_cos, zone, 3, grid=(64, 33))
    deep = trapped_set_estimate(doubling_cos, zone, 6, grid=(64, 33))
    assert not np.any(deep.occupied & ~shallow.occupied)
    assert deep.measure <= shallow.measure
    assert deep.measure > 0


def test_trapped_membership_shape(doubling_cos):
    zone = escape_radius(doubling_cos)
    inside = trapped_membership(doubling_cos, zone, 3, np.zeros((2, 2)), np.zeros((2, 2)))
    assert inside.shape == (2, 2)
    assert inside.all()
    with pytest.raises(ValidationError):
        trapped_membership(doubling_cos, zone, 0, 0.0, 0.0)


def test_coboundary_trapped_set_is_sheared(doubling_cos):
    eta = gauge_from_coefficients(eta_sin=(0.3,))
    zone = escape_radius(doubling_cos)
    shifted = coboundary_system(doubling_cos, eta)
    transported = transport_occupancy(doubling_cos, zone, 4, eta, grid=(64, 33))
    direct = trapped_set_estimate(shifted, zone.sheared(eta), 4, grid=(64, 33))
    assert occupancy_overlap(transported, direct) >= 0.9


def test_overlap_needs_matching_grids(doubling_cos):
    zone = escape_radius(doubling_cos)
    a = trapped_set_estimate(doubling_cos, zone, 2, grid=(8, 5))
    b = trapped_set_estimate(doubling_cos, zone, 2, grid=(8, 7))
    with pytest.raises(ValidationError):
        occupancy_overlap(a, b)
    assert occupancy_overlap(a, a) == 1.0


# Escape function and Egorov bound

def test_escape_function_is_flat_on_zone(doubling_cos):
    zone = escape_radius(doubling_cos)
    values = escape_function(zone, -1.0, [0.0, zone.R / 2, -zone.R])
    np.testing.assert_allclose(values, values[0])
    assert escape_function(zone, -1.0, 3 * zone.R) < values[0]


def test_escape_function_decreases(perturbed):
    zone = escape_radius(perturbed)
    contraction = escape_contraction(zone, -2.0)
    assert 0 < contraction < 1
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = PhasePoint(float(rng.random()), float(rng.uniform(-4 * zone.R, 4 * zone.R)))
        eps = int(rng.integers(0, perturbed.k))
        ratio = escape_function_ratio(perturbed, zone, -2.0, p, eps)
        assert ratio <= 1.0 + 1e-12
        if abs(p.xi) > zone.R:
            assert ratio <= contraction + 1e-12


def test_escape_function_ratio_order_check(doubling_cos):
    with pytest.raises(ValidationError):
        escape_function_ratio(doubling_cos, escape_radius(doubling_cos), 1.0, PhasePoint(0.0, 0.0), 0)


@pytest.mark.parametrize("name", ["doubling_cos", "perturbed"])
def test_egorov_symbol_within_bound(request, name):
    system = request.getfixturevalue(name)
    zone = escape_radius(system)
    n = 3
    captive = captivity_count(system, zone, n - 1, grid=SMALL_GRID)
    bound = egorov_bound(system, zone, -1.0, n, captive)
    x, xi = zone_grid(zone, SMALL_GRID)
    for i in range(0, x.size, 3):
        for j in range(xi.size):
            symbol = egorov_symbol(system, zone, -1.0, PhasePoint(float(x[i]), float(xi[j])), n)
            assert symbol <= bound + 1e-12


@pytest.mark.slow
def test_weyl_count_against_trapped_measure(doubling_cos):
    nu = 100.0
    zone = escape_radius(doubling_cos)
    measure = trapped_set_estimate(doubling_cos, zone, 10, grid=(512, 257)).measure
    spec = spectrum_for(doubling_cos, nu, 192)
    assert count_above(spec, 0.3) <= nu / (2 * math.pi) * measure * 1.5


def test_trapped_measure_is_stable_when_the_zone_doubles(doubling_cos):
    zone = escape_radius(doubling_cos)
    wide = CompactZone(2 * zone.R, zone.kappa)
    # same xi spacing, so the wide lattice contains the narrow one
    narrow_grid = trapped_set_estimate(doubling_cos, zone, 10, grid=(128, 65))
    wide_grid = trapped_set_estimate(doubling_cos, wide, 10, grid=(128, 129))
    assert wide_grid.cell_area == pytest.approx(narrow_grid.cell_area, rel=1e-12)
    assert wide_grid.measure >= narrow_grid.measure
    assert wide_grid.measure <= 1.15 * narrow_grid.measure


# Regression values

def test_captivity_counts_regression(doubling_cos):
    table = captivity_table(doubling_cos, escape_radius(doubling_cos), 6, grid=(256, 129))
    assert [row.count for row in table.rows] == [2, 4, 6, 9, 12, 15]


@pytest.mark.slow
def test_trapped_measure_regression(doubling_cos):
    zone = escape_radius(doubling_cos)
    grid = trapped_set_estimate(doubling_cos, zone, 10, grid=(512, 257))
    assert np.count_nonzero(grid.occupied) == 24759
    assert grid.measure == pytest.approx(24759 * 2 * zone.R / 256 / 512, rel=1e-12)
