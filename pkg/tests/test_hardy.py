import math

import numpy as np
import pytest

from parabolic_lp import validate_matrix
from parabolic_lp.errors import DegenerateBall, NonPositiveExponent
from parabolic_lp.grid import GridFunction, PeriodicGrid, lattice_rho
from parabolic_lp.hardy import (
    Atom, atom_gbound_experiment, band_pass_majorant, default_s_grid, equivalence_experiment, g_norm,
    lattice_window, make_atom, moment_order, multi_indices, unit_ball_volume, validate_atom, wave_packet_family,
)
from parabolic_lp.maximal import geometric_grid
from parabolic_lp.partition import build_partition, find_interval_cover
from parabolic_lp.symbols import annulus_bump, heat_derivative, mollifier

GRID = PeriodicGrid(2, L=16.0, N=128)


@pytest.fixture(scope="module")
def heat_pou():
    g = validate_matrix([[1, 0], [0, 2]])
    sym = heat_derivative()
    return build_partition(sym, g, find_interval_cover(sym, g))


def test_unit_ball_volume():
    assert math.isclose(unit_ball_volume(2), math.pi)
    assert math.isclose(unit_ball_volume(3), 4 * math.pi / 3)
    assert math.isclose(unit_ball_volume(1), 2.0)


def test_norm_ball_volume_on_lattice(diag12):
    grid = PeriodicGrid(2, L=8.0, N=512)
    r = lattice_rho(grid, diag12, False)
    for radius in (1.0, 2.0):
        vol = grid.cell * np.count_nonzero(r < radius)
        assert vol == pytest.approx(radius**3 * math.pi, rel=5e-3)


@pytest.mark.parametrize("gamma, p, M", [(3, 1, 0), (3, 2 / 3, 1), (3, 0.5, 3), (2, 2 / 3, 1), (2, 0.5, 2)])
def test_moment_order(gamma, p, M):
    assert moment_order(gamma, p) == M


def test_multi_indices():
    assert sorted(multi_indices(2, 1)) == [(0, 0), (0, 1), (1, 0)]
    assert len(multi_indices(3, 2)) == 10
    assert multi_indices(2, 0) == [(0, 0)]


@pytest.mark.parametrize("p", [1.0, 2 / 3, 0.5])
def test_make_atom(group, p):
    a = make_atom(7, (np.array([0.5, -0.25]), 1.5), p, group, GRID)
    rep = a.report
    assert rep["passed"], rep["checks"]
    assert rep["max_moment_residual"] <= 1e-10
    assert rep["sup_ratio"] == pytest.approx(0.99, rel=1e-12)
    assert a.M == moment_order(group.gamma, p)
    assert len(rep["moments"]) == len(multi_indices(2, a.M))


def test_make_atom_is_deterministic(diag12):
    a = make_atom(3, (np.zeros(2), 1.0), 1.0, diag12, GRID)
    b = make_atom(3, (np.zeros(2), 1.0), 1.0, diag12, GRID)
    assert np.array_equal(a.samples.samples, b.samples.samples)


def test_make_atom_rejects(diag12):
    with pytest.raises(DegenerateBall):
        make_atom(0, (np.array([7.0, 0.0]), 1.0), 1.0, diag12, GRID)
    with pytest.raises(DegenerateBall):
        make_atom(0, (np.zeros(2), 0.05), 0.5, diag12, GRID)
    with pytest.raises(NonPositiveExponent):
        make_atom(0, (np.zeros(2), 1.0), 1.5, diag12, GRID)


def test_validate_atom_catches_violations(diag12):
    a = make_atom(1, (np.zeros(2), 1.5), 2 / 3, diag12, GRID)
    vals = a.samples.samples

    def variant(samples):
        return Atom(a.p, a.ball_center, a.ball_radius, a.M, GridFunction(GRID, samples), diag12)

    assert not validate_atom(variant(2 * vals))["checks"]["size"]
    moved = vals.copy()
    moved[vals != 0] += 1e-3
    assert not validate_atom(variant(moved))["checks"]["moments"]
    leak = vals.copy()
    leak[40, 40] = 1e-6
    assert not validate_atom(variant(leak))["checks"]["support"]


def test_shifted_atom_is_an_atom(rotation):
    a = make_atom(4, (np.zeros(2), 1.5), 2 / 3, rotation, GRID)
    b = a.shifted((5, -3))
    assert np.allclose(b.ball_center, [5 * GRID.spacing, -3 * GRID.spacing])
    assert validate_atom(b)["passed"]


def test_g_norm_translation_invariant(diag12, heat_pou):
    a = make_atom(2, (np.zeros(2), 2.0), 1.0, diag12, GRID)
    w = lattice_window(heat_pou.phi_hat, diag12, GRID, heat_pou.b)
    v0 = g_norm(a.samples, heat_pou.phi_hat, diag12, w, 1.0)
    v1 = g_norm(a.samples.shifted((9, -4)), heat_pou.phi_hat, diag12, w, 1.0)
    assert abs(v1 - v0) <= 1e-10 * v0


def test_atom_experiment(diag12, heat_pou):
    rep = atom_gbound_experiment(heat_pou.phi_hat, diag12, heat_pou, 1.0, 4, seed=1, grid=GRID)
    assert rep["count"] == 4 and all(r["atom_ok"] for r in rep["rows"])
    assert 0 < rep["min"] <= rep["max"] < math.inf
    assert rep["translation_delta"] <= 1e-10
    assert rep["dilation_delta"] < 0.01


def test_atom_experiment_without_lattice_dilation(rotation):
    sym = heat_derivative()
    pou = build_partition(sym, rotation, find_interval_cover(sym, rotation))
    rep = atom_gbound_experiment(sym, rotation, pou, 1.0, 2, seed=0, grid=GRID)
    assert rep["dilation_delta"] is None
    with pytest.raises(ValueError):
        atom_gbound_experiment(sym, rotation, pou, 1.0, 0, seed=0, grid=GRID)


def test_wave_packet_family(diag12):
    fam = wave_packet_family(diag12, count=5, seed=3)
    again = wave_packet_family(diag12, count=5, seed=3)
    assert len(fam) == 5
    for m, n in zip(fam, again):
        assert np.array_equal(m(GRID).samples, n(GRID).samples)
        centre = np.array(m.spec["centre"])
        assert 1 <= float(diag12.rho(centre, dual=True)) <= 2
        f = m(GRID)
        F = np.abs(np.fft.fftn(f.samples))
        far = np.linalg.norm(GRID.frequencies() - centre, axis=-1) > 0.5
        far &= np.linalg.norm(GRID.frequencies() + centre, axis=-1) > 0.5
        assert F[far].max() < 1e-12 * F.max()


def test_default_s_grid():
    from parabolic_lp.lp_transform import ScaleWindow
    s = default_s_grid(ScaleWindow(0.5, -2, 3), K=2, extra=4)
    assert math.isclose(s[0], 0.5**7) and math.isclose(s[-1], 4.0)


def test_small_equivalence_experiment(diag12, heat_pou):
    fam = wave_packet_family(diag12, count=3, seed=0)
    rep = equivalence_experiment(heat_pou.phi_hat, diag12, heat_pou, 1.0, fam, resolutions=(64, 128), L=16.0)
    assert 0 < rep["c1"] <= rep["c2"] < math.inf
    assert rep["max_drift"] < 0.05
    assert len(rep["rows"]) == 6 and rep["excluded"] == []
    with pytest.raises(ValueError):
        equivalence_experiment(heat_pou.phi_hat, diag12, heat_pou, 1.0, [])


def test_zero_member_is_excluded(diag12, heat_pou):
    fam = wave_packet_family(diag12, count=2, seed=0)

    def zero(grid):
        return GridFunction(grid, np.zeros(grid.shape))

    rep = equivalence_experiment(heat_pou.phi_hat, diag12, heat_pou, 1.0, fam + [zero], resolutions=(64,), L=16.0)
    assert rep["excluded"] == [2]


def test_band_pass_majorant(diag12):
    f = wave_packet_family(diag12, count=1, seed=5)[0](GRID)
    C = band_pass_majorant(f, annulus_bump(1.0, 2.0), diag12, 1.0, mollifier(), geometric_grid(0.05, 2.0))
    assert 0 < C < math.inf


@pytest.mark.slow
def test_atom_norms_stable_under_resolution_doubling(diag12, heat_pou):
    maxima = []
    for N in (128, 256):
        grid = PeriodicGrid(2, L=16.0, N=N)
        rep = atom_gbound_experiment(heat_pou.phi_hat, diag12, heat_pou, 1.0, 50, seed=2, grid=grid,
                                     radii=(1.5, 2.0))
        maxima.append(rep["max"])
    assert all(math.isfinite(m) for m in maxima)
    assert abs(maxima[1] / maxima[0] - 1) <= 0.05


def test_ratio_covariant_under_lattice_dilation(diag12):
    from parabolic_lp.hardy import _ratio
    from parabolic_lp.lp_transform import ScaleWindow, compose_lattice, lattice_dilation_matrix
    grid = PeriodicGrid(2, L=16.0, N=256)
    sym = heat_derivative()
    # low band so that A_2* of every frequency stays below Nyquist
    f = wave_packet_family(diag12, count=1, seed=1, band=(0.5, 1.0))[0](grid)
    fd = compose_lattice(f, lattice_dilation_matrix(diag12, 2.0))
    w = lattice_window(sym, diag12, grid, 0.5)
    s = geometric_grid(2.0**-8, 2.0, 0.5, 2)
    _, _, r = _ratio(f, sym, diag12, 1.0, w, mollifier(), s)
    _, _, rd = _ratio(fd, sym, diag12, 1.0, w.shifted(1), mollifier(), s / 2)
    assert abs(rd / r - 1) <= 0.01
