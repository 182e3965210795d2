import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import j0

from parabolic_lp.grid import PeriodicGrid, lattice_rho, sample_dilated_symbol
from parabolic_lp.symbols import (
    annulus_bump, band_pass, constant, derivative, gaussian_mollifier, heat_derivative, make_symbol, mollifier,
    plateau, poisson_derivative, smooth_step,
)


def test_poisson_value():
    Q = poisson_derivative()
    got = Q(np.array([[1.0, 0.0]]), np.array([1.0]))[0]
    assert abs(got - (-2 * math.pi * math.exp(-2 * math.pi))) < 1e-15
    assert Q(np.zeros((1, 2)), np.zeros(1))[0] == 0


def test_heat_is_radial_in_rho_star():
    H = heat_derivative()
    xi = np.array([[0.3, 0.1], [5.0, 1.0]])
    rs = np.array([1.5, 0.2])
    assert np.allclose(H(xi, rs), rs**2 * np.exp(-rs**2))


def test_smooth_step_and_plateau():
    u = np.linspace(-1, 2, 301)
    s = smooth_step(u)
    assert np.all(s[u <= 0] == 0) and np.all(s[u >= 1] == 1)
    assert np.all(np.diff(s) >= 0)
    assert abs(smooth_step(0.5) - 0.5) < 1e-15
    v = np.linspace(0.01, 10, 2000)
    th = plateau(v, 1.0, 2.0)
    assert np.all(th[(v >= 1) & (v <= 2)] == 1)
    assert np.all(th[(v <= 0.5) | (v >= 4)] == 0)


def test_annulus_support_and_peak():
    A = annulus_bump(1.0, 2.0)
    rs = np.linspace(0.0, 3.0, 3001)
    vals = A(np.zeros((rs.size, 2)), rs).real
    assert np.all(vals[(rs <= 1) | (rs >= 2)] == 0)
    assert np.all(vals[(rs > 1) & (rs < 2)] > 0)
    assert abs(A(np.zeros((1, 2)), np.array([math.sqrt(2)]))[0] - 1) < 1e-15
    with pytest.raises(ValueError):
        annulus_bump(2.0, 1.0)


def test_band_pass_equals_one_on_band():
    B = band_pass(1.0, 2.0)
    rs = np.linspace(0.0, 5.0, 501)
    vals = B(np.zeros((rs.size, 1)), rs).real
    assert np.all(vals[(rs >= 1) & (rs <= 2)] == 1)
    assert np.all(vals[(rs <= 0.5) | (rs >= 4)] == 0)
    assert B.annulus == (0.5, 4.0)


def test_derivative_symbol():
    D = derivative(heat_derivative(), 1)
    xi = np.array([[0.2, 0.7]])
    rs = np.array([0.9])
    assert np.allclose(D(xi, rs), 2j * math.pi * 0.7 * heat_derivative()(xi, rs))
    assert D.cancellation


def test_constant_symbol():
    assert np.all(constant(3.0)(np.zeros((4, 2)), np.zeros(4)) == 3)


def _hankel_oracle(k):
    """2-d transform of the unit-mass bump ``exp(-1/(1-r^2))`` by adaptive quadrature."""
    prof = lambda r: math.exp(-1 / (1 - r * r)) if r < 1 else 0.0
    mass = integrate.quad(lambda r: 2 * math.pi * r * prof(r), 0, 1, epsabs=1e-15)[0]
    val = integrate.quad(lambda r: 2 * math.pi * r * j0(2 * math.pi * k * r) * prof(r), 0, 1,
                         epsabs=1e-15, limit=200)[0]
    return val / mass


def test_mollifier_table_against_quadrature():
    Phi = mollifier()
    ks = np.array([0.0, 0.13, 0.5, 1.0, 2.37, 5.0])
    got = Phi(np.stack([ks, np.zeros_like(ks)], axis=1), ks).real
    ref = np.array([_hankel_oracle(k) for k in ks])
    assert np.abs(got - ref).max() < 1e-9


def test_mollifier_unit_mass():
    Phi = mollifier()
    assert Phi(np.zeros((1, 2)), np.zeros(1))[0] == pytest.approx(1.0, abs=1e-14)
    assert Phi(np.array([[200.0, 0.0]]), np.array([200.0]))[0] == 0


def test_gaussian_mollifier_mass():
    G = gaussian_mollifier(0.3)
    assert G(np.zeros((1, 3)), np.zeros(1))[0] == 1.0
    xi = np.array([[1.0, 0.0]])
    assert abs(G(xi, np.ones(1))[0] - math.exp(-math.pi * 0.09)) < 1e-15


def test_builtin_symbols_are_real_and_cancel(diag12):
    g = PeriodicGrid(2, L=8.0, N=32)
    rs = lattice_rho(g, diag12, True)
    for name in ("poisson", "heat", "annulus", "band_pass"):
        sym = make_symbol(name)
        vals = sym(g.frequencies(), rs)
        assert np.all(vals.imag == 0)
        assert vals[0, 0] == 0, name
