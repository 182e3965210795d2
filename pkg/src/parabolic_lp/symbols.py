"""Built-in frequency symbols.

Every factory returns a :class:`~parabolic_lp.grid.FrequencySymbol` whose
rule takes dual-lattice points ``xi`` and their ``rho*`` values.
"""

import functools

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import j0

from .grid import FrequencySymbol


def _psi_edge(u):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)


def smooth_step(u):
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``, built from ``exp(-1/u)``."""
    u = np.asarray(u, dtype=np.float64)
    a = _psi_edge(u)
    b = _psi_edge(1.0 - u)
    return a / (a + b)


def plateau(s, m, H):
    """Smooth ``theta >= 0`` equal to 1 on ``[m, H]`` and supported in ``[m/2, 2H]``."""
    s = np.asarray(s, dtype=np.float64)
    return smooth_step((s - 0.5 * m) / (0.5 * m)) * smooth_step((2.0 * H - s) / H)


def poisson_derivative():
    """Isotropic ``Q_hat(xi) = -2 pi |xi| exp(-2 pi |xi|)``."""

    def rule(xi, rs):
        r = np.sqrt(np.sum(xi * xi, axis=-1))
        return -2.0 * np.pi * r * np.exp(-2.0 * np.pi * r)

    return FrequencySymbol("poisson", rule, eps=1.0, cancellation=True)


def heat_derivative():
    """Anisotropic ``rho*(xi)**2 exp(-rho*(xi)**2)``."""

    def rule(xi, rs):
        return rs * rs * np.exp(-rs * rs)

    return FrequencySymbol("heat", rule, eps=None, cancellation=True)


def annulus_bump(a1=1.0, a2=2.0):
    """Smooth bump in ``log rho*`` supported in ``a1 <= rho* <= a2``, peak value 1."""
    if not 0 < a1 < a2:
        raise ValueError("need 0 < a1 < a2")
    la, width = np.log(a1), np.log(a2 / a1)

    def rule(xi, rs):
        with np.errstate(divide="ignore"):
            v = 2.0 * (np.log(np.where(rs > 0, rs, a1 * 1e-300)) - la) / width - 1.0
        inside = np.abs(v) < 1.0
        vv = np.where(inside, v, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - vv * vv)), 0.0)

    return FrequencySymbol("annulus", rule, eps=np.inf, annulus=(a1, a2), cancellation=True,
                           params={"a1": a1, "a2": a2})


def band_pass(m=1.0, H=2.0):
    """Equal to 1 on ``m <= rho* <= H``, supported in ``m/2 <= rho* <= 2H``."""

    def rule(xi, rs):
        return plateau(rs, m, H)

    return FrequencySymbol("band_pass", rule, eps=np.inf, annulus=(0.5 * m, 2.0 * H), cancellation=True,
                           params={"m": m, "H": H})


def constant(c=1.0):
    """Fails every admissibility probe; useful as a negative control."""

    def rule(xi, rs):
        return np.full(np.shape(rs), c, dtype=np.float64)

    return FrequencySymbol("constant", rule, eps=0.0, params={"c": c})


def derivative(sym, k):
    """Symbol of ``d/dx_k`` applied to the kernel: ``2 pi i xi_k sym(xi)``."""

    def rule(xi, rs):
        return 2j * np.pi * xi[..., k] * sym(xi, rs)

    return FrequencySymbol(f"d{k + 1}({sym.name})", rule, eps=None if sym.eps is None else sym.eps + 1,
                           annulus=sym.annulus, cancellation=True, params=dict(sym.params, k=k))


def gaussian_mollifier(sigma=0.3):
    """``sigma**-n exp(-pi |x|**2 / sigma**2)``; unit mass, tail beyond ``|x| = 1`` below 1e-10."""

    def rule(xi, rs):
        return np.exp(-np.pi * sigma * sigma * np.sum(xi * xi, axis=-1))

    return FrequencySymbol("gaussian", rule, params={"sigma": sigma})


def _radial_ft(n, k, r, w, prof):
    """Radial Fourier transform of ``prof(r)`` at radii ``k`` (Gauss nodes ``r``, weights ``w``)."""
    z = 2 * np.pi * k[:, None] * r[None, :]
    if n == 1:
        kern = 2.0 * np.cos(z)
    elif n == 2:
        kern = 2 * np.pi * j0(z) * r
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            kern = np.where(z > 0, 2.0 * np.sin(z) / np.where(k[:, None] > 0, k[:, None], 1.0) * r,
                            4 * np.pi * r * r)
    return kern @ (w * prof)


@functools.lru_cache(maxsize=4)
def _bump_table(n, kmax=128.0, step=0.01, nodes=800):
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w
    prof = np.exp(-1.0 / (1.0 - r * r))
    k = np.arange(0.0, kmax + step, step)
    vals = np.concatenate([_radial_ft(n, k[i:i + 1024], r, w, prof) for i in range(0, k.size, 1024)])
    vals /= vals[0]
    return CubicSpline(k, vals), kmax


def mollifier():
    """Compactly supported C-infinity radial bump in ``|x| <= 1`` with unit mass.

    Its transform is tabulated once per dimension from a Gauss-Legendre
    Hankel transform and set to zero beyond ``|xi| = 128`` (below 1e-15).
    """

    def rule(xi, rs):
        n = xi.shape[-1]
        spline, kmax = _bump_table(n)
        k = np.sqrt(np.sum(xi * xi, axis=-1))
        return np.where(k < kmax, spline(np.minimum(k, kmax)), 0.0)

    return FrequencySymbol("mollifier", rule, params={"support_radius": 1.0})


BUILTIN = {
    "poisson": poisson_derivative,
    "heat": heat_derivative,
    "annulus": annulus_bump,
    "band_pass": band_pass,
    "constant": constant,
    "mollifier": mollifier,
    "gaussian": gaussian_mollifier,
}


def make_symbol(name, **params):
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown symbol {name!r}; choose from {sorted(BUILTIN)}") from None
    return factory(**params)
