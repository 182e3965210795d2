"""Maximal operators on the torus lattice, Muckenhoupt constants and H^p quasi-norms.

Balls are taken with respect to the homogeneous norm ``rho`` of the group,
restricted to the lattice offsets that represent the torus, so every
operator here is an exact finite computation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import EmptyRadii, MassError, NonAdmissibleExponent, NonPositiveExponent
from .grid import PHYSICAL, GridFunction, lattice_rho, lp_norm, sample_dilated_symbol

log = logging.getLogger(__name__)

_offset_cache = {}


def sorted_offsets(grid, group):
    """Lattice offsets ``(k, n)`` and their ``rho(k h)``, sorted by ``rho`` (stable)."""
    key = (grid.key, group.key)
    hit = _offset_cache.get(key)
    if hit is None:
        offs = grid.offsets().reshape(-1, grid.n)
        r = lattice_rho(grid, group, False).reshape(-1)
        order = np.argsort(r, kind="stable")
        hit = (offs[order], r[order])
        if len(_offset_cache) > 16:
            _offset_cache.clear()
        _offset_cache[key] = hit
    return hit


def geometric_grid(lo, hi, b=0.5, K=1):
    """``lo * (1/b)**(k/K)`` for ``k = 0, 1, ...`` up to ``hi`` (inclusive within rounding)."""
    if not 0 < lo <= hi:
        raise ValueError("need 0 < lo <= hi")
    step = math.log(1.0 / b) / K
    count = int(math.floor(math.log(hi / lo) / step + 1e-9)) + 1
    return lo * np.exp(step * np.arange(count))


# -- Peetre --------------------------------------------------------------------

def peetre_max(F, group, N, R):
    """``sup_y |F(x - y)| / (1 + R rho(y))**N`` over all torus offsets ``y``."""
    if not N > 0 or not R > 0:
        raise NonPositiveExponent("N and R must be positive")
    grid = F.grid
    offs, r = sorted_offsets(grid, group)
    wts = (1.0 + R * r) ** (-float(N))
    shell = np.any(np.abs(offs) >= grid.N // 2 - 1, axis=-1)
    tail = float(wts[shell].max())
    if tail > 1e-12:
        log.debug("peetre weight at the box edge is %.3g (sup is over the torus)", tail)
    vals = np.abs(F.physical().samples)
    out = GridFunction(grid, _backend.peetre(vals, offs, wts), PHYSICAL)
    out.meta["edge_weight"] = tail
    return out


# -- Hardy-Littlewood ------------------------------------------------------------

def _ball_bounds(r_sorted, radii):
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    # count of offsets with rho < r; the centre (rho = 0) is always inside
    return np.maximum(np.searchsorted(r_sorted, radii, side="left"), 1), radii


DIRECT_WORK_LIMIT = 5e7


def ball_averages(f, group, radii, method="auto"):
    """Centred lattice averages of ``f`` over ``{rho(x - y) < r}`` for each radius, shape ``(R,) + grid.shape``.

    ``method="direct"`` sums the ball offsets in ``rho`` order (exact up to
    that summation order); ``"fft"`` convolves with the ball indicator
    (rounding ~1e-15 relative to the largest value). ``"auto"`` picks the
    direct path unless it would exceed ``DIRECT_WORK_LIMIT`` additions.
    """
    if radii is None or len(radii) == 0:
        raise EmptyRadii("radii must be nonempty")
    grid = f.grid
    offs, r = sorted_offsets(grid, group)
    bounds, radii = _ball_bounds(r, radii)
    vals = np.asarray(f.samples, dtype=np.float64)
    if method == "auto":
        method = "direct" if bounds[-1] * vals.size <= DIRECT_WORK_LIMIT else "fft"
    if method == "direct":
        return _backend.ball_averages(vals, offs, bounds), radii
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    rl = lattice_rho(grid, group, False)
    V = np.fft.fftn(vals)
    out = np.empty((len(radii),) + grid.shape)
    for i, (rad, cnt) in enumerate(zip(radii, bounds)):
        ind = (rl < rad).astype(np.float64)
        ind.flat[0] = 1.0
        out[i] = np.fft.ifftn(V * np.fft.fftn(ind)).real / cnt
    return out, radii


def hl_max(f, group, radii):
    """Centred maximal function ``max_r |B_r|^-1 sum_{B_r(x)} |f|`` over the given radii.

    The uncentred operator is at most ``2**gamma`` times larger, because a
    ball of radius ``r`` containing ``x`` sits inside the centred ball of
    radius ``2r`` (up to the quasi-triangle constant, which is 1 here).
    """
    vals = GridFunction(f.grid, np.abs(f.physical().samples), PHYSICAL)
    avgs, _ = ball_averages(vals, group, radii)
    return GridFunction(f.grid, avgs.max(axis=0), PHYSICAL)


def default_radii(grid, b=0.5, K=2):
    """Geometric radii from one lattice spacing to a quarter of the box."""
    return geometric_grid(grid.spacing, grid.L / 4, b, K)


# -- grand maximal function -------------------------------------------------------

def check_mass(Phi, n):
    mass = Phi(np.zeros((1, n)), np.zeros(1))[0]
    if abs(mass - 1.0) > 1e-8:
        raise MassError(f"Phi_hat(0) = {mass:.12g}; the mollifier must have unit mass")


def fitting_scales(Phi, group, grid, s_grid):
    """Scales whose dilated support ``A_s {|x| <= radius}`` stays inside the box."""
    radius = float(Phi.params.get("support_radius", 1.0))
    s_grid = np.asarray(s_grid, dtype=np.float64)
    norms = np.linalg.norm(group.dilate_many(s_grid), ord=2, axis=(-2, -1))
    keep = norms * radius <= grid.L / 2
    if not keep.all():
        log.info("grand maximal: dropping %d scales whose kernel support exceeds the box", int((~keep).sum()))
    return s_grid[keep]


def grand_max(f, Phi, group, s_grid):
    """``max_s |Phi_s * f|`` over the scales of ``s_grid`` that fit in the box."""
    check_mass(Phi, group.n)
    scales = fitting_scales(Phi, group, f.grid, s_grid)
    if scales.size == 0:
        raise EmptyRadii("no scale in s_grid fits inside the box")
    F = f.frequency().samples
    best = np.zeros(f.grid.shape)
    for s in scales:
        S = sample_dilated_symbol(Phi, group, s, f.grid).samples
        np.maximum(best, np.abs(np.fft.ifftn(F * S) / f.grid.cell), out=best)
    out = GridFunction(f.grid, best, PHYSICAL)
    out.meta["scales"] = scales
    return out


def hp_quasinorm(f, Phi, group, p, s_grid):
    if not 0 < p <= 1:
        raise NonPositiveExponent(f"p must lie in (0, 1], got {p}")
    return lp_norm(grand_max(f, Phi, group, s_grid), p)


def refinement_delta(f, Phi, group, p, s_grid):
    """Relative change of the H^p quasi-norm when geometric midpoints are added to ``s_grid``.

    A finite scale set under-estimates the supremum over all ``s > 0``; this
    measures by how much one refinement step still moves the answer.
    """
    s = np.sort(np.asarray(s_grid, dtype=np.float64))
    finer = np.sort(np.concatenate([s, np.sqrt(s[1:] * s[:-1])]))
    coarse = hp_quasinorm(f, Phi, group, p, s)
    fine = hp_quasinorm(f, Phi, group, p, finer)
    return (fine - coarse) / fine if fine > 0 else 0.0


# -- weights -------------------------------------------------------------------

@dataclass
class Weight:
    samples: np.ndarray
    p: float
    constant: Optional[float] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not np.all(self.samples > 0):
            raise ValueError("weights must be strictly positive")


def power_weight(grid, group, a, reg=1e-3):
    """``(reg + rho(x))**a`` on the torus lattice; finite at the origin."""
    return (reg + lattice_rho(grid, group, False)) ** a


def ap_constant(w, p, group, grid, radii=None):
    """Largest ``(avg_B w)(avg_B w^(-1/(p-1)))**(p-1)`` over centred lattice balls.

    The family is finite, so this is a lower bound for the A_p constant.
    """
    if not p > 1:
        raise NonAdmissibleExponent(f"A_p needs p > 1, got {p}")
    samples = w.samples if isinstance(w, Weight) else np.asarray(w, dtype=np.float64)
    radii = default_radii(grid) if radii is None else radii
    a, _ = ball_averages(GridFunction(grid, samples), group, radii)
    d, _ = ball_averages(GridFunction(grid, samples ** (-1.0 / (p - 1))), group, radii)
    value = float(np.max(a * d ** (p - 1)))
    if isinstance(w, Weight):
        w.constant = value
    return value


# -- statement-level diagnostics --------------------------------------------------------

def spectral_gradient_norm(F):
    """``|grad F|`` by spectral differentiation."""
    grid = F.grid
    Fh = F.frequency().samples
    xi = grid.frequencies()
    nyq = grid.nyquist_mask()
    sq = np.zeros(grid.shape)
    for k in range(grid.n):
        D = np.where(nyq, 0.0, 2j * np.pi * xi[..., k])
        sq += np.abs(np.fft.ifftn(Fh * D) / grid.cell) ** 2
    return GridFunction(grid, np.sqrt(sq), PHYSICAL)


def peetre_control_ratio(F, group, r=1.0, deltas=(1.0, 0.5, 0.25), radii=None):
    """Largest ``F**_{N,1} / (delta^-N M(|F|^r)^(1/r) + delta |grad F|**_{N,1})`` with ``N = gamma/r``."""
    N = group.gamma / r
    radii = default_radii(F.grid) if radii is None else radii
    lhs = peetre_max(F, group, N, 1.0).samples
    mr = hl_max(GridFunction(F.grid, np.abs(F.physical().samples) ** r), group, radii).samples ** (1.0 / r)
    grad = peetre_max(spectral_gradient_norm(F), group, N, 1.0).samples
    worst = {}
    for d in deltas:
        rhs = d ** (-N) * mr + d * grad
        worst[float(d)] = float(np.max(lhs / np.maximum(rhs, 1e-300)))
    return {"N": N, "r": r, "ratio_by_delta": worst, "bound": max(worst.values())}


def scale_maximal_constant(f, sym, group, window, r=1.0, q=2.0, radii=None):
    """Fitted constant between the t-integrals of ``(F_t**)^q`` and ``M(|F_t|^r)^(q/r)``.

    ``F_t = f * phi_t`` and ``F_t**`` uses ``N = gamma/r``, ``R = 1/t``.
    Returns the pointwise sup of the ratio and the ratio of the integrals.
    """
    N = group.gamma / r
    grid = f.grid
    radii = default_radii(grid) if radii is None else radii
    Fh = f.frequency().samples
    lhs = np.zeros(grid.shape)
    rhs = np.zeros(grid.shape)
    for _, _, t in window.nodes():
        S = sample_dilated_symbol(sym, group, t, grid).samples
        Ft = GridFunction(grid, np.fft.ifftn(Fh * S) / grid.cell, PHYSICAL)
        lhs += peetre_max(Ft, group, N, 1.0 / t).samples ** q
        rhs += hl_max(GridFunction(grid, np.abs(Ft.samples) ** r), group, radii).samples ** (q / r)
    live = rhs > 1e-300 * max(rhs.max(), 1e-300)
    return {
        "N": N, "r": r, "q": q,
        "pointwise": float(np.max(lhs[live] / rhs[live])) if live.any() else math.nan,
        "integrated": float(lhs.sum() / rhs.sum()) if rhs.sum() > 0 else math.nan,
    }
