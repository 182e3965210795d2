"""Littlewood-Paley analysis and synthesis over a window of dyadic-type scales."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DegenerateOrbit, ProvenanceMismatch, SideMismatch
from .grid import (
    PHYSICAL, FrequencySymbol, GridFunction, evaluate_dilated, lattice_rho, lp_norm, sample_dilated_symbol,
)
from .partition import orbit_values, scale_range, sphere_points

log = logging.getLogger(__name__)

_threads = 1


def set_threads(n):
    """Worker threads for per-scale FFTs; results do not depend on the count."""
    global _threads
    _threads = max(1, int(n))


def _map(fn, items):
    if _threads == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(_threads) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class ScaleWindow:
    b: float
    j_min: int
    j_max: int
    K: int = 1

    def __post_init__(self):
        if not 0 < self.b < 1:
            raise ValueError(f"base must lie in (0, 1), got {self.b}")
        if self.j_min > self.j_max:
            raise ValueError("j_min must not exceed j_max")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @property
    def weight(self):
        """Quadrature weight ``ln(1/b)/K`` of each node for the measure dt/t."""
        return math.log(1.0 / self.b) / self.K

    def nodes(self):
        """``(j, k, t)`` with ``t = b**(j + k/K)``."""
        return [(j, k, self.b ** (j + k / self.K)) for j in range(self.j_min, self.j_max + 1) for k in range(self.K)]

    def scales(self):
        return np.array([t for _, _, t in self.nodes()])

    def shifted(self, dj):
        return ScaleWindow(self.b, self.j_min + dj, self.j_max + dj, self.K)

    def as_dict(self):
        return {"b": self.b, "j_min": self.j_min, "j_max": self.j_max, "K": self.K}


def effective_support(sym, group, tol=1e-17):
    """``rho*`` range where ``|phi_hat|**2`` exceeds ``tol`` times its peak (exact for annulus symbols)."""
    if sym.annulus is not None:
        return tuple(sym.annulus)
    ts = 2.0 ** (np.arange(-60 * 8, 60 * 8 + 1) / 8)
    vals = orbit_values(sym, group, sphere_points(group.n, 64 if group.n == 2 else 256), ts).max(axis=0)
    keep = np.flatnonzero(vals >= tol * vals.max())
    return float(ts[max(keep[0] - 1, 0)]), float(ts[min(keep[-1] + 1, ts.size - 1)])


def window_for(grid, group, b, support, K=1):
    """Smallest window in which every lattice frequency sees all scales with ``b^j rho* in support``."""
    rs = lattice_rho(grid, group, True)
    rs = rs[(rs > 0) & ~grid.nyquist_mask()]
    jr = scale_range(rs, support[0], support[1], b)
    return ScaleWindow(b, jr.start, jr.stop - 1, K)


@dataclass(frozen=True, eq=False)
class LPCoefficients:
    window: ScaleWindow
    nodes: tuple
    coeffs: np.ndarray  # (len(nodes),) + grid.shape, physical side
    grid: object
    provenance: dict = field(default_factory=dict)

    def scale(self, i):
        return GridFunction(self.grid, self.coeffs[i], PHYSICAL)


def _freq(f):
    if f.side != PHYSICAL:
        raise SideMismatch("expected physical-side input")
    return f.frequency().samples


def analyze(f, sym, group, window):
    """``c_t = f * phi_t`` for every node ``t`` of the window, computed frequency-side."""
    F = _freq(f)
    nodes = tuple(window.nodes())

    def one(node):
        S = sample_dilated_symbol(sym, group, node[2], f.grid).samples
        return np.fft.ifftn(F * S) / f.grid.cell

    coeffs = np.stack(_map(one, nodes)) if nodes else np.zeros((0,) + f.grid.shape, complex)
    return LPCoefficients(window, nodes, coeffs, f.grid,
                          {"symbol": sym.name, "b": window.b, "grid": f.grid.key})


def g_discrete(coeffs):
    """``(sum_t |c_t|**2)**(1/2)`` over the stored scales."""
    if not len(coeffs.nodes):
        raise ValueError("empty scale window")
    return GridFunction(coeffs.grid, np.sqrt(np.sum(np.abs(coeffs.coeffs) ** 2, axis=0)), PHYSICAL)


def g_q(f, sym, group, window, q=2.0):
    """``(ln(1/b)/K * sum_nodes |f * phi_t|**q)**(1/q)``, streamed over the nodes."""
    F = _freq(f)
    nodes = window.nodes()

    def one(node):
        S = sample_dilated_symbol(sym, group, node[2], f.grid).samples
        return np.abs(np.fft.ifftn(F * S) / f.grid.cell) ** q

    acc = np.zeros(f.grid.shape)
    for part in _map(one, nodes):  # fixed summation order
        acc += part
    return GridFunction(f.grid, (window.weight * acc) ** (1.0 / q), PHYSICAL)


def g_continuous(f, sym, group, window):
    """Quadrature of ``(int |f * phi_t|**2 dt/t)**(1/2)`` on the log-uniform nodes."""
    return g_q(f, sym, group, window, 2.0)


# -- Calderon normalisation ------------------------------------------------------

def _node_exponents(rs, support, b, K):
    """Integer ``m`` with ``b**(m/K) * rs`` inside ``support`` for some entry."""
    pos = rs[rs > 0]
    if pos.size == 0:
        return range(0)
    q = math.log(1.0 / b) / K
    lo, hi = support
    return range(math.floor(math.log(pos.min() / hi) / q), math.ceil(math.log(pos.max() / lo) / q) + 1)


def calderon_integral(sym, group, xi, rs, b, K=1, discrete=False):
    """Node-sum quadrature of ``int_0^inf |psi_hat(A_t* xi)|**2 dt/t`` over all nodes ``b**(m/K)``.

    ``discrete=True`` gives the unweighted frame sum ``sum_j |psi_hat(A_{b^j}* xi)|**2``
    (``K`` is then ignored).
    """
    if sym.annulus is None:
        raise ValueError("Calderon normalisation needs an annulus-supported symbol")
    if discrete:
        K = 1
    xi = np.asarray(xi, dtype=np.float64)
    rs = np.asarray(rs, dtype=np.float64)
    a1, a2 = sym.annulus
    out = np.zeros(rs.shape)
    for m in _node_exponents(rs, (a1, a2), b, K):
        t = b ** (m / K)
        live = (t * rs >= a1) & (t * rs <= a2)
        if live.any():
            out[live] += np.abs(evaluate_dilated(sym, group, t, xi[live], rs[live])) ** 2
    return out if discrete else out * (math.log(1.0 / b) / K)


def calderon_integral_exact(sym, group, xi):
    """Adaptive quadrature of the same integral in ``u = log t`` (independent oracle)."""
    xi = np.asarray(xi, dtype=np.float64)
    rs = float(group.rho(xi, dual=True))
    a1, a2 = sym.annulus
    lo, hi = math.log(a1 / rs), math.log(a2 / rs)

    def integrand(u):
        t = math.exp(u)
        pt = group.apply(t, xi[None, :], adjoint=True)
        return float(np.abs(sym(pt, np.array([t * rs])))[0] ** 2)

    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def unit_calderon(sym, group, window, discrete=False):
    """Rescale ``sym`` so its Calderon integral (node quadrature of ``window``) is 1.

    The normaliser is evaluated on every point where the result is used, so
    the output satisfies the condition exactly wherever the symbol is nonzero.
    """
    b, K = window.b, window.K

    def rule(xi, rs):
        vals = sym(xi, rs)
        out = np.zeros(rs.shape, dtype=np.complex128)
        live = vals != 0
        if live.any():
            I = calderon_integral(sym, group, xi[live], rs[live], b, K, discrete)
            if np.any(I < 1e-14):
                raise DegenerateOrbit(f"Calderon integral {I.min():.3g} below 1e-14")
            out[live] = vals[live] / np.sqrt(I)
        return out

    tag = "discrete" if discrete else f"K={K}"
    return FrequencySymbol(f"unit[{sym.name},{tag}]", rule, eps=sym.eps, annulus=sym.annulus,
                           cancellation=sym.cancellation, params=dict(sym.params, b=b, K=K, discrete=discrete))


# -- synthesis ------------------------------------------------------------------

def synthesize(coeffs, pou, group):
    """``sum_j c_j * eta_{b^j}`` over the integer scales of the coefficient window."""
    prov = coeffs.provenance
    if prov.get("symbol") != pou.phi_hat.name or not math.isclose(prov.get("b", -1), pou.b, rel_tol=1e-14):
        raise ProvenanceMismatch(f"coefficients {prov} do not match partition ({pou.phi_hat.name}, b={pou.b})")
    grid = coeffs.grid
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for i, (j, k, t) in enumerate(coeffs.nodes):
        if k:
            continue
        E = sample_dilated_symbol(pou.eta_hat, group, t, grid).samples
        acc += np.fft.fftn(coeffs.coeffs[i]) * grid.cell * E
    return GridFunction(grid, np.fft.ifftn(acc) / grid.cell, PHYSICAL)


def eps_kernel(psi, group, eps, b, K, grid):
    """Lattice samples of ``int_eps^{1/eps} |psi_hat(A_t* xi)|**2 dt/t`` on the nodes ``b**(m/K)``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    xi = grid.frequencies()
    rs = lattice_rho(grid, group, True)
    q = math.log(1.0 / b) / K
    span = math.log(1.0 / eps) / q
    m_lo, m_hi = math.floor(-span), math.ceil(span)
    acc = np.zeros(grid.shape)
    a1, a2 = psi.annulus if psi.annulus else (0.0, math.inf)
    for m in range(m_lo, m_hi + 1):
        t = b ** (m / K)
        if not eps < t < 1.0 / eps:
            continue
        live = (t * rs >= a1) & (t * rs <= a2)
        if live.any():
            acc[live] += np.abs(evaluate_dilated(psi, group, t, xi[live], rs[live])) ** 2
    acc *= q
    acc[grid.nyquist_mask()] = 0.0
    return acc


def reproduce_eps(f, psi, group, eps, window):
    """Filter ``f`` by the truncated reproducing kernel ``Psi^(eps)``."""
    F = _freq(f)
    kern = eps_kernel(psi, group, eps, window.b, window.K, f.grid)
    out = GridFunction(f.grid, np.fft.ifftn(F * kern) / f.grid.cell, PHYSICAL)
    out.meta["kernel"] = kern
    return out


# -- covariance helpers and weighted comparisons ---------------------------------------

def lattice_dilation_matrix(group, s, tol=1e-12):
    """Integer matrix of ``A_s`` when it maps the lattice into itself."""
    A = group.dilate(s)
    M = np.rint(A)
    if np.abs(A - M).max() > tol:
        raise ValueError(f"A_{s} is not an integer matrix")
    return M.astype(np.int64)


def compose_lattice(f, M):
    """Samples of ``x -> f(M x)`` for an integer matrix ``M`` (exact on the torus)."""
    grid = f.grid
    off = grid.offsets()
    idx = np.mod(off @ M.T, grid.N)
    vals = f.physical().samples[tuple(idx[..., a] for a in range(grid.n))]
    return GridFunction(grid, vals, PHYSICAL)


def weighted_g_ratio(family, psi, phi, group, window, p=1.0, q=2.0, weight=None):
    """``||G_psi f||_{p,w} / ||G_phi f||_{p,w}`` per family member (empirical constant only)."""
    ratios = []
    for f in family:
        num = lp_norm(g_q(f, psi, group, window, q), p, weight)
        den = lp_norm(g_q(f, phi, group, window, q), p, weight)
        ratios.append(num / den if den > 0 else math.inf)
    return np.array(ratios)


def band_limited_noise(grid, group, lo, hi, seed):
    """Real random function whose transform lives on ``lo <= rho*(xi) <= hi`` (Nyquist row excluded)."""
    rng = np.random.default_rng(seed)
    rs = lattice_rho(grid, group, True)
    band = (rs >= lo) & (rs <= hi) & ~grid.nyquist_mask()
    F = np.fft.fftn(rng.standard_normal(grid.shape)) * band
    return GridFunction(grid, np.fft.ifftn(F).real, PHYSICAL)
