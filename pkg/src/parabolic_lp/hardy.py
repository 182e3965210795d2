"""(p, infinity) atoms and the empirical g-function / H^p equivalence experiments."""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DegenerateBall, NonPositiveExponent, ZeroQuasinorm
from .grid import PHYSICAL, GridFunction, PeriodicGrid, lattice_rho, lp_norm, sample_dilated_symbol
from .lp_transform import compose_lattice, effective_support, lattice_dilation_matrix, window_for
from .maximal import check_mass, fitting_scales, geometric_grid, grand_max, peetre_max
from .symbols import band_pass, mollifier

log = logging.getLogger(__name__)


def unit_ball_volume(n):
    """``|{rho < 1}|``: the norm ball coincides with the Euclidean unit ball."""
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


def moment_order(gamma, p):
    return int(math.floor(gamma * (1.0 / p - 1.0) + 1e-12))


def multi_indices(n, M):
    return [a for k in range(M + 1) for a in itertools.product(range(k + 1), repeat=n) if sum(a) == k]


@dataclass(eq=False)
class Atom:
    p: float
    ball_center: np.ndarray
    ball_radius: float
    M: int
    samples: GridFunction
    group: object = field(repr=False, default=None)
    report: dict = field(default_factory=dict)

    @property
    def ball_volume(self):
        return self.ball_radius ** self.group.gamma * unit_ball_volume(self.group.n)

    @property
    def sup_bound(self):
        return self.ball_volume ** (-1.0 / self.p)

    def shifted(self, shift):
        """Lattice translate by ``shift`` grid steps (still an atom for the moved ball)."""
        grid = self.samples.grid
        c = self.ball_center + np.asarray(shift) * grid.spacing
        return Atom(self.p, c, self.ball_radius, self.M, self.samples.shifted(shift), self.group)


def _centered(grid, center):
    """Coordinates ``x - center`` wrapped to the torus fundamental domain."""
    d = grid.points() - center
    return d - grid.L * np.round(d / grid.L)


def _ball_rho(grid, group, center, d):
    """``rho(x - center)``; lattice centres reuse the cached lattice norm."""
    k = np.asarray(center) / grid.spacing
    if np.allclose(k, np.rint(k), rtol=0, atol=1e-9):
        shift = tuple(int(v) for v in np.rint(k))
        return np.roll(lattice_rho(grid, group, False), shift, axis=tuple(range(grid.n)))
    return group.rho(d)


def _check_p(p):
    if not 0 < p <= 1:
        raise NonPositiveExponent(f"p must lie in (0, 1], got {p}")


def make_atom(seed, ball, p, group, grid=None, modes=3):
    """Random smooth (p, infinity) atom on ``ball = (center, radius)``.

    In ball coordinates ``z = A_{1/r}(x - c)`` a bump in ``|z|`` (smooth and
    supported exactly on the ball) times a random low-frequency field in
    ``z`` has its weighted projection onto ``bump * z^alpha`` (``|alpha| <= M``)
    removed, so the lattice moments vanish; it is then scaled to
    ``0.99 |B|^(-1/p)``.
    """
    _check_p(p)
    grid = grid or PeriodicGrid(group.n)
    center = np.asarray(ball[0], dtype=np.float64)
    radius = float(ball[1])
    extent = float(np.linalg.norm(group.dilate(radius), 2))
    if np.max(np.abs(center)) + extent > grid.L / 2 - 2 * grid.spacing:
        raise DegenerateBall(f"ball of radius {radius} around {center.tolist()} does not fit inside the box")
    rng = np.random.default_rng(seed)
    d = _centered(grid, center)
    # rho(d) < r  iff  |A_{1/r} d| < 1; working in z = A_{1/r} d keeps the bump smooth at the
    # centre and makes the construction commute with dilations of the ball
    z = group.apply(1.0 / radius, d)
    u2 = np.sum(z**2, axis=-1)
    inside = u2 < 1
    M = moment_order(group.gamma, p)
    alphas = multi_indices(group.n, M)
    if inside.sum() < 2 * len(alphas):
        raise DegenerateBall(f"{int(inside.sum())} grid points inside the ball for {len(alphas)} moment constraints")

    sel = inside.ravel()
    ys = z.reshape(-1, group.n)[sel]
    bw = np.exp(1.0 - 1.0 / (1.0 - u2.ravel()[sel]))
    field_ = np.zeros(ys.shape[0])
    for k in itertools.product(range(-modes, modes + 1), repeat=group.n):
        phase = math.pi * (ys @ np.array(k, dtype=np.float64))
        a, b = rng.standard_normal(2)
        field_ += a * np.cos(phase) + b * np.sin(phase)

    mono = np.stack([np.prod(ys ** np.array(al), axis=1) for al in alphas], axis=1)
    v = bw * field_
    basis = bw[:, None] * mono
    for _ in range(2):  # second pass cleans rounding left by the first
        coef, *_ = np.linalg.lstsq(mono.T @ basis, mono.T @ v, rcond=None)
        v = v - basis @ coef
    vol = radius ** group.gamma * unit_ball_volume(group.n)
    top = np.max(np.abs(v))
    if not top > 0:
        raise DegenerateBall("moment projection removed the whole function")
    v *= 0.99 * vol ** (-1.0 / p) / top
    out = np.zeros(int(np.prod(grid.shape)))
    out[sel] = v
    atom = Atom(p, center, radius, M, GridFunction(grid, out.reshape(grid.shape), PHYSICAL), group,
                {"seed": seed})
    atom.report = validate_atom(atom)
    return atom


def validate_atom(a, support_tol=1e-13, moment_tol=1e-10):
    """Recompute support, size and moment conditions from the samples."""
    grid = a.samples.grid
    vals = a.samples.physical().samples
    d = _centered(grid, a.ball_center)
    inside = _ball_rho(grid, a.group, a.ball_center, d) < a.ball_radius
    outside_max = float(np.max(np.abs(vals[~inside]), initial=0.0))
    sup = float(np.max(np.abs(vals)))
    bound = a.sup_bound
    moments = {}
    for al in multi_indices(grid.n, a.M):
        mono = np.prod(d ** np.array(al), axis=-1)
        moments["".join(map(str, al))] = float(abs(grid.cell * np.sum(vals * mono)))
    worst_moment = max(moments.values())
    checks = {
        "support": outside_max <= support_tol,
        "size": sup <= bound * (1 + 1e-10),
        "moments": worst_moment <= moment_tol,
    }
    return {
        "support_residual": outside_max, "sup": sup, "sup_bound": bound, "sup_ratio": sup / bound,
        "moments": moments, "max_moment_residual": worst_moment, "M": a.M,
        "checks": checks, "passed": all(checks.values()),
    }


# -- experiments -----------------------------------------------------------------

def g_norm(f, sym, group, window, p):
    """``|| (sum_j |f * phi_{b^j}|**2)**(1/2) ||_p`` over the integer scales of ``window``."""
    F = f.frequency().samples
    acc = np.zeros(f.grid.shape)
    for j in range(window.j_min, window.j_max + 1):
        S = sample_dilated_symbol(sym, group, window.b**j, f.grid).samples
        acc += np.abs(np.fft.ifftn(F * S) / f.grid.cell) ** 2
    return lp_norm(GridFunction(f.grid, np.sqrt(acc), PHYSICAL), p)


def lattice_window(sym, group, grid, b):
    return window_for(grid, group, b, effective_support(sym, group))


def atom_gbound_experiment(sym, group, pou, p, count, seed, grid=None, radii=(1.0, 1.5, 2.0)):
    """``||g_phi(a)||_p`` over random atoms, with translation and dilation covariance checks."""
    if count < 1:
        raise ValueError("count must be >= 1")
    grid = grid or PeriodicGrid(group.n)
    window = lattice_window(sym, group, grid, pou.b)
    rng = np.random.default_rng(seed)
    values, rows = [], []
    for i in range(count):
        r = float(radii[i % len(radii)])
        reach = grid.L / 4 - float(np.linalg.norm(group.dilate(r), 2))
        kmax = max(0, int(reach / grid.spacing))
        shift = rng.integers(-kmax, kmax + 1, size=group.n) if kmax else np.zeros(group.n, int)
        atom = make_atom(int(rng.integers(2**31)), (shift * grid.spacing, r), p, group, grid)
        val = g_norm(atom.samples, sym, group, window, p)
        values.append(val)
        rows.append({"index": i, "radius": r, "center": (shift * grid.spacing).tolist(), "g_norm": val,
                     "atom_ok": atom.report["passed"]})
    values = np.array(values)
    report = {
        "count": count, "p": p, "window": window.as_dict(), "rows": rows,
        "max": float(values.max()), "min": float(values.min()),
        "cv": float(values.std() / values.mean()) if values.mean() > 0 else math.nan,
    }
    # covariance on the first atom
    base = make_atom(seed, (np.zeros(group.n), float(radii[-1])), p, group, grid)
    v0 = g_norm(base.samples, sym, group, window, p)
    moved = base.samples.shifted([3] + [-2] * (group.n - 1))
    report["translation_delta"] = abs(g_norm(moved, sym, group, window, p) - v0) / v0
    # x -> a(A_s x) on the torus: det(A_s) shrunk copies with the same L^p norm, and
    # g(a o A_s) = g(a) o A_s exactly, so only the sublattice Riemann sum differs
    try:
        Mx = lattice_dilation_matrix(group, 2.0)
        report["dilation_delta"] = abs(g_norm(compose_lattice(base.samples, Mx), sym, group, window, p) - v0) / v0
    except ValueError:
        report["dilation_delta"] = None  # A_2 is not a lattice map for this group
    return report


def wave_packet_family(group, count=30, seed=0, band=(1.0, 2.0)):
    """Band-limited packets with ``f_hat`` a smooth bump centred at random ``rho*`` in ``band``.

    Members are functions of the grid, so the same packet can be sampled at
    several resolutions.
    """
    rng = np.random.default_rng(seed)
    n = group.n
    specs = []
    for _ in range(count):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        s = rng.uniform(*band)
        centre = group.apply(s, d[None], adjoint=True)[0]
        specs.append({"centre": centre, "width": rng.uniform(0.25, 0.5),
                      "shift": rng.uniform(-2.0, 2.0, size=n), "phase": rng.uniform(0, 2 * np.pi)})

    def member(spec):
        def sample(grid):
            xi = grid.frequencies()
            out = np.zeros(grid.shape, dtype=np.complex128)
            for sign in (1.0, -1.0):
                z = np.sum((xi - sign * spec["centre"]) ** 2, axis=-1) / spec["width"] ** 2
                zz = np.where(z < 1, z, 0.0)
                bump = np.where(z < 1, np.exp(1.0 - 1.0 / (1.0 - zz)), 0.0)
                mod = np.exp(-2j * np.pi * (xi @ spec["shift"]) + 1j * sign * spec["phase"])
                out += 0.5 * bump * mod
            out[grid.nyquist_mask()] = 0.0
            return GridFunction(grid, np.fft.ifftn(out).real / grid.cell, PHYSICAL)

        sample.spec = {k: np.asarray(v).tolist() for k, v in spec.items()}
        return sample

    return [member(s) for s in specs]


def _ratio(f, sym, group, p, window, Phi, s_grid):
    hq = lp_norm(grand_max(f, Phi, group, s_grid), p)
    if hq < 1e-14:
        raise ZeroQuasinorm(f"H^p quasi-norm {hq:.3g} below 1e-14")
    gn = g_norm(f, sym, group, window, p)
    return hq, gn, gn / hq


def default_s_grid(window, K=2, extra=4):
    """Geometric ``s`` from ``b**(j_max + extra)`` to ``b**j_min`` with ``K`` substeps.

    The ``extra`` small scales let ``Phi_s`` approach the identity on the band.
    """
    return geometric_grid(window.b ** (window.j_max + extra), window.b ** window.j_min, window.b, K)


def equivalence_experiment(sym, group, pou, p, family, s_grid=None, Phi=None, resolutions=(128, 256), L=16.0):
    """``r(f) = ||g_phi f||_p / ||f||_{H^p}`` over the family at each resolution.

    Reports the empirical interval ``[c1, c2]`` at the finest resolution and
    the relative drift of every ratio between the first and last resolution.
    """
    if not family:
        raise ValueError("family must be nonempty")
    Phi = Phi or mollifier()
    check_mass(Phi, group.n)
    if s_grid is None:  # one scale set for every resolution
        finest = PeriodicGrid(group.n, L=L, N=max(resolutions))
        s_grid = default_s_grid(lattice_window(sym, group, finest, pou.b))
    rows, by_res = [], {}
    for N in resolutions:
        grid = PeriodicGrid(group.n, L=L, N=N)
        window = lattice_window(sym, group, grid, pou.b)
        sg = fitting_scales(Phi, group, grid, np.asarray(s_grid))
        ratios = {}
        for i, member in enumerate(family):
            f = member(grid)
            try:
                hq, gn, r = _ratio(f, sym, group, p, window, Phi, sg)
            except ZeroQuasinorm as exc:
                log.warning("family member %d excluded at N=%d: %s", i, N, exc)
                continue
            ratios[i] = r
            rows.append({"function_id": i, "p": p, "hp_quasinorm": hq, "g_norm": gn, "ratio": r, "resolution": N,
                         "symbol": sym.name, "b": pou.b, "j_min": window.j_min, "j_max": window.j_max,
                         "L": L})
        by_res[N] = ratios
    fine = by_res[resolutions[-1]]
    coarse = by_res[resolutions[0]]
    if not fine:
        raise ZeroQuasinorm(f"every family member degenerates at N={resolutions[-1]}")
    vals = np.array(list(fine.values()))
    drift = {i: abs(fine[i] - coarse[i]) / fine[i] for i in fine if i in coarse}
    return {
        "rows": rows, "c1": float(vals.min()), "c2": float(vals.max()), "spread": float(vals.max() / vals.min()),
        "drift": drift, "max_drift": max(drift.values()) if drift else 0.0,
        "excluded": [i for i in range(len(family)) if any(i not in r for r in by_res.values())],
    }


def band_pass_majorant(f, psi, group, t, Phi, s_grid, N=None):
    """Fitted constant in ``sup_s |Phi_s * psi_t * f| <= C (eta_t * f)**_{N, 1/t}``.

    ``eta`` is the band-pass symbol equal to 1 on ``psi``'s annulus, so
    ``psi_t * f = psi_t * eta_t * f``.
    """
    eta = band_pass(*psi.annulus) if psi.annulus else band_pass()
    N = group.gamma + 1 if N is None else N
    grid = f.grid
    F = f.frequency().samples
    PT = sample_dilated_symbol(psi, group, t, grid).samples
    lhs = np.zeros(grid.shape)
    for s in fitting_scales(Phi, group, grid, s_grid):
        S = sample_dilated_symbol(Phi, group, s, grid).samples
        np.maximum(lhs, np.abs(np.fft.ifftn(F * PT * S) / grid.cell), out=lhs)
    E = sample_dilated_symbol(eta, group, t, grid).samples
    rhs = peetre_max(GridFunction(grid, np.fft.ifftn(F * E) / grid.cell, PHYSICAL), group, N, 1.0 / t).samples
    live = rhs > 1e-14 * rhs.max()
    return float(np.max(lhs[live] / rhs[live])) if live.any() else 0.0
