"""Partition of unity adapted to a non-degenerate symbol.

Given ``phi_hat`` and a base ``b``, builds ``eta_hat`` supported in
``r1 < rho*(xi) < r2`` with ``sum_j phi_hat(A_{b^j}* xi) eta_hat(A_{b^j}* xi) = 1``
for every ``xi != 0``, together with the low-pass complement ``zeta_hat``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BaseTooSmall, CoverFailure, PsiFloorError, WindowError
from .grid import FrequencySymbol, PeriodicGrid, evaluate_dilated, lattice_rho
from .symbols import plateau

log = logging.getLogger(__name__)

SAFETY = 0.9


def sphere_points(n, count=None, offset=0.0):
    """Deterministic, roughly uniform points on the Euclidean unit sphere."""
    if count is None:
        count = {1: 2, 2: 256, 3: 1024}[n]
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        a = 2 * np.pi * (np.arange(count) + offset) / count
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    # Fibonacci lattice
    i = np.arange(count) + 0.5 + offset
    z = 1 - 2 * i / count
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    phi = np.pi * (3 - np.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def default_t_grid(per_octave=16, octaves=12):
    return 2.0 ** (np.arange(-per_octave * octaves, per_octave * octaves + 1) / per_octave)


def orbit_values(sym, group, omegas, ts):
    """``|phi_hat(A_t* omega)|**2`` for unit vectors ``omega`` (rows) and scales ``ts`` (columns).

    Uses ``rho*(A_t* omega) = t`` since ``rho*(omega) = 1`` on the unit sphere.
    """
    A = group.dilate_many(ts, adjoint=True)
    pts = np.einsum("kij,dj->dki", A, omegas)
    rs = np.broadcast_to(ts[None, :], pts.shape[:2])
    return np.abs(sym(pts, rs)) ** 2


# -- class B ---------------------------------------------------------------

def check_class_B(sym, group, probe=None):
    """Probe cancellation, power decay at 0, rapid decay at infinity and non-degeneracy.

    Returns a report dict with measured margins and an overall ``passed``.
    """
    probe = probe or {}
    omegas = probe.get("directions", sphere_points(group.n))
    small = probe.get("small_radii", 10.0 ** np.linspace(-6, -2, 9))
    large = probe.get("large_radii", 10.0 ** np.linspace(0.5, 3, 16))
    ts = probe.get("t_grid", 10.0 ** np.linspace(-4, 4, 161))

    zero = np.zeros((1, group.n))
    at_zero = float(np.abs(sym(zero, np.zeros(1)))[0])

    def along(radii):
        pts = radii[None, :, None] * omegas[:, None, :]
        rs = group.rho(pts, dual=True)
        return np.abs(sym(pts, rs)), rs

    near, _ = along(small)
    if np.all(near == 0):
        eps = math.inf
    else:
        with np.errstate(divide="ignore"):
            logv = np.log(np.maximum(near, 1e-300))
        lx = np.log(small)
        slopes = np.polyfit(lx, logv.T, 1)[0]
        eps = float(slopes.min())

    far, rs_far = along(large)
    tail = max(1, large.size // 4)
    decay = {}
    for tau in (1, 2, 4):
        weighted = far * rs_far**tau
        top = weighted.max()
        ratio = float(weighted[:, -tail:].max() / top) if top > 0 else 0.0
        decay[tau] = ratio

    vals = orbit_values(sym, group, omegas, ts)
    sup = np.sqrt(vals.max(axis=1))
    nondeg = float(sup.min() / sup.max()) if sup.max() > 0 else 0.0

    checks = {
        "cancellation": at_zero <= 1e-12,
        "power_decay_at_zero": eps > 0.05,
        "rapid_decay": all(r < 1e-3 for r in decay.values()),
        "non_degenerate": nondeg > 1e-12,
    }
    return {
        "symbol": sym.name,
        "value_at_zero": at_zero,
        "eps": eps,
        "decay_tail_ratio": decay,
        "nondegeneracy_margin": nondeg,
        "checks": checks,
        "passed": all(checks.values()),
    }


# -- interval cover ----------------------------------------------------------

@dataclass(frozen=True)
class IntervalCover:
    intervals: tuple
    c: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.intervals:
            raise CoverFailure("empty interval family")
        for a, b in self.intervals:
            if not 0 < a < b:
                raise CoverFailure(f"invalid interval [{a}, {b}]")
        if not self.c > 0:
            raise CoverFailure("cover lower bound must be positive")

    @property
    def b0(self):
        return max(a / b for a, b in self.intervals)

    @property
    def hull(self):
        return min(a for a, _ in self.intervals), max(b for _, b in self.intervals)


def find_interval_cover(sym, group, sphere_samples=None, t_grid=None):
    """Greedy finite family of scale intervals seeing every direction.

    For each sampled direction the maximal run of the log-spaced ``t_grid``
    around the peak of ``|phi_hat(A_t* omega)|**2`` where the value stays above
    half the peak is a candidate; a greedy set cover picks the family, and
    ``c`` is the measured inf-max-inf times 0.9.
    """
    omegas = sphere_points(group.n, sphere_samples)
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    vals = orbit_values(sym, group, omegas, ts)
    peaks = vals.max(axis=1)
    top = peaks.max()
    if not top > 0 or peaks.min() <= 1e-12 * top:
        raise CoverFailure(
            f"symbol is degenerate at grid resolution: min directional peak {peaks.min():.3g}, max {top:.3g}"
        )
    arg = vals.argmax(axis=1)
    cands = {}
    for i in range(len(omegas)):
        above = vals[i] >= 0.5 * peaks[i]
        lo = hi = arg[i]
        while lo > 0 and above[lo - 1]:
            lo -= 1
        while hi < ts.size - 1 and above[hi + 1]:
            hi += 1
        if hi == lo:
            hi = min(lo + 1, ts.size - 1)
            lo = hi - 1
        cands.setdefault((lo, hi), None)
    keys = list(cands)
    infs = np.stack([vals[:, lo:hi + 1].min(axis=1) for lo, hi in keys])  # (cand, dir)
    covers = infs >= 0.5 * peaks[None, :]
    uncovered = np.ones(len(omegas), dtype=bool)
    chosen = []
    while uncovered.any():
        gain = (covers & uncovered[None, :]).sum(axis=1)
        best = int(gain.argmax())
        if gain[best] == 0:
            raise CoverFailure("greedy cover stalled")
        chosen.append(best)
        uncovered &= ~covers[best]
    measured = float(infs[chosen].max(axis=0).min())
    if not measured > 0:
        raise CoverFailure("no positive lower bound achieved")
    intervals = tuple((float(ts[keys[h][0]]), float(ts[keys[h][1]])) for h in sorted(chosen, key=lambda h: keys[h]))
    log.info("cover for %s: %d interval(s), c=%.4g", sym.name, len(intervals), SAFETY * measured)
    return IntervalCover(intervals, SAFETY * measured,
                         {"directions": len(omegas), "t_grid": (float(ts[0]), float(ts[-1]), ts.size),
                          "measured_inf_max_inf": measured})


# -- partition of unity ----------------------------------------------------------

def scale_range(rs, lo, hi, b):
    """Integers ``j`` (as a range) with ``lo < b**j * rs < hi`` for some positive entry of ``rs``."""
    pos = rs[rs > 0]
    if pos.size == 0:
        return range(0)
    q = math.log(1.0 / b)
    j0 = math.floor(math.log(pos.min() / hi) / q)
    j1 = math.ceil(math.log(pos.max() / lo) / q)
    return range(j0, j1 + 1)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    b: float
    b0: float
    theta_m: float
    theta_H: float
    r1: float
    r2: float
    c: float
    phi_hat: FrequencySymbol
    group: object
    eta_hat: FrequencySymbol = None
    zeta_hat: FrequencySymbol = None
    psi_floor: float = float("nan")
    meta: dict = field(default_factory=dict)

    def theta(self, s):
        return plateau(s, self.theta_m, self.theta_H)

    def psi(self, xi, rs):
        """``Psi(xi) = sum_j theta(b^j rho*(xi)) |phi_hat(A_{b^j}* xi)|**2``."""
        xi = np.asarray(xi, dtype=np.float64)
        rs = np.asarray(rs, dtype=np.float64)
        out = np.zeros(rs.shape)
        for j in scale_range(rs, self.r1, self.r2, self.b):
            t = self.b**j
            th = self.theta(t * rs)
            live = th > 0
            if not live.any():
                continue
            vals = evaluate_dilated(self.phi_hat, self.group, t, xi[live], rs[live])
            out[live] += th[live] * np.abs(vals) ** 2
        return out

    def sidecar(self):
        return {
            "symbol": self.phi_hat.name, "b": self.b, "b0": self.b0, "r1": self.r1, "r2": self.r2,
            "m": self.theta_m, "H": self.theta_H, "c": self.c, "psi_floor": self.psi_floor,
            **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, list, tuple))},
        }


def build_partition(sym, group, cover, b=None, grid=None):
    """Construct ``theta``, ``Psi``, ``eta_hat`` and ``zeta_hat`` from a cover.

    ``b`` defaults to ``max(1/2, b0)``. ``Psi`` is measured on a fundamental
    domain of the ``A_b*`` action (and on ``grid`` when given); its minimum is
    stored as ``psi_floor``.
    """
    b0 = cover.b0
    if b is None:
        b = max(0.5, b0)
    b = float(b)
    if b < b0 * (1 - 1e-15) or not b < 1:
        raise BaseTooSmall(f"base b={b} must lie in [b0, 1) = [{b0:.6g}, 1)")
    m, H = cover.hull
    pou = PartitionOfUnity(b=b, b0=b0, theta_m=m, theta_H=H, r1=0.5 * m, r2=2.0 * H, c=cover.c,
                           phi_hat=sym, group=group, meta={"intervals": [list(i) for i in cover.intervals]})

    def eta_rule(xi, rs):
        th = pou.theta(rs)
        out = np.zeros(rs.shape, dtype=np.complex128)
        live = th > 0
        if live.any():
            phi = sym(xi[live], rs[live])
            out[live] = th[live] * np.conj(phi) / pou.psi(xi[live], rs[live])
        return out

    eta = FrequencySymbol(f"eta[{sym.name}]", eta_rule, eps=math.inf, annulus=(pou.r1, pou.r2),
                          params={"b": b})
    object.__setattr__(pou, "eta_hat", eta)

    def zeta_rule(xi, rs):
        acc = np.zeros(rs.shape, dtype=np.complex128)
        for j in scale_range(rs, pou.r1, pou.r2, b):
            if j < 0:
                continue
            t = b**j
            live = (t * rs > pou.r1) & (t * rs < pou.r2)
            if live.any():
                acc[live] += (evaluate_dilated(sym, group, t, xi[live], rs[live])
                              * evaluate_dilated(eta, group, t, xi[live], rs[live]))
        return 1.0 - acc

    zeta = FrequencySymbol(f"zeta[{sym.name}]", zeta_rule, annulus=None, params={"b": b})
    object.__setattr__(pou, "zeta_hat", zeta)

    # fundamental domain {A_s* omega : |omega| = 1, 1 <= s <= 1/b}
    omegas = sphere_points(group.n, 4 * len(sphere_points(group.n)), offset=0.37)
    ss = np.exp(np.linspace(0.0, math.log(1.0 / b), 33))
    A = group.dilate_many(ss, adjoint=True)
    pts = np.einsum("kij,dj->dki", A, omegas).reshape(-1, group.n)
    rs = np.broadcast_to(ss[None, :], (len(omegas), ss.size)).reshape(-1)
    floor = float(pou.psi(pts, rs).min())
    if grid is not None:
        rl = lattice_rho(grid, group, True)
        mask = (rl > 0) & ~grid.nyquist_mask()
        floor = min(floor, float(pou.psi(grid.frequencies()[mask], rl[mask]).min()))
    if not floor > 0:
        raise PsiFloorError(f"Psi reaches {floor:.3g} on the test set")
    object.__setattr__(pou, "psi_floor", floor)
    log.info("partition for %s: b=%.4g b0=%.4g r1=%.4g r2=%.4g psi_floor=%.4g", sym.name, b, b0,
             pou.r1, pou.r2, floor)
    return pou


def partition_sum(pou, grid, j_range):
    """``sum_{j in j_range} phi_hat(A_{b^j}* xi) eta_hat(A_{b^j}* xi)`` on the dual lattice."""
    group, sym = pou.group, pou.phi_hat
    xi = grid.frequencies()
    rs = lattice_rho(grid, group, True)
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for j in j_range:
        t = pou.b**j
        live = (t * rs > pou.r1) & (t * rs < pou.r2)
        if live.any():
            acc[live] += (evaluate_dilated(sym, group, t, xi[live], rs[live])
                          * evaluate_dilated(pou.eta_hat, group, t, xi[live], rs[live]))
    return acc


def covered_mask(pou, grid, j_range):
    """Lattice points whose every contributing scale lies in ``j_range``."""
    rs = lattice_rho(grid, pou.group, True)
    q = math.log(1.0 / pou.b)
    with np.errstate(divide="ignore"):
        need_lo = np.floor(np.log(rs / pou.r2) / q)
        need_hi = np.ceil(np.log(rs / pou.r1) / q)
    return (rs > 0) & ~grid.nyquist_mask() & (need_lo >= j_range.start) & (need_hi <= j_range.stop - 1)


# -- transition and low-pass constants ---------------------------------------------

def _check_support_fits(grid, group, r2):
    rs = lattice_rho(grid, group, True)
    off = grid.offsets()
    shell = np.any(np.abs(off) >= grid.N // 2 - 1, axis=-1)
    if rs[shell].min() <= r2:
        raise WindowError(
            f"dual lattice too small: rho* on the outer shell reaches {rs[shell].min():.3g} <= r2={r2:.3g}; "
            "decrease L or increase N"
        )


def constant_window(pou, J=None, span=40):
    """Valid ``j`` for the transition constants: ``b**j <= J`` (default ``J = r2``), ``span`` scales."""
    J = pou.r2 if J is None else J
    j_lo = math.ceil(math.log(J) / math.log(pou.b) - 1e-12)
    return range(j_lo, j_lo + span)


def _weighted_l1(grid, group, values, Lw):
    """``int (1 + rho(x))**Lw |F^-1[values](x)| dx`` by lattice quadrature."""
    kernel = np.fft.ifftn(values) / grid.cell
    w = (1.0 + lattice_rho(grid, group, False)) ** Lw
    return float(grid.cell * np.sum(w * np.abs(kernel)))


def transition_constant(psi, pou, group, j, Lw=0.0, grid=None, J=None):
    """``C(psi, j, L) = int (1+rho(x))^L |F^-1[psi_hat(A_{b^-j}* .) eta_hat](x)| dx``."""
    grid = grid or PeriodicGrid(group.n, L=8.0, N=256 if group.n == 2 else 64)
    window = constant_window(pou, J)
    if j not in window:
        raise WindowError(f"j={j} outside the valid window [{window.start}, {window.stop - 1}]")
    _check_support_fits(grid, group, pou.r2)
    xi = grid.frequencies()
    rs = lattice_rho(grid, group, True)
    eta = pou.eta_hat(xi, rs)
    live = eta != 0
    vals = np.zeros(grid.shape, dtype=np.complex128)
    vals[live] = evaluate_dilated(psi, group, pou.b ** (-j), xi[live], rs[live]) * eta[live]
    vals[grid.nyquist_mask()] = 0.0
    return _weighted_l1(grid, group, vals, Lw)


def lowpass_constant(pou, group, k, Lw=0.0, grid=None):
    """``D(Xi_k, L) = int (1+rho(x))^L |F^-1[zeta_hat Xi_k](x)| dx`` with ``Xi_k = 2 pi i xi_k``."""
    grid = grid or PeriodicGrid(group.n, L=8.0, N=256 if group.n == 2 else 64)
    _check_support_fits(grid, group, pou.r2)
    xi = grid.frequencies()
    rs = lattice_rho(grid, group, True)
    vals = pou.zeta_hat(xi, rs) * (2j * np.pi * xi[..., k])
    vals[grid.nyquist_mask()] = 0.0
    return _weighted_l1(grid, group, vals, Lw)
