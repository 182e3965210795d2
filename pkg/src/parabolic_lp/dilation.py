"""Anisotropic dilation groups ``A_t = exp((log t) P)`` and their norms.

A :class:`DilationGroup` is built once by :func:`validate_matrix` and is
immutable afterwards. It evaluates the dilations ``A_t`` and ``A_t*``, the
homogeneous norm ``rho`` (``|A_{1/rho(x)} x| = 1``) and its dual ``rho*``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import AdmissibilityError, DimensionError, NonPositiveScale

ADMISSIBILITY_TOL = 1e-12
EIG_COND_LIMIT = 1e6
RHO_TOL = 1e-13  # bracket width in log t


def expm(M):
    """Matrix exponential of a stack ``(..., n, n)`` by scaling and squaring.

    A degree-18 Taylor polynomial is applied to ``M / 2**s`` with
    ``||M / 2**s||_inf <= 1/4``; the truncation error is then far below
    double precision and the result is squared back ``s`` times.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[-1]
    norm = np.abs(M).sum(axis=-1).max(axis=-1)
    top = float(np.max(norm)) if norm.size else 0.0
    s = max(0, int(np.ceil(np.log2(top / 0.25)))) if top > 0 else 0
    X = M / 2.0**s
    eye = np.broadcast_to(np.eye(n), M.shape)
    term = eye.copy()
    E = eye.copy()
    for k in range(1, 19):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True, eq=False)
class DilationGroup:
    """Validated dilation matrix ``P`` with its scalar invariants."""

    P: np.ndarray
    n: int
    gamma: float
    kappa: float
    exp_tolerance: float = 1e-12
    _eig: tuple = field(default=None, repr=False)

    @property
    def key(self):
        return self.P.tobytes()

    @property
    def diagonalizable(self):
        return self._eig is not None

    def _eig_for(self, adjoint):
        V, W, lam = self._eig
        if adjoint:
            return W.T.copy(), V.T.copy(), lam
        return V, W, lam

    def dilate_many(self, ts, adjoint=False):
        """Stack of ``A_t`` (or ``A_t*``) for every ``t`` in ``ts``."""
        ts = np.asarray(ts, dtype=np.float64)
        if np.any(ts <= 0) or not np.all(np.isfinite(ts)):
            raise NonPositiveScale("dilation parameter must be positive and finite")
        logs = np.log(ts).reshape(-1)
        if self._eig is not None:
            V, W, lam = self._eig_for(adjoint)
            scale = np.exp(logs[:, None] * lam[None, :])
            out = np.einsum("ij,kj,jl->kil", V, scale, W).real
        else:
            Q = self.P.T if adjoint else self.P
            out = expm(logs[:, None, None] * Q[None])
        return out.reshape(ts.shape + (self.n, self.n))

    def dilate(self, t, adjoint=False):
        return self.dilate_many(np.array([t], dtype=np.float64), adjoint)[0]

    def apply(self, t, x, adjoint=False):
        """``A_t x`` for points ``x`` of shape ``(..., n)``."""
        A = self.dilate(t, adjoint)
        return np.asarray(x, dtype=np.float64) @ A.T

    def rho(self, x, dual=False):
        """Homogeneous norm (``dual=True`` for ``rho*``) of points ``(..., n)``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n:
            raise DimensionError(f"points must have trailing dimension {self.n}")
        flat = x.reshape(-1, self.n)
        Q = self.P.T if dual else self.P
        if self._eig is not None:
            V, W, lam = self._eig_for(dual)
            out = _backend.rho_eig(flat, V, W, lam, Q, RHO_TOL)
        else:
            out = _rho_expm(flat, Q, RHO_TOL)
        return out.reshape(x.shape[:-1])


def _rho_expm(points, Q, tol):
    """Bisection for rho when ``P`` is not safely diagonalizable."""
    m = points.shape[0]
    out = np.zeros(m)
    r = np.linalg.norm(points, axis=1)
    live = np.flatnonzero(r >= 1e-300)
    x = points[live]

    def excess(idx, u):
        E = expm(-u[:, None, None] * Q[None])
        w = np.einsum("kij,kj->ki", E, x[idx])
        return np.einsum("ij,ij->i", w, w) - 1.0, w

    lo = np.log(r[live])
    hi = lo.copy()
    f0, _ = excess(np.arange(live.size), lo)
    up = np.flatnonzero(f0 > 0)
    while up.size:
        lo[up] = hi[up]
        hi[up] += np.log(2.0)
        f, _ = excess(up, hi[up])
        up = up[f > 0]
    down = np.flatnonzero(f0 <= 0)
    while down.size:
        hi[down] = lo[down]
        lo[down] -= np.log(2.0)
        f, _ = excess(down, lo[down])
        down = down[f <= 0]
    act = np.flatnonzero(hi - lo > tol)
    while act.size:
        mid = 0.5 * (lo[act] + hi[act])
        f, _ = excess(act, mid)
        pos = f > 0
        lo[act[pos]] = mid[pos]
        hi[act[~pos]] = mid[~pos]
        act = act[hi[act] - lo[act] > tol]
    u = 0.5 * (lo + hi)
    f, w = excess(np.arange(live.size), u)
    deriv = -2.0 * np.einsum("ij,ij->i", w @ Q.T, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        un = np.where(deriv < 0, u - f / deriv, u)
    un = np.where((un >= lo) & (un <= hi), un, u)
    out[live] = np.exp(un)
    return out


def validate_matrix(P, exp_tolerance=1e-12):
    """Check ``<Px, x> >= <x, x>`` and build the dilation group for ``P``.

    Raises :class:`DimensionError` for non-square input and
    :class:`AdmissibilityError` when the symmetric part of ``P`` has an
    eigenvalue below ``1 - 1e-12``.
    """
    P = np.array(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise DimensionError(f"P must be a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise DimensionError("P has non-finite entries")
    sym_min = float(np.linalg.eigvalsh(0.5 * (P + P.T)).min())
    if sym_min < 1.0 - ADMISSIBILITY_TOL:
        raise AdmissibilityError(
            f"admissibility <Px,x> >= <x,x> fails: smallest eigenvalue of (P+P^T)/2 is {sym_min:.6g} < 1"
        )
    lam, V = np.linalg.eig(P)
    lam = lam.astype(np.complex128)
    V = V.astype(np.complex128)
    eig = None
    if np.linalg.cond(V) < EIG_COND_LIMIT:
        W = np.linalg.inv(V)
        eig = (V, W, lam)
        for arr in eig:
            arr.setflags(write=False)
    P.setflags(write=False)
    kappa = max(1.0, float(lam.real.max()))
    return DilationGroup(P=P, n=P.shape[0], gamma=float(np.trace(P)), kappa=kappa,
                         exp_tolerance=exp_tolerance, _eig=eig)


def dilate(group, t, adjoint=False):
    if not t > 0:
        raise NonPositiveScale(f"t must be positive, got {t}")
    return group.dilate(t, adjoint)


def rho(group, x, dual=False):
    return group.rho(x, dual)


def _random_points(rng, count, n):
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * 10.0 ** rng.uniform(-1.5, 1.5, size=(count, 1))


def check_norm_properties(group, sample_count=1000, seed=0, dual=False, tol=1e-9):
    """Worst-case violation of the six norm properties on random samples.

    Each entry of ``report["slack"]`` is the largest observed violation
    (``<= 0`` means the property held everywhere, rounding included);
    ``report["ok"]`` compares it against ``tol``.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    n = group.n
    x = _random_points(rng, sample_count, n)
    y = _random_points(rng, sample_count, n)
    t = 10.0 ** rng.uniform(-2, 2, size=sample_count)
    rx = group.rho(x, dual)
    ry = group.rho(y, dual)
    rxy = group.rho(x + y, dual)
    nx = np.linalg.norm(x, axis=1)
    A = group.dilate_many(t, adjoint=dual)
    Ax = np.einsum("kij,kj->ki", A, x)
    nAx = np.linalg.norm(Ax, axis=1)
    rAx = group.rho(Ax, dual)

    # include exact unit vectors for the "iff" property
    u = x / nx[:, None]
    ru = group.rho(u, dual)

    inside = nx <= 1
    big = t >= 1
    slack = {
        "P1_triangle": float(np.max((rxy - rx - ry) / (1 + rx + ry))),
        "P2_unit_ball": float(max(
            np.max(np.where(inside, rx - 1, -np.inf), initial=-np.inf),
            np.max(np.where(~inside, 1 - rx, -np.inf), initial=-np.inf),
            np.max(np.abs(ru - 1)),
        )),
        "P3_small": float(np.max(np.where(inside, nx - rx, -np.inf), initial=-np.inf)),
        "P4_large": float(np.max(np.where(~inside, (rx - nx) / nx, -np.inf), initial=-np.inf)),
        "P5_expand": float(np.max(np.where(big, (t * nx - nAx) / (t * nx), -np.inf), initial=-np.inf)),
        "P6_contract": float(np.max(np.where(~big, (nAx - t * nx) / (t * nx), -np.inf), initial=-np.inf)),
        "homogeneity": float(np.max(np.abs(rAx - t * rx) / (t * rx))),
    }
    ok = {k: v <= tol for k, v in slack.items()}
    return {"slack": slack, "ok": ok, "passed": all(ok.values()), "samples": sample_count, "dual": dual}
