"""Pure NumPy implementations of the hot kernels.

These mirror ``_kernels.pyx`` argument for argument; the compiled module is
preferred when it imports (see :mod:`parabolic_lp._backend`). Array
arguments are already normalised by the backend wrapper: grids are padded
to three axes and offsets to three integer columns.
"""

import numpy as np

LN2 = 0.6931471805599453


def rho_eig(points, Vr, Vi, Wr, Wi, lr, li, P, tol):
    """Homogeneous norm of each row of ``points`` via an eigen-propagator.

    ``A_s x = V diag(s**lam) W x`` with ``W = V^{-1}``; the real and
    imaginary parts of ``V``, ``W`` and ``lam`` are passed separately so the
    compiled twin needs no complex support.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    m = pts.shape[0]
    out = np.zeros(m)
    r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    live = np.flatnonzero(r >= 1e-300)
    if live.size == 0:
        return out
    V = Vr + 1j * Vi
    W = Wr + 1j * Wi
    lam = lr + 1j * li
    y = pts[live] @ W.T

    def excess(idx, u):
        z = y[idx] * np.exp(-u[:, None] * lam[None, :])
        w = (z @ V.T).real
        return np.einsum("ij,ij->i", w, w) - 1.0, w

    u0 = np.log(r[live])
    lo = u0.copy()
    hi = u0.copy()
    f0, _ = excess(np.arange(live.size), u0)

    # f is strictly decreasing in u = log t: grow the bracket by doubling t
    up = np.flatnonzero(f0 > 0)
    f = f0[up]
    while up.size:
        lo[up] = hi[up]
        hi[up] += LN2
        f, _ = excess(up, hi[up])
        keep = f > 0
        up = up[keep]
    down = np.flatnonzero(f0 <= 0)
    while down.size:
        hi[down] = lo[down]
        lo[down] -= LN2
        f, _ = excess(down, lo[down])
        keep = f <= 0
        down = down[keep]

    act = np.flatnonzero(hi - lo > tol)
    while act.size:
        mid = 0.5 * (lo[act] + hi[act])
        f, _ = excess(act, mid)
        pos = f > 0
        lo[act[pos]] = mid[pos]
        hi[act[~pos]] = mid[~pos]
        act = act[hi[act] - lo[act] > tol]

    # one Newton step on |A_{e^-u} x|^2 - 1, kept inside the bracket
    u = 0.5 * (lo + hi)
    allidx = np.arange(live.size)
    f, w = excess(allidx, u)
    deriv = -2.0 * np.einsum("ij,ij->i", w @ P.T, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(deriv < 0, f / deriv, 0.0)
    un = u - step
    un = np.where((un >= lo) & (un <= hi), un, u)
    out[live] = np.exp(un)
    return out


def ball_averages(values, offs, bounds):
    """Averages of ``values`` over nested lattice balls around every node.

    ``offs`` lists lattice offsets sorted by homogeneous norm; ball ``i``
    consists of the first ``bounds[i]`` offsets. Sums run in offset order,
    identical to the compiled kernel.
    """
    vals = np.ascontiguousarray(values, dtype=np.float64)
    nb = len(bounds)
    out = np.empty((nb,) + vals.shape)
    acc = np.zeros_like(vals)
    bi = 0
    for k in range(int(bounds[-1])):
        acc += np.roll(vals, shift=tuple(int(s) for s in offs[k]), axis=(0, 1, 2))
        while bi < nb and bounds[bi] == k + 1:
            out[bi] = acc / (k + 1)
            bi += 1
    return out


def peetre(values, offs, wts):
    """sup over offsets y of values(x - y) * wts(y), offsets sorted by weight."""
    vals = np.ascontiguousarray(values, dtype=np.float64)
    best = vals * wts[0]
    gmax = vals.max() if vals.size else 0.0
    for k in range(1, len(wts)):
        w = wts[k]
        if w * gmax <= best.min():
            break
        np.maximum(best, np.roll(vals, shift=tuple(int(s) for s in offs[k]), axis=(0, 1, 2)) * w, out=best)
    return best
