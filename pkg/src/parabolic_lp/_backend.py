"""Kernel selection: compiled extension when importable, NumPy otherwise.

Set ``PARABOLIC_LP_BACKEND=python`` to force the fallback (used by the
benchmark and the cross-backend tests).
"""

import os

import numpy as np

from . import _kernels_py

_forced = os.environ.get("PARABOLIC_LP_BACKEND", "").lower()

_compiled = None
if _forced != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

NAME = "compiled" if _compiled is not None else "python"
_impl = BACKENDS[NAME]


def use(name):
    """Switch the active backend; returns the previous name."""
    global NAME, _impl
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    prev, NAME, _impl = NAME, name, BACKENDS[name]
    return prev


def _pad3(values):
    arr = np.asarray(values, dtype=np.float64)
    return arr.reshape(arr.shape + (1,) * (3 - arr.ndim))


def _pad_offsets(offs):
    offs = np.asarray(offs, dtype=np.int64)
    out = np.zeros((offs.shape[0], 3), dtype=np.int64)
    out[:, : offs.shape[1]] = offs
    return out


def rho_eig(points, V, W, lam, P, tol):
    return _impl.rho_eig(
        points, V.real.copy(), V.imag.copy(), W.real.copy(), W.imag.copy(),
        lam.real.copy(), lam.imag.copy(), np.asarray(P, dtype=np.float64), tol,
    )


def ball_averages(values, offs, bounds):
    shape = np.shape(values)
    out = _impl.ball_averages(_pad3(values), _pad_offsets(offs), np.asarray(bounds, dtype=np.int64))
    return out.reshape((len(bounds),) + shape)


def peetre(values, offs, wts):
    shape = np.shape(values)
    out = _impl.peetre(_pad3(values), _pad_offsets(offs), np.asarray(wts, dtype=np.float64))
    return out.reshape(shape)
