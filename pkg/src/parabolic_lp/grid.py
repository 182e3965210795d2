"""Periodic grids, the ``exp(-2 pi i <x, xi>)`` Fourier convention, and
exact circular convolution.

Samples are stored in FFT order: index ``k`` on an axis is the coordinate
``k*h`` for ``k < N/2`` and ``(k - N)*h`` otherwise, so the origin sits at
index 0 on both the physical and the frequency side.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GridMismatch, NonPositiveExponent, NonPositiveScale, SideMismatch

PHYSICAL = "physical"
FREQUENCY = "frequency"

_DEFAULT_N = {1: 1024, 2: 256, 3: 64}


@dataclass(frozen=True)
class PeriodicGrid:
    n: int
    L: float = 16.0
    N: int = 0

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3")
        if self.N == 0:
            object.__setattr__(self, "N", _DEFAULT_N[self.n])
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def spacing(self):
        return self.L / self.N

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def cell(self):
        """Physical volume element ``h**n``."""
        return self.spacing**self.n

    @property
    def key(self):
        return (self.n, float(self.L), self.N)

    def axis_indices(self):
        """Signed lattice indices in FFT order, ``[0, 1, ..., N/2-1, -N/2, ..., -1]``."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    def offsets(self):
        """Signed integer offsets of every node, shape ``grid.shape + (n,)``."""
        ax = self.axis_indices()
        mesh = np.meshgrid(*([ax] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def points(self):
        """Physical coordinates of every node (torus representatives in ``[-L/2, L/2)``)."""
        return self.offsets() * self.spacing

    def frequencies(self):
        """Dual lattice ``m / L`` in FFT order, shape ``grid.shape + (n,)``."""
        return self.offsets() / self.L

    def nyquist_mask(self):
        """True where any coordinate sits on the Nyquist row ``-N/2``."""
        return np.any(self.offsets() == -self.N // 2, axis=-1)


@dataclass
class GridFunction:
    grid: PeriodicGrid
    samples: np.ndarray
    side: str = PHYSICAL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.side not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"side must be {PHYSICAL!r} or {FREQUENCY!r}")
        self.samples = np.asarray(self.samples)
        if self.samples.shape != self.grid.shape:
            raise GridMismatch(f"samples shape {self.samples.shape} does not match grid {self.grid.shape}")

    def physical(self):
        return self if self.side == PHYSICAL else inverse_transform(self)

    def frequency(self):
        return self if self.side == FREQUENCY else transform(self)

    @property
    def real(self):
        return self.physical().samples.real

    def __mul__(self, c):
        return GridFunction(self.grid, self.samples * c, self.side)

    __rmul__ = __mul__

    def __add__(self, other):
        _same_grid(self, other)
        if other.side != self.side:
            other = other.physical() if self.side == PHYSICAL else other.frequency()
        return GridFunction(self.grid, self.samples + other.samples, self.side)

    def __sub__(self, other):
        return self + (-1.0) * other

    def shifted(self, shift):
        """Lattice translate ``f(. - shift*h)``; on the frequency side a modulation."""
        f = self.physical()
        axes = tuple(range(self.grid.n))
        return GridFunction(self.grid, np.roll(f.samples, tuple(shift), axis=axes), PHYSICAL)


@dataclass(frozen=True)
class FrequencySymbol:
    """A kernel given by its Fourier transform.

    ``rule(xi, rs)`` evaluates the symbol at points ``xi`` of shape
    ``(..., n)``; ``rs`` carries ``rho*(xi)`` so symbols radial in ``rho*``
    never re-run the root finder. ``eps`` is the power-law exponent near the
    origin (``inf`` when the symbol vanishes identically there) and
    ``annulus`` the closed ``rho*`` range outside which it is exactly zero.
    """

    name: str
    rule: Callable
    eps: Optional[float] = None
    annulus: Optional[tuple] = None
    cancellation: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, xi, rs):
        return np.asarray(self.rule(np.asarray(xi, dtype=np.float64), np.asarray(rs, dtype=np.float64)),
                          dtype=np.complex128)


def _same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid} vs {g.grid}")


def transform(f):
    """Physical samples to ``f_hat(m/L) ~ h**n * sum f(x) exp(-2 pi i <x, xi>)``."""
    if f.side != PHYSICAL:
        raise SideMismatch("transform expects physical-side samples")
    return GridFunction(f.grid, np.fft.fftn(f.samples) * f.grid.cell, FREQUENCY)


def inverse_transform(F):
    if F.side != FREQUENCY:
        raise SideMismatch("inverse_transform expects frequency-side samples")
    return GridFunction(F.grid, np.fft.ifftn(F.samples) / F.grid.cell, PHYSICAL)


_lattice_cache = {}


def lattice_rho(grid, group, dual):
    """rho on the physical torus lattice (``dual=False``) or rho* on the dual lattice.

    Cached per (grid, group); the arrays are read-only.
    """
    if grid.n != group.n:
        raise GridMismatch(f"grid dimension {grid.n} != group dimension {group.n}")
    key = (grid.key, group.key, bool(dual))
    hit = _lattice_cache.get(key)
    if hit is None:
        pts = grid.frequencies() if dual else grid.points()
        hit = group.rho(pts, dual=dual)
        hit.setflags(write=False)
        if len(_lattice_cache) > 64:
            _lattice_cache.clear()
        _lattice_cache[key] = hit
    return hit


def evaluate_dilated(sym, group, t, xi, rs):
    """``sym(A_t* xi)`` given ``rs = rho*(xi)``, using ``rho*(A_t* xi) = t rho*(xi)``."""
    if t == 1.0:
        return sym(xi, rs)
    A = group.dilate(t, adjoint=True)
    return sym(xi @ A.T, t * rs)


def sample_dilated_symbol(sym, group, t, grid):
    """Frequency samples of ``phi_t`` on the dual lattice: ``phi_hat(A_t* xi)``.

    The Nyquist row is zeroed so real kernels stay real.
    """
    if not t > 0:
        raise NonPositiveScale(f"t must be positive, got {t}")
    vals = evaluate_dilated(sym, group, float(t), grid.frequencies(), lattice_rho(grid, group, True))
    vals = np.where(grid.nyquist_mask(), 0.0, vals)
    return GridFunction(grid, vals, FREQUENCY, {"symbol": sym.name, "t": float(t)})


def convolve(f, g):
    """Circular convolution approximating the continuous one on the torus."""
    _same_grid(f, g)
    F = f.frequency().samples
    G = g.frequency().samples
    return inverse_transform(GridFunction(f.grid, F * G, FREQUENCY))


def filter_symbol(f, values):
    """Multiply ``f_hat`` by frequency samples ``values`` and return the physical result."""
    F = f.frequency()
    return inverse_transform(GridFunction(f.grid, F.samples * values, FREQUENCY))


def lp_norm(f, p, w=None, cell=None):
    """``(h**n * sum |f|**p w)**(1/p)``; ``w`` defaults to 1.

    Plain arrays are accepted when ``cell`` (the volume element) is given.
    """
    if not p > 0:
        raise NonPositiveExponent(f"p must be positive, got {p}")
    if isinstance(f, GridFunction):
        if f.side != PHYSICAL:
            raise SideMismatch("lp_norm expects physical-side samples")
        samples, cell = f.samples, f.grid.cell
    else:
        if cell is None:
            raise ValueError("cell is required for plain arrays")
        samples = np.asarray(f)
    a = np.abs(samples) ** p
    if w is not None:
        w = w.samples if isinstance(w, GridFunction) else np.asarray(w)
        if w.shape != a.shape:
            raise GridMismatch("weight shape does not match the function")
        a = a * w
    return float((cell * a.sum()) ** (1.0 / p))
