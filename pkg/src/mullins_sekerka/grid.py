"""Uniform periodized grid on [-L, L) and the spectral toolbox built on it.

Every field in the package is a :class:`GridFunction`.  Derivatives, the
Hilbert transform and interpolation all act on the trigonometric interpolant
of the periodized samples.  The Hilbert transform uses the kernel
``(1/pi) PV int u(x - s) / s ds``, i.e. the Fourier symbol ``-i sgn(k)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import GridMismatch, InvalidArgument, InvalidData, OutOfRange

#: fraction of the domain (at each end together) treated as guard band
GUARD_FRACTION = 0.1
DEFAULT_TAIL_THRESHOLD = 1e-10


@dataclass(frozen=True)
class Grid:
    """``n`` equispaced nodes ``x_j = -L + j h`` with ``h = 2L/n``."""

    half_length: float
    n: int

    def __post_init__(self):
        L = float(self.half_length)
        if not np.isfinite(L) or L <= 0:
            raise InvalidArgument(f"half_length must be positive and finite, got {self.half_length!r}")
        n = self.n
        if int(n) != n or n < 16 or (n & (n - 1)) != 0:
            raise InvalidArgument(f"n must be a power of two >= 16, got {n!r}")
        object.__setattr__(self, "half_length", L)
        object.__setattr__(self, "n", int(n))

    @property
    def L(self) -> float:
        return self.half_length

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = -self.half_length + self.h * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Nonnegative wavenumbers ``pi m / L``, m = 0..n/2, in rfft order."""
        k = np.pi * np.arange(self.n // 2 + 1) / self.half_length
        k.setflags(write=False)
        return k

    def scaled(self, factor: float) -> "Grid":
        """Same node count on ``[-L/factor, L/factor)``."""
        return Grid(self.half_length / factor, self.n)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self, fn(np.asarray(self.nodes)))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a function on a :class:`Grid` (immutable)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise InvalidArgument(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise InvalidData(f"non-finite sample at node {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def _other(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.grid, fn(self.values))


def check_same_grid(*fns: GridFunction) -> Grid:
    grid = fns[0].grid
    for g in fns[1:]:
        if g.grid != grid:
            raise GridMismatch(f"grid mismatch: {grid} vs {g.grid}")
    return grid


# -- array-level kernels (used internally for speed) -------------------------

def _derivative_symbol(grid: Grid, order: int) -> np.ndarray:
    sym = (1j * grid.wavenumbers) ** order
    if order % 2:
        sym[-1] = 0.0
    return sym


def derivative_values(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    return np.fft.irfft(np.fft.rfft(values, axis=0) * _sym_axis(_derivative_symbol(grid, order), values),
                        n=grid.n, axis=0)


def hilbert_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    sym = -1j * np.ones(grid.n // 2 + 1)
    sym[0] = 0.0
    sym[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(values, axis=0) * _sym_axis(sym, values), n=grid.n, axis=0)


def multiplier_values(values: np.ndarray, grid: Grid, symbol: np.ndarray) -> np.ndarray:
    """Apply a real-valued even Fourier multiplier given on rfft wavenumbers."""
    return np.fft.irfft(np.fft.rfft(values, axis=0) * _sym_axis(symbol, values), n=grid.n, axis=0)


def _sym_axis(sym, values):
    return sym if np.ndim(values) == 1 else sym[:, None]


# -- public operations --------------------------------------------------------

def spectral_derivative(u: GridFunction, order: int = 1) -> GridFunction:
    """Derivative of the trigonometric interpolant of ``u``.

    Odd orders drop the Nyquist mode, so the result is the derivative of a
    real interpolant and has zero mean up to roundoff.
    """
    if int(order) != order or order <= 0:
        raise InvalidArgument(f"order must be a positive integer, got {order!r}")
    return GridFunction(u.grid, derivative_values(u.values, u.grid, int(order)))


def hilbert_transform(u: GridFunction) -> GridFunction:
    """Modewise ``-i sgn(k)``; constant and Nyquist modes go to zero."""
    return GridFunction(u.grid, hilbert_values(u.values, u.grid))


def antiderivative(u: GridFunction) -> GridFunction:
    """Zero-mean periodic antiderivative of the mean-free part of ``u``."""
    grid = u.grid
    k = grid.wavenumbers
    uh = np.fft.rfft(u.values)
    out = np.zeros_like(uh)
    out[1:-1] = uh[1:-1] / (1j * k[1:-1])
    return GridFunction(grid, np.fft.irfft(out, n=grid.n))


def upsample(u: GridFunction, factor: int) -> GridFunction:
    """Trigonometric interpolant of ``u`` sampled on ``factor * n`` nodes of the same interval."""
    if int(factor) != factor or factor < 1 or (factor & (factor - 1)):
        raise InvalidArgument(f"factor must be a power of two >= 1, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return u
    grid = u.grid
    fine = Grid(grid.L, grid.n * factor)
    c = np.fft.rfft(u.values)
    out = np.zeros(fine.n // 2 + 1, dtype=complex)
    out[:grid.n // 2] = c[:grid.n // 2]
    out[grid.n // 2] = 0.5 * c[grid.n // 2]  # Nyquist mode splits between +-k
    return GridFunction(fine, factor * np.fft.irfft(out, n=fine.n))


def interpolate(u: GridFunction, x):
    """Evaluate the trigonometric interpolant of ``u`` at ``x`` in ``[-L, L)``."""
    grid = u.grid
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < -grid.L) or np.any(xa >= grid.L):
        raise OutOfRange(f"interpolation point outside [-{grid.L}, {grid.L})")
    c = np.fft.rfft(u.values) / grid.n
    k = grid.wavenumbers
    xi = (xa.reshape(-1) + grid.L)[:, None]
    phase = np.exp(1j * xi * k[None, :])
    w = np.full(k.size, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    out = (phase * (w * c)[None, :]).real.sum(axis=1)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def inner(u: GridFunction, v: GridFunction) -> float:
    """Discrete L2 inner product ``h * sum(u v)``."""
    check_same_grid(u, v)
    return float(u.grid.h * np.dot(u.values, v.values))


def l2_norm(u: GridFunction) -> float:
    return float(np.sqrt(u.grid.h * np.dot(u.values, u.values)))


def max_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))


def mean(u: GridFunction) -> float:
    return float(np.mean(u.values))


def guard_mask(grid: Grid) -> np.ndarray:
    """Nodes in the outer 10% of the domain."""
    return np.abs(np.asarray(grid.nodes)) >= (1.0 - GUARD_FRACTION) * grid.L


def tail_magnitude(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values[guard_mask(u.grid)])))


def is_admissible(u: GridFunction, threshold: float = DEFAULT_TAIL_THRESHOLD) -> bool:
    """True when ``u`` has decayed below ``threshold * max|u|`` in the guard band."""
    return tail_magnitude(u) <= threshold * max_norm(u)
