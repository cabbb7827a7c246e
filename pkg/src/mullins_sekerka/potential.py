"""Off-interface evaluation of the harmonic fields and their boundary traces.

The interface is ``z(s) = s + i f(s)``.  With ``r = (x + iy) - z(s)`` the
real-line kernel ``1/r`` is replaced by its ``2L``-periodic image sum
``G(r) = (pi/2L) cot(pi r / 2L)``, matching the periodized operators of
:mod:`mullins_sekerka.sio`.  In this notation

* velocity:       ``v = (1/2pi) int (Im G, Re G) alpha ds``
* potential:      ``U = (1/2pi) int Re[z'(s) G] phi ds``
* gradient (a):   ``grad U = (1/2pi) int (Re W, -Im W) phi ds``,  ``W = z'(s) G'(r)``
* gradient (b):   ``grad U = (1/2pi) int (Re G, -Im G) phi' ds``

(a) and (b) differ by an integration by parts, so their discrepancy is a
quadrature diagnostic.  Off the interface the integrands are smooth and
periodic, and the trapezoid rule converges like ``exp(-2 pi d / h)`` in the
distance ``d`` to the interface.  The side ``plus`` is ``y > f(x)``; the unit
normal ``nu = (-f', 1)/sqrt(1 + f'^2)`` points into it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidStencil, NearSingularWarning
from .grid import GridFunction, antiderivative, check_same_grid, derivative_values, interpolate, upsample
from .sio import B0Operators

SIDES = ("plus", "minus")
TRACE_DISTANCES = (4.0, 8.0, 16.0)  # in quadrature spacings
TRACE_UPSAMPLE = 16
_CHUNK = 256


@dataclass(frozen=True)
class FieldSample:
    """A field value at an off-interface point.

    ``error_estimate`` is ``|Q_h - Q_2h|`` for the trapezoid sums on the full
    and the every-other-node grid; ``discrepancy`` is set only for gradients
    (difference between the two gradient formulas).
    """

    point: tuple
    value: object
    side: str
    distance: float
    error_estimate: float
    discrepancy: float | None = None


# -- kernels ------------------------------------------------------------------

def _cot_and_csc2(z: np.ndarray):
    """``cot z`` and ``csc^2 z`` without overflow for large ``|Im z|``."""
    upper = z.imag >= 0
    q = np.exp(np.where(upper, 2j * z, -2j * z))
    cot = np.where(upper, -1j, 1j) * (1 + q) / (1 - q)
    csc2 = -4.0 * q / (1 - q) ** 2
    return cot, csc2


def _wrap(grid, x):
    L = grid.L
    return (np.asarray(x, dtype=float) + L) % (2 * L) - L


def _source(f: GridFunction):
    grid = f.grid
    fp = derivative_values(f.values, grid, 1)
    w = np.asarray(grid.nodes) + 1j * f.values
    return w, 1.0 + 1j * fp


def _quadrature(grid, integrand_rows: np.ndarray):
    """Trapezoid on all nodes and on the even nodes, per evaluation point."""
    h = grid.h
    full = h * integrand_rows.sum(axis=-1)
    half = 2 * h * integrand_rows[..., ::2].sum(axis=-1)
    return full, half


def _kernel(grid, points: np.ndarray, w: np.ndarray):
    c = np.pi / (2 * grid.L)
    r = points[:, None] - w[None, :]
    cot, csc2 = _cot_and_csc2(c * r)
    return c * cot, -c * c * csc2  # G and G'


def _batched(points: np.ndarray, fn):
    out = [fn(points[i:i + _CHUNK]) for i in range(0, points.size, _CHUNK)]
    return tuple(np.concatenate(parts) for parts in zip(*out))


def _as_points(x, y) -> tuple[np.ndarray, tuple]:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return (x + 1j * y).reshape(-1), x.shape


# -- geometry -----------------------------------------------------------------

def interface_height(f: GridFunction, x):
    """``f`` at arbitrary ``x`` (periodically wrapped into ``[-L, L)``)."""
    return interpolate(f, _wrap(f.grid, x))


def side_of(f: GridFunction, point) -> str:
    x, y = point
    gap = y - interface_height(f, x)
    if gap == 0:
        raise InvalidArgument(f"point {point} lies on the interface")
    return "plus" if gap > 0 else "minus"


def interface_distance(f: GridFunction, point) -> float:
    """Distance to the nearest interface node, accounting for periodicity."""
    grid = f.grid
    x, y = point
    dx = _wrap(grid, x - np.asarray(grid.nodes))
    return float(np.min(np.hypot(dx, y - f.values)))


def _check_point(f, point):
    x, y = map(float, point)
    if not (np.isfinite(x) and np.isfinite(y)):
        raise InvalidArgument(f"point must be finite, got {point!r}")
    side = side_of(f, (x, y))
    dist = interface_distance(f, (x, y))
    if dist < f.grid.h:
        warnings.warn(
            f"point {point} is {dist:.3g} from the interface (< h = {f.grid.h:.3g}); "
            "quadrature is near-singular", NearSingularWarning, stacklevel=3)
    return (x, y), side, dist


# -- vectorized fields --------------------------------------------------------

def velocity_field(f: GridFunction, alpha: GridFunction, x, y, with_error: bool = False):
    """``(v1, v2)`` at the points ``(x, y)`` (arrays broadcast together)."""
    grid = check_same_grid(f, alpha)
    pts, shape = _as_points(x, y)
    w, _ = _source(f)
    a = alpha.values / (2 * np.pi)

    def block(p):
        G, _ = _kernel(grid, p, w)
        full, half = _quadrature(grid, G * a)
        return full, half

    full, half = _batched(pts, block)
    v = np.stack([full.imag, full.real], axis=-1).reshape(shape + (2,))
    if with_error:
        return v, np.abs(full - half).reshape(shape)
    return v


def potential_field(f: GridFunction, phi: GridFunction, x, y, with_error: bool = False):
    grid = check_same_grid(f, phi)
    pts, shape = _as_points(x, y)
    w, zp = _source(f)
    p = phi.values / (2 * np.pi)

    def block(pt):
        G, _ = _kernel(grid, pt, w)
        return _quadrature(grid, (zp * G).real * p)

    full, half = _batched(pts, block)
    if with_error:
        return full.reshape(shape), np.abs(full - half).reshape(shape)
    return full.reshape(shape)


def gradient_field(f: GridFunction, phi: GridFunction, x, y, formula: str = "dphi",
                   with_error: bool = False):
    """``grad U``; ``formula`` is ``"dphi"`` (density ``phi'``) or ``"phi"``
    (differentiated kernel against ``phi``)."""
    if formula not in ("dphi", "phi"):
        raise InvalidArgument(f"formula must be 'dphi' or 'phi', got {formula!r}")
    grid = check_same_grid(f, phi)
    pts, shape = _as_points(x, y)
    w, zp = _source(f)
    if formula == "dphi":
        dens = derivative_values(phi.values, grid, 1) / (2 * np.pi)
    else:
        dens = phi.values / (2 * np.pi)

    def block(pt):
        G, dG = _kernel(grid, pt, w)
        K = G if formula == "dphi" else zp * dG
        return _quadrature(grid, K * dens)

    full, half = _batched(pts, block)
    g = np.stack([full.real, -full.imag], axis=-1).reshape(shape + (2,))
    if with_error:
        return g, np.abs(full - half).reshape(shape)
    return g


# -- point evaluators ---------------------------------------------------------

def eval_velocity(f: GridFunction, alpha: GridFunction, point) -> FieldSample:
    """Velocity ``(v1, v2)`` at one off-interface point."""
    pt, side, dist = _check_point(f, point)
    v, err = velocity_field(f, alpha, pt[0], pt[1], with_error=True)
    return FieldSample(pt, (float(v[0]), float(v[1])), side, dist, float(err))


def eval_U(f: GridFunction, phi: GridFunction, point) -> FieldSample:
    pt, side, dist = _check_point(f, point)
    u, err = potential_field(f, phi, pt[0], pt[1], with_error=True)
    return FieldSample(pt, float(u), side, dist, float(err))


def eval_U_and_grad(f: GridFunction, phi: GridFunction, point) -> tuple[FieldSample, FieldSample]:
    """``U`` and ``grad U`` at one point.

    The gradient returned is the ``phi'`` form; the ``phi`` form is computed
    alongside and their max-norm difference, relative to the gradient size,
    is stored in ``discrepancy``.
    """
    pt, side, dist = _check_point(f, point)
    u, uerr = potential_field(f, phi, pt[0], pt[1], with_error=True)
    g1, err = gradient_field(f, phi, pt[0], pt[1], "dphi", with_error=True)
    g2 = gradient_field(f, phi, pt[0], pt[1], "phi")
    scale = float(np.max(np.abs(g1)))
    diff = float(np.max(np.abs(g1 - g2)))
    disc = diff / scale if scale > 0 else diff
    return (FieldSample(pt, float(u), side, dist, float(uerr)),
            FieldSample(pt, (float(g1[0]), float(g1[1])), side, dist, float(err), disc))


def harmonicity_residual(field: Callable[[float, float], float], point, step: float,
                         interface: GridFunction | None = None) -> float:
    """``|five-point Laplacian|`` of a scalar field at ``point``.

    With ``interface`` given, every stencil node must lie on the side of the
    centre, otherwise :class:`InvalidStencil` is raised.
    """
    if not (np.isfinite(step) and step > 0):
        raise InvalidArgument(f"step must be positive, got {step!r}")
    x, y = map(float, point)
    stencil = [(x, y), (x + step, y), (x - step, y), (x, y + step), (x, y - step)]
    if interface is not None:
        sides = {side_of(interface, p) for p in stencil}
        if len(sides) > 1:
            raise InvalidStencil(f"stencil of size {step} at {point} crosses the interface")
    u = [float(field(px, py)) for px, py in stencil]
    return abs(sum(u[1:]) - 4 * u[0]) / step ** 2


# -- boundary traces ----------------------------------------------------------

def _check_side(side):
    if side not in SIDES:
        raise InvalidArgument(f"side must be 'plus' or 'minus', got {side!r}")
    return 1.0 if side == "plus" else -1.0


def unit_normal(f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    fp = derivative_values(f.values, f.grid, 1)
    s = np.sqrt(1.0 + fp * fp)
    return -fp / s, 1.0 / s


def extrapolated_trace(f: GridFunction, field: Callable, side: str,
                       distances=TRACE_DISTANCES, spacing: float | None = None) -> np.ndarray:
    """Limit of ``field`` at each interface node from ``side``.

    ``field(X, Y)`` is evaluated along the normal at ``d * spacing`` for each
    ``d`` in ``distances`` (``spacing`` defaults to the grid step) and the
    values are extrapolated to distance 0 with the interpolating polynomial.
    """
    sign = _check_side(side)
    grid = f.grid
    nx, ny = unit_normal(f)
    x0 = np.asarray(grid.nodes)
    d = np.asarray(distances, dtype=float) * (spacing or grid.h)
    vals = [np.asarray(field(x0 + sign * di * nx, f.values + sign * di * ny)) for di in d]
    # Lagrange weights for evaluation at 0
    wts = [np.prod([dj / (dj - di) for dj in d if dj != di]) for di in d]
    return sum(w * v for w, v in zip(wts, vals))


def _fine(f, density, factor):
    """Upsampled copies used as quadrature sources near the interface.

    The extrapolation error scales like the cube of the largest distance, so
    evaluating from a ``factor``-times finer source grid shrinks it by
    ``factor**3`` at unchanged quadrature accuracy.
    """
    check_same_grid(f, density)
    ff, df = upsample(f, factor), upsample(density, factor)
    return ff, df, ff.grid.h


def trace_velocity(f: GridFunction, alpha: GridFunction, side: str):
    """One-sided interface limit of the velocity via the PV operators plus
    the local term ``-/+ (1/2) alpha (1, f') / (1 + f'^2)``."""
    sign = _check_side(side)
    check_same_grid(f, alpha)
    ops = B0Operators(f)
    a = alpha.values
    fp = ops.fp
    local = -sign * 0.5 * a / (1.0 + fp * fp)
    v1 = -0.5 * ops.B11(a) + local
    v2 = 0.5 * ops.B01(a) + local * fp
    return GridFunction(f.grid, v1), GridFunction(f.grid, v2)


def trace_U(f: GridFunction, phi: GridFunction) -> GridFunction:
    """Interface value of ``U`` (continuous across): ``-(1/2) B(f)^* [phi]``."""
    check_same_grid(f, phi)
    return GridFunction(f.grid, -0.5 * B0Operators(f).B_star(phi.values))


def extrapolated_velocity_trace(f: GridFunction, alpha: GridFunction, side: str,
                                distances=TRACE_DISTANCES, upsample_factor: int = TRACE_UPSAMPLE):
    ff, af, hf = _fine(f, alpha, upsample_factor)
    v = extrapolated_trace(f, lambda X, Y: velocity_field(ff, af, X, Y), side, distances, hf)
    return GridFunction(f.grid, v[:, 0]), GridFunction(f.grid, v[:, 1])


def extrapolated_U_trace(f: GridFunction, phi: GridFunction, side: str,
                         distances=TRACE_DISTANCES, upsample_factor: int = TRACE_UPSAMPLE) -> GridFunction:
    ff, pf, hf = _fine(f, phi, upsample_factor)
    u = extrapolated_trace(f, lambda X, Y: potential_field(ff, pf, X, Y), side, distances, hf)
    return GridFunction(f.grid, u)


def extrapolated_normal_derivative(f: GridFunction, phi: GridFunction, side: str,
                                   distances=TRACE_DISTANCES,
                                   upsample_factor: int = TRACE_UPSAMPLE) -> GridFunction:
    nx, ny = unit_normal(f)
    ff, pf, hf = _fine(f, phi, upsample_factor)
    g = extrapolated_trace(f, lambda X, Y: gradient_field(ff, pf, X, Y), side, distances, hf)
    return GridFunction(f.grid, nx * g[:, 0] + ny * g[:, 1])


def normal_derivative_jump(f: GridFunction, phi: GridFunction, distances=TRACE_DISTANCES,
                           upsample_factor: int = TRACE_UPSAMPLE) -> GridFunction:
    """``d_nu U (plus) - d_nu U (minus)`` from extrapolated one-sided traces."""
    return (extrapolated_normal_derivative(f, phi, "plus", distances, upsample_factor)
            - extrapolated_normal_derivative(f, phi, "minus", distances, upsample_factor))


def velocity_normal_trace(f: GridFunction, alpha: GridFunction) -> GridFunction:
    """``nu . v`` on the interface, ``(1 + f'^2)^{-1/2} B(f)[alpha] / 2`` (same on both sides)."""
    ops = B0Operators(f)
    return GridFunction(f.grid, 0.5 * ops.B(alpha.values) / np.sqrt(1.0 + ops.fp ** 2))


def dirichlet_reconstruction(f: GridFunction, alpha: GridFunction, side: str,
                             extrapolate: bool = True,
                             upsample_factor: int = TRACE_UPSAMPLE) -> GridFunction:
    """Interface values of ``u`` with ``grad u = v``, pinned to 0 at ``x = -L``.

    The tangential derivative ``(1, f') . v`` of the one-sided trace is
    integrated spectrally.  ``extrapolate=False`` uses the PV trace formula
    instead of field evaluations.
    """
    if extrapolate:
        v1, v2 = extrapolated_velocity_trace(f, alpha, side, upsample_factor=upsample_factor)
    else:
        v1, v2 = trace_velocity(f, alpha, side)
    fp = derivative_values(f.values, f.grid, 1)
    u = antiderivative(v1 + v2 * fp).values
    return GridFunction(f.grid, u - u[0])


__all__ = [
    "FieldSample", "SIDES", "TRACE_DISTANCES", "TRACE_UPSAMPLE", "eval_velocity", "eval_U", "eval_U_and_grad",
    "velocity_field", "potential_field", "gradient_field", "harmonicity_residual",
    "interface_height", "side_of", "interface_distance", "unit_normal", "extrapolated_trace",
    "trace_velocity", "trace_U", "extrapolated_velocity_trace", "extrapolated_U_trace",
    "extrapolated_normal_derivative", "normal_derivative_jump", "velocity_normal_trace",
    "dirichlet_reconstruction",
]
