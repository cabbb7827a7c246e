"""Singular integral operators B_{n,m}, A(f), B(f) and their adjoints.

The operators act on 2L-periodic samples, so the Cauchy kernel ``1/s`` is
replaced by its periodic image sum ``sum_k 1/(s + 2Lk)``.  For data that
decays inside the guard band this is the real-line operator up to the tail
mass, and it keeps the identities between the operators (adjoints,
derivative relations) exact at the continuous level.

Main path: alternate-point trapezoidal rule.  For a target node ``x_j`` only
sources at odd offsets ``s = (2l+1) h`` contribute, each with weight ``2h``;
the principal value comes out of the symmetry of the stencil.

Oracle path (:func:`oracle_apply_Bnm`): full trapezoidal rule over every
source node, singular node excluded, with the removable value of the
regularized integrand inserted from the limits of the difference quotients.
The periodic kernel is also evaluated independently there.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import InvalidArgument, NumericalFailure, ResourceLimit
from .grid import Grid, GridFunction, check_same_grid, derivative_values

MAX_MATRIX_SIZE = 4096


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Denominator functions ``a_1..a_m`` and numerator functions ``b_1..b_n``."""

    a_list: tuple = ()
    b_list: tuple = ()

    def __post_init__(self):
        a = tuple(self.a_list)
        b = tuple(self.b_list)
        object.__setattr__(self, "a_list", a)
        object.__setattr__(self, "b_list", b)
        if a or b:
            check_same_grid(*(a + b))

    @classmethod
    def b0(cls, f: GridFunction, n: int, m: int) -> "KernelSpec":
        """The shorthand ``B^0_{n,m}(f)``: every a_i and b_i equal to ``f``."""
        return cls((f,) * m, (f,) * n)

    @property
    def n(self) -> int:
        return len(self.b_list)

    @property
    def m(self) -> int:
        return len(self.a_list)

    @property
    def grid(self) -> Grid | None:
        funcs = self.a_list + self.b_list
        return funcs[0].grid if funcs else None

    def is_b0(self) -> bool:
        if self.m != 1:
            return False
        a = self.a_list[0].values
        return all(b is self.a_list[0] or np.array_equal(b.values, a) for b in self.b_list)


# -- stencil -----------------------------------------------------------------

def odd_offsets(grid: Grid) -> np.ndarray:
    """Odd integer offsets covering one period, symmetric about zero."""
    half = grid.n // 2
    return np.arange(-(half - 1), half, 2)


def _source_index(grid: Grid, offsets: np.ndarray) -> np.ndarray:
    return (np.arange(grid.n)[:, None] - offsets[None, :]) % grid.n


def _differences(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``delta_[x,s] u = u(x) - u(x - s)`` on the stencil."""
    return values[:, None] - values[idx]


# -- periodic kernels: main path -------------------------------------------------

def _b0_kernels(L: float, s: np.ndarray, delta: np.ndarray, nmax: int):
    """Periodic kernels of B^0_{0,1}, B^0_{1,1}, B^0_{2,1} in closed form.

    With ``w = s + i delta`` these are ``Re G(w)``, ``-Im G(w)`` and
    ``G(s) - Re G(w)`` where ``G(w) = (pi/2L) cot(pi w / 2L)``.
    """
    c0 = np.pi / (2.0 * L)
    a = c0 * s
    b = c0 * delta
    den = 2.0 * (np.sinh(b) ** 2 + np.sin(a) ** 2)
    k01 = c0 * np.sin(2.0 * a) / den
    out = [k01]
    if nmax >= 1:
        out.append(c0 * np.sinh(2.0 * b) / den)
    if nmax >= 2:
        out.append(c0 / np.tan(a) - k01)
    return out


def _series_coeffs(d2_list, order):
    """Coefficients of ``prod_i 1/(1 + d_i^2 u)`` up to ``u^order``."""
    shape = d2_list[0].shape if d2_list else ()
    coeffs = [np.ones(shape)] + [np.zeros(shape) for _ in range(order)]
    for d2 in d2_list:
        new = [c.copy() for c in coeffs]
        for j in range(1, order + 1):
            new[j] = coeffs[j] - d2 * new[j - 1]
        coeffs = new
    return coeffs


def _image_tail(p: int, q: np.ndarray, K: int, L: float) -> np.ndarray:
    """``sum_{|k|>K} (s + 2Lk)^{-p}`` with ``q = s/2L``."""
    if p == 1:
        return (special.digamma(K + 1 - q) - special.digamma(K + 1 + q)) / (2.0 * L)
    return (special.zeta(p, K + 1 + q) + (-1) ** p * special.zeta(p, K + 1 - q)) / (2.0 * L) ** p


def _generic_kernel(L, s, Da, Db, n_images=2, n_terms=4):
    """Image sum of ``prod(Db/s) / prod(1 + (Da/s)^2) / s`` for general specs.

    Images ``|k| <= n_images`` are summed directly; beyond that the large-s
    expansion is summed exactly through Hurwitz zeta / digamma values.
    """
    total = 0.0
    for k in range(-n_images, n_images + 1):
        sig = s + 2.0 * L * k
        term = 1.0 / sig
        for d in Db:
            term = term * (d / sig)
        for d in Da:
            term = term / (1.0 + (d / sig) ** 2)
        total = total + term
    C = 1.0
    for d in Db:
        C = C * d
    coeffs = _series_coeffs([d * d for d in Da], n_terms)
    q = s / (2.0 * L)
    p0 = len(Db) + 1
    for j, e in enumerate(coeffs):
        total = total + C * e * _image_tail(p0 + 2 * j, q, n_images, L)
    return total


def kernel_table(spec: KernelSpec, grid: Grid | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature weights ``W`` and source indices for the alternate-point rule.

    ``B[alpha]_j = sum_c W[j, c] * alpha[idx[j, c]]``.
    """
    grid = spec.grid or grid
    if grid is None:
        raise InvalidArgument("kernel spec without functions needs an explicit grid")
    offs = odd_offsets(grid)
    idx = _source_index(grid, offs)
    s = (offs * grid.h)[None, :]
    if spec.is_b0() and spec.n <= 2:
        delta = _differences(spec.a_list[0].values, idx)
        K = _b0_kernels(grid.L, s, delta, spec.n)[spec.n]
    else:
        Da = [_differences(a.values, idx) for a in spec.a_list]
        Db = [_differences(b.values, idx) for b in spec.b_list]
        K = _generic_kernel(grid.L, np.broadcast_to(s, idx.shape), Da, Db)
    W = (2.0 * grid.h / np.pi) * np.broadcast_to(K, idx.shape)
    _check_finite(W)
    return W, idx


def _check_finite(W):
    bad = ~np.isfinite(W)
    if bad.any():
        node = int(np.flatnonzero(bad.any(axis=1))[0])
        raise NumericalFailure(f"non-finite kernel value at target node {node}", node=node)


def _apply_table(W, idx, alpha: np.ndarray) -> np.ndarray:
    if alpha.ndim == 1:
        return np.einsum("jc,jc->j", W, alpha[idx])
    return np.einsum("jc,jck->jk", W, alpha[idx])


def _table_matrix(W, idx) -> np.ndarray:
    n = W.shape[0]
    M = np.zeros((n, n))
    M[np.arange(n)[:, None], idx] = W
    return M


def apply_Bnm(spec: KernelSpec, alpha: GridFunction) -> GridFunction:
    """Alternate-point quadrature of ``B_{n,m}(a)[b, alpha]``."""
    grid = spec.grid or alpha.grid
    if spec.grid is not None:
        check_same_grid(alpha, *(spec.a_list + spec.b_list))
    W, idx = kernel_table(spec, grid)
    return GridFunction(grid, _apply_table(W, idx, alpha.values))


def Bnm_matrix(spec: KernelSpec, grid: Grid | None = None) -> np.ndarray:
    grid = spec.grid or grid
    _check_size(grid)
    return _table_matrix(*kernel_table(spec, grid))


def _check_size(grid, cap=None):
    cap = MAX_MATRIX_SIZE if cap is None else cap
    if grid.n > cap:
        raise ResourceLimit(f"dense matrix of size {grid.n} exceeds cap {cap}")


# -- A(f), B(f) ---------------------------------------------------------------

class B0Operators:
    """``B^0_{0,1}(f)`` and ``B^0_{1,1}(f)`` with A(f), B(f) built on top.

    The kernel tables are computed once per profile; all methods take plain
    arrays (1-D, or 2-D with one vector per column).
    """

    def __init__(self, f: GridFunction):
        self.f = f
        self.grid = f.grid
        self.fp = derivative_values(f.values, self.grid, 1)
        offs = odd_offsets(self.grid)
        self.idx = _source_index(self.grid, offs)
        s = (offs * self.grid.h)[None, :]
        delta = _differences(f.values, self.idx)
        k01, k11 = _b0_kernels(self.grid.L, s, delta, 1)
        scale = 2.0 * self.grid.h / np.pi
        self.W01 = scale * np.broadcast_to(k01, self.idx.shape)
        self.W11 = scale * k11
        _check_finite(self.W01)
        _check_finite(self.W11)

    def _fp(self, v):
        return self.fp * v if v.ndim == 1 else self.fp[:, None] * v

    def B01(self, v):
        return _apply_table(self.W01, self.idx, v)

    def B11(self, v):
        return _apply_table(self.W11, self.idx, v)

    def A(self, v):
        return self._fp(self.B01(v)) - self.B11(v)

    def A_star(self, v):
        return self.B11(v) - self.B01(self._fp(v))

    def B(self, v):
        return self.B01(v) + self._fp(self.B11(v))

    def B_star(self, v):
        return -self.B01(v) - self.B11(self._fp(v))

    def matrix(self, which: str) -> np.ndarray:
        """Dense matrix of ``A``, ``A_star``, ``B`` or ``B_star``."""
        M01 = _table_matrix(self.W01, self.idx)
        M11 = _table_matrix(self.W11, self.idx)
        fp = self.fp
        if which == "A":
            return fp[:, None] * M01 - M11
        if which == "A_star":
            return M11 - M01 * fp[None, :]
        if which == "B":
            return M01 + fp[:, None] * M11
        if which == "B_star":
            return -M01 - M11 * fp[None, :]
        raise InvalidArgument(f"unknown operator {which!r}")


def apply_A(f: GridFunction, alpha: GridFunction, adjoint: bool = False) -> GridFunction:
    """``A(f)[alpha] = f' B^0_{0,1}[alpha] - B^0_{1,1}[alpha]``, or its adjoint."""
    check_same_grid(f, alpha)
    ops = B0Operators(f)
    out = ops.A_star(alpha.values) if adjoint else ops.A(alpha.values)
    return GridFunction(f.grid, out)


def apply_B(f: GridFunction, alpha: GridFunction, adjoint: bool = False) -> GridFunction:
    """``B(f)[alpha] = B^0_{0,1}[alpha] + f' B^0_{1,1}[alpha]``, or its adjoint."""
    check_same_grid(f, alpha)
    ops = B0Operators(f)
    out = ops.B_star(alpha.values) if adjoint else ops.B(alpha.values)
    return GridFunction(f.grid, out)


# -- oracle -------------------------------------------------------------------

ORACLE_IMAGES = 48


def _oracle_periodic_kernel(L, s, Da, Db, K=ORACLE_IMAGES):
    """Brute-force image sum with an Euler-Maclaurin tail on the two leading
    large-s terms.  Shares no code with the main path."""
    total = np.zeros(np.broadcast_shapes(s.shape, *(d.shape for d in Da + Db)))
    for k in range(-K, K + 1):
        sig = s + 2.0 * L * k
        num = np.ones_like(total)
        for d in Db:
            num = num * d / sig
        den = np.ones_like(total)
        for d in Da:
            den = den * (1.0 + (d / sig) ** 2)
        total += num / den / sig
    C = np.ones_like(total)
    for d in Db:
        C = C * d
    d2sum = np.zeros_like(total)
    for d in Da:
        d2sum = d2sum + d * d
    p0 = len(Db) + 1
    for p, coef in ((p0, C), (p0 + 2, -C * d2sum)):
        total += coef * _em_tail(p, s, L, K)
    return total


def _em_tail(p, s, L, K):
    """``sum_{k>K} [(s+2Lk)^{-p} + (s-2Lk)^{-p}]`` by Euler-Maclaurin."""
    c = 2.0 * L
    if p == 1:
        integral = -np.log((c * K + s) / (c * K - s)) / c
    else:
        integral = ((s + c * K) ** (1 - p) - (s - c * K) ** (1 - p)) / (c * (p - 1))
    corr = 0.0
    for cc in (c, -c):
        base = s + cc * K
        g = base ** (-p)
        g1 = -p * cc * base ** (-p - 1)
        g3 = -p * (p + 1) * (p + 2) * cc ** 3 * base ** (-p - 3)
        corr = corr - g / 2.0 - g1 / 12.0 + g3 / 720.0
    return integral + corr


def oracle_apply_Bnm(spec: KernelSpec, alpha: GridFunction, chunk: int = 64) -> GridFunction:
    """Independent evaluation of ``B_{n,m}`` by the full trapezoidal rule.

    For each target the integrand ``K(x, s) alpha(x - s)`` is regularized by
    subtracting ``c(x) alpha(x) G(s)`` (``G`` the periodic Hilbert kernel,
    which integrates to zero).  The regularized integrand is smooth with
    value at ``s = 0`` equal to ``d/ds [s K(x, s) alpha(x - s)]``, built from
    the limits ``delta u / s -> u'`` and ``d/ds (delta u / s) -> -u''/2``.
    """
    grid = alpha.grid
    if spec.grid is not None:
        check_same_grid(alpha, *(spec.a_list + spec.b_list))
    n, h, L = grid.n, grid.h, grid.L
    av = alpha.values
    offs = np.array([m for m in range(-(n // 2) + 1, n // 2 + 1) if m != 0])
    s = offs * h
    out = np.empty(n)
    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        src = (rows[:, None] - offs[None, :]) % n
        Da = [a.values[rows][:, None] - a.values[src] for a in spec.a_list]
        Db = [b.values[rows][:, None] - b.values[src] for b in spec.b_list]
        Kmat = _oracle_periodic_kernel(L, s[None, :], Da, Db)
        out[rows] = h * np.sum(Kmat * av[src], axis=1)
    # removable value of the regularized integrand at s = 0
    q0 = [derivative_values(b.values, grid, 1) for b in spec.b_list]
    q1 = [-0.5 * derivative_values(b.values, grid, 2) for b in spec.b_list]
    r0 = [derivative_values(a.values, grid, 1) for a in spec.a_list]
    r1 = [-0.5 * derivative_values(a.values, grid, 2) for a in spec.a_list]
    num0 = np.prod(q0, axis=0) if q0 else np.ones(n)
    num1 = np.zeros(n)
    for i in range(len(q0)):
        term = q1[i]
        for l in range(len(q0)):
            if l != i:
                term = term * q0[l]
        num1 = num1 + term
    den0 = np.prod([1.0 + r * r for r in r0], axis=0) if r0 else np.ones(n)
    dlog_den = np.sum([2.0 * r0[i] * r1[i] / (1.0 + r0[i] ** 2) for i in range(len(r0))], axis=0) if r0 else 0.0
    P0 = num0 / den0
    P1 = num1 / den0 - P0 * dlog_den
    limit = P1 * av - P0 * derivative_values(av, grid, 1)
    out += h * limit
    out /= np.pi
    if not np.all(np.isfinite(out)):
        node = int(np.flatnonzero(~np.isfinite(out))[0])
        raise NumericalFailure(f"non-finite oracle value at target node {node}", node=node)
    return GridFunction(grid, out)


# -- matrix diagnostics --------------------------------------------------------

def operator_norm(M: np.ndarray, iterations: int = 500, seed: int = 0, rtol: float = 1e-12) -> float:
    """Spectral norm of ``M`` by power iteration on ``M^T M``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = np.sqrt(nw)
        if abs(new - est) <= rtol * new:
            return float(new)
        est = new
    return float(est)


def reduced_min_singular_value(M: np.ndarray) -> float:
    """Smallest singular value of ``M`` on the complement of the constant and
    Nyquist vectors (both are annihilated by the periodic Hilbert kernel)."""
    n = M.shape[0]
    ones = np.ones(n) / np.sqrt(n)
    alt = (-1.0) ** np.arange(n) / np.sqrt(n)
    Q, _ = np.linalg.qr(np.column_stack([ones, alt, np.eye(n)[:, : n - 2]]))
    basis = Q[:, 2:]
    return float(np.linalg.svd(M @ basis, compute_uv=False)[-1])
