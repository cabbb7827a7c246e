"""Resolvent solves ``(lam - A(f)) x = rhs``, ``(lam - A(f)^*) x = rhs`` and the
layer densities built from them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgument, NumericalFailure, ResourceLimit
from .grid import GridFunction, check_same_grid, derivative_values, l2_norm
from .sio import B0Operators

DEFAULT_TOL = 1e-10
DEFAULT_MAX_N = 4096

_WHICH = ("A", "A_star")


def assemble_operator_matrix(f: GridFunction, which: str = "A", max_n: int = DEFAULT_MAX_N,
                             ops: B0Operators | None = None) -> np.ndarray:
    """Dense matrix of A(f) or A(f)^* acting on sample vectors.

    Column ``j`` is the operator applied to the ``j``-th nodal impulse.
    """
    if which not in _WHICH:
        raise InvalidArgument(f"which must be one of {_WHICH}, got {which!r}")
    if f.grid.n > max_n:
        raise ResourceLimit(f"n = {f.grid.n} exceeds the dense-assembly cap {max_n}")
    ops = ops or B0Operators(f)
    return ops.matrix(which)


@dataclass(frozen=True)
class ResolventSolution:
    x: GridFunction
    residual: float
    condition: float


class Resolvent:
    """LU factorization of ``lam I - M`` for repeated solves."""

    def __init__(self, lam: float, M: np.ndarray, tol: float = DEFAULT_TOL):
        if not np.isfinite(lam) or abs(lam) < 1:
            raise InvalidArgument(f"|lambda| must be >= 1, got {lam!r}")
        self.lam = float(lam)
        self.tol = tol
        self.system = lam * np.eye(M.shape[0]) - M
        try:
            self.lu = sla.lu_factor(self.system, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NumericalFailure(f"factorization failed: {exc}", condition=np.inf) from exc
        anorm = np.linalg.norm(self.system, 1)
        rcond, info = sla.lapack.dgecon(self.lu[0], anorm, norm="1")
        self.condition = np.inf if rcond == 0 else 1.0 / rcond

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, float]:
        x = sla.lu_solve(self.lu, rhs)
        nr = np.linalg.norm(rhs)
        res = 0.0 if nr == 0 else float(np.linalg.norm(self.system @ x - rhs) / nr)
        if not np.all(np.isfinite(x)) or res > self.tol:
            raise NumericalFailure(
                f"resolvent residual {res:.3e} above tolerance {self.tol:.1e} "
                f"(condition estimate {self.condition:.3e})",
                condition=self.condition, residual=res)
        return x, res


def solve_resolvent(lam: float, f: GridFunction, rhs: GridFunction, which: str = "A",
                    tol: float = DEFAULT_TOL) -> ResolventSolution:
    """Solve ``(lam - M) x = rhs`` for ``M`` in {A(f), A(f)^*}, ``|lam| >= 1``."""
    if not np.isfinite(lam) or abs(lam) < 1:
        raise InvalidArgument(f"|lambda| must be >= 1, got {lam!r}")
    check_same_grid(f, rhs)
    M = assemble_operator_matrix(f, which)
    R = Resolvent(lam, M, tol)
    x, res = R.solve(rhs.values)
    return ResolventSolution(GridFunction(f.grid, x), res, R.condition)


def neumann_series(f: GridFunction, rhs: GridFunction, lam: float, terms: int,
                   which: str = "A") -> GridFunction:
    """Partial sum ``lam^{-1} sum_{k<=K} (M/lam)^k rhs`` (oracle for small slopes)."""
    ops = B0Operators(f)
    apply = ops.A if which == "A" else ops.A_star
    term = rhs.values / lam
    total = term.copy()
    for _ in range(terms):
        term = apply(term) / lam
        total += term
    return GridFunction(f.grid, total)


@dataclass(frozen=True)
class DensitySet:
    """Layer densities of the two one-sided Dirichlet problems.

    ``alpha_pm = 2 (-/+1 + A(f))^{-1} [kappa']`` and
    ``beta_pm = 2 (-/+1 - A(f)^*)^{-1} [kappa]``; ``beta_pm' = alpha_pm``.
    """

    alpha_plus: GridFunction
    alpha_minus: GridFunction
    beta_plus: GridFunction
    beta_minus: GridFunction
    profile: GridFunction
    residuals: tuple  # same order as the four densities
    derivative_defect: tuple
    conditions: tuple


def compute_densities(f: GridFunction, kappa: GridFunction | None = None,
                      tol: float = DEFAULT_TOL) -> DensitySet:
    """Densities for profile ``f``.  ``kappa`` defaults to the curvature of ``f``."""
    if kappa is None:
        from .evolution import curvature
        kappa = curvature(f)
    check_same_grid(f, kappa)
    grid = f.grid
    ops = B0Operators(f)
    MA = ops.matrix("A")
    MS = MA.T.copy()  # A^* is the transpose of A on the uniform grid
    dk = derivative_values(kappa.values, grid, 1)
    sols, res, conds = {}, {}, {}
    for sign, name in ((1.0, "plus"), (-1.0, "minus")):
        # (-/+1 + A) alpha = 2 kappa'  <=>  (+/-1 - A) alpha = -2 kappa'
        RA = Resolvent(sign, MA, tol)
        sols["alpha_" + name], res["alpha_" + name] = RA.solve(-2.0 * dk)
        conds["alpha_" + name] = RA.condition
        # (-/+1 - A^*) beta = 2 kappa
        RS = Resolvent(-sign, MS, tol)
        sols["beta_" + name], res["beta_" + name] = RS.solve(2.0 * kappa.values)
        conds["beta_" + name] = RS.condition
    order = ("alpha_plus", "alpha_minus", "beta_plus", "beta_minus")
    out = {k: GridFunction(grid, sols[k]) for k in order}
    defects = []
    for name in ("plus", "minus"):
        a, b = out["alpha_" + name], out["beta_" + name]
        na = l2_norm(a)
        d = l2_norm(GridFunction(grid, derivative_values(b.values, grid, 1) - a.values))
        defects.append(d / na if na > 0 else d)
    return DensitySet(*(out[k] for k in order), f,
                      tuple(res[k] for k in order), tuple(defects), tuple(conds[k] for k in order))
