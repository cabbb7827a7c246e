"""Quasilinear evolution ``df/dt = Phi(f)[f]`` and its semi-implicit stepper.

``Phi(f)[h] = ( B(f)^* [ ((-1 - A(f)^*)^{-1} - (1 - A(f)^*)^{-1}) [kappa(f)[h]] ] )'``
with ``kappa(f)[h] = h'' / (1 + f'^2)^{3/2}``.

At ``f = 0`` the operator reduces to ``2 H d^3/dx^3``.  With the Hilbert
symbol ``-i sgn(k)`` this is the multiplier ``-2|k|^3``, which the IMEX
scheme treats implicitly; the remainder ``Phi(f)[f] - Phi(0)[f]`` is explicit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpSuspected, InvalidArgument, InvalidData, NumericalFailure, RefuseStep
from .grid import Grid, GridFunction, derivative_values, multiplier_values
from .resolvent import DEFAULT_TOL, Resolvent
from .sio import B0Operators

log = logging.getLogger(__name__)

MAX_SLOPE = 10.0
TAIL_GUARD = 0.1


# -- curvature ---------------------------------------------------------------

def curvature(f: GridFunction) -> GridFunction:
    """``(f' / sqrt(1 + f'^2))'``, outer derivative spectral."""
    fp = derivative_values(f.values, f.grid, 1)
    out = derivative_values(fp / np.sqrt(1.0 + fp * fp), f.grid, 1)
    if not np.all(np.isfinite(out)):
        raise InvalidData("non-finite curvature")
    return GridFunction(f.grid, out)


def curvature_op(f: GridFunction, h: GridFunction) -> GridFunction:
    """Linear-in-``h`` curvature operator ``h'' / (1 + f'^2)^{3/2}``."""
    fp = derivative_values(f.values, f.grid, 1)
    hpp = derivative_values(h.values, h.grid, 2)
    return GridFunction(f.grid, hpp / (1.0 + fp * fp) ** 1.5)


# -- right-hand side ----------------------------------------------------------

def linear_symbol(grid: Grid) -> np.ndarray:
    """Symbol of ``Phi(0)`` on rfft wavenumbers: ``-2 |k|^3``."""
    return -2.0 * grid.wavenumbers ** 3


def apply_phi0(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, multiplier_values(f.values, f.grid, linear_symbol(f.grid)))


def rhs_phi(f: GridFunction, tol: float = DEFAULT_TOL) -> GridFunction:
    """``Phi(f)[f]``: curvature, two resolvent solves, ``B(f)^*``, derivative."""
    grid = f.grid
    fp = derivative_values(f.values, grid, 1)
    slope = float(np.max(np.abs(fp)))
    if not math.isfinite(slope) or slope > MAX_SLOPE:
        raise BlowUpSuspected(f"max slope {slope:.3g} exceeds {MAX_SLOPE}")
    kappa = curvature_op(f, f).values
    ops = B0Operators(f)
    MS = ops.matrix("A_star")
    theta_minus, _ = Resolvent(-1.0, MS, tol).solve(kappa)
    theta_plus, _ = Resolvent(1.0, MS, tol).solve(kappa)
    out = derivative_values(ops.B_star(theta_minus - theta_plus), grid, 1)
    return GridFunction(grid, out)


# -- diagnostics --------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics:
    mass: float
    energy: float
    max_slope: float
    linf: float
    spectral_tail: float

    FIELDS = ("mass", "energy", "max_slope", "linf", "spectral_tail")

    def as_tuple(self):
        return tuple(getattr(self, k) for k in self.FIELDS)


def spectral_tail(f: GridFunction) -> float:
    """Share of the discrete energy carried by the top octave ``n/4 < |m| <= n/2``."""
    fh = np.fft.rfft(f.values)
    w = np.full(fh.size, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    e = w * np.abs(fh) ** 2
    total = e.sum()
    if total == 0.0:
        return 0.0
    return float(e[f.grid.n // 4 + 1:].sum() / total)


def diagnostics(f: GridFunction) -> Diagnostics:
    grid = f.grid
    fp = derivative_values(f.values, grid, 1)
    # sqrt(1 + p^2) - 1 written without cancellation
    arc = fp * fp / (np.sqrt(1.0 + fp * fp) + 1.0)
    return Diagnostics(
        mass=float(grid.h * np.sum(f.values)),
        energy=float(grid.h * np.sum(arc)),
        max_slope=float(np.max(np.abs(fp))),
        linf=float(np.max(np.abs(f.values))),
        spectral_tail=spectral_tail(f),
    )


# -- stepping -----------------------------------------------------------------

@dataclass(frozen=True)
class SimulationState:
    t: float
    f: GridFunction
    step_index: int
    diagnostics: Diagnostics

    @classmethod
    def initial(cls, f: GridFunction, t: float = 0.0) -> "SimulationState":
        return cls(t, f, 0, diagnostics(f))

    @property
    def trusted(self) -> bool:
        return self.diagnostics.spectral_tail <= TAIL_GUARD


def imex_step(state: SimulationState, dt: float, nonlinear: bool = True,
              tol: float = DEFAULT_TOL) -> SimulationState:
    """One semi-implicit Euler step.

    ``(1 - dt sigma_k) f_hat^{n+1} = f_hat^n + dt N_hat(f^n)`` with
    ``N = Phi(f)[f] - Phi(0)[f]`` and ``sigma_k = -2|k|^3``.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidArgument(f"dt must be positive, got {dt!r}")
    if not state.trusted:
        raise RefuseStep(
            f"spectral tail {state.diagnostics.spectral_tail:.3g} above {TAIL_GUARD}; "
            "halve dt or refine the grid")
    f = state.f
    grid = f.grid
    sigma = linear_symbol(grid)
    fh = np.fft.rfft(f.values)
    if nonlinear:
        N = rhs_phi(f, tol).values - multiplier_values(f.values, grid, sigma)
        fh = fh + dt * np.fft.rfft(N)
    new = GridFunction(grid, np.fft.irfft(fh / (1.0 - dt * sigma), n=grid.n))
    return SimulationState(state.t + dt, new, state.step_index + 1, diagnostics(new))


# -- driver -------------------------------------------------------------------

@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    history: list = field(default_factory=list)  # (t, Diagnostics) after every step
    stop_reason: str = "running"
    failure: dict | None = None

    @property
    def final(self) -> SimulationState:
        return self.snapshots[-1]


def run_simulation(config, f0: GridFunction | None = None, nonlinear: bool = True,
                   callback=None) -> Trajectory:
    """Integrate from ``f0`` (or the configured preset) up to ``t_end``.

    Snapshots are kept at step 0, every ``snapshot_every`` steps, and at the
    final state.  A mid-run failure ends the run with a partial trajectory and
    a failure record instead of raising.
    """
    from .config import initial_profile

    grid = config.make_grid()
    if f0 is None:
        f0 = initial_profile(config, grid)
    stepping = config.stepping
    tol = config.tolerances.solver_tol
    state = SimulationState.initial(f0)
    traj = Trajectory()
    traj.snapshots.append(state)
    traj.history.append((state.t, state.diagnostics))
    n_steps = max(1, math.ceil(stepping.t_end / stepping.dt - 1e-9))
    for i in range(n_steps):
        dt = stepping.dt if i < n_steps - 1 else stepping.t_end - state.t
        try:
            state = imex_step(state, dt, nonlinear=nonlinear, tol=tol)
        except RefuseStep as exc:
            traj.stop_reason = "resolution-guard"
            traj.failure = {"kind": "refuse-step", "message": str(exc), "t": state.t, "step": state.step_index}
            break
        except BlowUpSuspected as exc:
            traj.stop_reason = "blow-up-suspected"
            traj.failure = {"kind": "blow-up-suspected", "message": str(exc), "t": state.t, "step": state.step_index}
            break
        except NumericalFailure as exc:
            traj.stop_reason = "numerical-failure"
            traj.failure = {"kind": "numerical-failure", "message": str(exc), "t": state.t,
                            "step": state.step_index, "condition": exc.condition}
            break
        traj.history.append((state.t, state.diagnostics))
        if state.step_index % stepping.snapshot_every == 0 or i == n_steps - 1:
            traj.snapshots.append(state)
        if callback is not None:
            callback(state)
        if state.diagnostics.max_slope > MAX_SLOPE:
            traj.stop_reason = "blow-up-suspected"
            traj.failure = {"kind": "blow-up-suspected", "t": state.t, "step": state.step_index,
                            "message": f"max slope {state.diagnostics.max_slope:.3g} exceeds {MAX_SLOPE}"}
            break
    else:
        traj.stop_reason = "t_end"
    if traj.snapshots[-1] is not state:
        traj.snapshots.append(state)
    log.info("run stopped: %s at t=%.6g after %d steps", traj.stop_reason, state.t, state.step_index)
    return traj
