"""Boundary-integral solver for two-dimensional Mullins-Sekerka flow of a graph
interface ``y = f(t, x)``, periodized on ``[-L, L)``."""
from .config import SimulationConfig, initial_profile, parse_config, serialize_config
from .errors import (BlowUpSuspected, ConfigurationError, GridMismatch, InvalidArgument, InvalidData,
                     InvalidStencil, MullinsSekerkaError, NearSingularWarning, NumericalFailure,
                     OutOfRange, RefuseStep, ResourceLimit)
from .evolution import (SimulationState, Trajectory, curvature, curvature_op, diagnostics, imex_step,
                        rhs_phi, run_simulation)
from .grid import (Grid, GridFunction, antiderivative, hilbert_transform, interpolate, is_admissible,
                   spectral_derivative, upsample)
from .potential import (eval_U, eval_U_and_grad, eval_velocity, harmonicity_residual, trace_U,
                        trace_velocity)
from .resolvent import compute_densities, neumann_series, solve_resolvent
from .sio import B0Operators, KernelSpec, apply_A, apply_B, apply_Bnm, oracle_apply_Bnm

__version__ = "0.1.0"
