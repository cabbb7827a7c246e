import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from mullins_sekerka.config import SimulationConfig
from mullins_sekerka.errors import BlowUpSuspected, InvalidArgument, RefuseStep
from mullins_sekerka.evolution import (SimulationState, apply_phi0, curvature, curvature_op,
                                       diagnostics, imex_step, linear_symbol, rhs_phi,
                                       run_simulation, spectral_tail)
from mullins_sekerka.experiments import scaling_experiment
from mullins_sekerka.grid import Grid, derivative_values, hilbert_values


def _symbolic_curvature(expr, x):
    return sp.lambdify(x, sp.diff(sp.diff(expr, x) / sp.sqrt(1 + sp.diff(expr, x) ** 2), x), "numpy")


def test_curvature_against_symbolic_oracle():
    x = sp.symbols("x")
    expr = sp.Rational(1, 2) * sp.exp(-x ** 2) * sp.cos(x)
    g = Grid(12.0, 512)
    f = g.sample(sp.lambdify(x, expr, "numpy"))
    exact = _symbolic_curvature(expr, x)(g.nodes)
    assert np.max(np.abs(curvature(f).values - exact)) < 1e-11
    # divergence form and quasilinear form agree
    assert np.max(np.abs(curvature_op(f, f).values - exact)) < 1e-11


def test_linear_operator_at_flat_interface():
    g = Grid(8.0, 128)
    f = g.sample(lambda x: np.exp(-x * x))
    expected = 2 * hilbert_values(derivative_values(f.values, g, 3), g)
    assert np.max(np.abs(apply_phi0(f).values - expected)) < 1e-10
    assert np.all(linear_symbol(g) <= 0)


def test_nonlinear_rhs_linearizes_to_phi0():
    g = Grid(8.0, 128)
    h = g.sample(lambda x: np.exp(-x * x))
    eps = 1e-5
    lin = apply_phi0(h).values
    rhs = rhs_phi(g.function(eps * h.values)).values / eps
    assert np.max(np.abs(rhs - lin)) <= 1e-6 * np.max(np.abs(lin))


def test_rhs_has_zero_mean():
    g = Grid(8.0, 128)
    f = g.sample(lambda x: 0.4 * np.exp(-x * x) * np.cos(2 * x))
    r = rhs_phi(f).values
    assert abs(r.sum()) * g.h < 1e-12 * np.max(np.abs(r)) * g.L


def test_gaussian_mass_and_energy():
    g = Grid(8.0, 256)
    d = diagnostics(g.sample(lambda x: np.exp(-x * x)))
    assert d.mass == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert d.energy > 0
    assert diagnostics(g.zeros()).energy == 0.0


@given(st.floats(-2, 2), st.integers(1, 6))
def test_energy_nonnegative(a, k):
    g = Grid(4.0, 64)
    d = diagnostics(g.sample(lambda x: a * np.sin(k * np.pi * x / 4.0)))
    assert d.energy >= 0.0


def test_linear_step_is_exact_multiplier():
    g = Grid(2 * np.pi, 64)
    f = g.sample(lambda x: np.cos(3 * x) + 0.5 * np.sin(x))
    dt = 1e-2
    out = imex_step(SimulationState.initial(f), dt, nonlinear=False).f.values
    x = g.nodes
    exact = np.cos(3 * x) / (1 + 2 * 27 * dt) + 0.5 * np.sin(x) / (1 + 2 * dt)
    assert np.max(np.abs(out - exact)) < 1e-14


def test_zero_is_a_fixed_point():
    g = Grid(8.0, 64)
    s = imex_step(SimulationState.initial(g.zeros()), 1e-3)
    assert np.all(s.f.values == 0.0) and s.t == 1e-3 and s.step_index == 1


@pytest.mark.parametrize("dt", [0.0, -1e-3, math.nan, math.inf])
def test_bad_time_step(dt):
    g = Grid(8.0, 64)
    with pytest.raises(InvalidArgument):
        imex_step(SimulationState.initial(g.zeros()), dt)


def test_resolution_guard_refuses_rough_data():
    g = Grid(8.0, 64)
    rng = np.random.default_rng(3)
    f = g.function(1e-3 * rng.standard_normal(64))
    state = SimulationState.initial(f)
    assert state.diagnostics.spectral_tail > 0.1 and not state.trusted
    with pytest.raises(RefuseStep):
        imex_step(state, 1e-3)


def test_steep_profile_is_flagged():
    g = Grid(8.0, 256)
    with pytest.raises(BlowUpSuspected):
        rhs_phi(g.sample(lambda x: 20.0 * np.exp(-x * x)))


def test_spectral_tail_of_smooth_data():
    g = Grid(8.0, 128)
    assert spectral_tail(g.sample(lambda x: np.exp(-x * x))) < 1e-20
    assert spectral_tail(g.zeros()) == 0.0


def test_smoothing_reduces_tail():
    g = Grid(8.0, 128)
    x = g.nodes
    f = g.function(0.05 * np.exp(-x * x) + 1e-4 * np.cos(5 * np.pi * x))
    s = SimulationState.initial(f)
    for _ in range(5):
        s = imex_step(s, 1e-3)
    assert spectral_tail(s.f) < 1e-2 * spectral_tail(f)


def _rk4(f, dt, steps):
    g = f.grid
    u = f.values.copy()
    F = lambda v: rhs_phi(g.function(v)).values
    for _ in range(steps):
        k1 = F(u)
        k2 = F(u + 0.5 * dt * k1)
        k3 = F(u + 0.5 * dt * k2)
        k4 = F(u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


@pytest.mark.slow
def test_imex_first_order_against_rk4_reference():
    g = Grid(8 * np.pi, 128)
    f = g.sample(lambda x: 0.05 * np.exp(-x * x / 4))
    T = 0.02
    ref = _rk4(f, 1e-4, 200)
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        s = SimulationState.initial(f)
        for _ in range(round(T / dt)):
            s = imex_step(s, dt)
        errs.append(np.max(np.abs(s.f.values - ref)))
    for e1, e2 in zip(errs, errs[1:]):
        assert 1.7 < e1 / e2 < 2.3


def _cfg(**stepping):
    return SimulationConfig().with_overrides(grid={"L": 8.0, "n": 64},
                                             initial={"preset": "zero"}, stepping=stepping)


def test_zero_preset_run():
    traj = run_simulation(_cfg(dt=1e-3, t_end=5e-3, snapshot_every=2))
    assert traj.stop_reason == "t_end" and traj.failure is None
    assert [s.step_index for s in traj.snapshots] == [0, 2, 4, 5]
    assert traj.final.t == pytest.approx(5e-3, abs=1e-15)
    assert all(np.all(s.f.values == 0) for s in traj.snapshots)
    assert len(traj.history) == 6


def test_last_step_lands_on_t_end():
    traj = run_simulation(_cfg(dt=2e-3, t_end=5e-3, snapshot_every=100))
    assert traj.final.step_index == 3
    assert traj.final.t == pytest.approx(5e-3, abs=1e-15)


def test_failure_returns_partial_trajectory():
    g = Grid(8.0, 64)
    rng = np.random.default_rng(0)
    f0 = g.function(1e-3 * rng.standard_normal(64))
    traj = run_simulation(_cfg(dt=1e-3, t_end=1e-2), f0=f0)
    assert traj.stop_reason == "resolution-guard"
    assert traj.failure["kind"] == "refuse-step" and traj.failure["step"] == 0
    assert len(traj.snapshots) == 1


def test_callback_sees_every_step():
    seen = []
    run_simulation(_cfg(dt=1e-3, t_end=3e-3), callback=lambda s: seen.append(s.step_index))
    assert seen == [1, 2, 3]


def test_scaling_invariance_non_dyadic():
    r = scaling_experiment(lam=1.5, t=0.01, n=128, L=12.0, amplitude=0.3, dt=1e-3)
    assert r.passed
    assert r.relative_defect < 1e-10


def test_spectral_tail_nonincreasing_after_transient():
    g = Grid(8.0, 128)
    x = g.nodes
    f = g.function(0.05 * np.exp(-x * x) + 1e-5 * np.exp(-x * x) * np.cos(5 * np.pi * x))
    s = SimulationState.initial(f)
    tails = []
    for _ in range(40):
        s = imex_step(s, 1e-3)
        tails.append(s.diagnostics.spectral_tail)
    floor = 1e-28  # squared-roundoff level of the top octave
    later = np.array(tails[5:])
    assert np.all((np.diff(later) <= 1e-12 * later[:-1]) | (later[1:] < floor))
