"""Acceptance criteria 1-8.  Run with ``pytest tests/test_acceptance.py -v -s``
to see one PASS/FAIL line per criterion; the lines are also collected in the
terminal summary."""
import math
import time

import numpy as np
import pytest

from mullins_sekerka.config import config_from_dict
from mullins_sekerka.evolution import curvature, run_simulation
from mullins_sekerka.experiments import (decay_config, decay_experiment, derivative_identity_defects,
                                         neumann_errors, refines_at_second_order, scaling_experiment)
from mullins_sekerka.grid import Grid, derivative_values, l2_norm
from mullins_sekerka.potential import (dirichlet_reconstruction, eval_U_and_grad,
                                       harmonicity_residual, normal_derivative_jump, velocity_field)
from mullins_sekerka.resolvent import compute_densities, solve_resolvent
from mullins_sekerka.sio import B0Operators, KernelSpec, apply_Bnm, oracle_apply_Bnm


def _gauss(grid, amp=1.0):
    return grid.sample(lambda x: amp * np.exp(-x * x))


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_operator_identities(report):
    with Clock() as clock:
        grid = Grid(8.0, 512)
        ops = B0Operators(_gauss(grid, 0.3))
        x = grid.nodes
        a = np.exp(-(x - 1) ** 2) * np.sin(3 * x)
        b = np.exp(-(x + 0.5) ** 2 / 2)
        pairing = []
        for op, adj in ((ops.A, ops.A_star), (ops.B, ops.B_star)):
            lhs, rhs = np.dot(op(a), b), np.dot(a, adj(b))
            pairing.append(abs(lhs - rhs) / (np.linalg.norm(op(a)) * np.linalg.norm(b)))
        defects = derivative_identity_defects((256, 512, 1024))
    order_ok = all(refines_at_second_order(defects[:, j]) for j in range(2))
    passed = max(pairing) <= 1e-8 and order_ok and clock.elapsed < 30
    report(1, "operator identities", passed,
           f"adjoint defects A {pairing[0]:.1e}, B {pairing[1]:.1e}; derivative defects "
           f"A {', '.join(f'{v:.1e}' for v in defects[:, 0])}, "
           f"B {', '.join(f'{v:.1e}' for v in defects[:, 1])}; {clock.elapsed:.1f} s")
    assert max(pairing) <= 1e-8
    assert order_ok
    assert clock.elapsed < 30


def test_criterion_2_oracle_equivalence(report):
    with Clock() as clock:
        grid = Grid(6.0, 128)
        f = _gauss(grid, 0.3)
        alpha = _gauss(grid)
        errs = {}
        for n, m in ((0, 1), (1, 1), (2, 1)):
            spec = KernelSpec.b0(f, n, m)
            ref = oracle_apply_Bnm(spec, alpha)
            errs[(n, m)] = l2_norm(apply_Bnm(spec, alpha) - ref) / l2_norm(ref)
    worst = max(errs.values())
    passed = worst <= 1e-12 and clock.elapsed < 5
    report(2, "oracle equivalence", passed,
           ", ".join(f"B_{n}{m} {e:.1e}" for (n, m), e in errs.items()) + f"; {clock.elapsed:.1f} s")
    assert worst <= 1e-12
    assert clock.elapsed < 5


def test_criterion_3_resolvent_contract(report):
    with Clock() as clock:
        grid = Grid(6.0, 512)
        f = _gauss(grid, 0.3)
        slope = np.max(np.abs(derivative_values(f.values, grid, 1)))
        rhs = grid.sample(lambda x: np.exp(-x * x) * np.cos(2 * x))
        residuals = [solve_resolvent(lam, f, rhs, which).residual
                     for which in ("A", "A_star") for lam in (1.0, -1.0)]
        errs = neumann_errors(f, rhs, terms=range(9))
    resolved = errs[errs > 1e-12]
    ratios = resolved[1:] / resolved[:-1]
    geometric = len(resolved) >= 4 and np.all(ratios < 0.5)
    passed = slope <= 0.3 and max(residuals) <= 1e-10 and geometric and clock.elapsed < 60
    report(3, "resolvent contract", passed,
           f"max residual {max(residuals):.1e}; Neumann errors K=0..8 "
           f"{', '.join(f'{e:.0e}' for e in errs)} (worst ratio {ratios.max():.2f}); {clock.elapsed:.1f} s")
    assert slope <= 0.3
    assert max(residuals) <= 1e-10
    assert geometric
    assert clock.elapsed < 60


def test_criterion_4_potential_theory(report):
    with Clock() as clock:
        grid = Grid(6.0, 512)
        f = _gauss(grid, 0.3)
        phi = _gauss(grid)
        _, grad = eval_U_and_grad(f, phi, (0.5, 2.0))

        alpha = grid.function(derivative_values(phi.values, grid, 1))
        ratios = []
        for comp in (0, 1):
            field = lambda x, y: float(velocity_field(f, alpha, x, y)[comp])
            r1 = harmonicity_residual(field, (0.5, 2.0), 2e-2, f)
            r2 = harmonicity_residual(field, (0.5, 2.0), 1e-2, f)
            ratios.append(r1 / r2)

        fp = derivative_values(f.values, grid, 1)
        expected = derivative_values(phi.values, grid, 1) / np.sqrt(1 + fp * fp)
        jump = normal_derivative_jump(f, phi).values
        jump_err = np.max(np.abs(jump - expected)) / np.max(np.abs(expected))

        dens = compute_densities(f)
        kappa = curvature(f).values
        variation = []
        for side, a in (("plus", dens.alpha_plus), ("minus", dens.alpha_minus)):
            u = dirichlet_reconstruction(f, a, side).values - kappa
            variation.append(np.ptp(u) / np.max(np.abs(kappa)))
    second_order = all(3.5 <= r <= 4.5 for r in ratios)
    passed = (grad.discrepancy <= 1e-8 and second_order and jump_err <= 1e-3
              and max(variation) <= 1e-4 and clock.elapsed < 120)
    report(4, "potential theory", passed,
           f"dual gradients {grad.discrepancy:.1e}; harmonicity ratios "
           f"{ratios[0]:.2f}, {ratios[1]:.2f}; jump {jump_err:.1e}; "
           f"Dirichlet variation {variation[0]:.1e}/{variation[1]:.1e}; {clock.elapsed:.1f} s")
    assert grad.discrepancy <= 1e-8
    assert second_order
    assert jump_err <= 1e-3
    assert max(variation) <= 1e-4
    assert clock.elapsed < 120


@pytest.mark.slow
def test_criterion_5_linearized_decay(report):
    with Clock() as clock:
        results = [decay_experiment(k, decay_config(k, n=512, dt=1e-3, amplitude=1e-4)) for k in (1, 2)]
    passed = all(r.relative_error <= 0.01 for r in results) and clock.elapsed < 120
    report(5, "linearized decay", passed,
           "; ".join(f"k={r.wavenumber:g} rate {r.measured_rate:.4f} vs {r.expected_rate:g} "
                     f"({100 * r.relative_error:.2f}%)" for r in results) + f"; {clock.elapsed:.1f} s")
    for r in results:
        assert r.relative_error <= 0.01
    assert clock.elapsed < 120


def test_criterion_6_scaling_invariance(report):
    with Clock() as clock:
        r = scaling_experiment(lam=2.0, t=0.05)
    passed = r.defect <= 1e-4 * r.f0_max and clock.elapsed < 180
    report(6, "scaling invariance", passed,
           f"lambda=2, t=0.05: defect {r.defect:.1e} (bound {1e-4 * r.f0_max:.1e}); {clock.elapsed:.1f} s")
    assert r.defect <= 1e-4 * r.f0_max
    assert clock.elapsed < 180


def test_criterion_7_conservation_and_dissipation(report):
    cfg = config_from_dict({
        "grid": {"L": 8 * math.pi, "n": 256},
        "initial": {"preset": "gaussian", "amplitude": 0.1},
        "stepping": {"dt": 1e-3, "t_end": 1.0, "snapshot_every": 1000},
    })
    with Clock() as clock:
        traj = run_simulation(cfg)
    mass = np.array([d.mass for _, d in traj.history])
    energy = np.array([d.energy for _, d in traj.history])
    steps = len(traj.history) - 1
    drift = float(np.max(np.abs(mass - mass[0])))
    rises = np.diff(energy) / energy[:-1]
    worst_rise = float(max(rises.max(), 0.0))
    passed = (steps == 1000 and traj.stop_reason == "t_end" and drift <= 1e-10
              and worst_rise <= 1e-8 and clock.elapsed < 120)
    report(7, "conservation and dissipation", passed,
           f"{steps} steps; mass drift {drift:.1e}; largest relative energy rise {worst_rise:.1e} "
           f"(energy {energy[0]:.4e} -> {energy[-1]:.4e}); {clock.elapsed:.1f} s")
    assert steps == 1000 and traj.stop_reason == "t_end"
    assert drift <= 1e-10
    assert worst_rise <= 1e-8
    assert energy[-1] < energy[0]
    assert clock.elapsed < 120


def test_criterion_8_density_cross_identity(report):
    with Clock() as clock:
        d = compute_densities(_gauss(Grid(6.0, 512), 0.3))
    defects = d.derivative_defect
    passed = max(defects) <= 1e-6 and clock.elapsed < 30
    report(8, "density cross-identity", passed,
           f"plus {defects[0]:.1e}, minus {defects[1]:.1e}; {clock.elapsed:.1f} s")
    assert max(defects) <= 1e-6
    assert clock.elapsed < 30
