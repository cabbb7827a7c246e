"""Grid and time-step refinement study.

Spatial: derivative-identity defects and extrapolated-trace errors against n.
Temporal: IMEX error against a fine RK4 reference, which should halve with dt.
"""
import argparse

import numpy as np

from mullins_sekerka.evolution import SimulationState, curvature, imex_step, rhs_phi
from mullins_sekerka.experiments import derivative_identity_defects
from mullins_sekerka.grid import Grid, derivative_values
from mullins_sekerka.potential import dirichlet_reconstruction, normal_derivative_jump
from mullins_sekerka.resolvent import compute_densities


def spatial(ns):
    print("derivative identities (relative defect)")
    d = derivative_identity_defects(ns)
    for n, (a, b) in zip(ns, d):
        print(f"  n={n:5d}  A {a:.2e}  B {b:.2e}")
    print("extrapolated traces, f = 0.3 exp(-x^2) on [-6, 6)")
    for n in ns:
        grid = Grid(6.0, n)
        f = grid.sample(lambda x: 0.3 * np.exp(-x * x))
        phi = grid.sample(lambda x: np.exp(-x * x))
        fp = derivative_values(f.values, grid, 1)
        expected = derivative_values(phi.values, grid, 1) / np.sqrt(1 + fp * fp)
        jump = np.max(np.abs(normal_derivative_jump(f, phi).values - expected)) / np.max(np.abs(expected))
        kappa = curvature(f).values
        dens = compute_densities(f)
        var = np.ptp(dirichlet_reconstruction(f, dens.alpha_plus, "plus").values - kappa)
        print(f"  n={n:5d}  jump {jump:.2e}  Dirichlet variation {var / np.max(np.abs(kappa)):.2e}")


def rk4(f, dt, steps):
    grid = f.grid
    F = lambda v: rhs_phi(grid.function(v)).values
    u = f.values.copy()
    for _ in range(steps):
        k1 = F(u)
        k2 = F(u + 0.5 * dt * k1)
        k3 = F(u + 0.5 * dt * k2)
        k4 = F(u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def temporal(T, dts):
    grid = Grid(8 * np.pi, 128)
    f = grid.sample(lambda x: 0.05 * np.exp(-x * x / 4))
    ref = rk4(f, 1e-4, round(T / 1e-4))
    print(f"IMEX vs RK4 (dt = 1e-4) at t = {T:g}")
    prev = None
    for dt in dts:
        s = SimulationState.initial(f)
        for _ in range(round(T / dt)):
            s = imex_step(s, dt)
        err = np.max(np.abs(s.f.values - ref))
        ratio = f"  ratio {prev / err:.2f}" if prev else ""
        print(f"  dt={dt:.1e}  error {err:.3e}{ratio}")
        prev = err


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[128, 256, 512, 1024])
    ap.add_argument("--time", type=float, default=0.02)
    ap.add_argument("--dts", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3, 5e-4])
    args = ap.parse_args()
    spatial(args.ns)
    temporal(args.time, args.dts)


if __name__ == "__main__":
    main()
