"""Scaling equivariance: compare f0(lam x)/lam evolved for time t with the
rescaled base run, for several lam."""
import argparse

from mullins_sekerka.experiments import SCALING_TOL, scaling_experiment, timed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lams", type=float, nargs="+", default=[1.5, 2.0, 4.0])
    ap.add_argument("--time", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--L", type=float, default=12.0)
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    for lam in args.lams:
        # the base run covers lam^3 * t, so keep the scaled time modest for large lam
        r, secs = timed(scaling_experiment, lam=lam, t=args.time, n=args.n, L=args.L,
                        amplitude=args.amplitude, dt=args.dt)
        status = "ok" if r.passed else "exceeds tol"
        print(f"lam={lam:g}: defect {r.defect:.3e}, relative {r.relative_defect:.3e} "
              f"({status}, tol {SCALING_TOL:.0e}), {secs:.1f} s")


if __name__ == "__main__":
    main()
