"""Linearized decay of single Fourier modes.

Runs windowed cosine packets of small amplitude and compares the fitted
exponential rate of each mode with 2|k|^3.  Optionally writes the
amplitude history to CSV.

    python scripts/run_decay.py --modes 0.5 1 1.5 2 --n 512 --csv decay.csv
"""
import argparse
import csv
import math

from mullins_sekerka.experiments import decay_config, decay_experiment, timed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=float, nargs="+", default=[1.0, 2.0])
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--amplitude", type=float, default=1e-4)
    ap.add_argument("--L", type=float, default=8 * math.pi)
    ap.add_argument("--csv", help="write t, k, amplitude rows here")
    args = ap.parse_args()

    rows = []
    print(f"{'k':>6} {'expected':>10} {'measured':>10} {'rel err':>9} {'seconds':>8}")
    for k in args.modes:
        cfg = decay_config(k, n=args.n, dt=args.dt, amplitude=args.amplitude, L=args.L)
        r, secs = timed(decay_experiment, k, cfg)
        print(f"{k:6g} {r.expected_rate:10.4f} {r.measured_rate:10.4f} {r.relative_error:9.2e} {secs:8.1f}")
        rows.extend((t, k, a) for t, a in zip(r.times, r.amplitudes))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "k", "amplitude"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
