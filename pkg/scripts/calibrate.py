"""Calibration pilot for the frozen constants in falab.calibrated.

Part 1 (concentration): samples the three initialization statistics 1e5
times at p=4096, d=32 and reports their empirical (1 - delta) quantiles in
units of the bound shape; the constants frozen in calibrated.py are these
quantiles rounded up to two decimals.

Part 2 (alignment cutoff): sweeps cutoff_cS over a linear alignment run at
moderate width and reports the final cos(b, beta), to pick a default that
actually reaches visible alignment.

Run:  python3 scripts/calibrate.py [--trials N] [--skip-alignment]
"""

import argparse
import math
import sys
import time

import numpy as np

from falab.config import ExperimentConfig, ScheduleSpec
from falab.experiments import make_dataset, make_net, measure_gamma, resolve_schedule
from falab.rng import derive_stream
from falab.trainers import train


def concentration_pilot(trials, p=4096, d=32, delta=0.05, seed=12345):
    rng = derive_stream(seed, "calibration")
    inner = np.empty(trials)
    row = np.empty(trials)
    chidev = np.empty(trials)
    t0 = time.time()
    for k in range(trials):
        b = rng.gaussian(p)
        beta0 = rng.gaussian(p)
        W0 = rng.gaussian_matrix(p, d)
        inner[k] = abs(b @ beta0) / math.sqrt(p)
        row[k] = np.linalg.norm(W0.T @ b) / math.sqrt(p)
        chidev[k] = abs(b @ b / p - 1.0)
    q = 1.0 - delta
    c_inner = np.quantile(inner, q) / math.sqrt(math.log(1 / delta))
    c_row = np.quantile(row, q) / math.sqrt(d * math.log(d / delta))
    c_chisq = np.quantile(chidev, q) * math.sqrt(p) / math.sqrt(math.log(1 / delta))
    print(f"concentration pilot: {trials} trials, p={p}, d={d}, "
          f"delta={delta} ({time.time() - t0:.1f} s)")
    print(f"  CONC_C_INNER quantile = {c_inner:.4f}")
    print(f"  CONC_C_ROW   quantile = {c_row:.4f}")
    print(f"  CONC_C_CHISQ quantile = {c_chisq:.4f}")


def alignment_pilot(seed=5):
    print("alignment cutoff_cS pilot (linear, n=50, d=150, p=3200, eta=1e-3):")
    for cs in (1.0, 3.0, 10.0, 20.0):
        cfg = ExperimentConfig(
            n=50, d=150, p=3200, activation="identity", algorithm="fa_reg",
            eta=1e-3, steps=1, schedule=ScheduleSpec(kind="paper_cutoff"),
            seed=seed, cutoff_cS=cs)
        data = make_dataset(cfg)
        gamma, M = measure_gamma(data)
        sched = resolve_schedule(cfg.schedule, cfg, data)
        steps = 2 * (sched.T + 1)
        net = make_net(cfg)
        traj = train(net, data, cfg.eta, sched, steps, "fa_reg")
        cos = traj.column("cos_align")
        print(f"  cS={cs:5.1f}: gamma={gamma:.4f} lam={sched.lam:.3f} "
              f"T={sched.T} steps={steps} final_cos={cos[-1]:.4f} "
              f"max_cos={cos.max():.4f} final_err={traj.column('err_norm')[-1]:.4g}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=100000)
    ap.add_argument("--skip-alignment", action="store_true")
    ap.add_argument("--skip-concentration", action="store_true")
    args = ap.parse_args()
    if not args.skip_concentration:
        concentration_pilot(args.trials)
    if not args.skip_alignment:
        alignment_pilot()


if __name__ == "__main__":
    sys.exit(main())
