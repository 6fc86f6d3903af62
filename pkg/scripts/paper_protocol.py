"""Full simulation protocol: width sweep of (regularized) feedback alignment
on synthetic teacher data, reproducing the alignment-vs-width experiment.

Produces, under --out:
  sweep_lambda0.csv   aggregate over p for unregularized FA
  sweep_reg.csv       aggregate over p for the cutoff schedule
  steps_p{P}.csv      per-step trajectory of one regularized run per width

Run:  python3 scripts/paper_protocol.py --out results [--repeats 20] [--seed 0]
"""

import argparse
import os

import numpy as np

from falab import calibrated
from falab.config import ExperimentConfig, ScheduleSpec
from falab.experiments import (make_dataset, make_net, resolve_schedule,
                               run_sweep, write_step_csv)
from falab.trainers import train

WIDTHS = (200, 400, 800, 1600, 3200, 6400, 12800)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    base = dict(n=50, d=150, activation="identity", eta=1e-2,
                seed=args.seed, repeats=args.repeats)

    # unregularized width sweep: alignment decays like 1/sqrt(p)
    cfg = ExperimentConfig(algorithm="fa", steps=100, sweep_p=WIDTHS,
                           sweep_lambda=(0.0,), **base)
    _, path = run_sweep(cfg, args.out, threads=args.threads,
                        csv_name="sweep_lambda0.csv")
    print("wrote", path)

    # regularized sweep with the data-dependent cutoff schedule
    cfg = ExperimentConfig(algorithm="fa_reg", steps=1,
                           schedule=ScheduleSpec(kind="paper_cutoff"),
                           sweep_p=WIDTHS, **base)
    _, path = run_sweep(cfg, args.out, threads=args.threads,
                        csv_name="sweep_reg.csv")
    print("wrote", path)

    # one full trajectory per width for plotting err/alignment curves
    for p in WIDTHS:
        cfg = ExperimentConfig(algorithm="fa_reg", p=p, steps=1,
                               schedule=ScheduleSpec(kind="paper_cutoff"),
                               **base)
        data = make_dataset(cfg)
        sched = resolve_schedule(cfg.schedule, cfg, data, p=p)
        steps = int(calibrated.CUTOFF_POST_FACTOR * (sched.T + 1))
        traj = train(make_net(cfg, p=p), data, cfg.eta, sched, steps, "fa_reg")
        out = os.path.join(args.out, f"steps_p{p}.csv")
        write_step_csv(traj, out)
        print(f"wrote {out} (T={sched.T}, steps={steps}, "
              f"final cos={traj.records[-1].cos_align:.4f})")


if __name__ == "__main__":
    main()
