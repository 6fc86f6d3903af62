"""Run orchestration: single runs, p x lambda sweeps with repeats, the
verification suites, and all CSV/report emission.

CSV numerics are written with repr(), the shortest representation that
parses back to the identical float, so reruns of the same config+seed are
byte-identical.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import calibrated, lindyn, verify
from .config import ExperimentConfig, ScheduleSpec
from .data import TeacherSpec, gen_synthetic, save_csv
from .errors import ContractViolation, DivergenceError
from .network import Activation, TwoLayerNet, init_net
from .rng import derive_stream
from .trainers import Schedule, train

STEP_COLUMNS = ("t", "loss", "err_norm", "cos_align", "a_t", "xi_norm",
                "max_w_drift", "max_beta_drift", "lambda_t", "s_hat_norm",
                "S_hat")
AGG_COLUMNS = ("p", "lambda", "mean_cos", "std_cos", "mean_final_err",
               "std_final_err")


@dataclass(frozen=True)
class RunSummary:
    p: int
    lam: float
    final_err_norm: float
    final_cos_align: float
    steps_to_half_error: int
    diverged: bool = False


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def make_dataset(config, rep=None):
    """Dataset for a run; the data streams do not depend on p, so a width
    sweep trains on identical data within a repeat."""
    suffix = "" if rep is None else f"/rep{rep}"
    teacher = TeacherSpec(d=config.d, p_teacher=config.teacher_p,
                          act=config.teacher_act)
    return gen_synthetic(
        config.n, config.d, teacher,
        derive_stream(config.seed, "X" + suffix),
        derive_stream(config.seed, "teacher_W" + suffix),
        derive_stream(config.seed, "teacher_beta" + suffix))


def make_net(config, p=None, rep=None):
    suffix = "" if rep is None else f"/rep{rep}"
    p = config.p if p is None else p
    return init_net(p, config.d, config.activation,
                    derive_stream(config.seed, "W0" + suffix),
                    derive_stream(config.seed, "beta0" + suffix),
                    derive_stream(config.seed, "b" + suffix))


def measure_gamma(data):
    """(lambda_min, lambda_max) of XX^T."""
    vals = np.linalg.eigvalsh(data.X @ data.X.T)
    return float(vals[0]), float(vals[-1])


def resolve_schedule(spec, config, data, p=None):
    """Turn a ScheduleSpec into a concrete Schedule.

    "paper_cutoff" builds the cutoff schedule of the alignment theorem from
    the measured spectrum: lambda = L*gamma, a total regularization budget
    S = cS * gamma * sqrt(gamma*p) / (eta * sqrt(n) * M) with
    M = lambda_max(XX^T), and cutoff step T = floor(S/lambda)."""
    if spec.kind != "paper_cutoff":
        return spec.concrete()
    p = config.p if p is None else p
    gamma, M = measure_gamma(data)
    if gamma <= 0:
        raise ContractViolation("paper_cutoff needs lambda_min(XX^T) > 0")
    lam = config.L * gamma
    total = config.cs * gamma * math.sqrt(gamma * p) / (config.eta * math.sqrt(data.n) * M)
    T = int(total / lam)
    if T < 1:
        raise ContractViolation(
            f"paper_cutoff degenerates (T={T}); increase cutoff_cS or p")
    return Schedule.cutoff(lam, T)


def write_step_csv(traj, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(STEP_COLUMNS) + "\n")
        for r in traj.records:
            fh.write(",".join(_fmt(getattr(r, c)) for c in STEP_COLUMNS) + "\n")


def _summary(traj, p, lam):
    err = traj.column("err_norm")
    half = np.nonzero(err <= 0.5 * err[0])[0]
    return RunSummary(
        p=p, lam=lam,
        final_err_norm=float(err[-1]),
        final_cos_align=float(traj.records[-1].cos_align),
        steps_to_half_error=int(half[0]) if half.size else -1)


def run_single(config, out_dir, csv_name="steps.csv"):
    """One training run; writes the per-step CSV (flushed even on
    divergence, with the exception re-raised)."""
    os.makedirs(out_dir, exist_ok=True)
    data = make_dataset(config)
    net = make_net(config)
    schedule = resolve_schedule(config.schedule, config, data)
    path = os.path.join(out_dir, csv_name)
    try:
        traj = train(net, data, config.eta, schedule, config.steps,
                     config.algorithm)
    except DivergenceError as exc:
        write_step_csv(exc.trajectory, path)
        raise
    write_step_csv(traj, path)
    return traj, _summary(traj, config.p, schedule(0)), path


def _run_cell_repeat(args):
    """One (p, lambda, repeat) cell run; top-level so it pickles for the
    process pool."""
    config_doc, p, lam_kind, lam_value, rep = args
    from .config import config_from_dict
    config = config_from_dict(config_doc)
    data = make_dataset(config, rep=rep)
    net = make_net(config, p=p, rep=rep)
    if lam_kind == "paper_cutoff":
        schedule = resolve_schedule(ScheduleSpec(kind="paper_cutoff"),
                                    config, data, p=p)
        steps = config.steps
        lam_out = schedule.lam
    else:
        schedule = Schedule.constant(lam_value) if lam_value else Schedule.zero()
        steps = config.steps
        lam_out = lam_value
    try:
        traj = train(net, data, config.eta, schedule, steps, config.algorithm)
    except DivergenceError:
        return (p, lam_out, rep, None, None, True)
    rec = traj.records[-1]
    return (p, lam_out, rep, rec.cos_align, rec.err_norm, False)


def run_sweep(config, out_dir, threads=1, csv_name="sweep.csv"):
    """Grid of (p, lambda) cells, `repeats` runs each with derived per-repeat
    streams.  Aggregation is order-independent (results are keyed by cell and
    repeat index, then reduced in sorted order)."""
    os.makedirs(out_dir, exist_ok=True)
    ps = list(config.sweep_p) if config.sweep_p else [config.p]
    if config.schedule.kind == "paper_cutoff":
        lam_cells = [("paper_cutoff", None)]
    elif config.sweep_lambda is not None:
        if not config.sweep_lambda:
            raise ContractViolation("sweep_lambda must be nonempty when given")
        lam_cells = [("constant", float(v)) for v in config.sweep_lambda]
    else:
        lam_cells = [("constant", config.schedule.lam
                      if config.schedule.kind == "constant" else 0.0)]
    from .config import config_to_dict
    doc = config_to_dict(config)
    jobs = [(doc, p, kind, lam, rep)
            for p in ps for kind, lam in lam_cells
            for rep in range(config.repeats)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell_repeat, jobs))
    else:
        results = [_run_cell_repeat(j) for j in jobs]

    # reduce by cell, sorted so completion order is irrelevant
    cells = {}
    for p, lam, rep, cos, err, diverged in sorted(
            results, key=lambda r: (r[0], r[1] if r[1] is not None else 0.0, r[2])):
        cells.setdefault((p, lam), []).append((cos, err, diverged))

    path = os.path.join(out_dir, csv_name)
    summaries = []
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(AGG_COLUMNS) + "\n")
        for (p, lam), rows in cells.items():
            good = [(c, e) for c, e, div in rows if not div]
            if not good:
                fh.write(f"{p},{_fmt(lam)},diverged,diverged,diverged,diverged\n")
                continue
            cos = np.array([c for c, _ in good])
            err = np.array([e for _, e in good])
            fh.write(",".join([str(p), _fmt(lam), _fmt(cos.mean()),
                               _fmt(cos.std()), _fmt(err.mean()),
                               _fmt(err.std())]) + "\n")
            summaries.append({"p": p, "lambda": lam,
                              "mean_cos": float(cos.mean()),
                              "std_cos": float(cos.std()),
                              "mean_final_err": float(err.mean()),
                              "std_final_err": float(err.std()),
                              "diverged_repeats": len(rows) - len(good)})
    return summaries, path


SUITES = ("concentration", "isometry", "gram", "dynamics", "contraction",
          "alignment", "all")


def _dynamics_checks(config):
    """Trainer-vs-oracle equivalence on a moderate linear instance."""
    cfg = ExperimentConfig(
        n=min(config.n, 20), d=min(config.d, 60), p=min(config.p, 500),
        activation="identity", algorithm="fa_reg",
        eta=min(config.eta, 0.05), steps=min(config.steps, 200),
        schedule=ScheduleSpec(kind="cutoff", lam=1.0, T=50), seed=config.seed)
    data = make_dataset(cfg)
    net = make_net(cfg)
    W0, beta0, b = net.W.copy(), net.beta.copy(), net.b
    schedule = cfg.schedule.concrete()
    traj = train(net, data, cfg.eta, schedule, cfg.steps, "fa_reg",
                 keep_errors=True)
    _, hist = lindyn.run_dynamics(data.X, data.y, W0, beta0, b, cfg.eta,
                                  schedule, cfg.steps)
    dev = max(float(np.linalg.norm(a - c)) / max(float(np.linalg.norm(c)), 1e-12)
              for a, c in zip(hist, traj.errors))
    ok = dev <= 1e-8
    return [verify.CheckResult(
        name="oracle_equivalence", trials=1, violations=0 if ok else 1,
        nominal_delta=0.0,
        details={"max_rel_deviation": dev, "steps": cfg.steps})]


def _contraction_checks(config):
    data = make_dataset(config)
    net = make_net(config)
    gamma, _ = measure_gamma(data)
    schedule = resolve_schedule(config.schedule, config, data)
    try:
        traj = train(net, data, config.eta, schedule, config.steps,
                     config.algorithm)
    except DivergenceError as exc:
        return [verify.CheckResult(
            name="contraction_linear", trials=1, violations=1,
            nominal_delta=0.0,
            details={"diverged_at": exc.last_finite_step + 1})]
    return [verify.check_contraction(
        traj, gamma, config.eta, schedule,
        y_norm=float(np.linalg.norm(data.y)),
        nonlinear=config.activation != "identity")]


def _alignment_checks(config):
    data = make_dataset(config)
    net = make_net(config)
    gamma, _ = measure_gamma(data)
    spec = config.schedule if config.schedule.kind == "paper_cutoff" \
        else ScheduleSpec(kind="paper_cutoff")
    schedule = resolve_schedule(spec, config, data)
    steps = max(config.steps, schedule.T + 1)
    traj = train(net, data, config.eta, schedule, steps, "fa_reg")
    return [verify.check_alignment_condition(
        traj, config.p, config.eta, gamma, cutoff_T=schedule.T)]


def _gram_checks(config):
    from .diagnostics import gram_pair
    trials = 100
    viol_psd = 0
    viol_h = 0
    act = Activation("tanh")
    data = make_dataset(config)
    for k in range(trials):
        net = init_net(config.p, config.d, act,
                       derive_stream(config.seed, f"gramW/{k}"),
                       derive_stream(config.seed, f"gramBeta/{k}"),
                       derive_stream(config.seed, f"gramB/{k}"))
        pair = gram_pair(net, data.X)
        if pair.lambda_min_G <= 0:
            viol_psd += 1
        if pair.norm_H > 0.5 * pair.lambda_min_G:
            viol_h += 1
    return [
        verify.CheckResult(name="gram_lambda_min_positive", trials=trials,
                           violations=viol_psd, nominal_delta=0.01, details={}),
        verify.CheckResult(name="gram_H_small", trials=trials,
                           violations=viol_h, nominal_delta=0.05, details={}),
    ]


def run_verify(suite, config, out_dir, threads=1):
    """Run a verification suite; writes report.txt (human-readable) and
    report.jsonl (one record per check).  Returns (results, all_passed)."""
    if suite not in SUITES:
        raise ContractViolation(f"suite must be one of {SUITES}")
    os.makedirs(out_dir, exist_ok=True)
    results = []
    if suite in ("concentration", "all"):
        results += verify.check_init_concentration(
            p=4096, trials=10000, d=32, seed=config.seed)
    if suite in ("isometry", "all"):
        # the near-isometry of XX^T is an asymptotic (d >> n) statement; at
        # n=50 it needs d in the thousands before the spectrum fits the window
        results.append(verify.check_isometry(
            n=min(config.n, 50), d=max(config.d, 1500), epsilon=0.5,
            trials=500, seed=config.seed))
    if suite in ("gram", "all"):
        results += _gram_checks(config)
    if suite in ("dynamics", "all"):
        results += _dynamics_checks(config)
    if suite in ("contraction", "all"):
        results += _contraction_checks(config)
    if suite in ("alignment", "all"):
        results += _alignment_checks(config)

    with open(os.path.join(out_dir, "report.txt"), "w", newline="\n") as fh:
        for r in results:
            fh.write(r.line() + "\n")
    with open(os.path.join(out_dir, "report.jsonl"), "w", newline="\n") as fh:
        for r in results:
            fh.write(json.dumps({
                "name": r.name, "trials": r.trials,
                "violations": r.violations,
                "nominal_delta": r.nominal_delta, "pass": r.passed,
                "details": r.details}, sort_keys=True) + "\n")
    return results, all(r.passed for r in results)


def gen_data_cmd(config, out_dir, filename="dataset.csv"):
    os.makedirs(out_dir, exist_ok=True)
    data = make_dataset(config)
    path = os.path.join(out_dir, filename)
    save_csv(data, path)
    print(f"dataset: n={config.n} d={config.d} teacher_act={config.teacher_act} "
          f"seed={config.seed} -> {path}")
    return path
