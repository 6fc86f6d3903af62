"""Monte-Carlo and per-run verification of the probabilistic claims behind
the training dynamics: initialization concentration, design-matrix isometry,
convergence contraction, the alignment sufficient condition, and the
no-alignment width scaling.

Every statistical check shares one pass rule (see CheckResult): the observed
violation frequency may exceed its nominal probability by at most three
binomial standard deviations.  Deterministic checks use trials=1 and a
nominal probability of 0, so pass means zero violations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import calibrated, linalg
from .errors import ContractViolation
from .rng import derive_stream


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    violations: int
    nominal_delta: float
    details: dict = field(default_factory=dict)

    @property
    def margin(self):
        d = self.nominal_delta
        return 3.0 * math.sqrt(d * (1.0 - d) / self.trials)

    @property
    def passed(self):
        return self.violations / self.trials <= self.nominal_delta + self.margin

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.violations}/{self.trials} violations "
                f"(nominal {self.nominal_delta:.6g}, margin {self.margin:.6g})")


def _deterministic(name, ok, details):
    return CheckResult(name=name, trials=1, violations=0 if ok else 1,
                       nominal_delta=0.0, details=details)


def check_init_concentration(p, trials, delta=None, d=32, seed=0):
    """Sample (W(0), beta(0), b) repeatedly and measure the frequency of the
    concentration events for Gaussian initialization:

      1. |b . beta(0)| / sqrt(p)     <= c1 sqrt(log(1/delta))
      2. ||W(0)^T b|| / sqrt(p)      <= c2 sqrt(d log(d/delta))
      3. | ||b||^2/p - 1 |           <= (c3/sqrt p) sqrt(log(1/delta))
      4. ||W(0)^T W(0)/p - I_d||     <= epsilon
      5. chi-squared upper tail:  P(||b||^2 - p >=  2 sqrt(pt) + 2t) <= e^-t
      6. chi-squared lower tail:  P(||b||^2 - p <= -2 sqrt(pt))      <= e^-t
      7. inner-product tail:      P(|b . beta(0)| >= sqrt(2pt) + 2t) <= 2e^-t

    The stated bound for event 7 reads "<= 2e^t" in its source, which grows
    with t; the intended decaying bound 2e^{-t} is used here.
    """
    if p < 2 or trials < 100:
        raise ContractViolation("need p >= 2 and trials >= 100")
    if delta is None:
        delta = calibrated.CONC_DELTA
    t_tail = calibrated.CONC_TAIL_T
    log_inv = math.sqrt(math.log(1.0 / delta))
    bound_inner = calibrated.CONC_C_INNER * log_inv
    bound_row = calibrated.CONC_C_ROW * math.sqrt(d * math.log(d / delta))
    bound_chisq = calibrated.CONC_C_CHISQ / math.sqrt(p) * log_inv
    chi_upper = 2.0 * math.sqrt(p * t_tail) + 2.0 * t_tail
    chi_lower = -2.0 * math.sqrt(p * t_tail)
    ip_bound = math.sqrt(2.0 * p * t_tail) + 2.0 * t_tail

    names = ["inner_product_bound", "row_norm_bound", "chisq_deviation_bound",
             "gram_isometry_bound", "chisq_upper_tail", "chisq_lower_tail",
             "inner_product_tail"]
    nominal = [delta, delta, delta, delta,
               math.exp(-t_tail), math.exp(-t_tail), 2.0 * math.exp(-t_tail)]
    viol = np.zeros(len(names), dtype=np.int64)
    worst = np.zeros(len(names))

    rng = derive_stream(seed, f"concentration/p{p}/d{d}")
    eye = np.eye(d)
    for _ in range(trials):
        b = rng.gaussian(p)
        beta0 = rng.gaussian(p)
        W0 = rng.gaussian_matrix(p, d)
        b_sq = float(b @ b)
        inner = abs(float(b @ beta0)) / math.sqrt(p)
        row = float(np.linalg.norm(W0.T @ b)) / math.sqrt(p)
        chidev = abs(b_sq / p - 1.0)
        gram_dev = float(np.linalg.norm(W0.T @ W0 / p - eye, ord=2))
        stats = [inner, row, chidev, gram_dev,
                 b_sq - p, -(b_sq - p), inner * math.sqrt(p)]
        bounds = [bound_inner, bound_row, bound_chisq, calibrated.CONC_EPSILON]
        for k in range(4):
            worst[k] = max(worst[k], stats[k])
            if stats[k] > bounds[k]:
                viol[k] += 1
        # tail events: a violation is the tail event *occurring*
        if stats[4] >= chi_upper:
            viol[4] += 1
        if b_sq - p <= chi_lower:
            viol[5] += 1
        if inner * math.sqrt(p) >= ip_bound:
            viol[6] += 1

    out = []
    for k, name in enumerate(names):
        details = {"p": p, "d": d, "delta": delta}
        if k < 4:
            details["worst_statistic"] = float(worst[k])
        out.append(CheckResult(name=name, trials=trials, violations=int(viol[k]),
                               nominal_delta=nominal[k], details=details))
    return out


def check_isometry(n, d, epsilon, trials, delta=0.1, seed=0):
    """Frequency with which X with N(0, 1/d) entries fails to satisfy
    lambda_min(XX^T) >= 1 - eps and lambda_max(XX^T) <= (1 + 4 eps)(1 - eps)."""
    if n >= d:
        raise ContractViolation("isometry check needs n < d")
    rng = derive_stream(seed, f"isometry/n{n}/d{d}")
    violations = 0
    lo, hi = 1.0 - epsilon, (1.0 + 4.0 * epsilon) * (1.0 - epsilon)
    worst_lo, worst_hi = math.inf, -math.inf
    for _ in range(trials):
        X = rng.gaussian_matrix(n, d, std=1.0 / math.sqrt(d))
        vals = np.linalg.eigvalsh(X @ X.T)
        worst_lo = min(worst_lo, vals[0])
        worst_hi = max(worst_hi, vals[-1])
        if vals[0] < lo or vals[-1] > hi:
            violations += 1
    return CheckResult(
        name=f"isometry_n{n}_d{d}", trials=trials, violations=violations,
        nominal_delta=delta,
        details={"epsilon": epsilon, "min_lambda_min": float(worst_lo),
                 "max_lambda_max": float(worst_hi), "lo": lo, "hi": hi})


def check_contraction(traj, gamma, eta, schedule, y_norm=0.0,
                      nonlinear=False, slack=1e-9):
    """Count violations of the per-step error contraction

        ||e(t+1)|| <= (1 - eta*gamma*f - eta*lambda(t)) ||e(t)||
                      + eta*lambda(t) ||y|| + slack

    with f = 1/2 in the linear regime and f = 1/4 in the nonlinear one."""
    err = traj.column("err_norm")
    lams = traj.column("lambda_t")
    if err.size == 0:
        raise ContractViolation("empty trajectory")
    factor = 0.25 if nonlinear else 0.5
    violations = 0
    worst = -math.inf
    for t in range(err.size - 1):
        bound = ((1.0 - eta * gamma * factor - eta * lams[t]) * err[t]
                 + eta * lams[t] * y_norm + slack)
        excess = err[t + 1] - bound
        worst = max(worst, excess)
        if excess > 0:
            violations += 1
    return CheckResult(
        name="contraction_nonlinear" if nonlinear else "contraction_linear",
        trials=max(err.size - 1, 1), violations=violations, nominal_delta=0.0,
        details={"gamma": gamma, "eta": eta, "worst_excess": float(worst)})


def check_alignment_condition(traj, p, eta, gamma, threshold=None,
                              cutoff_T=0):
    """Regime indicator for alignment: the ratio

        rho(t) = eta * Shat(t) / (sqrt(p*gamma) * ||shat(t)||)

    large (above `threshold`) after the regularization cutoff signals the
    b-direction dominates beta(t); the result also reports final cos(b,beta).
    The check passes when the post-cutoff ratio exceeds the threshold."""
    if threshold is None:
        threshold = calibrated.ALIGN_RATIO_THRESHOLD
    s_hat = traj.column("s_hat_norm")
    S_hat = traj.column("S_hat")
    cos = traj.column("cos_align")
    denom = math.sqrt(p * gamma) * np.maximum(s_hat, 1e-300)
    ratio = eta * S_hat / denom
    post = ratio[min(cutoff_T, ratio.size - 1):]
    ok = bool(post.max() > threshold)
    return _deterministic(
        "alignment_condition", ok,
        {"threshold": threshold, "max_post_cutoff_ratio": float(post.max()),
         "final_ratio": float(ratio[-1]), "final_cos": float(cos[-1]),
         "cutoff_T": cutoff_T})


def check_a_t_lower_bound(traj, lam, gamma, y_norm, t_start, t_end, slack=1e-9):
    """Along the regularized phase t in [t_start, t_end], the component of
    e(t) along -y/||y|| satisfies a(t) >= (lam-gamma)/(lam+gamma) ||y||."""
    a = traj.column("a_t")
    lo = (lam - gamma) / (lam + gamma) * y_norm - slack
    window = a[t_start:t_end + 1]
    if window.size == 0:
        raise ContractViolation("empty a(t) window")
    violations = int(np.sum(window < lo))
    return CheckResult(
        name="a_t_lower_bound", trials=window.size, violations=violations,
        nominal_delta=0.0,
        details={"bound": lo, "min_a_t": float(window.min())})


def check_no_alignment_scaling(widths, mean_abs_cos, band=(-0.65, -0.35)):
    """Least-squares slope of log(mean |cos(b,beta)|) against log(p); the
    unregularized theory predicts |cos| = O(1/sqrt p), slope near -1/2."""
    widths = np.asarray(widths, dtype=np.float64)
    mean_abs_cos = np.asarray(mean_abs_cos, dtype=np.float64)
    if widths.size < 4:
        raise ContractViolation("need at least 4 widths")
    if np.any(mean_abs_cos <= 0):
        raise ContractViolation("mean |cos| must be positive")
    slope = float(np.polyfit(np.log(widths), np.log(mean_abs_cos), 1)[0])
    ok = band[0] <= slope <= band[1]
    return _deterministic("no_alignment_scaling", ok,
                          {"slope": slope, "band": list(band),
                           "widths": widths.tolist(),
                           "mean_abs_cos": mean_abs_cos.tolist()})
