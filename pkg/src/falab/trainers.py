"""Update rules (backprop, feedback alignment, regularized FA) and the
training loop that records per-step diagnostics.

All three rules perform *simultaneous* updates: within one step both the
W-update and the beta-update are evaluated from the same pre-step
(W, beta, e).  The regularized beta-update is

    beta <- (1 - eta*lambda(t)) beta - (eta/sqrt p) sum_i e_i psi(W x_i)

and the FA W-update backpropagates e through the fixed vector b instead of
beta.  The loop also maintains the running sums that drive the linear
closed forms:

    s(t)    = sum_{i<=t} e(i)
    shat(t) = (1 - eta*lambda(t)) shat(t-1) + e(t)
    Shat(t) = (1 - eta*lambda(t)) Shat(t-1) + e(t)^T X X^T s(t-1)
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import cos_alignment, decompose_error, weight_drift_arrays
from .errors import ContractViolation, DivergenceError
from .network import error

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Schedule:
    """Regularization sequence lambda(t) >= 0.

    kinds:
      zero                   lambda(t) = 0
      constant(lam)          lambda(t) = lam
      cutoff(lam, T)         lambda(t) = lam for t <= T, else 0
      exp_decay(lam0, rate)  lambda(t) = lam0 * (1 - rate)^t
    """

    kind: str = "zero"
    lam: float = 0.0
    T: int = 0
    lam0: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "cutoff", "exp_decay"):
            raise ContractViolation(f"unknown schedule kind {self.kind!r}")
        if self.lam < 0 or self.lam0 < 0:
            raise ContractViolation("regularization weights must be >= 0")
        if self.kind == "exp_decay" and not 0 < self.rate <= 1:
            raise ContractViolation("exp_decay rate must lie in (0, 1]")

    def __call__(self, t):
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.lam
        if self.kind == "cutoff":
            return self.lam if t <= self.T else 0.0
        return self.lam0 * (1.0 - self.rate) ** t

    def cumulative(self):
        """S_lambda = sum_t lambda(t); inf for a nonzero constant schedule."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return math.inf if self.lam > 0 else 0.0
        if self.kind == "cutoff":
            return self.lam * (self.T + 1)
        return self.lam0 / self.rate

    @staticmethod
    def zero():
        return Schedule("zero")

    @staticmethod
    def constant(lam):
        return Schedule("constant", lam=lam)

    @staticmethod
    def cutoff(lam, T):
        return Schedule("cutoff", lam=lam, T=int(T))

    @staticmethod
    def exp_decay(lam0, rate):
        return Schedule("exp_decay", lam0=lam0, rate=rate)


@dataclass
class StepRecord:
    t: int
    loss: float
    err_norm: float
    cos_align: float
    a_t: float
    xi_norm: float
    max_w_drift: float
    max_beta_drift: float
    lambda_t: float
    s_hat_norm: float
    S_hat: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    s: np.ndarray = None        # sum of errors
    s_hat: np.ndarray = None    # discounted sum of errors
    S_hat: float = 0.0          # discounted sum of e(t)^T XX^T s(t-1)
    errors: list = None         # full e(t) vectors when requested

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


def _updates(net, X, e, eta, lambda_t, back):
    """Simultaneous update directions from pre-step state.

    `back` is the vector weighting the backpropagated error in the W-update:
    beta for backprop, b for feedback alignment.
    Returns (new_W, new_beta).
    """
    sp = math.sqrt(net.p)
    if net.act.tag == "identity":
        xte = X.T @ e
        grad_beta = net.W @ xte / sp
        dW = np.outer(back * (eta / sp), xte)
    else:
        Z = X @ net.W.T
        grad_beta = net.act(Z).T @ e / sp
        A = (net.act.deriv(Z) * e[:, None]).T @ X
        dW = (back * (eta / sp))[:, None] * A
    new_beta = (1.0 - eta * lambda_t) * net.beta - eta * grad_beta
    np.subtract(net.W, dW, out=dW)  # reuse the buffer for the new W
    return dW, new_beta


def bp_step(net, data, eta):
    """One full-batch gradient-descent step on the squared loss."""
    if eta <= 0:
        raise ContractViolation("eta must be positive")
    e = error(net, data)
    net.W, net.beta = _updates(net, data.X, e, eta, 0.0, net.beta)
    return net


def fa_step(net, data, eta):
    """One feedback-alignment step: W-update propagates e through b."""
    return fa_reg_step(net, data, eta, 0.0)


def fa_reg_step(net, data, eta, lambda_t):
    """Regularized feedback alignment; beta shrinks by (1 - eta*lambda_t)."""
    if eta <= 0:
        raise ContractViolation("eta must be positive")
    if lambda_t < 0 or eta * lambda_t >= 1.0:
        raise ContractViolation("need 0 <= eta*lambda_t < 1")
    e = error(net, data)
    net.W, net.beta = _updates(net, data.X, e, eta, lambda_t, net.b)
    return net


_ALGORITHMS = ("bp", "fa", "fa_reg")


def train(net, data, eta, schedule, steps, algorithm, keep_errors=False,
          track_drift=True):
    """Run `steps` update iterations, recording one StepRecord per step.

    The network is updated in place; record t describes the state *before*
    step t is applied.  The schedule only affects "fa_reg"; "bp" and "fa"
    train on the unregularized loss.  `track_drift=False` skips the O(p*d)
    per-step drift scan (the drift fields are recorded as nan), for long
    runs that only need the error/alignment columns.
    """
    if steps < 1:
        raise ContractViolation("steps must be >= 1")
    if algorithm not in _ALGORITHMS:
        raise ContractViolation(f"algorithm must be one of {_ALGORITHMS}")
    if schedule is None:
        schedule = Schedule.zero()

    X, y = data.X, data.y
    n = data.n
    W0 = net.W.copy()
    beta0 = net.beta.copy()
    y_norm = float(np.linalg.norm(y))

    traj = Trajectory(s=np.zeros(n), s_hat=np.zeros(n), S_hat=0.0,
                      errors=[] if keep_errors else None)

    for t in range(steps):
        lam_t = schedule(t) if algorithm == "fa_reg" else 0.0
        e = error(net, data)
        e_norm = float(np.linalg.norm(e))
        if not np.isfinite(e_norm) or e_norm > DIVERGENCE_LIMIT:
            exc = DivergenceError(
                f"training diverged at step {t} (last finite step {t - 1})", t - 1)
            exc.trajectory = traj
            raise exc

        # running sums advance with e(t) before the parameter update
        s_prev = traj.s
        traj.S_hat = (1.0 - eta * lam_t) * traj.S_hat + float(e @ (X @ (X.T @ s_prev)))
        traj.s_hat = (1.0 - eta * lam_t) * traj.s_hat + e
        traj.s = s_prev + e

        if y_norm > 0:
            a_t, xi = decompose_error(e, y)
            xi_norm = float(np.linalg.norm(xi))
        else:
            a_t, xi_norm = 0.0, e_norm
        if track_drift:
            max_w, max_beta = weight_drift_arrays(net.W, net.beta, W0, beta0)
        else:
            max_w = max_beta = math.nan
        traj.records.append(StepRecord(
            t=t,
            loss=0.5 * e_norm ** 2 + 0.5 * lam_t * float(net.beta @ net.beta),
            err_norm=e_norm,
            cos_align=cos_alignment(net.b, net.beta),
            a_t=a_t,
            xi_norm=xi_norm,
            max_w_drift=max_w,
            max_beta_drift=max_beta,
            lambda_t=lam_t,
            s_hat_norm=float(np.linalg.norm(traj.s_hat)),
            S_hat=traj.S_hat,
        ))
        if keep_errors:
            traj.errors.append(e.copy())

        if algorithm == "bp":
            net.W, net.beta = _updates(net, X, e, eta, 0.0, net.beta)
        else:
            net.W, net.beta = _updates(net, X, e, eta, lam_t, net.b)

    return traj
