"""Exact closed-form dynamics for the linear (identity-activation) case
under regularized feedback alignment.

The error vector obeys the recurrence

    e(t+1) = [(1 - eta*lambda(t)) I
              - (eta/p) X W(0)^T W(0) X^T
              - eta (J1(t) + J2(t) + J3(t))] e(t)  -  eta*lambda(t) y

with

    J1(t) = (1/p) b^T beta(0) * prod_{i<=t}(1 - eta*lambda(i)) * XX^T
    J2(t) = -(eta/p) ( vbar^T X^T shat(t) * XX^T
                       + XX^T s(t-1) vbar^T X^T
                       + X vbar s(t-1)^T XX^T )
    J3(t) = (eta^2/p^2) ||b||^2 ( Shat(t) * XX^T
                                  + XX^T s(t-1) s(t-1)^T XX^T )

where vbar = W(0)^T b / sqrt(p), s(t) = sum_{i<=t} e(i),
shat(t) = sum_{i<=t} prod_{i<k<=t}(1 - eta*lambda(k)) e(i), and
Shat(t) = sum_{i<=t} prod_{i<k<=t}(1 - eta*lambda(k)) e(i)^T XX^T s(i-1).

This module replays that recurrence step by step, providing an oracle
independent of the iterative trainer.  It also evaluates the weight
closed forms

    W(t)    = W(0) - (eta/sqrt p) b s(t-1)^T X
    beta(t) = prod_{i<t}(1 - eta*lambda(i)) beta(0)
              - (eta/sqrt p) W(0) X^T shat(t-1)
              + (eta^2/p) b Shat(t-1).

State indexing: a DynState "at step t" holds e = e(t), s_prev = s(t-1),
s_hat = shat(t-1), S_hat = Shat(t-1), and prodlam = prod_{i<t}(1-eta*lambda(i))
(all sums empty and prodlam = 1 at t = 0).  dyn_step first folds e(t) and
lambda(t) into shat/Shat/prodlam — the J-terms are defined with those
t-inclusive values — then forms e(t+1), then advances s.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class DynState:
    e: np.ndarray        # e(t), length n
    s_prev: np.ndarray   # s(t-1)
    s_hat: np.ndarray    # shat(t-1)
    S_hat: float         # Shat(t-1)
    prodlam: float       # prod_{i<t} (1 - eta*lambda(i))
    v_bar: np.ndarray    # W(0)^T b / sqrt(p), length d
    XXT: np.ndarray      # X X^T cached, n x n
    X: np.ndarray        # n x d
    W0: np.ndarray       # p x d
    beta0: np.ndarray    # p
    b: np.ndarray        # p
    b_sq: float          # ||b||^2
    bt_beta0: float      # b^T beta(0)
    t: int


def dyn_init(X, y, W0, beta0, b):
    """State at t = 0 with e(0) = (1/sqrt p) X W(0)^T beta(0) - y."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    W0 = np.asarray(W0, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, d = X.shape
    p = W0.shape[0]
    if W0.shape != (p, d) or beta0.shape != (p,) or b.shape != (p,) or y.shape != (n,):
        raise ContractViolation("dyn_init shapes do not conform")
    sp = math.sqrt(p)
    e0 = X @ (W0.T @ beta0) / sp - y
    return DynState(
        e=e0,
        s_prev=np.zeros(n),
        s_hat=np.zeros(n),
        S_hat=0.0,
        prodlam=1.0,
        v_bar=W0.T @ b / sp,
        XXT=X @ X.T,
        X=X,
        W0=W0,
        beta0=beta0,
        b=b,
        b_sq=float(b @ b),
        bt_beta0=float(b @ beta0),
        t=0,
    )


def dyn_step(state, eta, lambda_t, y):
    """Advance e(t) -> e(t+1) via the exact recurrence.

    All J-terms are applied to e(t) as matrix-vector chains; no n x n
    product beyond the cached XX^T is ever formed.
    """
    if eta <= 0:
        raise ContractViolation("eta must be positive")
    if lambda_t < 0 or eta * lambda_t >= 1.0:
        raise ContractViolation("need 0 <= eta*lambda_t < 1")
    y = np.asarray(y, dtype=np.float64)

    X, XXT, W0 = state.X, state.XXT, state.W0
    p = W0.shape[0]
    e = state.e
    decay = 1.0 - eta * lambda_t

    # fold e(t), lambda(t) into the discounted sums (they include index t)
    s_hat_t = decay * state.s_hat + e
    S_hat_t = decay * state.S_hat + float(e @ (XXT @ state.s_prev))
    prodlam_t = decay * state.prodlam

    XXTe = XXT @ e
    XXTs = XXT @ state.s_prev

    # frozen-kernel term (eta/p) X W(0)^T W(0) X^T e
    kernel = X @ (W0.T @ (W0 @ (X.T @ e))) / p

    j1 = (state.bt_beta0 / p) * prodlam_t * XXTe
    j2 = -(eta / p) * (
        float(state.v_bar @ (X.T @ s_hat_t)) * XXTe
        + XXTs * float(state.v_bar @ (X.T @ e))
        + (X @ state.v_bar) * float(state.s_prev @ XXTe)
    )
    j3 = (eta ** 2 / p ** 2) * state.b_sq * (
        S_hat_t * XXTe + XXTs * float(state.s_prev @ XXTe)
    )

    e_next = decay * e - eta * (kernel + j1 + j2 + j3) - eta * lambda_t * y

    return replace(
        state,
        e=e_next,
        s_prev=state.s_prev + e,
        s_hat=s_hat_t,
        S_hat=S_hat_t,
        prodlam=prodlam_t,
        t=state.t + 1,
    )


def closed_form_W(state, eta):
    """W(t) = W(0) - (eta/sqrt p) b s(t-1)^T X at the state's current t."""
    p = state.W0.shape[0]
    return state.W0 - (eta / math.sqrt(p)) * np.outer(state.b, state.X.T @ state.s_prev)


def closed_form_beta(state, eta):
    """beta(t) as its three-term decomposition at the state's current t.

    Returns (beta, (init_component, W0_span_component, b_span_component)):
      init    = prod_{i<t}(1 - eta*lambda(i)) beta(0)
      W0-span = -(eta/sqrt p) W(0) X^T shat(t-1)
      b-span  = (eta^2/p) b Shat(t-1)
    """
    p = state.W0.shape[0]
    init = state.prodlam * state.beta0
    w0_span = -(eta / math.sqrt(p)) * (state.W0 @ (state.X.T @ state.s_hat))
    b_span = (eta ** 2 / p) * state.S_hat * state.b
    return init + w0_span + b_span, (init, w0_span, b_span)


def shat_direct(errors, eta, lambdas):
    """O(t^2) definitional recomputation of shat(t) from the raw error
    history, as a debug cross-check of the discounted recurrence."""
    t = len(errors) - 1
    total = np.zeros_like(errors[0])
    for i in range(t + 1):
        factor = 1.0
        for k in range(i + 1, t + 1):
            factor *= 1.0 - eta * lambdas[k]
        total += factor * errors[i]
    return total


def Shat_direct(errors, XXT, eta, lambdas):
    """O(t^2) definitional recomputation of Shat(t) from the error history."""
    t = len(errors) - 1
    total = 0.0
    s = np.zeros_like(errors[0])
    for i in range(t + 1):
        factor = 1.0
        for k in range(i + 1, t + 1):
            factor *= 1.0 - eta * lambdas[k]
        total += factor * float(errors[i] @ (XXT @ s))
        s = s + errors[i]
    return total


def run_dynamics(X, y, W0, beta0, b, eta, schedule, steps, keep_errors=True):
    """Replay `steps` recurrence steps from t = 0.

    Returns (final state at t = steps, error history [e(0) .. e(steps-1)]),
    mirroring the trainer whose record t holds the pre-update error e(t).
    """
    from .trainers import Schedule

    if schedule is None:
        schedule = Schedule.zero()
    state = dyn_init(X, y, W0, beta0, b)
    history = []
    for t in range(steps):
        if keep_errors:
            history.append(state.e.copy())
        state = dyn_step(state, eta, schedule(t), y)
    return state, history
