"""Alignment metrics, error decomposition, weight drift, and the Gram
matrices G, H with their spectral summaries.

G is the feature Gram G_ij = (1/p) psi(W x_i)^T psi(W x_j); H couples the
backward vector to the derivative profile,
H_ij = (x_i^T x_j / p) sum_r beta_r b_r psi'(w_r^T x_i) psi'(w_r^T x_j).
`gbar_reference` gives the large-p expectation of G for row-normalized
inputs, with activation moments computed by Gauss-Hermite quadrature.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ContractViolation
from .network import Activation, preactivations


@dataclass(frozen=True)
class GramPair:
    G: np.ndarray
    H: np.ndarray
    lambda_min_G: float
    norm_H: float


@dataclass(frozen=True)
class AlignmentReport:
    cos_b_beta: float
    component_norms: tuple   # (init, W0-span, b-span) when linear, else None
    S_hat_over_s_hat: float


def cos_alignment(b, beta):
    """cos of the angle between b and beta, clamped to [-1, 1]."""
    b = linalg.as_vector(b)
    beta = linalg.as_vector(beta)
    nb = np.linalg.norm(b)
    nbeta = np.linalg.norm(beta)
    if nb == 0.0 or nbeta == 0.0:
        raise ContractViolation("alignment undefined for a zero vector")
    return float(np.clip(float(b @ beta) / (nb * nbeta), -1.0, 1.0))


def decompose_error(e, y):
    """Split e along ybar = -y/||y||: returns (a, xi) with e = a*ybar + xi."""
    e = linalg.as_vector(e)
    y = linalg.as_vector(y)
    ny = np.linalg.norm(y)
    if ny == 0.0:
        raise ContractViolation("decompose_error needs a nonzero label vector")
    ybar = -y / ny
    a = float(e @ ybar)
    return a, e - a * ybar


def gram_pair(net, X):
    """G, H at the network's current weights, with lambda_min(G) and ||H||."""
    X = linalg.as_matrix(X)
    Z = preactivations(net, X)          # n x p
    Phi = net.act(Z)
    G = linalg.gram(Phi) / net.p
    D = net.act.deriv(Z)                # n x p, row i = diag(D_i)
    weighted = D * (net.beta * net.b)
    H = (weighted @ D.T) * (X @ X.T) / net.p
    H = 0.5 * (H + H.T)
    vals, _ = linalg.sym_eig(G)
    return GramPair(G=G, H=H, lambda_min_G=float(vals[0]),
                    norm_H=linalg.spectral_norm(H))


# Gauss-Hermite: E f(Z) for Z ~ N(0,1) via sum w_i f(sqrt(2) u_i) / sqrt(pi)
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def _std_normal_moment(f):
    z = np.sqrt(2.0) * _GH_NODES
    return float(_GH_WEIGHTS @ f(z) / np.sqrt(np.pi))


def activation_moments(act):
    """(E psi'(Z), E psi(Z)^2) for Z ~ N(0,1), by 64-node quadrature."""
    if act.tag not in ("identity", "tanh", "sigmoid"):
        raise ContractViolation(
            f"activation moments not defined for {act.tag!r}")
    return _std_normal_moment(act.deriv), _std_normal_moment(lambda z: act(z) ** 2)


def gbar_reference(X, act):
    """Large-p expectation of G for unit-normalized inputs:

    Gbar_ij = |E psi'(Z)|^2 * <x_i, x_j>/(||x_i|| ||x_j||)
              + (E psi(Z)^2 - |E psi'(Z)|^2) * 1{i=j}.
    """
    X = linalg.as_matrix(X)
    if isinstance(act, str):
        act = Activation(act)
    m1, m2 = activation_moments(act)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise ContractViolation("gbar_reference needs nonzero input rows")
    cosines = (X @ X.T) / np.outer(norms, norms)
    out = m1 ** 2 * cosines
    np.fill_diagonal(out, np.diag(out) + (m2 - m1 ** 2))
    return 0.5 * (out + out.T)


def weight_drift_arrays(W_t, beta_t, W_0, beta_0):
    max_w = float(np.sqrt(((W_t - W_0) ** 2).sum(axis=1)).max())
    max_beta = float(np.abs(beta_t - beta_0).max())
    return max_w, max_beta


def weight_drift(net_t, net_0):
    """(max_r ||w_r(t)-w_r(0)||, max_r |beta_r(t)-beta_r(0)|)."""
    if net_t.W.shape != net_0.W.shape:
        raise ContractViolation("weight_drift needs identically shaped nets")
    return weight_drift_arrays(net_t.W, net_t.beta, net_0.W, net_0.beta)
