"""Two-layer network state, forward pass, and activation functions.

The network computes f(x) = beta^T psi(W x) / sqrt(p) with forward weights
W (p x d), beta (p) and a fixed random backward vector b (p) that the
feedback-alignment update rules use in place of beta.

Sign convention: the error vector is prediction minus label, e = f - y.
(The introduction of the source material uses y - f; every recurrence and
update formula here is written in the f - y convention, so that is what the
whole package uses.)
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation


def _sigmoid(u):
    # overflow-safe: clamp the exponent argument far outside the support
    u = np.clip(u, -40.0, 40.0)
    return 1.0 / (1.0 + np.exp(-u))


_ACTIVATIONS = {
    "identity": (lambda u: u, lambda u: np.ones_like(u)),
    "tanh": (np.tanh, lambda u: 1.0 / np.cosh(u) ** 2),
    "sigmoid": (_sigmoid, lambda u: _sigmoid(u) * (1.0 - _sigmoid(u))),
    # derivative at exactly 0 is defined as 0 (subgradient choice)
    "relu": (lambda u: np.maximum(u, 0.0), lambda u: (u > 0).astype(np.float64)),
}


@dataclass(frozen=True)
class Activation:
    tag: str

    def __post_init__(self):
        if self.tag not in _ACTIVATIONS:
            raise ContractViolation(f"unknown activation {self.tag!r}")

    def __call__(self, u):
        return _ACTIVATIONS[self.tag][0](np.asarray(u, dtype=np.float64))

    def deriv(self, u):
        return _ACTIVATIONS[self.tag][1](np.asarray(u, dtype=np.float64))


@dataclass
class TwoLayerNet:
    W: np.ndarray          # p x d
    beta: np.ndarray       # p
    b: np.ndarray          # p, fixed after construction
    act: Activation

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        p, d = self.W.shape
        if self.beta.shape != (p,) or self.b.shape != (p,):
            raise ContractViolation("W, beta, b shapes do not conform")
        self.b.setflags(write=False)

    @property
    def p(self):
        return self.W.shape[0]

    @property
    def d(self):
        return self.W.shape[1]

    def copy(self):
        return TwoLayerNet(self.W.copy(), self.beta.copy(), self.b, self.act)


@dataclass
class Dataset:
    X: np.ndarray   # n x d
    y: np.ndarray   # n

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise ContractViolation("X rows must match y length")

    @property
    def n(self):
        return self.X.shape[0]


def init_net(p, d, act, rng_w, rng_beta, rng_b):
    """Standard-Gaussian initialization of W(0), beta(0) and the fixed b."""
    return TwoLayerNet(
        W=rng_w.gaussian_matrix(p, d),
        beta=rng_beta.gaussian(p),
        b=rng_b.gaussian(p),
        act=Activation(act) if isinstance(act, str) else act,
    )


def preactivations(net, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != net.d:
        raise ContractViolation(f"input dim {X.shape[1]} != network dim {net.d}")
    return X @ net.W.T   # n x p


def forward(net, X):
    """Network outputs on the rows of X: (1/sqrt p) psi(X W^T) beta."""
    if net.act.tag == "identity":
        # associate as X (W^T beta): O(pd) instead of O(npd)
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != net.d:
            raise ContractViolation(
                f"input dim {X.shape[1]} != network dim {net.d}")
        return X @ (net.W.T @ net.beta) / np.sqrt(net.p)
    Z = preactivations(net, X)
    return net.act(Z) @ net.beta / np.sqrt(net.p)


def error(net, data):
    """e = f - y (prediction minus label)."""
    return forward(net, data.X) - data.y


def loss(net, data, lam=0.0):
    """0.5 ||e||^2 + 0.5 lam ||beta||^2."""
    if lam < 0:
        raise ContractViolation("regularization weight must be >= 0")
    e = error(net, data)
    value = 0.5 * float(e @ e)
    if lam:
        value += 0.5 * lam * float(net.beta @ net.beta)
    return value


def act_diag(net, x_i):
    """Diagonal of D_i: psi'(w_r^T x_i) over hidden units r."""
    x_i = np.asarray(x_i, dtype=np.float64)
    if x_i.shape != (net.d,):
        raise ContractViolation("x_i must have the network input dimension")
    return net.act.deriv(net.W @ x_i)
