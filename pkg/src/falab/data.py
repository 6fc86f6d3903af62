"""Synthetic teacher-network data, label projection, and CSV round-trip.

Inputs are rows x_i with N(0, 1/d) entries so E||x_i||^2 = 1; labels come
from a randomly initialized teacher network with the same architecture as
the student (its own width), evaluated once at generation time.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ContractViolation, DatasetFormatError
from .network import Activation, Dataset, TwoLayerNet, forward


@dataclass(frozen=True)
class TeacherSpec:
    d: int
    p_teacher: int = 100
    act: str = "tanh"

    def __post_init__(self):
        if self.p_teacher < 1 or self.d < 1:
            raise ContractViolation("teacher dims must be >= 1")
        Activation(self.act)  # validate the tag


def gen_synthetic(n, d, teacher, rng_x, rng_teacher_w, rng_teacher_beta):
    """X with N(0,1/d) entries; y = f0(x_i) for a random Gaussian teacher f0."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    if teacher.d != d:
        raise ContractViolation("teacher input dim must match d")
    X = rng_x.gaussian_matrix(n, d, std=1.0 / math.sqrt(d))
    f0 = TwoLayerNet(
        W=rng_teacher_w.gaussian_matrix(teacher.p_teacher, d),
        beta=rng_teacher_beta.gaussian(teacher.p_teacher),
        b=np.zeros(teacher.p_teacher),
        act=Activation(teacher.act),
    )
    y = forward(f0, X)
    if teacher.act == "identity" and np.max(np.abs(y)) > 1e3:
        warnings.warn("identity teacher produced |y| > 1e3; labels unbounded")
    return Dataset(X=X, y=y)


def project_y(X, y):
    """Orthogonal projection of y onto the column space of X, via the
    symmetric eigendecomposition of X^T X.  Requires full column rank."""
    X = linalg.as_matrix(X)
    y = linalg.as_vector(y)
    if y.shape[0] != X.shape[0]:
        raise ContractViolation("y length must match rows of X")
    vals, vecs = linalg.sym_eig(X.T @ X)
    if vals[0] <= 1e-10:
        raise ContractViolation(
            f"X is rank deficient (lambda_min(X^T X) = {vals[0]:.3e})")
    # X (X^T X)^-1 X^T y through the eigenbasis
    coeffs = vecs.T @ (X.T @ y)
    return X @ (vecs @ (coeffs / vals))


def save_csv(dataset, path):
    """Header `x0,...,x{d-1},y`; 17-significant-digit values, LF endings."""
    d = dataset.X.shape[1]
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(dataset.n):
            row = [f"{v:.17g}" for v in dataset.X[i]]
            row.append(f"{dataset.y[i]:.17g}")
            fh.write(",".join(row) + "\n")


def load_csv(path):
    with open(path, "r") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError("empty dataset file", line=1)
    header = lines[0].split(",")
    if len(header) < 2 or header[-1] != "y":
        raise DatasetFormatError(f"bad header {lines[0]!r}", line=1)
    d = len(header) - 1
    if header[:-1] != [f"x{j}" for j in range(d)]:
        raise DatasetFormatError(f"bad header {lines[0]!r}", line=1)
    if len(lines) == 1:
        raise DatasetFormatError("dataset has a header but no rows", line=1)
    X = np.empty((len(lines) - 1, d))
    y = np.empty(len(lines) - 1)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != d + 1:
            raise DatasetFormatError(
                f"row has {len(parts)} fields, expected {d + 1}", line=i)
        try:
            vals = [float(v) for v in parts]
        except ValueError as exc:
            raise DatasetFormatError(f"unparsable number: {exc}", line=i) from exc
        X[i - 2] = vals[:-1]
        y[i - 2] = vals[-1]
    return Dataset(X=X, y=y)
