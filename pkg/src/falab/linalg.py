"""Small dense linear-algebra kernel used throughout the package.

Matrices are 2-d float64 numpy arrays, vectors are 1-d float64 arrays.
The heavy lifting (products, symmetric eigendecomposition) is delegated to
numpy/LAPACK; the spectral norm keeps an independent power-iteration route so
it can be cross-checked against the eigensolver.
"""

import numpy as np

from .errors import ContractViolation

SYM_TOL = 1e-10


def as_matrix(a):
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ContractViolation(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix has non-finite entries")
    return m


def as_vector(v):
    u = np.asarray(v, dtype=np.float64)
    if u.ndim != 1:
        raise ContractViolation(f"expected a vector, got ndim={u.ndim}")
    if not np.all(np.isfinite(u)):
        raise ContractViolation("vector has non-finite entries")
    return u


def matmul(a, b):
    """Matrix product with explicit conformance checking."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul shapes {a.shape} x {b.shape} do not conform")
    return a @ b


def gram(x):
    """X X^T, symmetrized exactly (one triangle computed, mirrored)."""
    x = as_matrix(x)
    if x.size == 0:
        raise ContractViolation("gram of an empty matrix")
    g = x @ x.T
    # enforce bitwise symmetry: average would do, copying the lower triangle is exact
    iu = np.triu_indices(g.shape[0], k=1)
    g[iu] = g.T[iu]
    return g


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues ascending, eigenvectors as columns).  Rejects inputs
    that are not symmetric to 1e-10 relative.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ContractViolation(f"sym_eig needs a square matrix, got {m.shape}")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if float(np.max(np.abs(m - m.T))) > SYM_TOL * scale:
        raise ContractViolation("sym_eig input is not symmetric")
    vals, vecs = np.linalg.eigh(m)
    return vals, vecs


def norm2(v):
    return float(np.linalg.norm(as_vector(v)))


def dot(a, b):
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise ContractViolation(f"dot length mismatch {a.shape} vs {b.shape}")
    return float(a @ b)


def spectral_norm(m, max_iter=1000, rtol=1e-10):
    """Largest singular value via power iteration on m^T m.

    Deterministic start vector: all ones, with a 1e-6 perturbation on odd
    indices so the iteration cannot start orthogonal to the top eigenvector
    of a sign-symmetric matrix.
    """
    m = as_matrix(m)
    if not m.size or not np.any(m):
        return 0.0
    n = m.shape[1]
    v = np.ones(n)
    v[1::2] += 1e-6
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(max_iter):
        w = m.T @ (m @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_rayleigh = float(v @ (m.T @ (m @ v)))
        if abs(new_rayleigh - rayleigh) <= rtol * max(abs(new_rayleigh), 1e-300):
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    return float(np.sqrt(max(rayleigh, 0.0)))
