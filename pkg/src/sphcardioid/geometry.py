"""Sphere geometry and multilinear algebra helpers."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import DomainError, ResourceError

NORM_TOL = 1e-6
SYM_MAX_ORDER = 6
SYM_MAX_DIM = 5


def as_unit_vector(coords, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``coords`` renormalized, rejecting norms off by more than ``tol``."""
    v = np.array(coords, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise DomainError("a unit vector needs at least two coordinates")
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > tol:
        raise DomainError(f"vector norm {nrm!r} is not within {tol} of 1")
    # leave vectors that are unit to rounding untouched so serialization round-trips exactly
    return v if abs(nrm - 1.0) <= 4 * np.finfo(float).eps else v / nrm


def uniform_sphere(d: int, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniform draws on S^d as normalized Gaussian vectors.

    Returns shape (d+1,) if ``n`` is None, else (n, d+1).
    """
    if d < 1:
        raise DomainError("d must be >= 1")
    m = 1 if n is None else n
    z = rng.standard_normal((m, d + 1))
    nrm = np.linalg.norm(z, axis=1)
    while np.any(nrm == 0.0):  # measure-zero event
        bad = nrm == 0.0
        z[bad] = rng.standard_normal((int(bad.sum()), d + 1))
        nrm = np.linalg.norm(z, axis=1)
    z /= nrm[:, None]
    return z[0] if n is None else z


def tangent_basis(mu) -> np.ndarray:
    """Semi-orthogonal (d+1) x d matrix B with mu^T B = 0.

    Built from the Householder reflection sending e_{d+1} to mu, with its last
    column dropped.
    """
    mu = np.asarray(mu, dtype=float)
    p = mu.size
    e = np.zeros(p)
    e[-1] = 1.0
    v = mu - e
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return np.eye(p)[:, : p - 1]
    v /= nv
    h = np.eye(p) - 2.0 * np.outer(v, v)
    return h[:, : p - 1]


def tangent_normal_compose(mu, t, xi, basis: np.ndarray | None = None) -> np.ndarray:
    """x = t mu + sqrt(1 - t^2) B_mu xi, vectorized over leading axes of t and xi."""
    mu = np.asarray(mu, dtype=float)
    b = tangent_basis(mu) if basis is None else basis
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    xi = np.asarray(xi, dtype=float)
    s = np.sqrt(1.0 - t**2)
    return t[..., None] * mu + s[..., None] * (xi @ b.T)


def random_rotation(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal p x p matrix."""
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def sym_eigen(s) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvectors (columns)."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DomainError("matrix must be square")
    if np.max(np.abs(s - s.T), initial=0.0) > 1e-8:
        raise DomainError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (s + s.T))
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def vec_identity(p: int) -> np.ndarray:
    return np.eye(p).reshape(-1)


def kron_power(v, m: int) -> np.ndarray:
    out = np.ones(1)
    for _ in range(m):
        out = np.kron(out, v)
    return out


def check_budget(order: int, dim: int, max_order: int = SYM_MAX_ORDER,
                 max_dim: int = SYM_MAX_DIM) -> None:
    if order > max_order or dim > max_dim:
        raise ResourceError(
            f"symmetrizer of order {order} in dimension {dim} exceeds the budget "
            f"(order <= {max_order}, dimension <= {max_dim})"
        )


def symmetrizer_apply(v, order: int, dim: int, max_order: int = SYM_MAX_ORDER,
                      max_dim: int = SYM_MAX_DIM) -> np.ndarray:
    """Apply the symmetrizer S_{dim,order} to a vectorized tensor."""
    v = np.asarray(v, dtype=float)
    if v.size != dim**order:
        raise DomainError(f"expected length {dim**order}, got {v.size}")
    check_budget(order, dim, max_order, max_dim)
    if order <= 1:
        return v.copy()
    t = v.reshape((dim,) * order)
    acc = np.zeros_like(t)
    for perm in itertools.permutations(range(order)):
        acc += np.transpose(t, perm)
    return (acc / math.factorial(order)).reshape(-1)


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def uniform_moment(d: int, m: int, **budget) -> np.ndarray:
    """E[U^{(x)m}] for U uniform on S^d, as a vector of length (d+1)^m."""
    p = d + 1
    check_budget(m, p, **budget)
    if m % 2:
        return np.zeros(p**m)
    if m == 0:
        return np.ones(1)
    c = double_factorial(m - 1) / math.prod(d + 1 + 2 * r for r in range(m // 2))
    return c * symmetrizer_apply(kron_power(vec_identity(p), m // 2), m, p, **budget)
