"""Orthogonal polynomials, normalization constants and special functions.

Gegenbauer polynomials are indexed by the sphere dimension ``d`` so that
``gegenbauer(k, d, x)`` is C_k^{(d-1)/2}(x), with the convention that
d = 1 gives the Chebyshev polynomial T_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError

K_MAX = 64
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class PolyBasis:
    """Polynomial family on S^d: Chebyshev for d = 1, Gegenbauer otherwise."""

    d: int
    k: int

    def __post_init__(self):
        check_kd(self.k, self.d)

    def __call__(self, x):
        return gegenbauer(self.k, self.d, x)

    def tilde(self, x):
        return gegenbauer_tilde(self.k, self.d, x)

    def deriv(self, x):
        return gegenbauer_deriv(self.k, self.d, x)

    @property
    def constants(self) -> "BasisConstants":
        return basis_constants(self.k, self.d)


@dataclass(frozen=True)
class BasisConstants:
    tau: float
    dim_harm: int
    c_norm: float
    c_at_one: float


def check_kd(k: int, d: int, k_min: int = 0) -> None:
    if int(d) != d or d < 1:
        raise DomainError(f"sphere dimension must be an integer >= 1, got {d}")
    if int(k) != k or k < k_min:
        raise DomainError(f"degree must be an integer >= {k_min}, got {k}")
    if k > K_MAX:
        raise DomainError(f"degree {k} exceeds the supported maximum {K_MAX}")


def clamp_unit(x, tol: float = CLAMP_TOL):
    """Clip values to [-1, 1], rejecting anything beyond the rounding tolerance."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + tol) or np.any(np.isnan(x)):
        raise DomainError("argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def surface_area(d: int) -> float:
    """Surface area of S^d, 2 pi^{(d+1)/2} / Gamma((d+1)/2)."""
    if int(d) != d or d < 0:
        raise DomainError(f"d must be a nonnegative integer, got {d}")
    if d == 0:
        return 2.0
    return 2.0 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def tau(k: int, d: int) -> float:
    if d == 1:
        return 1.0 if k == 0 else 2.0
    return 1.0 + 2.0 * k / (d - 1)


def dim_harmonics(k: int, d: int) -> int:
    """Dimension of the space of degree-k spherical harmonics on S^d."""
    if d == 1:
        return 1 if k == 0 else 2
    return (2 * k + d - 1) * math.comb(k + d - 2, k) // (d - 1)


def basis_constants(k: int, d: int) -> BasisConstants:
    check_kd(k, d)
    t = tau(k, d)
    dk = dim_harmonics(k, d)
    c_norm = surface_area(d) / surface_area(d - 1) * dk / t**2
    return BasisConstants(tau=t, dim_harm=dk, c_norm=c_norm, c_at_one=dk / t)


def gegenbauer_at_one(k: int, d: int) -> float:
    if d == 1:
        return 1.0
    return float(math.comb(k + d - 2, k))


def gegenbauer_lambda(k: int, lam: float, x):
    """C_k^lam(x) for lam > 0 by the forward three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    prev = np.ones_like(x)
    cur = 2.0 * lam * x
    for n in range(1, k):
        prev, cur = cur, (2.0 * (n + lam) * x * cur - (n + 2.0 * lam - 1.0) * prev) / (n + 1)
    return cur


def gegenbauer(k: int, d: int, x):
    """C_k^{(d-1)/2}(x); T_k(x) when d = 1."""
    check_kd(k, d)
    x = clamp_unit(x)
    if d == 1:
        return np.cos(k * np.arccos(x))
    return gegenbauer_lambda(k, (d - 1) / 2, x)


def gegenbauer_tilde(k: int, d: int, x):
    """Normalized polynomial C_k / C_k(1)."""
    return gegenbauer(k, d, x) / gegenbauer_at_one(k, d)


def gegenbauer_deriv(k: int, d: int, x):
    """Derivative of C_k^{(d-1)/2} at x."""
    check_kd(k, d)
    x = clamp_unit(x)
    if k == 0:
        return np.zeros_like(x)
    if d == 1:
        # k U_{k-1}(x), and U_{k-1} = C_{k-1}^1
        return k * gegenbauer_lambda(k - 1, 1.0, x)
    return (d - 1) * gegenbauer_lambda(k - 1, (d + 1) / 2, x)


def series_prefactor(k: int, d: int) -> float:
    """Leading factor of the explicit power series of C_k^{(d-1)/2}."""
    if d == 1:
        return k / 2.0 if k > 0 else 1.0
    return 1.0 / math.gamma((d - 1) / 2)


def series_coefficients(k: int, d: int) -> list[tuple[int, float]]:
    """Pairs (power, coefficient) of C_k^{(d-1)/2}(x) = sum coef * x^power.

    Uses the hypergeometric expansion in powers of 2x. For d = 1, k = 0 the
    Gamma(0) term is replaced by its limit T_0 = 1.
    """
    if d == 1 and k == 0:
        return [(0, 1.0)]
    g = series_prefactor(k, d)
    lam = (d - 1) / 2
    out = []
    for s in range(k // 2 + 1):
        c = (-1) ** s * math.gamma(lam + k - s) / (math.factorial(s) * math.factorial(k - 2 * s))
        out.append((k - 2 * s, g * c * 2.0 ** (k - 2 * s)))
    return out


def gegenbauer_series(k: int, d: int, x):
    """Term-by-term series evaluation, used as an independent check."""
    x = np.asarray(x, dtype=float)
    return sum(c * x**p for p, c in series_coefficients(k, d))


def reg_inc_beta(x, a: float, b: float):
    """Regularized incomplete beta function I_x(a, b)."""
    x = np.asarray(x, dtype=float)
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise DomainError("x must lie in [0, 1]")
    return special.betainc(a, b, x)


def _check_half_integer(nu: float) -> None:
    if nu < 0 or abs(2 * nu - round(2 * nu)) > 1e-12:
        raise DomainError(f"order must be a nonnegative half-integer, got {nu}")


def bessel_first_kind(nu: float, x, modified: bool = False):
    """J_nu(x), or I_nu(x) when ``modified``, for half-integer nu >= 0."""
    _check_half_integer(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("Bessel argument must be nonnegative")
    return special.iv(nu, x) if modified else special.jv(nu, x)


@lru_cache(maxsize=64)
def _nodes(rule: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    if rule == "gauss_legendre":
        t, w = np.polynomial.legendre.leggauss(n)
    elif rule == "gauss_chebyshev":
        j = np.arange(1, n + 1)
        t = np.cos((2 * j - 1) * np.pi / (2 * n))[::-1].copy()
        w = np.full(n, np.pi / n)
    else:
        raise DomainError(f"unknown quadrature rule {rule!r}")
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def quadrature_nodes(rule: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an n-point Gauss rule on (-1, 1).

    ``gauss_chebyshev`` integrates against (1 - x^2)^{-1/2}.
    """
    if int(n) != n or n < 1:
        raise DomainError("number of nodes must be a positive integer")
    return _nodes(rule, int(n))
