"""The spherical cardioid distribution C_k(mu, rho) on S^d.

Density with respect to surface measure:

    f(x; mu, rho) = (1 / omega_d) [1 + rho * Ctilde_k(x' mu)]
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import geometry as geo
from . import specfun as sf
from .errors import DomainError

RHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CardioidParams:
    """Parameters (d, k, mu, rho); ``mu`` is stored as a read-only unit vector."""

    d: int
    k: int
    mu: np.ndarray
    rho: float

    def __post_init__(self):
        sf.check_kd(self.k, self.d, k_min=1)
        mu = geo.as_unit_vector(self.mu)
        if mu.size != self.d + 1:
            raise DomainError(f"mu has {mu.size} coordinates, expected {self.d + 1}")
        rho = float(self.rho)
        if not abs(rho) <= 1.0 + RHO_TOL:
            raise DomainError(f"rho must lie in [-1, 1], got {rho}")
        rho = min(max(rho, -1.0), 1.0)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "k", int(self.k))

    def __eq__(self, other):
        if not isinstance(other, CardioidParams):
            return NotImplemented
        return (self.d == other.d and self.k == other.k and self.rho == other.rho
                and np.array_equal(self.mu, other.mu))

    def __repr__(self):
        return f"CardioidParams(d={self.d}, k={self.k}, mu={self.mu.tolist()}, rho={self.rho})"

    def replace(self, **kw) -> "CardioidParams":
        args = dict(d=self.d, k=self.k, mu=self.mu, rho=self.rho)
        args.update(kw)
        return CardioidParams(**args)

    def to_dict(self) -> dict:
        return {"d": self.d, "k": self.k, "mu": [float(v) for v in self.mu], "rho": self.rho}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "CardioidParams":
        try:
            return cls(d=int(obj["d"]), k=int(obj["k"]), mu=np.asarray(obj["mu"], dtype=float),
                       rho=float(obj["rho"]))
        except KeyError as exc:
            raise DomainError(f"missing parameter field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CardioidParams":
        return cls.from_dict(json.loads(text))


def _rotate_circle(mu: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * mu[0] - s * mu[1], s * mu[0] + c * mu[1]])


def canonicalize(p: CardioidParams) -> CardioidParams:
    """Representative of (mu, rho) in the identifiable parameter space."""
    mu, rho, k = np.array(p.mu), p.rho, p.k
    if p.d == 1:
        theta = math.atan2(mu[1], mu[0])
        if rho < 0:
            theta += math.pi / k
            rho = -rho
        period = 2 * math.pi / k
        theta = math.fmod(theta, period)
        if theta < 0:
            theta += period
        if theta >= period:  # fmod rounding at the upper edge
            theta = 0.0
        mu = np.array([math.cos(theta), math.sin(theta)])
    elif k % 2 == 1:
        if rho < 0:
            mu, rho = -mu, -rho
    else:
        nz = np.flatnonzero(mu)
        if nz.size and mu[nz[0]] < 0:
            mu = -mu
    return p.replace(mu=mu, rho=rho)


def _check_points(p: CardioidParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.d + 1:
        raise DomainError(f"points have dimension {x.shape[-1]}, expected {p.d + 1}")
    return x


def density(p: CardioidParams, x):
    x = _check_points(p, x)
    t = sf.clamp_unit(x @ p.mu)
    return (1.0 + p.rho * sf.gegenbauer_tilde(p.k, p.d, t)) / sf.surface_area(p.d)


def log_density(p: CardioidParams, x):
    """log f; -inf where the density vanishes (only possible when |rho| = 1)."""
    x = _check_points(p, x)
    t = sf.clamp_unit(x @ p.mu)
    core = 1.0 + p.rho * sf.gegenbauer_tilde(p.k, p.d, t)
    core = np.maximum(core, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(core) - math.log(sf.surface_area(p.d))


def convolve(p1: CardioidParams, p2: CardioidParams) -> CardioidParams:
    """Law of X when X | Xi ~ C_{k1}(Xi, rho1) and Xi ~ C_{k2}(mu2, rho2)."""
    if p1.d != p2.d:
        raise DomainError("dimension mismatch")
    rho = p1.rho * p2.rho / sf.dim_harmonics(p1.k, p1.d) if p1.k == p2.k else 0.0
    return CardioidParams(d=p1.d, k=p1.k, mu=p2.mu, rho=rho)


# Projected distributions


def proj_unif_pdf(d: int, x):
    x = sf.clamp_unit(x)
    c = sf.surface_area(d - 1) / sf.surface_area(d)
    if d == 1:
        with np.errstate(divide="ignore"):
            return c / np.sqrt(1.0 - x**2)
    return c * (1.0 - x**2) ** (d / 2 - 1)


def proj_unif_cdf(d: int, x):
    """Cdf of a single coordinate of a uniform point on S^d."""
    x = sf.clamp_unit(x)
    if d == 1:
        return 1.0 - np.arccos(x) / np.pi
    if d == 2:
        return (x + 1.0) / 2.0
    return 0.5 * (1.0 + np.sign(x) * special.betainc(0.5, d / 2, x**2))


def proj_unif_cdf_recursive(d: int, x):
    """Same as ``proj_unif_cdf`` via the two-step recursion in d."""
    x = sf.clamp_unit(x)
    if d <= 2:
        return proj_unif_cdf(d, x)
    base = proj_unif_cdf_recursive(d - 2, x)
    return base + x * (1.0 - x**2) ** (d / 2 - 1) / ((d - 2) * special.beta(0.5, (d - 2) / 2))


def eta_k(d: int, k: int, s):
    """(omega_{d-1}/omega_d) C_k(s) / C_k(1)^2."""
    c1 = sf.gegenbauer_at_one(k, d)
    return sf.surface_area(d - 1) / sf.surface_area(d) * sf.gegenbauer(k, d, s) / c1**2


def g_k(d: int, k: int, x):
    x = sf.clamp_unit(x)
    if d == 1:
        return np.sin(k * np.arccos(x)) / k
    return ((d - 1) / (k * (k + d - 1)) * sf.gegenbauer_lambda(k - 1, (d + 1) / 2, x)
            * (1.0 - x**2) ** (d / 2))


def proj_pdf_from_cos(d: int, k: int, rho: float, s, x):
    """Density of gamma'X at x given s = gamma' mu (broadcasting)."""
    ct = sf.gegenbauer_tilde(k, d, s)
    return proj_unif_pdf(d, x) * (1.0 + rho * ct * sf.gegenbauer_tilde(k, d, x))


def proj_cdf_from_cos(d: int, k: int, rho: float, s, x):
    """Cdf of gamma'X at x given s = gamma' mu (broadcasting)."""
    return proj_unif_cdf(d, x) - rho * eta_k(d, k, s) * g_k(d, k, x)


def proj_pdf(p: CardioidParams, gamma, x):
    return proj_pdf_from_cos(p.d, p.k, p.rho, np.asarray(gamma) @ p.mu, x)


def proj_cdf(p: CardioidParams, gamma, x):
    return proj_cdf_from_cos(p.d, p.k, p.rho, np.asarray(gamma) @ p.mu, x)


# Moments


def _a_coef(k: int, j: int, d: int) -> float:
    num = (-1) ** j * math.factorial(k) / (2**j * math.factorial(k - 2 * j) * math.factorial(j))
    return num / math.prod(2 * (k - r) + d - 1 for r in range(1, j + 1))


def f_integral(j: int, m: int, k: int, d: int) -> float:
    """int_{-1}^1 t^{m-2j} (1-t^2)^{d/2-1+j} C_k(t) dt via the power series of C_k."""
    if (m + k) % 2:
        return 0.0
    total = 0.0
    for power, coef in sf.series_coefficients(k, d):
        q = m - 2 * j + power
        total += coef * special.beta((q + 1) / 2, d / 2 + j)
    return total


def _e_coef(j: int, k: int, m: int, d: int) -> float:
    if (m + k) % 2:
        return 0.0
    c = math.comb(m, 2 * j) * geo.double_factorial(2 * j - 1)
    c /= math.prod(d + 2 * r for r in range(j))
    return c * f_integral(j, m, k, d)


def _moment_case_ii(p: CardioidParams) -> np.ndarray:
    k, pdim = p.k, p.d + 1
    vi = geo.vec_identity(pdim)
    acc = np.zeros(pdim**k)
    for j in range(k // 2 + 1):
        acc += _a_coef(k, j, p.d) * np.kron(geo.kron_power(vi, j), geo.kron_power(p.mu, k - 2 * j))
    dk = sf.dim_harmonics(k, p.d)
    return geo.uniform_moment(p.d, k) + p.rho / dk * geo.symmetrizer_apply(acc, k, pdim)


def _moment_case_iv(p: CardioidParams, m: int) -> np.ndarray:
    pdim, d, k = p.d + 1, p.d, p.k
    base = geo.uniform_moment(d, m)
    if (m + k) % 2:
        return base
    proj = geo.vec_identity(pdim) - np.kron(p.mu, p.mu)
    acc = np.zeros(pdim**m)
    for j in range(m // 2 + 1):
        e = _e_coef(j, k, m, d)
        if e != 0.0:
            acc += e * np.kron(geo.kron_power(p.mu, m - 2 * j), geo.kron_power(proj, j))
    scale = p.rho / sf.gegenbauer_at_one(k, d) * sf.surface_area(d - 1) / sf.surface_area(d)
    return base + scale * geo.symmetrizer_apply(acc, m, pdim)


def moment_vectorized(p: CardioidParams, m: int, case: str = "auto") -> np.ndarray:
    """E[X^{(x)m}] as a vector of length (d+1)^m.

    ``case`` forces a formula: "ii" (only m = k) or "iv" (any m).
    """
    if m < 1:
        raise DomainError("moment order must be >= 1")
    geo.check_budget(m, p.d + 1)
    if case == "ii":
        if m != p.k:
            raise DomainError("the m = k formula needs m == k")
        return _moment_case_ii(p)
    if case == "iv":
        return _moment_case_iv(p, m)
    if m < p.k or (m - p.k) % 2:
        return geo.uniform_moment(p.d, m)
    if m == p.k:
        return _moment_case_ii(p)
    return _moment_case_iv(p, m)


def moment_covariance(p: CardioidParams, m: int) -> np.ndarray:
    """Covariance matrix of X^{(x)m}, shape ((d+1)^m, (d+1)^m)."""
    geo.check_budget(2 * m, p.d + 1)
    em = moment_vectorized(p, m)
    e2m = moment_vectorized(p, 2 * m)
    n = (p.d + 1) ** m
    return (e2m - np.kron(em, em)).reshape(n, n)


# Generating functions


def _e_ld(ell: int, d: int) -> float:
    if d == 1:
        return 1.0 if ell == 0 else 2.0
    return math.gamma((d - 1) / 2) * (ell + (d - 1) / 2)


def char_fn(p: CardioidParams, t, kind: str = "cf"):
    """Characteristic function (``kind='cf'``) or mgf (``kind='mgf'``) at t."""
    if kind not in ("cf", "mgf"):
        raise DomainError("kind must be 'cf' or 'mgf'")
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != p.d + 1:
        raise DomainError("t has the wrong dimension")
    r = np.linalg.norm(t, axis=-1)
    zero = r == 0.0
    rs = np.where(zero, 1.0, r)
    cosang = np.clip((t @ p.mu) / rs, -1.0, 1.0)
    d, k = p.d, p.k
    nu0, nuk = (d - 1) / 2, (2 * k + d - 1) / 2
    if kind == "mgf":
        b0, bk = special.iv(nu0, rs), special.iv(nuk, rs)
    else:
        b0, bk = special.jv(nu0, rs), (1j) ** k * special.jv(nuk, rs)
    pref = (2.0 / rs) ** ((d - 1) / 2)
    val = pref * (_e_ld(0, d) * b0 + p.rho / sf.dim_harmonics(k, d) * _e_ld(k, d) * bk
                  * sf.gegenbauer(k, d, cosang))
    val = np.where(zero, 1.0, val)
    if kind == "mgf":
        val = np.real(val)
    return val[()] if np.ndim(val) == 0 else val


# Approximation bridges


def vmf_to_cardioid(mu, kappa: float, d: int) -> CardioidParams:
    """Cardioid C_1(mu, kappa) approximating vMF(mu, kappa) for small kappa."""
    if not 0.0 <= kappa <= 1.0:
        warnings.warn("vMF to cardioid approximation is only meaningful for 0 <= kappa <= 1")
    if abs(kappa) > 1.0:
        raise DomainError("kappa gives a concentration outside [-1, 1]")
    return canonicalize(CardioidParams(d=d, k=1, mu=mu, rho=kappa))


def watson_to_cardioid(mu, kappa: float, d: int) -> CardioidParams:
    """Cardioid C_2(mu, d kappa / (d + 1 + kappa)) approximating Watson(mu, kappa)."""
    den = d + 1 + kappa
    if den == 0 or abs(d * kappa / den) > 1.0:
        raise DomainError("kappa gives a concentration outside [-1, 1]")
    return CardioidParams(d=d, k=2, mu=mu, rho=d * kappa / den)
