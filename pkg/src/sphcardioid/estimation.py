"""Moment, Gegenbauer-moment and maximum likelihood estimation of (mu, rho)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import geometry as geo
from . import specfun as sf
from .cardioid import CardioidParams, canonicalize
from .errors import DegenerateEstimateError, DomainError, NumericError

ESTIMATORS = ("MM1", "MM2", "GM", "ML")
BALL_RADIUS = 1.0 - 1e-6
NEAR_ONE = 0.99
FISHER_NODES = 256
N_OBS_STARTS = 200


@dataclass
class FitResult:
    estimator: str
    params: CardioidParams
    sigma2_mu: float
    sigma2_rho: float
    truncated: bool = False
    raw_rho: float | None = None
    iterations: int | None = None
    loglik: float | None = None
    converged: bool | None = None
    grad_norm: float | None = None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else float(v)

        out = {
            "estimator": self.estimator,
            "params": self.params.to_dict(),
            "sigma2_mu": num(self.sigma2_mu),
            "sigma2_rho": num(self.sigma2_rho),
            "truncated": bool(self.truncated),
            "raw_rho": num(self.raw_rho),
            "flags": list(self.flags),
        }
        if self.estimator == "ML":
            out.update(iterations=self.iterations, loglik=num(self.loglik),
                       converged=self.converged, grad_norm=num(self.grad_norm))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _as_sample(x) -> np.ndarray:
    x = np.asarray(getattr(x, "x", x), dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DomainError("sample must be an (n, d+1) array")
    return x


def _flags(rho: float) -> list:
    out = []
    if abs(rho) > NEAR_ONE:
        out.append("rho_near_one")
    if rho == 0.0:
        out.append("mu_unidentifiable")
    return out


def _inv(v: float) -> float:
    return math.inf if v == 0 else 1.0 / v


# Asymptotic variances of the moment estimators


def sigma2_mm1(d: int, rho: float) -> tuple[float, float]:
    """(sigma^2(mu), sigma^2(rho)) for the k = 1 moment estimators."""
    return (d + 1) * _inv(rho**2), d + 1 - rho**2


def sigma2_mm2(d: int, rho: float) -> tuple[float, float]:
    """(sigma^2(mu), sigma^2(rho)) for the k = 2 moment estimators."""
    s_mu = d * (d + 3) * (d * (d + 5) + 2 * (d - 1) * rho) * _inv(4 * rho**2 * (d + 1) * (d + 5))
    s_rho = d * (d + 3) / 2 + 2 * (d - 1) * (d + 3) * rho / (d + 5) - rho**2
    return s_mu, s_rho


def eta_gm(k: int, d: int) -> float:
    """Constant of the even-k Gegenbauer-moment variance; zero for d = 1 or odd k."""
    if d == 1 or k % 2:
        return 0.0
    lg = special.gammaln
    log_ratio = (3 * lg((d + k - 1) / 2) + lg(d + 3 * k / 2 - 1)
                 - lg(d + k - 1) - 2 * lg((d - 1) / 2) - lg((d + 3 * k - 1) / 2))
    log_fact = lg(k + 1) - 3 * lg(k / 2 + 1)
    return (2 * k + d - 1) ** 2 / ((3 * k + d - 1) * (d - 1)) * math.exp(log_fact + log_ratio)


def sigma2_gm(k: int, d: int, rho: float) -> float:
    return sf.dim_harmonics(k, d) + rho * eta_gm(k, d) - rho**2


# Moment estimators


def fit_mm1(sample) -> FitResult:
    x = _as_sample(sample)
    n, p = x.shape
    d = p - 1
    if n < 2:
        raise DomainError("MM1 needs at least two observations")
    xbar = x.mean(axis=0)
    nrm = float(np.linalg.norm(xbar))
    if nrm < 1e-12:
        raise DegenerateEstimateError("sample mean is zero; mu is not identifiable")
    raw = (d + 1) * nrm
    rho = min(raw, 1.0)
    params = CardioidParams(d=d, k=1, mu=xbar / nrm, rho=rho)
    s_mu, s_rho = sigma2_mm1(d, rho)
    return FitResult("MM1", params, s_mu, s_rho, truncated=raw > 1.0, raw_rho=raw,
                     flags=_flags(rho))


def _mm2_branch(x: np.ndarray, sign: str) -> FitResult:
    n, p = x.shape
    d = p - 1
    vals, vecs = geo.sym_eigen(x.T @ x / n)
    idx = 0 if sign == "+" else p - 1
    nb = 1 if sign == "+" else p - 2
    if abs(vals[idx] - vals[nb]) <= 1e-10:
        raise DegenerateEstimateError("selected scatter eigenvalue is not simple")
    raw = (d + 3) / 2 * ((d + 1) * vals[idx] - 1.0)
    rho = min(max(raw, -1.0), 1.0)
    params = canonicalize(CardioidParams(d=d, k=2, mu=vecs[:, idx], rho=rho))
    s_mu, s_rho = sigma2_mm2(d, params.rho)
    return FitResult("MM2", params, s_mu, s_rho, truncated=abs(raw) > 1.0, raw_rho=raw,
                     flags=_flags(params.rho))


def fit_mm2(sample, sign: str = "+") -> FitResult:
    """Scatter-eigenpair estimators for k = 2.

    ``sign`` picks the largest ("+") or smallest ("-") eigenpair; "auto" fits both
    and keeps the one with the larger log-likelihood.
    """
    x = _as_sample(sample)
    n, p = x.shape
    if n < p:
        raise DomainError("MM2 needs at least d + 1 observations")
    if sign in ("+", "-"):
        return _mm2_branch(x, sign)
    if sign != "auto":
        raise DomainError("sign must be '+', '-' or 'auto'")
    fits = []
    for s in ("+", "-") if p > 2 else ("+",):
        try:
            fits.append(_mm2_branch(x, s))
        except DegenerateEstimateError:
            pass
    if not fits:
        raise DegenerateEstimateError("scatter matrix has no simple extreme eigenvalue")
    return max(fits, key=lambda f: loglik_params(f.params, x))


def fit_gm(sample, mu_known, k: int) -> FitResult:
    """rho estimate from the Gegenbauer moment at a known mu."""
    x = _as_sample(sample)
    n, p = x.shape
    d = p - 1
    if n < 1:
        raise DomainError("GM needs at least one observation")
    mu = geo.as_unit_vector(mu_known)
    if mu.size != p:
        raise DomainError("mu has the wrong dimension")
    raw = sf.tau(k, d) * float(np.mean(sf.gegenbauer(k, d, sf.clamp_unit(x @ mu))))
    lo = 0.0 if k % 2 else -1.0
    rho = min(max(raw, lo), 1.0)
    params = canonicalize(CardioidParams(d=d, k=k, mu=mu, rho=rho))
    return FitResult("GM", params, math.nan, sigma2_gm(k, d, rho),
                     truncated=not lo <= raw <= 1.0, raw_rho=raw, flags=_flags(rho))


# Fisher information and maximum likelihood


@dataclass(frozen=True)
class FisherInfo:
    """Information A (rho direction) and B (tangent directions) for xi = rho mu."""

    A: float
    B: float
    rho: float
    d: int
    k: int

    @property
    def sigma2_rho(self) -> float:
        return _inv(self.A)

    @property
    def sigma2_mu(self) -> float:
        return _inv(self.B * self.rho**2)


def _fisher_quadrature(d: int, k: int, rho: float, n_nodes: int) -> tuple[float, float]:
    c1 = sf.gegenbauer_at_one(k, d)
    pref = sf.surface_area(d - 1) / (sf.surface_area(d) * c1)
    if d == 1:
        t, w = sf.quadrature_nodes("gauss_chebyshev", n_nodes)
        one_m = 1.0 - t**2
        wa, wb = w, w * one_m
    else:
        # t = cos(theta) turns the (1 - t^2)^{d/2 - 1} weight into a smooth integrand
        z, w = sf.quadrature_nodes("gauss_legendre", n_nodes)
        theta = 0.5 * np.pi * (z + 1.0)
        w = 0.5 * np.pi * w
        t, s = np.cos(theta), np.sin(theta)
        wa, wb = w * s ** (d - 1), w * s ** (d + 1)
    ck = sf.gegenbauer(k, d, t)
    dk = sf.gegenbauer_deriv(k, d, t)
    den = c1 + rho * ck
    a = pref * np.sum(wa * ck**2 / den)
    b = pref / d * np.sum(wb * dk**2 / den)
    return float(a), float(b)


def fisher_info(d: int, k: int, rho: float, method: str = "auto",
                n_nodes: int = FISHER_NODES) -> FisherInfo:
    """Per-observation Fisher information for xi = rho mu.

    The information matrix is A mu mu' + B (I - mu mu'); negative rho is
    accepted for even k, the reflected branch.
    """
    sf.check_kd(k, d, k_min=1)
    if not 0.0 < abs(rho) < 1.0 or (rho < 0 and k % 2):
        raise DomainError("Fisher information needs 0 < rho < 1 (or -1 < rho < 0 for even k)")
    if method not in ("auto", "closed", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    closed = method != "quadrature"
    if closed and d == 1:
        r = math.sqrt(1.0 - rho**2)
        # 1 - r = rho^2 / (1 + r) avoids cancellation at small rho
        a = 1.0 / ((1.0 + r) * r)
        b = k**2 / (1.0 + r)
    elif closed and d == 2 and k == 1:
        if rho < 0.1:
            j = np.arange(1, 12)
            r2 = rho ** (2 * j - 2)
            a = float(np.sum(r2 / (2 * j + 1)))
            b = float(np.sum(r2 / ((2 * j - 1) * (2 * j + 1))))
        else:
            at = math.atanh(rho)
            a = (at - rho) / rho**3
            b = (rho - (1.0 - rho**2) * at) / (2.0 * rho**3)
    elif method == "closed":
        raise DomainError("no closed form for these (d, k)")
    else:
        a, b = _fisher_quadrature(d, k, rho, n_nodes)
    return FisherInfo(A=a, B=b, rho=rho, d=d, k=k)


def loglik_xi(xi, x, k: int, sign: int = 1) -> float:
    """Log-likelihood of the reparametrized density with xi = rho mu."""
    x = _as_sample(x)
    n, p = x.shape
    d = p - 1
    xi = np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(xi))
    const = n * math.log(sf.surface_area(d))
    if r == 0.0:
        return -const
    core = 1.0 + sign * r * sf.gegenbauer_tilde(k, d, sf.clamp_unit(x @ (xi / r)))
    if np.any(core <= 0):
        return -math.inf
    return float(np.sum(np.log(core)) - const)


def score_xi(xi, x, k: int, sign: int = 1) -> np.ndarray:
    """Gradient of ``loglik_xi`` with respect to xi (xi != 0 unless k = 1)."""
    x = _as_sample(x)
    d = x.shape[1] - 1
    xi = np.asarray(xi, dtype=float)
    if k == 1:
        return sign * np.sum(x / (1.0 + sign * (x @ xi))[:, None], axis=0)
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        raise DomainError("score is not defined at xi = 0 for k >= 2")
    u = xi / r
    t = sf.clamp_unit(x @ u)
    c1 = sf.gegenbauer_at_one(k, d)
    ct = sf.gegenbauer_tilde(k, d, t)
    dt = sf.gegenbauer_deriv(k, d, t) / c1
    w = sign / (1.0 + sign * r * ct)
    return np.sum(w * ct) * u + ((w * dt)[:, None] * (x - t[:, None] * u)).sum(axis=0)


def loglik_params(p: CardioidParams, x) -> float:
    if p.rho < 0:
        return loglik_xi(-p.rho * p.mu, x, p.k, sign=-1)
    return loglik_xi(p.rho * p.mu, x, p.k, sign=1)


def _project(xi: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(xi)
    return xi * (BALL_RADIUS / r) if r > BALL_RADIUS else xi


def _num_hessian(grad, xi: np.ndarray) -> np.ndarray:
    p = xi.size
    h = 1e-6
    hess = np.empty((p, p))
    for j in range(p):
        e = np.zeros(p)
        e[j] = h
        hess[:, j] = (grad(xi + e) - grad(xi - e)) / (2 * h)
    return 0.5 * (hess + hess.T)


def _newton(xi0: np.ndarray, x: np.ndarray, k: int, sign: int, max_iter: int = 200):
    """Maximize the log-likelihood over the ball by damped projected Newton steps."""
    n = x.shape[0]

    def f(v):
        return loglik_xi(v, x, k, sign)

    def g(v):
        r = np.linalg.norm(v)
        if r + 2e-6 > 1.0:  # keep finite-difference probes inside the ball
            v = v * ((1.0 - 2e-6) / r)
        return score_xi(v, x, k, sign)

    xi = _project(np.array(xi0, dtype=float))
    fx = f(xi)
    tol = 1e-10 * n
    it = 0
    for it in range(1, max_iter + 1):
        grad = g(xi)
        on_edge = np.linalg.norm(xi) >= BALL_RADIUS - 1e-12 and grad @ xi > 0
        hess = -_num_hessian(g, xi)
        if on_edge:
            # Newton on the sphere |xi| = R: tangent gradient and Lagrangian Hessian
            u = xi / np.linalg.norm(xi)
            proj = np.eye(xi.size) - np.outer(u, u)
            grad = proj @ grad
            if np.linalg.norm(grad) <= tol:
                break
            lag = (g(xi) @ xi) / (xi @ xi)
            hess = proj @ (hess + lag * np.eye(xi.size)) @ proj
            lam_min = np.linalg.eigvalsh(hess + np.outer(u, u) * n)[0]
            if lam_min <= 1e-8 * n:
                hess = hess + (abs(lam_min) + 1e-3 * n) * proj
            step = proj @ np.linalg.solve(hess + np.outer(u, u) * n, grad)
        else:
            if np.linalg.norm(grad) <= tol:
                break
            lam_min = np.linalg.eigvalsh(hess)[0]
            if lam_min <= 1e-8 * n:
                hess = hess + (abs(lam_min) + 1e-3 * n) * np.eye(xi.size)
            step = np.linalg.solve(hess, grad)
        alpha = 1.0
        improved = False
        for _ in range(60):
            cand = _project(xi + alpha * step)
            fc = f(cand)
            if fc >= fx - 1e-12 * abs(fx) and np.isfinite(fc):
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        moved = np.linalg.norm(cand - xi)
        xi, fx = cand, fc
        if moved < 1e-15:
            break
    grad = g(xi)
    if np.linalg.norm(xi) >= BALL_RADIUS - 1e-12 and grad @ xi > 0:
        grad = grad - (grad @ xi) / (xi @ xi) * xi
    return xi, fx, it, float(np.linalg.norm(grad))


def _init_candidates(x: np.ndarray, k: int, sign: int, n_starts: int, seed: int) -> list:
    n, p = x.shape
    d = p - 1
    cands = []
    if k == 1:
        try:
            fit = fit_mm1(x)
            cands.append(fit.params.mu * min(max(fit.params.rho, 0.05), 0.95))
        except DegenerateEstimateError:
            pass
    elif k == 2:
        try:
            fit = _mm2_branch(x, "+" if sign > 0 else "-")
            mu = fit.params.mu
            if d == 1 and fit.params.rho < 0:
                mu = np.array([-mu[1], mu[0]])
            cands.append(mu * min(max(abs(fit.params.rho), 0.05), 0.95))
        except DegenerateEstimateError:
            pass
    if cands:
        return cands
    from .sampling import make_rng

    rng = make_rng(seed, 0)
    dirs = list(geo.uniform_sphere(d, rng, n_starts))
    # observations concentrate near the modes, so they are cheap informed starts
    pick = rng.choice(n, size=min(n, N_OBS_STARTS), replace=False)
    dirs += list(x[pick])
    vals, vecs = geo.sym_eigen(x.T @ x / n)
    dirs += [vecs[:, 0], vecs[:, -1]]
    m = x.mean(axis=0)
    if np.linalg.norm(m) > 1e-12:
        dirs.append(m / np.linalg.norm(m))
    scored = []
    for mu in dirs:
        r0 = sign * sf.tau(k, d) * float(np.mean(sf.gegenbauer(k, d, sf.clamp_unit(x @ mu))))
        if k % 2 and r0 < 0:
            mu, r0 = -mu, -r0
        xi0 = mu * min(max(r0, 0.05), 0.9)
        scored.append((loglik_xi(xi0, x, k, sign), xi0))
    scored.sort(key=lambda s: -s[0])
    return [s[1] for s in scored[:5]]


def fit_ml(sample, k: int, init: CardioidParams | None = None, sign: str = "+",
           n_starts: int = 20, seed: int = 0) -> FitResult:
    """Maximum likelihood over the ball |xi| <= 1 - 1e-6 with xi = rho mu.

    For even k, ``sign`` fixes the rho > 0 ("+") or rho < 0 ("-") branch in
    advance; "auto" fits both (d >= 2) and keeps the larger likelihood, which
    is unreliable at small n.
    """
    x = _as_sample(sample)
    n, p = x.shape
    d = p - 1
    sf.check_kd(k, d, k_min=1)
    if n < d + 2:
        raise DomainError("ML needs at least d + 2 observations")
    if sign not in ("+", "-", "auto"):
        raise DomainError("sign must be '+', '-' or 'auto'")
    if k % 2 or d == 1:
        signs = [1]
    else:
        signs = {"+": [1], "-": [-1], "auto": [1, -1]}[sign]
    best = None
    for s in signs:
        if init is not None and (init.rho >= 0) == (s > 0) and init.k == k:
            starts = [init.mu * min(max(abs(init.rho), 0.05), 0.95)]
        else:
            starts = _init_candidates(x, k, s, n_starts, seed)
        for xi0 in starts:
            xi, fx, it, gn = _newton(xi0, x, k, s)
            if best is None or fx > best[1]:
                best = (xi, fx, it, gn, s, loglik_xi(xi0, x, k, s))
    xi, fx, it, gn, s, f0 = best
    if not np.isfinite(fx):
        raise NumericError("likelihood maximization failed", best=xi)
    r = float(np.linalg.norm(xi))
    converged = gn <= 1e-8 * n
    if not converged:
        raise NumericError(f"ML did not converge (gradient norm {gn:.3g})", best=xi)
    truncated = r >= BALL_RADIUS - 1e-9
    rho = s * r
    mu = xi / r if r > 0 else np.eye(p)[0]
    params = canonicalize(CardioidParams(d=d, k=k, mu=mu, rho=rho))
    if 0.0 < abs(params.rho) < 1.0:
        info = fisher_info(d, k, params.rho)
        s_mu, s_rho = info.sigma2_mu, info.sigma2_rho
    else:
        s_mu, s_rho = math.inf, math.inf
    flags = _flags(params.rho)
    return FitResult("ML", params, s_mu, s_rho, truncated=truncated, raw_rho=rho,
                     iterations=it, loglik=fx, converged=converged, grad_norm=gn, flags=flags)


def fit(sample, k: int, estimator: str, sign: str = "+", mu=None, **kw) -> FitResult:
    """Dispatch to the estimator named by ``estimator`` (MM, MM1, MM2, GM, ML)."""
    est = estimator.upper()
    if est == "MM":
        est = {1: "MM1", 2: "MM2"}.get(k, "")
        if not est:
            raise DomainError("moment estimators exist only for k = 1, 2")
    if est == "MM1":
        if k != 1:
            raise DomainError("MM1 requires k = 1")
        return fit_mm1(sample)
    if est == "MM2":
        if k != 2:
            raise DomainError("MM2 requires k = 2")
        return fit_mm2(sample, sign)
    if est == "GM":
        if mu is None:
            raise DomainError("GM requires a known mu")
        return fit_gm(sample, mu, k)
    if est == "ML":
        return fit_ml(sample, k, sign=sign, **kw)
    raise DomainError(f"unknown estimator {estimator!r}")


# Asymptotic relative efficiency


def are(d: int, k: int, rho: float, which: str) -> float:
    """sigma^2_ML / sigma^2_estimator for MM_mu, MM_rho (k = 1, 2) or GM_rho."""
    if not 0.0 < rho < 1.0:
        raise DomainError("ARE needs 0 < rho < 1")
    info = fisher_info(d, k, rho)
    if which == "GM_rho":
        return info.sigma2_rho / sigma2_gm(k, d, rho)
    if which not in ("MM_mu", "MM_rho"):
        raise DomainError(f"unknown ARE kind {which!r}")
    if k == 1:
        s_mu, s_rho = sigma2_mm1(d, rho)
    elif k == 2:
        s_mu, s_rho = sigma2_mm2(d, rho)
    else:
        raise DomainError("moment-estimator AREs exist only for k = 1, 2")
    return info.sigma2_mu / s_mu if which == "MM_mu" else info.sigma2_rho / s_rho
