"""Projected-ecdf goodness-of-fit statistics and the parametric bootstrap test.

For a direction gamma, the projections gamma'X_i are mapped through the null
projected cdf F_gamma, and a Cramer-von Mises (CvM) or Anderson-Darling (AD)
discrepancy is computed. The statistic averages this over directions drawn
from lambda: uniform ("Unif"), the sample itself ("EmpiricalPn") or the fitted
cardioid ("CardioidNull").
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import specfun as sf
from .cardioid import CardioidParams, proj_cdf_from_cos
from .errors import CapabilityError, CardioidError, DomainError, NumericError
from .estimation import FitResult, fit
from .sampling import make_rng
from .sampling import sample as draw_sample

log = logging.getLogger(__name__)

WEIGHTS = ("CvM", "AD")
LAMBDAS = ("Unif", "EmpiricalPn", "CardioidNull")
AD_LO, AD_HI = 1e-300, 1.0 - 1e-16
CHUNK = 4096


def _as_sample(x) -> np.ndarray:
    x = np.asarray(getattr(x, "x", x), dtype=float)
    if x.ndim != 2:
        raise DomainError("sample must be an (n, d+1) array")
    if x.shape[0] == 0:
        raise DomainError("sample is empty")
    return x


def _check_weight(weight: str) -> None:
    if weight not in WEIGHTS:
        raise DomainError(f"weight must be one of {WEIGHTS}")


# Per-direction statistics


def cvm_from_uniforms(u) -> np.ndarray:
    """CvM statistic of each row of ``u`` (probability-integral transforms)."""
    u = np.sort(np.asarray(u, dtype=float), axis=-1, kind="stable")
    n = u.shape[-1]
    q = (2 * np.arange(1, n + 1) - 1) / (2 * n)
    return np.sum((u - q) ** 2, axis=-1) + 1.0 / (12 * n)


def ad_from_uniforms(u, omit_last: bool = False) -> np.ndarray:
    """AD statistic of each row of ``u``; ``omit_last`` drops the addend of U_(n)."""
    u = np.sort(np.asarray(u, dtype=float), axis=-1, kind="stable")
    n = u.shape[-1]
    u = np.clip(u, AD_LO, AD_HI)
    i = np.arange(1, n + 1)
    terms = (2 * i - 1) * np.log(u) + (2 * (n - i) + 1) * np.log1p(-u)
    if omit_last:
        terms = terms[..., :-1]
    return -n - np.sum(terms, axis=-1) / n


def stat_from_uniforms(u, weight: str, omit_last: bool = False) -> np.ndarray:
    _check_weight(weight)
    return cvm_from_uniforms(u) if weight == "CvM" else ad_from_uniforms(u, omit_last)


def stat_one_direction(sample, params: CardioidParams, gamma, weight: str) -> float:
    """Statistic for a single projecting direction ``gamma``.

    Under AD a transformed value equal to 0 or 1 raises DomainError; callers
    that want the omission rule use ``stat_pn_exact``.
    """
    x = _as_sample(sample)
    gamma = geo.as_unit_vector(gamma)
    u = proj_cdf_from_cos(params.d, params.k, params.rho, gamma @ params.mu,
                          sf.clamp_unit(x @ gamma))
    if weight == "AD" and np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("a projected value has cdf 0 or 1; AD is undefined")
    return float(stat_from_uniforms(u, weight))


def _uniforms(x: np.ndarray, params: CardioidParams, dirs: np.ndarray) -> np.ndarray:
    proj = sf.clamp_unit(dirs @ x.T)
    s = sf.clamp_unit(dirs @ params.mu)
    return proj_cdf_from_cos(params.d, params.k, params.rho, s[:, None], proj)


def draw_directions(params: CardioidParams, lam: str, K: int, rng) -> np.ndarray:
    if K < 1:
        raise DomainError("K must be >= 1")
    if lam == "Unif":
        return geo.uniform_sphere(params.d, rng, K)
    if lam == "CardioidNull":
        return draw_sample(params, K, rng).x
    raise DomainError(f"lambda {lam!r} has no direction sampler")


def _per_direction(x, params, dirs, weights) -> dict:
    out = {w: [] for w in weights}
    for start in range(0, dirs.shape[0], CHUNK):
        u = _uniforms(x, params, dirs[start:start + CHUNK])
        for w in weights:
            out[w].append(stat_from_uniforms(u, w))
    return {w: np.concatenate(v) for w, v in out.items()}


def stat_mc(sample, fitted: CardioidParams, weight: str, lam: str, K: int, rng,
            return_se: bool = False):
    """Monte Carlo average over K directions drawn from ``lam``."""
    x = _as_sample(sample)
    _check_weight(weight)
    dirs = draw_directions(fitted, lam, K, rng)
    vals = _per_direction(x, fitted, dirs, [weight])[weight]
    mean = float(vals.mean())
    if return_se:
        se = float(vals.std(ddof=1) / math.sqrt(K)) if K > 1 else math.inf
        return mean, se
    return mean


def stat_pn_exact(sample, fitted: CardioidParams, weight: str) -> float:
    """Average of the per-direction statistic over the directions X_1, ..., X_n.

    For AD the self-projection, whose transformed value is always 1, is omitted.
    """
    x = _as_sample(sample)
    _check_weight(weight)
    n = x.shape[0]
    if weight == "AD" and n < 2:
        raise DomainError("the AD variant needs n >= 2")
    total = 0.0
    for start in range(0, n, CHUNK):
        u = _uniforms(x, fitted, x[start:start + CHUNK])
        total += float(np.sum(stat_from_uniforms(u, weight, omit_last=True)))
    return total / n


# Closed-form CvM statistic with uniform directions


def psi_cvm(d: int, theta):
    """Projected-CvM uniformity kernel on S^1 and S^2."""
    theta = np.asarray(theta, dtype=float)
    if d == 1:
        a = theta / (2 * np.pi)
        return 0.5 + a * (a - 1.0)
    if d == 2:
        return 0.5 - 0.25 * np.sin(theta / 2)
    raise CapabilityError("closed kernel available for d = 1, 2 only")


def _closed_kernels(x: np.ndarray, params: CardioidParams):
    d, k, rho = params.d, params.k, params.rho
    m = sf.clamp_unit(x @ params.mu)
    t = sf.clamp_unit(x @ x.T)
    theta = np.arccos(t)
    mi, mj = m[:, None], m[None, :]
    if d == 1:
        phi = rho / (2 * np.pi**2 * k**2) * (
            np.cos(k * np.arccos(m)) - rho / 4 * (2.0 - np.cos(2 * k * np.arccos(m))))
        antipodal = t <= -1.0 + 1e-12
        nrm = np.sqrt(np.where(antipodal, 1.0, 2.0 * (1.0 + t)))
        arg = np.clip((mi + mj) / nrm, -1.0, 1.0)
        extra = ((np.pi - theta) / (2 * np.pi**2 * k) * np.cos(k * np.arccos(arg))
                 * np.sin(k * theta / 2))
        psi = psi_cvm(1, theta) - rho * np.where(antipodal, 0.0, extra)
    elif d == 2 and k == 1:
        phi = rho * m / 30 - rho**2 / 4 * (2 / 35 - 4 * m**2 / 105)
        psi = psi_cvm(2, theta) - rho / 32 * np.sqrt((1 - t) / 2) * (mi + mj)
    elif d == 2 and k == 2:
        phi = rho * (3 * m**2 - 1) / 420 - rho**2 / 4 * (1 / 330 + 3 * m**2 / 385 - m**4 / 110)
        close = 1.0 - t < 1e-12
        om = np.where(close, 1.0, 1.0 - t)
        brace = ((1 + t) / 2 + 3 * (3 * t - 1) / (4 * om) * (mi**2 + mj**2)
                 + 3 * (t - 3) / (2 * om) * mi * mj)
        extra = np.where(close, 0.0, np.sqrt((1 - t) / 2) * brace)
        # the rho term enters with a plus sign (checked by quadrature)
        psi = psi_cvm(2, theta) + rho / 128 * extra
    else:
        raise CapabilityError("closed form available for d = 1, or d = 2 with k in {1, 2}")
    return phi, psi


def stat_cvm_unif_closed(sample, fitted: CardioidParams) -> float:
    """Exact CvM statistic with uniform directions, O(n^2)."""
    x = _as_sample(sample)
    n = x.shape[0]
    phi, psi = _closed_kernels(x, fitted)
    iu = np.triu_indices(n, 1)
    return float((3 - 2 * n) / 6 - np.sum(phi) + 2.0 / n * np.sum(psi[iu]))


def stat_vform_oracle(sample, fitted: CardioidParams, weight: str, lam: str,
                      K_expectation: int, rng, return_se: bool = False):
    """V-statistic form with each direction expectation replaced by a K-point average.

    Pairwise terms evaluate F_gamma at max(gamma'X_i, gamma'X_j) directly.
    A testing oracle, O(K n^2).
    """
    x = _as_sample(sample)
    _check_weight(weight)
    n = x.shape[0]
    d, k, rho = fitted.d, fitted.k, fitted.rho
    dirs = draw_directions(fitted, lam, K_expectation, rng)
    vals = []
    step = max(1, 2_000_000 // (n * n))
    for start in range(0, dirs.shape[0], step):
        g = dirs[start:start + step]
        proj = sf.clamp_unit(g @ x.T)
        s = sf.clamp_unit(g @ fitted.mu)[:, None]
        f1 = proj_cdf_from_cos(d, k, rho, s, proj)
        pmax = np.maximum(proj[:, :, None], proj[:, None, :])
        fmax = proj_cdf_from_cos(d, k, rho, s[:, :, None], pmax)
        if weight == "CvM":
            v = n / 3 + np.sum(f1**2, axis=1) - np.sum(fmax, axis=(1, 2)) / n
        else:
            f1 = np.clip(f1, AD_LO, AD_HI)
            fmax = np.clip(fmax, AD_LO, AD_HI)
            v = (-n - 2 * np.sum(np.log1p(-f1), axis=1)
                 - np.sum(np.log(fmax) - np.log1p(-fmax), axis=(1, 2)) / n)
        vals.append(v)
    vals = np.concatenate(vals)
    mean = float(vals.mean())
    if return_se:
        return mean, float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.inf
    return mean


# Bootstrap


@dataclass
class GofConfig:
    weight: str = "CvM"
    lam: str = "Unif"
    K: int = 50
    B: int = 100
    seed: int = 0
    estimator: str = "MM"
    sign: str = "+"
    simple_null: CardioidParams | None = None
    ci_alpha: float | None = None
    shared_directions: bool = False

    def __post_init__(self):
        _check_weight(self.weight)
        if self.lam not in LAMBDAS:
            raise DomainError(f"lambda must be one of {LAMBDAS}")
        if self.K < 1:
            raise DomainError("K must be >= 1")
        if self.B < 19:
            raise DomainError("B must be >= 19")


@dataclass
class GofResult:
    statistic: float
    pvalue: float
    boot_stats: list
    fitted: FitResult | None
    params: CardioidParams
    B_effective: int
    failed: int = 0
    ci_rho: tuple | None = None
    cap_mu: float | None = None

    def to_dict(self) -> dict:
        out = {
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "B_effective": self.B_effective,
            "failed_replicates": self.failed,
            "boot_stats": [float(v) for v in self.boot_stats],
            "fitted": self.fitted.to_dict() if self.fitted else {"params": self.params.to_dict()},
        }
        if self.ci_rho is not None:
            out["ci_rho"] = list(self.ci_rho)
        if self.cap_mu is not None:
            out["cap_mu_threshold"] = self.cap_mu
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def compute_statistics(x: np.ndarray, params: CardioidParams, variants, K: int, rng,
                       directions: dict | None = None) -> dict:
    """Evaluate several (weight, lambda) statistics sharing direction draws per lambda."""
    out = {}
    lams = []
    for _, lam in variants:
        if lam not in lams:
            lams.append(lam)
    for lam in lams:
        weights = [w for w, l in variants if l == lam]
        if lam == "EmpiricalPn":
            for w in weights:
                out[(w, lam)] = stat_pn_exact(x, params, w)
            continue
        dirs = directions.get(lam) if directions else None
        if dirs is None:
            dirs = draw_directions(params, lam, K, rng)
        vals = _per_direction(x, params, dirs, weights)
        for w in weights:
            out[(w, lam)] = float(vals[w].mean())
    return out


def pvalue(stat: float, boot) -> float:
    boot = np.asarray(boot, dtype=float)
    return (1.0 + np.count_nonzero(boot > stat)) / (boot.size + 1.0)


def _fit(x, k, cfg_estimator, sign):
    return fit(x, k, cfg_estimator, sign=sign)


def bootstrap_multi(sample, k: int, variants, K: int = 50, B: int = 100, seed: int = 0,
                    estimator: str = "MM", sign: str = "+",
                    simple_null: CardioidParams | None = None,
                    shared_directions: bool = False, keep_fits: bool = False,
                    stream_key: tuple = ()) -> dict:
    """Parametric bootstrap for several statistics at once.

    Stream keys: (seed, *stream_key, 0) for the observed statistic and
    (seed, *stream_key, b, attempt) for replicate b = 1..B. Returns statistics,
    bootstrap draws and p-values keyed by (weight, lambda).
    """
    x = _as_sample(sample)
    n, p = x.shape
    if simple_null is not None:
        if simple_null.d != p - 1 or simple_null.k != k:
            raise DomainError("simple null does not match the sample dimension or k")
        fitted, params = None, simple_null
    else:
        fitted = _fit(x, k, estimator, sign)
        params = fitted.params
    rng0 = make_rng(seed, *stream_key, 0)
    shared = None
    if shared_directions:
        shared = {lam: draw_directions(params, lam, K, rng0)
                  for _, lam in variants if lam != "EmpiricalPn"}
    stats = compute_statistics(x, params, variants, K, rng0, shared)
    boot = {v: [] for v in variants}
    boot_fits = []
    failed = 0
    for b in range(1, B + 1):
        for attempt in range(2):
            rng = make_rng(seed, *stream_key, b, attempt)
            try:
                xb = draw_sample(params, n, rng).x
                if simple_null is not None:
                    fb, pb = None, simple_null
                else:
                    fb = _fit(xb, k, estimator, sign)
                    pb = fb.params
                sb = compute_statistics(xb, pb, variants, K, rng, shared)
            except CardioidError as exc:
                log.info("bootstrap replicate %d attempt %d failed: %s", b, attempt, exc)
                continue
            for v in variants:
                boot[v].append(sb[v])
            if keep_fits and fb is not None:
                boot_fits.append(fb)
            break
        else:
            failed += 1
    if failed:
        log.warning("%d of %d bootstrap replicates failed and were excluded", failed, B)
    if failed > 0.05 * B:
        raise NumericError(f"{failed} of {B} bootstrap replicates failed")
    pvals = {v: pvalue(stats[v], boot[v]) for v in variants}
    return {"stats": stats, "boot": boot, "pvalues": pvals, "fitted": fitted,
            "params": params, "failed": failed, "boot_fits": boot_fits}


def bootstrap_test(sample, k: int, cfg: GofConfig) -> GofResult:
    """Parametric bootstrap test of the order-k cardioid null."""
    v = (cfg.weight, cfg.lam)
    res = bootstrap_multi(sample, k, [v], K=cfg.K, B=cfg.B, seed=cfg.seed,
                          estimator=cfg.estimator, sign=cfg.sign, simple_null=cfg.simple_null,
                          shared_directions=cfg.shared_directions,
                          keep_fits=cfg.ci_alpha is not None)
    ci_rho = cap = None
    if cfg.ci_alpha is not None and res["fitted"] is not None:
        ci_rho, cap = bootstrap_ci(res["boot_fits"], cfg.ci_alpha, res["params"])
    boot = res["boot"][v]
    return GofResult(statistic=res["stats"][v], pvalue=res["pvalues"][v], boot_stats=boot,
                     fitted=res["fitted"], params=res["params"], B_effective=len(boot),
                     failed=res["failed"], ci_rho=ci_rho, cap_mu=cap)


def _cap_cosines(mus: np.ndarray, center: np.ndarray, k: int) -> np.ndarray:
    if mus.shape[1] == 2:
        # on the circle the location is only defined modulo 2 pi / k
        delta = np.arctan2(mus[:, 1], mus[:, 0]) - math.atan2(center[1], center[0])
        period = 2 * math.pi / k
        delta = np.mod(delta + period / 2, period) - period / 2
        return np.cos(delta)
    t = mus @ center
    return np.abs(t) if k % 2 == 0 else t


def bootstrap_ci(boot_fits, alpha: float, fitted: CardioidParams):
    """Percentile interval for rho and the cosine threshold of the mu confidence cap."""
    B = len(boot_fits)
    if not 0 < alpha < 1 or B < math.ceil(1 / alpha):
        raise DomainError("too few bootstrap replicates for this alpha")
    rhos = np.sort([f.params.rho for f in boot_fits])
    lo_i = math.ceil((B + 1) * alpha / 2)
    hi_i = math.floor((B + 1) * (1 - alpha / 2))
    lo_i = min(max(lo_i, 1), B)
    hi_i = min(max(hi_i, 1), B)
    mus = np.array([f.params.mu for f in boot_fits])
    t = np.sort(_cap_cosines(mus, fitted.mu, fitted.k))
    cap_i = min(max(math.ceil(alpha * (B + 1)), 1), B)
    return (float(rhos[lo_i - 1]), float(rhos[hi_i - 1])), float(t[cap_i - 1])
