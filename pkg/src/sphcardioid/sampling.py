"""Exact simulation from C_k(mu, rho) and sample serialization."""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import specfun as sf
from .cardioid import CardioidParams
from .errors import DomainError

SAMPLERS = ("rejection", "rejection_free_odd", "inverse_d2k2", "auto")
MAGIC = b"SPHC"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, *keys), e.g. (seed, replicate)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SphereSample:
    """n unit vectors in R^{d+1}, stored row-wise."""

    x: np.ndarray
    sampler: str = "external"
    proposals: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1] - 1


def _uniform(p: CardioidParams, n: int, rng) -> SphereSample:
    return SphereSample(geo.uniform_sphere(p.d, rng, n), sampler="uniform", proposals=n)


def sample_rejection(p: CardioidParams, n: int, rng: np.random.Generator) -> SphereSample:
    """Accept uniform proposals with probability (1 + rho Ctilde(x'mu)) / (1 + |rho|)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    bound = 1.0 + abs(p.rho)
    chunks, have, proposals = [], 0, 0
    while have < n:
        m = max(16, int(math.ceil((n - have) * bound * 1.1)))
        u = geo.uniform_sphere(p.d, rng, m)
        v = rng.random(m)
        accept = v * bound <= 1.0 + p.rho * sf.gegenbauer_tilde(p.k, p.d, u @ p.mu)
        idx = np.flatnonzero(accept)
        take = idx[: n - have]
        # proposals after the last needed acceptance are not counted
        proposals += (take[-1] + 1) if take.size == n - have and take.size else m
        chunks.append(u[take])
        have += take.size
    x = np.concatenate(chunks) if chunks else np.empty((0, p.d + 1))
    return SphereSample(x.reshape(n, p.d + 1), sampler="rejection", proposals=int(proposals))


def _uniform_lower_sphere(d: int, rng, n: int) -> np.ndarray:
    """Uniform draws on S^{d-1}; S^0 = {-1, +1}."""
    if d == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    return geo.uniform_sphere(d - 1, rng, n)


def sample_rejection_free(p: CardioidParams, n: int, rng: np.random.Generator) -> SphereSample:
    """Odd-k sampler: signed |U_1| for a uniform U, composed with a tangent direction."""
    if p.k % 2 == 0:
        raise DomainError("the rejection-free sampler needs odd k")
    u = geo.uniform_sphere(p.d, rng, n) if n else np.empty((0, p.d + 1))
    r = np.abs(u[:, 0])
    prob = 0.5 * (1.0 + p.rho * sf.gegenbauer_tilde(p.k, p.d, r))
    s = np.where(rng.random(n) <= prob, 1.0, -1.0)
    xi = _uniform_lower_sphere(p.d, rng, n)
    x = geo.tangent_normal_compose(p.mu, s * r, xi)
    return SphereSample(x, sampler="rejection_free_odd", proposals=n)


def inverse_cdf_d2k2(u, rho: float):
    """Root T in [-1, 1] of (rho T^3 + (2 - rho) T + 2) / 4 = u, for rho > 0."""
    u = np.asarray(u, dtype=float)
    q = 2.0 * (1.0 - 2.0 * u) / rho
    pp = (2.0 - rho) / rho
    disc = (q / 2) ** 2 + (pp / 3) ** 3  # > 0 because pp > 0
    # Cardano with the cancellation-free branch: T = a - pp / (3 a)
    big = -q / 2 + np.where(q <= 0, 1.0, -1.0) * np.sqrt(disc)
    a = np.cbrt(big)
    t = a - pp / (3.0 * a)
    # one Newton polish on the cubic
    f = rho * t**3 + (2.0 - rho) * t + 2.0 - 4.0 * u
    t = t - f / (3.0 * rho * t**2 + 2.0 - rho)
    return np.clip(t, -1.0, 1.0)


def sample_inverse_d2k2(p: CardioidParams, n: int, rng: np.random.Generator) -> SphereSample:
    if p.d != 2 or p.k != 2 or not p.rho > 0:
        raise DomainError("inverse transform sampling needs d = 2, k = 2 and rho > 0")
    t = inverse_cdf_d2k2(rng.random(n), p.rho)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    xi = np.column_stack([np.cos(phi), np.sin(phi)])
    x = geo.tangent_normal_compose(p.mu, t, xi)
    return SphereSample(x, sampler="inverse_d2k2", proposals=n)


def auto_kind(p: CardioidParams) -> str:
    if p.d == 2 and p.k == 2 and p.rho > 0:
        return "inverse_d2k2"
    if p.k % 2 == 1:
        return "rejection_free_odd"
    return "rejection"


_DISPATCH = {
    "rejection": sample_rejection,
    "rejection_free_odd": sample_rejection_free,
    "inverse_d2k2": sample_inverse_d2k2,
}


def sample(p: CardioidParams, n: int, rng: np.random.Generator,
           kind: str = "auto") -> SphereSample:
    """Draw n observations; ``kind='auto'`` picks the cheapest exact sampler.

    With rho = 0 under ``auto`` the draws are plain uniform draws, so they match
    ``geometry.uniform_sphere`` on the same stream.
    """
    if kind not in SAMPLERS:
        raise DomainError(f"unknown sampler {kind!r}")
    if n < 0:
        raise DomainError("n must be nonnegative")
    if kind == "auto":
        if p.rho == 0.0:
            return _uniform(p, n, rng)
        kind = auto_kind(p)
    return _DISPATCH[kind](p, n, rng)


# Serialization


def _check_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DomainError("sample must be a 2-D array")
    return x


def to_csv(x, header: bool = True) -> str:
    x = _check_rows(x)
    buf = io.StringIO()
    if header:
        buf.write(",".join(f"x{j + 1}" for j in range(x.shape[1])) + "\n")
    for row in x:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def from_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            if not rows and width is None:
                width = len(fields)  # header
                continue
            raise DomainError(f"non-numeric row: {line!r}") from None
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise DomainError("inconsistent column count")
        rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, width or 0)


def to_binary(x) -> bytes:
    """Columnar little-endian doubles behind a 'SPHC' + version + n + p header."""
    x = _check_rows(x)
    n, p = x.shape
    return MAGIC + struct.pack("<III", 1, n, p) + np.ascontiguousarray(x.T, dtype="<f8").tobytes()


def from_binary(data: bytes) -> np.ndarray:
    if data[:4] != MAGIC:
        raise DomainError("not an SPHC file")
    version, n, p = struct.unpack("<III", data[4:16])
    if version != 1:
        raise DomainError(f"unsupported SPHC version {version}")
    body = np.frombuffer(data[16:], dtype="<f8")
    if body.size != n * p:
        raise DomainError("truncated SPHC payload")
    return body.reshape(p, n).T.astype(float)
