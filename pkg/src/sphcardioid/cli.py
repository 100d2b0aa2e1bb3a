"""Command-line interface: ingestion, fitting, testing, sampling and the experiment harness.

Exit codes: 0 success, 2 degenerate estimate, 64 usage or input error,
70 internal numeric failure.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import click
import numpy as np
from scipy import stats

from . import estimation as est
from . import gof
from . import specfun as sf
from .cardioid import CardioidParams, density, proj_cdf_from_cos
from .errors import (CapabilityError, DegenerateEstimateError, DomainError, NumericError,
                     ResourceError)
from .sampling import SAMPLERS, SphereSample, make_rng, sample, to_binary, to_csv

log = logging.getLogger(__name__)

EXIT_OK, EXIT_DEGENERATE, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 64, 70
EPS = float(np.finfo(float).eps)
FORMATS = ("vectors_csv", "angles_csv_d1", "latlon_csv_d2", "orbital_elements_csv")
VARIANTS = {
    "CvM-Unif": ("CvM", "Unif"),
    "AD-Unif": ("AD", "Unif"),
    "CvM-Pn": ("CvM", "EmpiricalPn"),
    "AD-Pn": ("AD", "EmpiricalPn"),
    "CvM-Ck": ("CvM", "CardioidNull"),
    "AD-Ck": ("AD", "CardioidNull"),
}
LAMBDA_ALIASES = {"unif": "Unif", "empiricalpn": "EmpiricalPn", "pn": "EmpiricalPn",
                  "cardioidnull": "CardioidNull", "ck": "CardioidNull"}


# Formatting


def fmt(v) -> str:
    """Shortest round-trip text for a float; integers and strings pass through."""
    if isinstance(v, (bool, str)) or v is None:
        return "" if v is None else str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2)


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise DomainError(f"cannot parse vector {text!r}") from None


# Ingestion


@dataclass
class IngestSpec:
    format: str = "vectors_csv"
    normalize_tol: float = 1e-6
    degrees: bool = True
    exclude_pattern: str | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise DomainError(f"format must be one of {FORMATS}")


def orbital_to_normal(i: float, omega: float, degrees: bool = True, row: int | None = None):
    """Directed unit normal (sin i sin Omega, -sin i cos Omega, cos i) of an orbit."""
    if degrees:
        i, omega = math.radians(i), math.radians(omega)
    where = "" if row is None else f" (row {row})"
    if not 0.0 <= i <= math.pi:
        raise DomainError(f"inclination outside [0, pi]{where}")
    if not 0.0 <= omega < 2 * math.pi:
        raise DomainError(f"ascending node outside [0, 2 pi){where}")
    si = math.sin(i)
    return np.array([si * math.sin(omega), -si * math.cos(omega), math.cos(i)])


def _read_table(text: str):
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        return None, []
    try:
        [float(c) for c in rows[0]]
        return None, rows
    except ValueError:
        return [c.strip() for c in rows[0]], rows[1:]


def _column(header, names, default):
    if header is None:
        return default
    low = [h.lower() for h in header]
    for name in names:
        if name.lower() in low:
            return low.index(name.lower())
    if default is None:
        raise DomainError(f"missing column; expected one of {names}")
    return default


def load_sample(path: str, spec: IngestSpec) -> SphereSample:
    """Parse a CSV file into unit vectors; bad rows are dropped and reported in ``meta``."""
    with open(path, newline="") as fh:
        text = fh.read()
    header, rows = _read_table(text)
    dropped, renormalized, out = [], 0, []
    name_col = None
    if header is not None and spec.exclude_pattern:
        name_col = _column(header, ["name", "full_name", "designation"], None)
    pattern = re.compile(spec.exclude_pattern) if spec.exclude_pattern else None
    conv = math.radians if spec.degrees else float
    if spec.format == "orbital_elements_csv":
        if header is None:
            raise DomainError("orbital_elements_csv needs a header with columns i and Omega")
        ci = _column(header, ["i", "inclination"], None)
        co = _column(header, ["Omega", "node", "om"], None)
    elif spec.format == "latlon_csv_d2":
        ci = _column(header, ["colatitude", "colat"], 0)
        co = _column(header, ["longitude", "lon"], 1)
    elif spec.format == "angles_csv_d1":
        ci = _column(header, ["theta", "angle"], 0)
    for idx, row in enumerate(rows, start=1):
        if pattern is not None and name_col is not None and pattern.search(row[name_col]):
            dropped.append({"row": idx, "reason": "excluded by name pattern"})
            continue
        try:
            if spec.format == "vectors_csv":
                v = np.array([float(c) for c in row])
            elif spec.format == "angles_csv_d1":
                th = conv(float(row[ci]))
                v = np.array([math.cos(th), math.sin(th)])
            elif spec.format == "latlon_csv_d2":
                th, ph = conv(float(row[ci])), conv(float(row[co]))
                v = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph),
                              math.cos(th)])
            else:
                v = orbital_to_normal(float(row[ci]), float(row[co]), spec.degrees, row=idx)
        except (ValueError, IndexError):
            dropped.append({"row": idx, "reason": "unparseable"})
            continue
        if out and v.size != out[0].size:
            raise DomainError(f"inconsistent column count at row {idx}")
        nrm = float(np.linalg.norm(v))
        if not math.isfinite(nrm) or abs(nrm - 1.0) > spec.normalize_tol:
            dropped.append({"row": idx, "reason": f"norm {nrm!r} outside tolerance"})
            continue
        if abs(nrm - 1.0) > 1e-12:
            renormalized += 1
        # leave rounding-level norms alone so written samples read back bit-exact
        out.append(v if abs(nrm - 1.0) <= 4 * EPS else v / nrm)
    if not out:
        raise DomainError("no valid rows in input")
    x = np.array(out)
    if x.shape[1] < 2:
        raise DomainError("vectors need at least two coordinates")
    return SphereSample(x, sampler="file", meta={"dropped": dropped, "renormalized": renormalized,
                                                 "source": path})


# Experiment harness


@dataclass
class ExperimentSpec:
    kind: str
    cells: list
    M: int = 200
    B: int = 100
    K: int = 50
    alpha: float = 0.05
    seed: int = 0
    estimator: str = "MM"
    variants: list = field(default_factory=lambda: list(VARIANTS))
    estimators: list = field(default_factory=lambda: ["MM", "ML"])
    sign: str = "truth"

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        obj = dict(obj)
        grid = obj.pop("grid", None)
        if grid is not None:
            keys = list(grid)
            cells = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
            obj["cells"] = obj.get("cells", []) + cells
        spec = cls(**obj)
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.kind not in ("size_table", "power_table", "asymptotics"):
            raise DomainError(f"unknown experiment kind {self.kind!r}")
        if self.M < 1:
            raise DomainError("M must be >= 1")
        if self.kind != "asymptotics" and self.B < 19:
            raise DomainError("B must be >= 19")
        if not self.cells:
            raise DomainError("experiment has no cells")
        for c in self.cells:
            missing = {"k", "d", "rho", "n"} - set(c)
            if missing:
                raise DomainError(f"cell {c} lacks {sorted(missing)}")
            if self.kind == "power_table" and c.get("k0", c["k"]) == c["k"]:
                raise DomainError("power_table cells need k0 != k")
        if self.sign not in ("truth", "+", "-", "auto"):
            raise DomainError("sign must be 'truth', '+', '-' or 'auto'")
        for v in self.variants:
            if v not in VARIANTS:
                raise DomainError(f"unknown variant {v!r}")


def _north(d: int) -> np.ndarray:
    mu = np.zeros(d + 1)
    mu[-1] = 1.0
    return mu


def _cell_sign(spec: ExperimentSpec, rho: float) -> str:
    # "truth" fixes the even-k branch in advance at the sign of the simulated rho
    if spec.sign != "truth":
        return spec.sign
    return "-" if rho < 0 else "+"


def _gof_replicate(args):
    spec, c, cell, j = args
    d, k, rho, n = int(cell["d"]), int(cell["k"]), float(cell["rho"]), int(cell["n"])
    k0 = int(cell.get("k0", k))
    x = sample(CardioidParams(d=d, k=k, mu=_north(d), rho=rho), n, make_rng(spec.seed, c, j, 0)).x
    variants = [VARIANTS[v] for v in spec.variants]
    try:
        res = gof.bootstrap_multi(x, k0, variants, K=spec.K, B=spec.B, seed=spec.seed,
                                  estimator=spec.estimator, sign=_cell_sign(spec, rho),
                                  stream_key=(c, j, 1))
    except (DegenerateEstimateError, NumericError) as exc:
        log.info("cell %d replicate %d skipped: %s", c, j, exc)
        return None
    return [res["pvalues"][v] for v in variants]


def _asymptotic_sd(estimator: str, d: int, k: int, rho: float):
    if estimator == "MM":
        s_mu, s_rho = (est.sigma2_mm1 if k == 1 else est.sigma2_mm2)(d, rho)
    elif estimator == "ML":
        info = est.fisher_info(d, k, rho)
        s_mu, s_rho = info.sigma2_mu, info.sigma2_rho
    else:
        s_mu, s_rho = math.nan, est.sigma2_gm(k, d, rho)
    return math.sqrt(s_mu), math.sqrt(s_rho)


def _asym_replicate(args):
    spec, c, cell, j = args
    d, k, rho, n = int(cell["d"]), int(cell["k"]), float(cell["rho"]), int(cell["n"])
    mu = _north(d)
    x = sample(CardioidParams(d=d, k=k, mu=mu, rho=rho), n, make_rng(spec.seed, c, j, 0)).x
    out = []
    for name in spec.estimators:
        try:
            f = est.fit(x, k, name, sign=_cell_sign(spec, rho),
                        mu=mu if name.upper() == "GM" else None)
        except (DegenerateEstimateError, NumericError):
            out.append((math.nan, math.nan))
            continue
        mu_hat, rho_hat = f.params.mu, f.params.rho
        if k % 2 == 0 and mu_hat @ mu < 0:
            # even k: mu is an axis, align the representative with the truth
            mu_hat = -mu_hat
        out.append((math.sqrt(n) * (mu_hat[0] - mu[0]), math.sqrt(n) * (rho_hat - rho)))
    return out


def _run_map(fn, tasks, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks, chunksize=4))
    return [fn(t) for t in tasks]


def _binom_ci(r: int, m: int):
    if m == 0:
        return math.nan, math.nan
    ci = stats.binomtest(r, m).proportion_ci(0.95, method="exact")
    return 100 * ci.low, 100 * ci.high


GOF_COLUMNS = ["kind", "k", "k0", "d", "rho", "n", "variant", "M_effective", "rejections",
               "rejection_pct", "ci_low_pct", "ci_high_pct", "skipped", "note"]
ASYM_COLUMNS = ["kind", "k", "d", "rho", "n", "estimator", "quantity", "M_effective", "mean",
                "sd", "asymptotic_sd", "rel_err"]


def _feasible(estimator: str, k0: int) -> str | None:
    if estimator.upper() in ("MM", "MM1", "MM2") and k0 not in (1, 2):
        return "moment estimators need k0 in {1, 2}"
    if estimator.upper() == "MM1" and k0 != 1 or estimator.upper() == "MM2" and k0 != 2:
        return "estimator does not match k0"
    if estimator.upper() == "GM":
        return "GM needs a known location"
    return None


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[dict]:
    """Run every cell of ``spec``; rows come back in spec order."""
    rows = []
    for c, cell in enumerate(spec.cells):
        base = {"kind": spec.kind, "k": cell["k"], "d": cell["d"], "rho": cell["rho"],
                "n": cell["n"]}
        if spec.kind == "asymptotics":
            res = _run_map(_asym_replicate, [(spec, c, cell, j) for j in range(spec.M)], jobs)
            arr = np.array(res, dtype=float)  # (M, estimators, 2)
            for e, name in enumerate(spec.estimators):
                try:
                    sds = _asymptotic_sd(name.upper(), cell["d"], cell["k"], cell["rho"])
                except DomainError:
                    sds = (math.nan, math.nan)
                for q, qname in enumerate(("mu1", "rho")):
                    v = arr[:, e, q]
                    v = v[np.isfinite(v)]
                    if v.size < 2:
                        continue
                    sd = float(v.std(ddof=1))
                    rows.append({**base, "estimator": name, "quantity": qname,
                                 "M_effective": v.size, "mean": float(v.mean()), "sd": sd,
                                 "asymptotic_sd": sds[q],
                                 "rel_err": sd / sds[q] - 1.0 if math.isfinite(sds[q]) else None})
            continue
        k0 = int(cell.get("k0", cell["k"]))
        base["k0"] = k0
        reason = _feasible(spec.estimator, k0)
        if reason:
            for v in spec.variants:
                rows.append({**base, "variant": v, "M_effective": 0, "skipped": spec.M,
                             "note": f"skipped: {reason}"})
            continue
        res = _run_map(_gof_replicate, [(spec, c, cell, j) for j in range(spec.M)], jobs)
        ok = [r for r in res if r is not None]
        for i, v in enumerate(spec.variants):
            m = len(ok)
            r = sum(1 for p in ok if p[i] <= spec.alpha)
            lo, hi = _binom_ci(r, m)
            rows.append({**base, "variant": v, "M_effective": m, "rejections": r,
                         "rejection_pct": 100.0 * r / m if m else math.nan,
                         "ci_low_pct": lo, "ci_high_pct": hi, "skipped": spec.M - m, "note": ""})
    return rows


def experiment_csv(spec: ExperimentSpec, rows: list[dict]) -> str:
    return write_csv(rows, ASYM_COLUMNS if spec.kind == "asymptotics" else GOF_COLUMNS)


# Click commands


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        click.echo(text, nl=not text.endswith("\n"))
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _params(d, k, rho, mu) -> CardioidParams:
    mu_v = _north(d) if mu is None else parse_vector(mu)
    return CardioidParams(d=d, k=k, mu=mu_v, rho=rho)


def _input_options(f):
    f = click.option("--exclude-pattern", default=None, help="Regex on a name column to drop rows.")(f)
    f = click.option("--radians", is_flag=True, help="Angles are in radians (default degrees).")(f)
    f = click.option("--tol", default=1e-6, show_default=True, help="Norm tolerance for vectors.")(f)
    f = click.option("--format", "fmt_", type=click.Choice(FORMATS), default="vectors_csv",
                     show_default=True)(f)
    f = click.option("--input", "input_", required=True, type=click.Path(exists=True, dir_okay=False))(f)
    return f


def _load(input_, fmt_, tol, radians, exclude_pattern) -> SphereSample:
    s = load_sample(input_, IngestSpec(fmt_, tol, not radians, exclude_pattern))
    if s.meta["dropped"]:
        log.warning("dropped %d rows", len(s.meta["dropped"]))
    return s


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def cli(verbose):
    """Spherical cardioid distributions: sample, fit and test."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command("sample")
@click.option("--d", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--rho", type=float, required=True)
@click.option("--mu", default=None, help="Comma-separated location; default north pole.")
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sampler", type=click.Choice(SAMPLERS), default="auto", show_default=True)
@click.option("--binary", is_flag=True, help="Write the SPHC binary format.")
@click.option("--output", "-o", default=None)
def cmd_sample(d, k, rho, mu, n, seed, sampler, binary, output):
    """Draw n observations from C_k(mu, rho) on S^d."""
    s = sample(_params(d, k, rho, mu), n, make_rng(seed), kind=sampler)
    if binary:
        if output in (None, "-"):
            raise click.UsageError("--binary needs --output")
        with open(output, "wb") as fh:
            fh.write(to_binary(s.x))
        return
    _emit(to_csv(s.x), output)


@cli.command("density")
@click.option("--d", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--rho", type=float, required=True)
@click.option("--mu", default=None)
@click.option("--input", "input_", default=None, type=click.Path(exists=True, dir_okay=False),
              help="CSV of unit vectors at which to evaluate.")
@click.option("--grid", type=int, default=None, help="Equispaced angle grid size (d = 1 only).")
@click.option("--output", "-o", default=None)
def cmd_density(d, k, rho, mu, input_, grid, output):
    """Evaluate the density at points or on a circular grid."""
    p = _params(d, k, rho, mu)
    if (input_ is None) == (grid is None):
        raise click.UsageError("give exactly one of --input or --grid")
    if grid is not None:
        if d != 1:
            raise click.UsageError("--grid is available for d = 1 only")
        th = 2 * np.pi * np.arange(grid) / grid
        x = np.column_stack([np.cos(th), np.sin(th)])
        rows = [{"theta": t, "x1": a, "x2": b, "density": f}
                for t, (a, b), f in zip(th, x, density(p, x))]
        _emit(write_csv(rows, ["theta", "x1", "x2", "density"]), output)
        return
    x = load_sample(input_, IngestSpec()).x
    cols = [f"x{j + 1}" for j in range(x.shape[1])]
    rows = [{**dict(zip(cols, r)), "density": f} for r, f in zip(x, density(p, x))]
    _emit(write_csv(rows, cols + ["density"]), output)


@cli.command("fit")
@_input_options
@click.option("--k", type=int, required=True)
@click.option("--estimator", type=click.Choice(["mm", "mm1", "mm2", "gm", "ml"],
                                                case_sensitive=False), default="ml",
              show_default=True)
@click.option("--sign", type=click.Choice(["+", "-", "auto"]), default="+", show_default=True,
              help="Sign of rho for even k, fixed in advance; auto picks by likelihood.")
@click.option("--mu", default=None, help="Known location for gm.")
@click.option("--n-starts", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_fit(input_, fmt_, tol, radians, exclude_pattern, k, estimator, sign, mu, n_starts, seed):
    """Fit C_k by moments, Gegenbauer moments or maximum likelihood."""
    if estimator.lower() == "gm" and mu is None:
        raise click.UsageError("gm needs --mu")
    s = _load(input_, fmt_, tol, radians, exclude_pattern)
    kw = {"n_starts": n_starts, "seed": seed} if estimator.lower() == "ml" else {}
    res = est.fit(s.x, k, estimator, sign=sign,
                  mu=parse_vector(mu) if mu is not None else None, **kw)
    out = res.to_dict()
    out["n"] = s.n
    out["dropped_rows"] = s.meta["dropped"]
    click.echo(dump_json(out))


@cli.command("gof")
@_input_options
@click.option("--k", type=int, default=None, help="Order under the null.")
@click.option("--weight", type=click.Choice(gof.WEIGHTS), default="CvM", show_default=True)
@click.option("--lambda", "lam", default="Unif", show_default=True,
              help="Unif, EmpiricalPn (Pn) or CardioidNull (Ck).")
@click.option("--K", "K", type=int, default=None, help="MC directions [50; 10^4 with --application].")
@click.option("--B", "B", type=int, default=None, help="Bootstrap size [100; 10^4 with --application].")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--estimator", default=None, help="mm or ml [mm; ml with --application].")
@click.option("--sign", type=click.Choice(["+", "-", "auto"]), default="+", show_default=True,
              help="Sign of rho for even k, fixed in advance; auto picks by likelihood.")
@click.option("--simple-null", default=None, help="JSON CardioidParams of a fixed null.")
@click.option("--ci-alpha", type=float, default=None)
@click.option("--shared-directions", is_flag=True, help="Reuse MC directions across replicates.")
@click.option("--application", is_flag=True, help="Use K = B = 10^4 and ML.")
def cmd_gof(input_, fmt_, tol, radians, exclude_pattern, k, weight, lam, K, B, seed, estimator,
            sign, simple_null, ci_alpha, shared_directions, application):
    """Parametric bootstrap goodness-of-fit test of C_k."""
    lam_name = LAMBDA_ALIASES.get(lam.lower())
    if lam_name is None:
        raise click.UsageError(f"unknown lambda {lam!r}")
    null = CardioidParams.from_json(simple_null) if simple_null else None
    if k is None:
        if null is None:
            raise click.UsageError("--k is required without --simple-null")
        k = null.k
    K = K if K is not None else (10_000 if application else 50)
    B = B if B is not None else (10_000 if application else 100)
    estimator = estimator or ("ML" if application else "MM")
    s = _load(input_, fmt_, tol, radians, exclude_pattern)
    cfg = gof.GofConfig(weight=weight, lam=lam_name, K=K, B=B, seed=seed,
                        estimator=estimator.upper(), sign=sign, simple_null=null,
                        ci_alpha=ci_alpha, shared_directions=shared_directions)
    res = gof.bootstrap_test(s.x, k, cfg)
    out = res.to_dict()
    out.update(n=s.n, k=k, weight=weight, **{"lambda": lam_name}, K=K, B=B,
               estimator=None if null else estimator.upper())
    click.echo(dump_json(out))


@cli.command("are")
@click.option("--d", "ds", type=int, multiple=True, required=True)
@click.option("--k", "ks", type=int, multiple=True, default=(1, 2), show_default=True)
@click.option("--rho-min", type=float, default=0.05, show_default=True)
@click.option("--rho-max", type=float, default=0.95, show_default=True)
@click.option("--n-rho", type=int, default=19, show_default=True)
@click.option("--output", "-o", default=None)
def cmd_are(ds, ks, rho_min, rho_max, n_rho, output):
    """ARE curves of the moment and Gegenbauer-moment estimators against ML."""
    rows = []
    for d in ds:
        for k in ks:
            for rho in np.linspace(rho_min, rho_max, n_rho):
                row = {"d": d, "k": k, "rho": float(rho)}
                for col, which in (("ARE_MM_mu", "MM_mu"), ("ARE_MM_rho", "MM_rho"),
                                   ("ARE_GM_rho", "GM_rho")):
                    try:
                        row[col] = est.are(d, k, float(rho), which)
                    except DomainError:
                        row[col] = None
                rows.append(row)
    _emit(write_csv(rows, ["d", "k", "rho", "ARE_MM_mu", "ARE_MM_rho", "ARE_GM_rho"]), output)


@cli.command("experiment")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON experiment spec.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--output", "-o", default=None)
def cmd_experiment(spec_path, jobs, output):
    """Run a size, power or asymptotics experiment and write a CSV report."""
    with open(spec_path) as fh:
        spec = ExperimentSpec.from_dict(json.load(fh))
    rows = run_experiment(spec, jobs)
    _emit(experiment_csv(spec, rows), output)


@cli.command("project")
@_input_options
@click.option("--k", type=int, required=True)
@click.option("--params", "params_json", default=None, help="JSON CardioidParams; else ML fit.")
@click.option("--gamma", multiple=True, help="Comma-separated direction; repeatable.")
@click.option("--n-directions", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", default=None)
def cmd_project(input_, fmt_, tol, radians, exclude_pattern, k, params_json, gamma,
                n_directions, seed, output):
    """Projected ecdf against the fitted projected cdf along chosen directions."""
    s = _load(input_, fmt_, tol, radians, exclude_pattern)
    p = CardioidParams.from_json(params_json) if params_json else est.fit(s.x, k, "ML").params
    if gamma:
        dirs = np.array([parse_vector(g) for g in gamma])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        from .geometry import uniform_sphere
        dirs = uniform_sphere(s.d, make_rng(seed), n_directions)
    rows = []
    for j, g in enumerate(dirs):
        proj = np.sort(sf.clamp_unit(s.x @ g))
        cdf = proj_cdf_from_cos(p.d, p.k, p.rho, float(g @ p.mu), proj)
        for i, (t, f) in enumerate(zip(proj, cdf), start=1):
            rows.append({"direction": j, **{f"gamma{c + 1}": g[c] for c in range(g.size)},
                         "x": t, "ecdf": i / s.n, "cdf": f})
    cols = ["direction"] + [f"gamma{c + 1}" for c in range(dirs.shape[1])] + ["x", "ecdf", "cdf"]
    _emit(write_csv(rows, cols), output)


def main(argv=None) -> int:
    """Console entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="sphcardioid", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except DegenerateEstimateError as exc:
        click.echo(f"degenerate estimate: {exc}", err=True)
        return EXIT_DEGENERATE
    except (DomainError, CapabilityError, ResourceError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (NumericError, ArithmeticError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
