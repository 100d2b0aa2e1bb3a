import csv
import io
import json
import math

import numpy as np
import pytest

from sphcardioid import cli
from sphcardioid.errors import DomainError


def run(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestOrbital:
    @pytest.mark.parametrize("i,om,expected", [
        (0, 0, [0, 0, 1]),
        (90, 0, [0, -1, 0]),
        (90, 90, [1, 0, 0]),
        (180, 45, [0, 0, -1]),
    ])
    def test_examples(self, i, om, expected):
        np.testing.assert_allclose(cli.orbital_to_normal(i, om), expected, atol=1e-15)

    def test_radians(self):
        np.testing.assert_allclose(cli.orbital_to_normal(math.pi / 2, math.pi / 2, degrees=False),
                                   [1, 0, 0], atol=1e-15)

    def test_out_of_range(self):
        with pytest.raises(DomainError, match="row 7"):
            cli.orbital_to_normal(181, 0, row=7)
        with pytest.raises(DomainError):
            cli.orbital_to_normal(10, 360)


class TestLoad:
    def test_vectors_with_drops(self, tmp_path):
        f = tmp_path / "v.csv"
        f.write_text("x1,x2,x3\n0,0,1\n0,0,1.0000001\n0,0,2\nfoo,1,2\n1,0,0\n")
        s = cli.load_sample(str(f), cli.IngestSpec())
        assert s.n == 3
        assert s.meta["renormalized"] == 1
        assert [d["row"] for d in s.meta["dropped"]] == [3, 4]
        np.testing.assert_allclose(np.linalg.norm(s.x, axis=1), 1.0)

    def test_tolerance(self, tmp_path):
        f = tmp_path / "v.csv"
        f.write_text("0,0,1.001\n")
        with pytest.raises(DomainError):
            cli.load_sample(str(f), cli.IngestSpec())
        assert cli.load_sample(str(f), cli.IngestSpec(normalize_tol=0.01)).n == 1

    def test_angles_and_latlon(self, tmp_path):
        a = tmp_path / "a.csv"
        a.write_text("theta\n0\n90\n")
        np.testing.assert_allclose(cli.load_sample(str(a), cli.IngestSpec("angles_csv_d1")).x,
                                   [[1, 0], [0, 1]], atol=1e-15)
        b = tmp_path / "b.csv"
        b.write_text("colatitude,longitude\n90,90\n0,0\n")
        np.testing.assert_allclose(cli.load_sample(str(b), cli.IngestSpec("latlon_csv_d2")).x,
                                   [[0, 1, 0], [0, 0, 1]], atol=1e-15)

    def test_orbital_exclude(self, tmp_path):
        f = tmp_path / "o.csv"
        f.write_text("name,i,Omega\nC/2001 A1,90,0\nP/Halley,162,58\nC/1999 B,0,0\n")
        s = cli.load_sample(str(f), cli.IngestSpec("orbital_elements_csv", exclude_pattern="^P/"))
        assert s.n == 2
        assert s.meta["dropped"][0]["reason"] == "excluded by name pattern"

    def test_orbital_needs_header(self, tmp_path):
        f = tmp_path / "o.csv"
        f.write_text("90,0\n")
        with pytest.raises(DomainError):
            cli.load_sample(str(f), cli.IngestSpec("orbital_elements_csv"))

    def test_empty(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("x1,x2\n")
        with pytest.raises(DomainError):
            cli.load_sample(str(f), cli.IngestSpec())

    def test_bad_format(self):
        with pytest.raises(DomainError):
            cli.IngestSpec("xml")


class TestCommands:
    def test_sample_deterministic(self, capsys):
        args = ("sample", "--d", "2", "--k", "2", "--rho", "0.5", "--n", "20", "--seed", "4")
        c1, a, _ = run(capsys, *args)
        c2, b, _ = run(capsys, *args)
        assert c1 == c2 == 0 and a == b
        rows = a.strip().splitlines()
        assert rows[0] == "x1,x2,x3" and len(rows) == 21

    def test_sample_empty(self, capsys):
        code, out, _ = run(capsys, "sample", "--d", "1", "--k", "1", "--rho", "0.2", "--n", "0")
        assert code == 0 and out.strip() == "x1,x2"

    def test_round_trip(self, capsys, tmp_path):
        f = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sample", "--d", "3", "--k", "1", "--rho", "0.7", "--n", "30",
                         "-o", str(f))
        assert code == 0
        s = cli.load_sample(str(f), cli.IngestSpec())
        from sphcardioid.cardioid import CardioidParams
        from sphcardioid.sampling import make_rng, sample

        ref = sample(CardioidParams(d=3, k=1, mu=np.eye(4)[-1], rho=0.7), 30, make_rng(0)).x
        np.testing.assert_array_equal(s.x, ref)

    def test_density_uniform(self, capsys):
        code, out, _ = run(capsys, "density", "--d", "1", "--k", "3", "--rho", "0", "--grid", "8")
        assert code == 0
        vals = [float(r["density"]) for r in table(out)]
        assert vals == pytest.approx([1 / (2 * math.pi)] * 8)

    def test_fit_json(self, capsys, tmp_path):
        f = tmp_path / "s.csv"
        run(capsys, "sample", "--d", "2", "--k", "1", "--rho", "0.6", "--n", "500", "-o", str(f))
        code, out, _ = run(capsys, "fit", "--input", str(f), "--k", "1", "--estimator", "ml")
        assert code == 0
        res = json.loads(out)
        assert res["estimator"] == "ML"
        assert res["params"]["rho"] == pytest.approx(0.6, abs=0.1)

    def test_fit_errors(self, capsys, tmp_path):
        f = tmp_path / "s.csv"
        run(capsys, "sample", "--d", "2", "--k", "1", "--rho", "0.6", "--n", "50", "-o", str(f))
        assert run(capsys, "fit", "--input", str(f), "--k", "2", "--estimator", "mm1")[0] == 64
        assert run(capsys, "fit", "--input", str(f), "--k", "1", "--estimator", "gm")[0] == 64
        g = tmp_path / "anti.csv"
        g.write_text("1,0,0\n-1,0,0\n")
        assert run(capsys, "fit", "--input", str(g), "--k", "1", "--estimator", "mm1")[0] == 2
        assert run(capsys, "fit", "--input", str(tmp_path / "missing.csv"), "--k", "1")[0] == 64
        assert run(capsys, "fit", "--bogus")[0] == 64

    def test_gof(self, capsys, tmp_path):
        f = tmp_path / "s.csv"
        run(capsys, "sample", "--d", "2", "--k", "1", "--rho", "0.6", "--n", "60", "-o", str(f))
        args = ("gof", "--input", str(f), "--k", "1", "--K", "10", "--B", "19", "--ci-alpha", "0.1")
        code, out, _ = run(capsys, *args)
        assert code == 0
        res = json.loads(out)
        assert 0 < res["pvalue"] <= 1 and len(res["boot_stats"]) == 19
        assert run(capsys, *args)[1] == out

    def test_are_d1(self, capsys):
        code, out, _ = run(capsys, "are", "--d", "1", "--n-rho", "5")
        assert code == 0
        rows = table(out)
        by_k = {}
        for r in rows:
            by_k.setdefault(r["k"], []).append([float(v) for c, v in r.items() if c != "k"])
        np.testing.assert_allclose(by_k["1"], by_k["2"], rtol=1e-13)

    def test_project(self, capsys, tmp_path):
        f = tmp_path / "s.csv"
        run(capsys, "sample", "--d", "2", "--k", "1", "--rho", "0.3", "--n", "10", "-o", str(f))
        p = json.dumps({"d": 2, "k": 1, "mu": [0, 0, 1], "rho": 0.3})
        code, out, _ = run(capsys, "project", "--input", str(f), "--k", "1", "--params", p,
                           "--gamma", "0,0,1")
        assert code == 0
        rows = table(out)
        assert len(rows) == 10
        assert all(0 <= float(r["cdf"]) <= 1 for r in rows)


class TestExperiment:
    def spec(self, **kw):
        base = {"kind": "size_table", "M": 4, "B": 19, "K": 5,
                "cells": [{"k": 1, "d": 2, "rho": 0.5, "n": 30}],
                "variants": ["CvM-Unif", "CvM-Pn"]}
        base.update(kw)
        return cli.ExperimentSpec.from_dict(base)

    def test_reproducible(self):
        s = self.spec()
        a = cli.experiment_csv(s, cli.run_experiment(s))
        b = cli.experiment_csv(s, cli.run_experiment(s))
        assert a == b
        rows = table(a)
        assert len(rows) == 2 and rows[0]["M_effective"] == "4"

    def test_grid(self):
        s = self.spec(cells=[], grid={"k": [1], "d": [1, 2], "rho": [0.5], "n": [20, 30]})
        assert len(s.cells) == 4

    def test_validation(self):
        with pytest.raises(DomainError):
            self.spec(kind="power_table")
        with pytest.raises(DomainError):
            self.spec(kind="nope")
        with pytest.raises(DomainError):
            self.spec(B=5)
        with pytest.raises(DomainError):
            self.spec(variants=["KS-Unif"])
        with pytest.raises(DomainError):
            self.spec(cells=[{"k": 1}])
        with pytest.raises(DomainError):
            self.spec(sign="maybe")

    def test_cell_sign(self):
        s = self.spec()
        assert cli._cell_sign(s, 0.5) == "+" and cli._cell_sign(s, -0.5) == "-"
        assert cli._cell_sign(self.spec(sign="auto"), 0.5) == "auto"

    def test_infeasible_cell_skipped(self):
        s = self.spec(kind="power_table", cells=[{"k": 1, "k0": 3, "d": 2, "rho": 0.5, "n": 30}])
        rows = cli.run_experiment(s)
        assert all(r["M_effective"] == 0 and r["note"].startswith("skipped") for r in rows)

    def test_asymptotics(self):
        s = cli.ExperimentSpec.from_dict({"kind": "asymptotics", "M": 20,
                                          "cells": [{"k": 1, "d": 2, "rho": 0.5, "n": 200}]})
        rows = cli.run_experiment(s)
        assert {(r["estimator"], r["quantity"]) for r in rows} == {
            ("MM", "mu1"), ("MM", "rho"), ("ML", "mu1"), ("ML", "rho")}
        assert all(r["sd"] > 0 and math.isfinite(r["asymptotic_sd"]) for r in rows)

    def test_command(self, capsys, tmp_path):
        f = tmp_path / "spec.json"
        f.write_text(json.dumps({"kind": "size_table", "M": 2, "B": 19, "K": 5,
                                 "cells": [{"k": 2, "d": 1, "rho": 0.4, "n": 20}],
                                 "variants": ["AD-Unif"]}))
        code, out, _ = run(capsys, "experiment", "--spec", str(f))
        assert code == 0 and len(table(out)) == 1
