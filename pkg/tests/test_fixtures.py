"""Regression fixtures: committed reference values stay reproducible."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

FIXDIR = os.path.join(os.path.dirname(__file__), "fixtures")


def _read_csv(name):
    rows = []
    with open(os.path.join(FIXDIR, name)) as fh:
        header = next(fh)
        for line in fh:
            rows.append(tuple(map(float, line.split(","))))
    return header.strip(), rows


def test_cli_solve_matches_fixture_bytes(tmp_path):
    """A fresh solver run reproduces the committed CSV byte for byte."""
    cfg = os.path.join(FIXDIR, "heat_dirichlet.cfg")
    out = subprocess.run(
        [sys.executable, "-m", "utmvc.cli", "solve", "--config", cfg,
         "--out", str(tmp_path), "--grid", "11,3,0.05,0.95,0.1,0.5"],
        capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    got = (tmp_path / "solution.csv").read_bytes()
    want = open(os.path.join(FIXDIR, "heat_dirichlet_solution.csv"), "rb").read()
    assert got == want


def test_solution_fixture_against_eigenseries():
    _, rows = _read_csv("heat_dirichlet_solution.csv")
    for x, t, re, im in rows:
        want = np.exp(-np.pi**2 * t) * np.sin(np.pi * x)
        assert abs(re - want) < 1e-6
        assert abs(im) < 1e-9


def test_erfc_fixture_probes():
    from scipy.special import erfc

    _, rows = _read_csv("half_line_erfc.csv")
    assert len(rows) == 10
    for x, t, re, im in rows:
        assert re == pytest.approx(float(erfc(x / (2 * np.sqrt(t)))), abs=1e-15)
        assert im == 0.0


def test_gaussian_fixture_probes():
    _, rows = _read_csv("whole_line_gaussian.csv")
    for x, t, re, im in rows:
        want = np.exp(-x**2 / (1 + 4 * t)) / np.sqrt(1 + 4 * t)
        assert re == pytest.approx(want, abs=1e-12)


def test_cgl_matrix_fixture_schema_and_values():
    with open(os.path.join(FIXDIR, "cgl_matrix_eigenvalues.json")) as fh:
        records = json.load(fh)
    assert set(records[0]) == {"m", "lambda_re", "lambda_im", "grid", "extrapolated"}
    lam0 = complex(records[0]["lambda_re"], records[0]["lambda_im"])
    assert abs(lam0 - 1.0) < 1e-6
    vals = [complex(r["lambda_re"], r["lambda_im"]) for r in records]
    for want in (-41.585 + 3.3357j, -41.689 + 7.7171j):
        assert min(abs(v - want) for v in vals) < 0.01
