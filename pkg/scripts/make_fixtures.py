#!/usr/bin/env python3
"""Generate the committed regression fixtures from the reference solvers.

Run from the repository root:

    python scripts/make_fixtures.py

Writes tests/fixtures/.  Fixture provenance: everything here comes from the
independent reference implementations (eigenseries, error-function solution,
Gaussian convolution, matrix eigensolve) or is a frozen deterministic output
of the command-line solver validated against those references at generation
time.
"""

import json
import os
import subprocess
import sys

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from utmvc.coefficients import Domain, DomainKind, preset_profile  # noqa: E402
from utmvc.delta import BoundaryConditions  # noqa: E402
from utmvc.oracle import fourier_exact, heat_kernel_convolution, matrix_eigs  # noqa: E402
from scipy.special import erfc  # noqa: E402

FIXDIR = os.path.join(ROOT, "tests", "fixtures")
HEAT_CONFIG = """\
domain {
  kind = finite_interval
  xl = 0
  xr = 1
}
coefficients {
  mode = preset
  preset = constant
}
bc {
  rows = [[1, 0, 0, 0], [0, 0, 1, 0]]
}
data {
  q0 = "sin(pi*x)"
}
"""


def fmt(v):
    return f"{v:.17g}"


def write_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,t,re,im\n")
        for x, t, v in rows:
            fh.write(f"{fmt(x)},{fmt(t)},{fmt(v.real)},{fmt(v.imag)}\n")
    print(f"wrote {os.path.relpath(path, ROOT)}")


def heat_reference():
    xs = np.linspace(0.05, 0.95, 21)
    ts = np.linspace(0.05, 0.5, 5)
    vals = fourier_exact(1, 1, 0, "dirichlet",
                         lambda x: np.sin(np.pi * np.asarray(x)).astype(complex),
                         xs, ts)
    rows = [(x, t, vals[i, j]) for i, t in enumerate(ts) for j, x in enumerate(xs)]
    write_csv(os.path.join(FIXDIR, "heat_dirichlet_fourier.csv"), rows)


def erfc_reference():
    xs = np.linspace(0.2, 3.0, 10)
    t = 0.25
    rows = [(x, t, complex(erfc(x / (2 * np.sqrt(t))))) for x in xs]
    write_csv(os.path.join(FIXDIR, "half_line_erfc.csv"), rows)


def gaussian_reference():
    xs = np.linspace(-2.0, 2.0, 9)
    ts = [0.1, 0.4]
    rows = []
    for t in ts:
        for x in xs:
            rows.append((x, t, heat_kernel_convolution(
                1.0, 0.0, lambda y: np.exp(-np.asarray(y) ** 2), x, t)))
    write_csv(os.path.join(FIXDIR, "whole_line_gaussian.csv"), rows)


def cgl_matrix_eigs():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    prof = preset_profile("cgl", dom)
    bc = BoundaryConditions.finite_interval([[1, 0, -1, 0], [0, 1, 0, -1]])
    n_grid = 1500
    vals = matrix_eigs(prof, bc, n_grid=n_grid, n_eigs=10, richardson=True)
    records = [{"m": m, "lambda_re": float(v.real), "lambda_im": float(v.imag),
                "grid": n_grid, "extrapolated": True}
               for m, v in enumerate(vals)]
    path = os.path.join(FIXDIR, "cgl_matrix_eigenvalues.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.relpath(path, ROOT)}")


def cli_solve_regression():
    """Frozen byte-exact output of the command-line solver on the heat problem.

    Validated against the eigenseries reference before freezing.
    """
    cfg_path = os.path.join(FIXDIR, "heat_dirichlet.cfg")
    with open(cfg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEAT_CONFIG)
    out = subprocess.run(
        [sys.executable, "-m", "utmvc.cli", "solve", "--config", cfg_path,
         "--out", FIXDIR, "--grid", "11,3,0.05,0.95,0.1,0.5"],
        cwd=ROOT, env={**os.environ, "PYTHONPATH": os.path.join(ROOT, "src")},
        capture_output=True, text=True)
    if out.returncode != 0:
        raise SystemExit(f"solver run failed: {out.stderr}")
    src = os.path.join(FIXDIR, "solution.csv")
    dst = os.path.join(FIXDIR, "heat_dirichlet_solution.csv")
    os.replace(src, dst)
    # validate the frozen values against the eigenseries before committing
    worst = 0.0
    with open(dst) as fh:
        next(fh)
        for line in fh:
            x, t, re, im = map(float, line.split(","))
            want = np.exp(-np.pi**2 * t) * np.sin(np.pi * x)
            worst = max(worst, abs(re - want), abs(im))
    if worst > 1e-6:
        raise SystemExit(f"regression fixture deviates from the reference: {worst}")
    print(f"wrote {os.path.relpath(dst, ROOT)} (validated to {worst:.2e})")


def main():
    os.makedirs(FIXDIR, exist_ok=True)
    heat_reference()
    erfc_reference()
    gaussian_reference()
    cgl_matrix_eigs()
    cli_solve_regression()


if __name__ == "__main__":
    main()
