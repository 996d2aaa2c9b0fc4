"""Command-line interface: validate, solve, eigs, identities, compare.

Results are written as deterministic files: solution fields as CSV with
columns ``x,t,re_q,im_q`` (17 significant digits, LF line endings) and
eigenvalues as a JSON array ordered by |lambda|.  Errors leave a one-line
JSON object on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .coefficients import DispersionCache, DomainKind, validate_assumptions
from .config import parse_config
from .delta import classify
from .eigen import find_eigenvalues
from .errors import UTMError
from .identities import run_identity_suite
from .kernels import ProblemData
from .solver import SolutionField, solve_q


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def emit_field_csv(field: SolutionField, path: str):
    """CSV rows ordered t-major then x; bit-stable across runs."""
    lines = ["x,t,re_q,im_q"]
    q = field.q
    for it, t in enumerate(field.t):
        for ix, x in enumerate(field.x):
            v = q[it, ix]
            lines.append(f"{_fmt(x)},{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_eigs_json(pairs, path: str):
    records = []
    for m, p in enumerate(pairs):
        records.append({
            "m": m,
            "kappa_re": float(p.kappa.real),
            "kappa_im": float(p.kappa.imag),
            "lambda_re": float(p.lam.real),
            "lambda_im": float(p.lam.imag),
            "residual": float(p.residual),
            "n_truncation": int(p.N_used),
        })
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_grid(spec: str, cfg):
    if spec:
        parts = spec.split(",")
        if len(parts) != 6:
            raise UTMError("--grid expects nx,nt,xa,xb,ta,tb")
        nx, nt = int(parts[0]), int(parts[1])
        xa, xb, ta, tb = map(float, parts[2:])
    else:
        nx, nt = 21, 5
        wa, wb = cfg.domain.window
        pad = 0.05 * (wb - wa)
        xa, xb = wa + pad, wb - pad
        ta, tb = 0.05, 0.5
    xs = np.linspace(xa, xb, nx)
    ts = np.linspace(ta, tb, nt) if nt > 1 else np.array([ta])
    return xs, ts


def cmd_validate(args) -> int:
    cfg = parse_config(args.config)
    cache = DispersionCache(cfg.profile)
    report = validate_assumptions(cfg.profile, cache)
    print(report)
    if cfg.domain.kind is DomainKind.FINITE_INTERVAL:
        cl = classify(cfg.bc, cache)
        reg = "regular" if cl.regular else "irregular"
        print(f"boundary case: {cl.case.name} ({reg})")
    return 0 if report.passed else 1


def cmd_solve(args) -> int:
    cfg = parse_config(args.config)
    cache = DispersionCache(cfg.profile)
    xs, ts = _parse_grid(args.grid, cfg)
    kw = {}
    if cfg.contour.get("t_min") is not None:
        kw["t_min"] = float(cfg.contour["t_min"])
    if cfg.contour.get("tol") is not None:
        kw["contour_tol"] = float(cfg.contour["tol"])
    if cfg.contour.get("safety") is not None:
        kw["safety"] = float(cfg.contour["safety"])
    if cfg.contour.get("theta0_override") is not None:
        kw["theta0_override"] = float(cfg.contour["theta0_override"])
    field = solve_q(cfg.bc, cfg.data, cache, xs, ts, N=cfg.n_truncation, **kw)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, cfg.output.get("solve_csv", "solution.csv"))
    emit_field_csv(field, path)
    print(f"wrote {path} ({len(xs)}x{len(ts)} points, "
          f"{field.diagnostics['contour'].n_nodes} contour nodes, "
          f"N={field.diagnostics['N']})")
    return 0


def cmd_eigs(args) -> int:
    cfg = parse_config(args.config)
    cache = DispersionCache(cfg.profile)
    pairs = find_eigenvalues(cfg.bc, cache, count=args.count, order=args.nmax)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, cfg.output.get("eigs_json", "eigenvalues.json"))
    emit_eigs_json(pairs, path)
    for m, p in enumerate(pairs):
        print(f"m={m}: lambda = {p.lam.real:+.6g}{p.lam.imag:+.6g}i  "
              f"residual {p.residual:.2e}")
    print(f"wrote {path}")
    return 0


def cmd_identities(args) -> int:
    cfg = parse_config(args.config)
    cache = DispersionCache(cfg.profile)
    results = run_identity_suite(cache, cfg.bc, seed=args.seed)
    for r in results:
        print(r)
    return 0 if all(r.passed for r in results) else 1


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    cache = DispersionCache(cfg.profile)
    xs, ts = _parse_grid(args.grid, cfg)
    field = solve_q(cfg.bc, cfg.data, cache, xs, ts, N=cfg.n_truncation)
    ref = _reference_field(args.oracle, cfg, cache, xs, ts)
    err = np.abs(field.q - ref)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "compare.csv")
    lines = ["x,t,abs_err"]
    for it, t in enumerate(ts):
        for ix, x in enumerate(xs):
            lines.append(f"{_fmt(x)},{_fmt(t)},{_fmt(err[it, ix])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"max abs err vs {args.oracle}: {float(err.max()):.3e}")
    print(f"wrote {path}")
    return 0


def _reference_field(which: str, cfg, cache, xs, ts):
    from .oracle import (
        FDGrid,
        crank_nicolson_richardson,
        fourier_exact,
        heat_kernel_convolution,
    )

    data = cfg.data
    if which == "cn":
        from scipy.interpolate import CubicSpline

        q0 = data.q0 or (lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex))
        xr_, tr_, u = crank_nicolson_richardson(
            cfg.profile, cfg.bc, q0, FDGrid(512, 1024, float(ts[-1])), t_out=ts,
            f=data.f, f0=data.f0, f1=data.f1)
        return np.stack([CubicSpline(xr_, u[i])(xs) for i in range(len(ts))])
    if which == "fourier":
        if not cache.is_constant:
            raise UTMError("the eigenseries reference needs constant coefficients")
        bc_type = _classic_bc_name(cfg)
        a0 = complex(np.asarray(cfg.profile.alpha(cfg.domain.x_l), dtype=complex))
        b0 = complex(np.asarray(cfg.profile.beta(cfg.domain.x_l), dtype=complex))
        g0 = complex(np.asarray(cfg.profile.gamma(cfg.domain.x_l), dtype=complex))
        return fourier_exact(a0, b0, g0, bc_type, data.q0, xs, ts,
                             x_l=cfg.domain.x_l, x_r=cfg.domain.x_r)
    if which == "kernel":
        if cfg.domain.kind is not DomainKind.WHOLE_LINE or not cache.is_constant:
            raise UTMError("the kernel reference is for the constant whole-line problem")
        a0 = complex(np.asarray(cfg.profile.alpha(0.0), dtype=complex))
        b0 = complex(np.asarray(cfg.profile.beta(0.0), dtype=complex))
        g0 = complex(np.asarray(cfg.profile.gamma(0.0), dtype=complex))
        out = np.empty((len(ts), len(xs)), dtype=complex)
        for it, t in enumerate(ts):
            for ix, x in enumerate(xs):
                out[it, ix] = heat_kernel_convolution(a0 * b0, g0, data.q0, x, t)
        return out
    raise UTMError(f"unknown oracle {which!r}")


def _classic_bc_name(cfg) -> str:
    rows = cfg.bc.rows
    eye = {
        "dirichlet": np.array([[1, 0, 0, 0], [0, 0, 1, 0]], dtype=complex),
        "neumann": np.array([[0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
        "periodic": np.array([[1, 0, -1, 0], [0, 1, 0, -1]], dtype=complex),
    }
    for name, mat in eye.items():
        if rows.shape == mat.shape and np.allclose(rows, mat):
            return name
    raise UTMError("the eigenseries reference needs Dirichlet, Neumann or periodic rows")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="utmvc",
                                description="Contour-integral solver for "
                                            "variable-coefficient diffusion problems")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="problem configuration file")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("validate", help="check the coefficient assumptions")
    common(sp)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("solve", help="evaluate the solution on a grid")
    common(sp)
    sp.add_argument("--grid", default=None, help='"nx,nt,xa,xb,ta,tb"')
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("eigs", help="finite-interval eigenvalues")
    common(sp)
    sp.add_argument("--count", type=int, default=5)
    sp.add_argument("--nmax", type=int, default=2,
                    help="correction order of the truncated characteristic function")
    sp.set_defaults(fn=cmd_eigs)

    sp = sub.add_parser("identities", help="run the internal identity suite")
    common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_identities)

    sp = sub.add_parser("compare", help="solve and compare against a reference")
    common(sp)
    sp.add_argument("--grid", default=None, help='"nx,nt,xa,xb,ta,tb"')
    sp.add_argument("--oracle", choices=["cn", "fourier", "kernel"], default="cn")
    sp.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UTMError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
