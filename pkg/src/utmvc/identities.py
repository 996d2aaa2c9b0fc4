"""Runnable identity suite: internal consistency checks of the machinery.

Each check measures a defect that the theory says vanishes (or is bounded)
and compares it against a fixed tolerance.  The suite adapts to the domain
kind of the supplied problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accum import (
    accum_cs_backward,
    accum_cs_forward,
    accum_e_tail,
    accum_e_tilde_tail,
    mode_from_k,
    script_cs,
)
from .coefficients import DispersionCache, DomainKind, contour_params
from .delta import (
    BoundaryConditions,
    b0_asymptotic,
    classify,
    delta_fi,
    delta_hl,
    delta_wl,
    BoundaryCase,
)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    passed: bool
    measure: float
    tol: float

    def __str__(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.measure:.3e} (tol {self.tol:.1e})"


def _contour_samples(cache, rng, n=2):
    r, theta0 = contour_params(cache)
    out = []
    for _ in range(n):
        s = r * (1.5 + 3.0 * rng.random())
        th = theta0 + (np.pi - 2 * theta0) * rng.random()
        out.append(s * np.exp(1j * th))
    return out


def check_derivative_identities(cache: DispersionCache, rng, N: int = 4,
                                tol: float = 1e-6) -> IdentityResult:
    """Central differences of the tabulated families match their stated rates."""
    xa, xb = cache.domain.window
    grid = np.linspace(xa, xb, max(2001, int(400 * (xb - xa)) + 1))
    h = grid[1] - grid[0]
    worst = 0.0
    for k in _contour_samples(cache, rng):
        mode = mode_from_k(k, cache)
        fams = [accum_cs_forward(k, xa, grid, N, cache, mode=mode),
                accum_cs_backward(k, xb, grid, N, cache, mode=mode)]
        if cache.domain.kind is not DomainKind.FINITE_INTERVAL:
            fams.append(accum_e_tail(k, grid, N, cache, mode=mode))
        if cache.domain.kind is DomainKind.WHOLE_LINE:
            fams.append(accum_e_tilde_tail(k, grid, N, cache, mode=mode))
        xm = grid[2:-2]
        lam = mode.scale * np.asarray(mode.rate(xm), dtype=complex)
        half_l = 0.5 * np.asarray(mode.logderiv(xm), dtype=complex)
        scale_ref = max(1.0, float(np.max(np.abs(lam))))
        for fam in fams:
            stacks = ([fam.values[0], fam.values[1]] if fam.family == "CS"
                      else [fam.values])
            for n in range(N + 1):
                for comp, stack in enumerate(stacks):
                    vals = stack[n]
                    d_num = (-vals[4:] + 8 * vals[3:-1] - 8 * vals[1:-3] + vals[:-4]) / (12 * h)
                    prev = stack[n - 1][2:-2] if n >= 1 else 0.0
                    if fam.family == "CS":
                        c_here = fam.values[0][n][2:-2]
                        s_here = fam.values[1][n][2:-2]
                        if fam.direction == "forward":
                            sgn = (-1.0) ** n
                            d_ref = (half_l * prev + (-sgn * lam * s_here if comp == 0
                                                      else sgn * lam * c_here))
                        else:
                            d_ref = (-half_l * prev if comp == 0 else half_l * prev) + \
                                (lam * s_here if comp == 0 else -lam * c_here)
                    else:
                        mask = 1.0 - (-1.0) ** n
                        e_here = vals[2:-2]
                        if fam.family == "E":
                            d_ref = -half_l * prev - mask * 1j * lam * e_here
                        else:
                            d_ref = half_l * prev + mask * 1j * lam * e_here
                    err = np.max(np.abs(d_num - d_ref)) / (
                        scale_ref * max(1.0, float(np.max(np.abs(vals)))))
                    worst = max(worst, float(err))
    return IdentityResult("derivative identities (finite differences)", worst < tol,
                          worst, tol)


def check_composition_identities(cache: DispersionCache, rng, N: int = 6,
                                 tol: float = 1e-8) -> IdentityResult:
    """Interior-split products reproduce the full-interval script families."""
    xa, xb = cache.domain.window
    worst = 0.0
    for k in _contour_samples(cache, rng):
        x_split = xa + (0.2 + 0.6 * rng.random()) * (xb - xa)
        grid = np.array([xa, x_split, xb])
        mode = mode_from_k(k, cache)
        fwd = script_cs(accum_cs_forward(k, xa, grid, N, cache, mode=mode))
        bwd = script_cs(accum_cs_backward(k, xb, grid, N, cache, mode=mode))
        iF, iB = 1, 1
        for n in range(N + 1):
            lhs_c = fwd.values[0, n, 2]
            lhs_s = fwd.values[1, n, 2]
            rhs_c = sum(fwd.values[0, n - l, iF] * bwd.values[0, l, iB]
                        - (-1.0) ** (n - l) * fwd.values[1, n - l, iF] * bwd.values[1, l, iB]
                        for l in range(n + 1))
            rhs_s = sum(fwd.values[1, n - l, iF] * bwd.values[0, l, iB]
                        + (-1.0) ** (n - l) * fwd.values[0, n - l, iF] * bwd.values[1, l, iB]
                        for l in range(n + 1))
            ref = max(abs(lhs_c), abs(lhs_s), 1e-8)
            worst = max(worst, abs(lhs_c - rhs_c) / ref, abs(lhs_s - rhs_s) / ref)
    return IdentityResult("interval-splitting composition identities", worst < tol,
                          worst, tol)


def check_half_line_split(cache: DispersionCache, rng, N: int = 4,
                          tol: float = 1e-8) -> IdentityResult:
    """Tail family factors through an interior point on the half line."""
    xa, xb = cache.domain.window
    worst = 0.0
    for k in _contour_samples(cache, rng):
        x_split = xa + (0.2 + 0.4 * rng.random()) * (xb - xa)
        grid = np.array([xa, x_split, xb])
        mode = mode_from_k(k, cache)
        fwd = script_cs(accum_cs_forward(k, xa, grid, N, cache, mode=mode))
        tail = accum_e_tail(k, grid, N, cache, mode=mode)
        for n in range(N + 1):
            lhs = tail.values[n, 0]
            rhs = sum((fwd.values[0, n - l, 1] - (-1.0) ** n * 1j * fwd.values[1, n - l, 1])
                      * tail.values[l, 1] for l in range(n + 1))
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-8))
    return IdentityResult("half-line tail splitting identity", worst < tol, worst, tol)


def check_factorial_bound(cache: DispersionCache, rng, N: int = 6,
                          margin: float = 1.0 + 1e-9) -> IdentityResult:
    """Tabulated family values obey the factorial simplex bound.

    The bound applies to the exponential families directly and to the
    cosine/sine family only after its script prefactor is attached.
    """
    xa, xb = cache.domain.window
    grid = np.linspace(xa, xb, 257)
    worst_ratio = 0.0
    import math

    for k in _contour_samples(cache, rng):
        mode = mode_from_k(k, cache)
        fams = [script_cs(accum_cs_forward(k, xa, grid, N, cache, mode=mode)),
                script_cs(accum_cs_backward(k, xb, grid, N, cache, mode=mode))]
        if cache.domain.kind is not DomainKind.FINITE_INTERVAL:
            fams.append(accum_e_tail(k, grid, N, cache, mode=mode))
        if cache.domain.kind is DomainKind.WHOLE_LINE:
            fams.append(accum_e_tilde_tail(k, grid, N, cache, mode=mode))
        w = np.abs(cache.log_deriv_beta_n(k, grid))
        from scipy.integrate import cumulative_trapezoid

        cum = np.concatenate([[0.0], cumulative_trapezoid(w, grid)])
        for fam in fams:
            if fam.direction == "forward":
                l1 = cum
            else:
                l1 = cum[-1] - cum
            stacks = ([fam.values[0], fam.values[1]] if fam.family.endswith("CS")
                      else [fam.values])
            for n in range(1, N + 1):
                bound = (0.5 * l1) ** n / math.factorial(n)
                floor = 1e-13
                for stack in stacks:
                    ratio = np.abs(stack[n]) / np.maximum(bound, floor)
                    worst_ratio = max(worst_ratio,
                                      float(np.max(np.where(
                                          np.abs(stack[n]) > floor, ratio, 0.0))))
    return IdentityResult("factorial simplex bound", worst_ratio <= margin,
                          worst_ratio, margin)


def check_bc_identity(cache: DispersionCache, rng, N: int = 6,
                      tol: float = 1e-6) -> IdentityResult:
    """Alternating/plain sum combination of the CS family equals one.

    Sampled near the real axis where the eigenvalue roots live; away from it
    the truncated products lose digits to the unbounded prefactors.
    """
    from .coefficients import contour_params

    r, _ = contour_params(cache)
    xa, xb = cache.domain.window
    grid = np.array([xa, xb])
    worst = 0.0
    for _ in range(3):
        k = r * (1.3 + 2.0 * rng.random()) * np.exp(1j * 0.06 * rng.random())
        fwd = accum_cs_forward(k, xa, grid, N, cache)
        c = fwd.values[0, :, 1]
        s = fwd.values[1, :, 1]
        signs = np.array([(-1.0) ** n for n in range(N + 1)])
        val = np.sum(signs * c) * np.sum(c) + np.sum(signs * s) * np.sum(s)
        worst = max(worst, abs(val - 1.0))
    return IdentityResult("boundary-row unit identity", worst < tol, worst, tol)


def check_asymptotic_sandwich(cache: DispersionCache, bc: BoundaryConditions,
                              N: int = 6) -> IdentityResult:
    """Characteristic over leading term stays within 1/2 of unity at large |k|."""
    r, theta0 = contour_params(cache)
    xa, xb = cache.domain.window
    worst = 0.0
    case = classify(bc, cache) if bc.kind is DomainKind.FINITE_INTERVAL else None
    for mult in (4.0, 8.0, 16.0):
        k = mult * r * np.exp(1j * (theta0 + 0.02))
        grid = np.linspace(xa, xb, 9)
        mode = mode_from_k(k, cache)
        if bc.kind is DomainKind.FINITE_INTERVAL:
            fwd = accum_cs_forward(k, xa, grid, N, cache, mode=mode)
            d = delta_fi(bc, fwd)
        elif bc.kind is DomainKind.HALF_LINE:
            tail = accum_e_tail(k, grid, N, cache, mode=mode)
            d = delta_hl(bc, tail)
        else:
            tail = accum_e_tail(k, grid, N, cache, mode=mode)
            tilde = accum_e_tilde_tail(k, grid, N, cache, mode=mode)
            d = delta_wl(tilde, tail, grid[4])
        b0 = b0_asymptotic(k, case, bc, cache)
        worst = max(worst, abs(d / b0 - 1.0))
    return IdentityResult("characteristic-function asymptotic sandwich", worst < 0.5,
                          worst, 0.5)


def check_wl_split_independence(cache: DispersionCache, rng, N: int = 4,
                                tol: float = 1e-9) -> IdentityResult:
    """Whole-line characteristic value is independent of the split point."""
    xa, xb = cache.domain.window
    worst = 0.0
    for k in _contour_samples(cache, rng, n=1):
        grid = np.linspace(xa, xb, 33)
        mode = mode_from_k(k, cache)
        tail = accum_e_tail(k, grid, N, cache, mode=mode)
        tilde = accum_e_tilde_tail(k, grid, N, cache, mode=mode)
        vals = [delta_wl(tilde, tail, grid[i]) for i in (8, 16, 24)]
        worst = max(worst, max(abs(v - vals[0]) for v in vals))
    return IdentityResult("whole-line split-point independence", worst < tol, worst, tol)


def run_identity_suite(cache: DispersionCache, bc: BoundaryConditions,
                       seed: int = 0) -> list[IdentityResult]:
    rng = np.random.default_rng(seed)
    out = [
        check_derivative_identities(cache, rng),
        check_factorial_bound(cache, rng),
    ]
    if bc.kind is DomainKind.FINITE_INTERVAL:
        out.append(check_composition_identities(cache, rng))
        out.append(check_bc_identity(cache, rng))
        if classify(bc, cache).case is not BoundaryCase.UNSUPPORTED:
            out.append(check_asymptotic_sandwich(cache, bc))
    elif bc.kind is DomainKind.HALF_LINE:
        out.append(check_half_line_split(cache, rng))
        out.append(check_asymptotic_sandwich(cache, bc))
    else:
        out.append(check_wl_split_independence(cache, rng))
        out.append(check_asymptotic_sandwich(cache, bc))
    return out
