"""Independent reference solvers used to validate the contour representation.

Nothing in this module touches the spectral machinery: the time stepper is a
Crank-Nicolson finite-difference scheme, the constant-coefficient references
are eigenseries and Gaussian convolutions, and the spectral reference is a
dense/shift-invert eigensolve of the finite-difference operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad, simpson

from .coefficients import CoefficientProfile, DomainKind
from .delta import BoundaryConditions
from .errors import OracleError


@dataclass(frozen=True)
class FDGrid:
    """Uniform space-time grid for the implicit stepper."""

    n_x: int
    n_t: int
    T: float

    def __post_init__(self):
        if self.n_x < 8 or self.n_t < 2:
            raise ValueError("grid too small")


def _bc_closure_rows(bc: BoundaryConditions, n: int, h: float):
    """Coefficients of the two boundary rows on (u_0, u_1, u_2, u_{n-2}, u_{n-1}, u_n)."""
    rows = []
    if bc.kind is DomainKind.FINITE_INTERVAL:
        raw = bc.rows
    elif bc.kind is DomainKind.HALF_LINE:
        raw = np.array([[bc.a0, bc.a1, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]], dtype=complex)
    else:
        raw = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]], dtype=complex)
    for a1, a2, b1, b2 in raw:
        c = np.zeros(6, dtype=complex)
        c[0] = a1 - 3 * a2 / (2 * h)
        c[1] = 4 * a2 / (2 * h)
        c[2] = -a2 / (2 * h)
        c[5] = b1 + 3 * b2 / (2 * h)
        c[4] = -4 * b2 / (2 * h)
        c[3] = b2 / (2 * h)
        rows.append(c)
    return rows


def _operator_matrix(profile: CoefficientProfile, xs: np.ndarray) -> sp.csr_matrix:
    """Second-order conservative discretization of alpha (beta u')' + gamma u."""
    n = len(xs)
    h = xs[1] - xs[0]
    alpha = np.asarray(profile.alpha(xs), dtype=complex)
    gamma = np.asarray(profile.gamma(xs), dtype=complex)
    beta_half = np.asarray(profile.beta(0.5 * (xs[:-1] + xs[1:])), dtype=complex)
    main = np.zeros(n, dtype=complex)
    lower = np.zeros(n - 1, dtype=complex)
    upper = np.zeros(n - 1, dtype=complex)
    for i in range(1, n - 1):
        bm, bp = beta_half[i - 1], beta_half[i]
        lower[i - 1] = alpha[i] * bm / h**2
        main[i] = -alpha[i] * (bm + bp) / h**2 + gamma[i]
        upper[i] = alpha[i] * bp / h**2
    return sp.diags([lower, main, upper], [-1, 0, 1], format="lil")


def crank_nicolson(profile: CoefficientProfile, bc: BoundaryConditions,
                   q0: Callable, grid: FDGrid,
                   f: Optional[Callable] = None,
                   f0: Optional[Callable] = None,
                   f1: Optional[Callable] = None,
                   t_out: Optional[np.ndarray] = None):
    """Second-order implicit reference solution on the coefficient window.

    Boundary rows are imposed directly (one-sided second-order derivative
    stencils), which keeps arbitrary two-point conditions, including the
    periodic ones, in one code path.  Returns (x, t_out, Q[t, x]).
    """
    xa, xb = profile.domain.window
    n = grid.n_x
    xs = np.linspace(xa, xb, n + 1)
    h = xs[1] - xs[0]
    dt0 = grid.T / grid.n_t
    L = _operator_matrix(profile, xs)
    eye = sp.identity(n + 1, dtype=complex, format="lil")
    rows = _bc_closure_rows(bc, n, h)
    idx = [0, 1, 2, n - 2, n - 1, n]

    def stepper(dt, implicit_weight=0.5):
        A = (eye - implicit_weight * dt * L).tolil()
        B = (eye + (1.0 - implicit_weight) * dt * L).tolil()
        for r, coeffs in enumerate(rows):
            target = 0 if r == 0 else n
            A[target, :] = 0.0
            B[target, :] = 0.0
            for j, cval in zip(idx, coeffs):
                A[target, j] = cval
        return spla.factorized(A.tocsc()), B.tocsr()

    u = np.asarray(q0(xs), dtype=complex)
    t_out = np.asarray(t_out if t_out is not None else [grid.T], dtype=float)
    if np.any(t_out > grid.T + 1e-12):
        raise OracleError("output time beyond the stepping horizon")
    out = np.empty((len(t_out), n + 1), dtype=complex)
    bvals = [f0, f1]

    def advance(u, t, dt, solve, B, implicit_weight=0.5):
        t_new = t + dt
        rhs = B @ u
        if f is not None:
            t_f = t + 0.5 * dt if implicit_weight == 0.5 else t_new
            rhs += dt * np.asarray(f(xs, t_f), dtype=complex)
        for r in range(len(rows)):
            target = 0 if r == 0 else n
            fv = bvals[r] if bc.kind is not DomainKind.WHOLE_LINE else None
            rhs[target] = (complex(np.asarray(fv(t_new), dtype=complex))
                           if fv is not None else 0.0)
        return solve(rhs), t_new

    t = 0.0
    first_segment = True
    # step exactly onto each output time with uniform substeps of size <= dt0
    for j, t_target in enumerate(t_out):
        seg = t_target - t
        if seg > 1e-14:
            n_steps = max(1, int(np.ceil(seg / dt0 - 1e-12)))
            dt = seg / n_steps
            remaining = n_steps
            if first_segment and n_steps >= 2:
                # damped (backward Euler) startup: restores second order when
                # the initial data violate the boundary rows
                solve_be, B_be = stepper(0.5 * dt, implicit_weight=1.0)
                for _ in range(4):
                    u, t = advance(u, t, 0.5 * dt, solve_be, B_be, implicit_weight=1.0)
                remaining = n_steps - 2
                first_segment = False
            solve, B = stepper(dt)
            for _ in range(remaining):
                u, t = advance(u, t, dt, solve, B)
        out[j] = u
    return xs, t_out, out


def crank_nicolson_richardson(profile, bc, q0, grid: FDGrid, t_out, **kw):
    """Grid-doubled Richardson extrapolation of the stepper (second order)."""
    x1, t1, u1 = crank_nicolson(profile, bc, q0, grid, t_out=t_out, **kw)
    fine = FDGrid(2 * grid.n_x, 2 * grid.n_t, grid.T)
    x2, t2, u2 = crank_nicolson(profile, bc, q0, fine, t_out=t_out, **kw)
    return x1, t1, (4.0 * u2[:, ::2] - u1) / 3.0


def fourier_exact(alpha0: complex, beta0: complex, gamma0: complex,
                  bc_type: str, q0: Callable, x, t, x_l: float = 0.0,
                  x_r: float = 1.0, tail_tol: float = 1e-14,
                  max_modes: int = 4096):
    """Constant-coefficient eigenseries on an interval.

    Supports dirichlet, neumann, and periodic conditions; mode coefficients
    come from composite-Simpson quadrature and the series stops once the
    remaining modes are provably below the tail tolerance.
    """
    L = x_r - x_l
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ys = np.linspace(x_l, x_r, 4097)
    q0v = np.asarray(q0(ys), dtype=complex)
    D = alpha0 * beta0
    out = np.zeros((len(t), len(x)), dtype=complex)

    def add_mode(lam, phi_x, coef):
        nonlocal out
        out += coef * np.exp(lam * t)[:, None] * phi_x[None, :]
        return abs(coef) * float(np.max(np.abs(np.exp(lam * t))))

    if bc_type == "dirichlet":
        for m in range(1, max_modes + 1):
            mu_m = m * np.pi / L
            lam = -D * mu_m**2 + gamma0
            coef = 2.0 / L * simpson(q0v * np.sin(mu_m * (ys - x_l)), x=ys)
            size = add_mode(lam, np.sin(mu_m * (x - x_l)), coef)
            if m > 8 and size < tail_tol:
                return out
    elif bc_type == "neumann":
        coef0 = simpson(q0v, x=ys) / L
        add_mode(gamma0, np.ones_like(x), coef0)
        for m in range(1, max_modes + 1):
            mu_m = m * np.pi / L
            lam = -D * mu_m**2 + gamma0
            coef = 2.0 / L * simpson(q0v * np.cos(mu_m * (ys - x_l)), x=ys)
            size = add_mode(lam, np.cos(mu_m * (x - x_l)), coef)
            if m > 8 and size < tail_tol:
                return out
    elif bc_type == "periodic":
        coef0 = simpson(q0v, x=ys) / L
        add_mode(gamma0, np.ones_like(x), coef0)
        for m in range(1, max_modes + 1):
            mu_m = 2 * np.pi * m / L
            lam = -D * mu_m**2 + gamma0
            size = 0.0
            for sgn in (+1, -1):
                phase = np.exp(sgn * 1j * mu_m * (ys - x_l))
                coef = simpson(q0v * np.conj(phase), x=ys) / L
                size += add_mode(lam, np.exp(sgn * 1j * mu_m * (x - x_l)), coef)
            if m > 8 and size < tail_tol:
                return out
    else:
        raise OracleError(f"unsupported boundary type {bc_type!r}")
    raise OracleError("eigenseries did not reach the tail tolerance")


def matrix_eigs(profile: CoefficientProfile, bc: BoundaryConditions,
                n_grid: int = 1000, n_eigs: int = 12,
                richardson: bool = False):
    """Eigenvalues of the finite-difference discretization with boundary rows.

    Boundary unknowns are eliminated algebraically through the one-sided
    stencils of the two rows, leaving a standard (non-self-adjoint) interior
    eigenproblem.  Returns eigenvalues sorted by |lambda|.
    """
    def eig_on(n):
        xa, xb = profile.domain.window
        xs = np.linspace(xa, xb, n + 1)
        h = xs[1] - xs[0]
        L = _operator_matrix(profile, xs).tocsr()
        rows = _bc_closure_rows(bc, n, h)
        # solve the 2x2 system for (u_0, u_n) given interior neighbours
        M = np.array([[rows[0][0], rows[0][5]], [rows[1][0], rows[1][5]]], dtype=complex)
        if abs(np.linalg.det(M)) < 1e-14 * max(1.0, float(np.max(np.abs(M)))) ** 2:
            raise OracleError("singular boundary closure")
        rhs_cols = {1: 0, 2: 1, n - 2: 2, n - 1: 3}
        R = np.zeros((2, 4), dtype=complex)
        for r in range(2):
            R[r, 0] = rows[r][1]
            R[r, 1] = rows[r][2]
            R[r, 2] = rows[r][3]
            R[r, 3] = rows[r][4]
        S = -np.linalg.solve(M, R)  # (u0, un) = S @ (u1, u2, u_{n-2}, u_{n-1})
        Lin = L[1:n, 1:n].tolil()
        l0 = np.asarray(L[1:n, 0].todense()).ravel()
        ln = np.asarray(L[1:n, n].todense()).ravel()
        for j_int, col in rhs_cols.items():
            contrib = l0 * S[0, col] + ln * S[1, col]
            Lin[:, j_int - 1] = np.asarray(Lin[:, j_int - 1].todense()).ravel() + contrib
        Lin = Lin.tocsc()
        k = min(n_eigs, n - 3)
        if n <= 900:
            vals = np.linalg.eigvals(Lin.toarray())
        else:
            vals = spla.eigs(Lin, k=k, sigma=0.0, which="LM",
                             return_eigenvectors=False)
        vals = np.asarray(sorted(vals, key=lambda z: abs(z)))[:n_eigs]
        return vals

    vals1 = eig_on(n_grid)
    if not richardson:
        return vals1
    vals2 = eig_on(2 * n_grid)
    out = []
    for v in vals2:
        j = int(np.argmin(np.abs(vals1 - v)))
        out.append((4.0 * v - vals1[j]) / 3.0)
    return np.asarray(out)


def heat_kernel_convolution(D: complex, gamma0: complex, q0: Callable,
                            x: float, t: float, support: float = 12.0) -> complex:
    """Whole-line constant-coefficient solution by Gaussian convolution."""
    pref = np.exp(gamma0 * t) / np.sqrt(4 * np.pi * D * t)

    def integrand(y, part):
        val = np.exp(-(x - y) ** 2 / (4 * D * t)) * np.asarray(q0(y), dtype=complex)
        return val.real if part == 0 else val.imag

    re, _ = quad(integrand, x - support, x + support, args=(0,), limit=400,
                 epsabs=1e-13, epsrel=1e-12)
    im, _ = quad(integrand, x - support, x + support, args=(1,), limit=400,
                 epsabs=1e-13, epsrel=1e-12)
    return complex(pref * (re + 1j * im))
