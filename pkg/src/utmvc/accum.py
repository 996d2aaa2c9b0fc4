"""Accumulation-function families tabulated along the domain.

Four families are supported, each indexed by a truncation order n = 0..N:

* ``CS`` forward:   cosine/sine pair anchored at the left point,
* ``CS`` backward:  the same pair anchored at the right point,
* ``E`` tail:       exponential family anchored at the right window edge,
* ``Etilde`` tail:  exponential family anchored at the left window edge.

The production path propagates the triangular coupled ODE system given by the
derivative identities of the families (level n is driven by level n-1).  The
``simplex_oracle`` evaluates the same objects by iterated cumulative
quadrature over the ordered simplex and is kept fully independent of the ODE
path so that each can check the other.

All evaluations also carry the running phase integral of the local
wavenumber, which the solution kernels need for their exponential prefactors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .coefficients import (
    DispersionCache,
    cumulative_simpson_complex,
    g_dispersion,
)
from .errors import CoverageError, QuadratureError, StiffnessError

RTOL = 1e-10
ATOL = 1e-12


@dataclass(frozen=True)
class SpectralMode:
    """How the spectral parameter enters the propagation.

    ``rate(x)`` is the phase rate (integrand of the phase integral) and
    ``scale`` multiplies it, so that scale * integral(rate) equals the full
    phase k * integral(n).  ``logderiv(x)`` is the x-derivative of
    log(beta * n).  For constant gamma one may substitute the reduced
    parameter kay = k * g(k); the rate is then the slowness mu alone and both
    functions are entire in kay.
    """

    scale: complex
    rate: Callable
    logderiv: Callable
    cache: DispersionCache
    k: Optional[complex] = None
    kay: Optional[complex] = None


def mode_from_k(k: complex, cache: DispersionCache) -> SpectralMode:
    """Propagation directly in the spectral parameter k."""
    k = complex(k)

    def rate(x):
        return cache.mu_fast(x) * g_dispersion(k, cache.gamma_at(x))

    def logderiv(x):
        return cache.log_deriv_beta_n(k, x)

    return SpectralMode(scale=k, rate=rate, logderiv=logderiv, cache=cache, k=k)


def mode_from_kay(kay: complex, cache: DispersionCache) -> SpectralMode:
    """Propagation in the reduced parameter kay = k*g(k); needs constant gamma."""
    if not cache.gamma_is_constant:
        raise ValueError("reduced-parameter propagation requires constant gamma")
    kay = complex(kay)

    def rate(x):
        return cache.mu_fast(x)

    def logderiv(x):
        return 0.5 * cache.drift(x)

    return SpectralMode(scale=kay, rate=rate, logderiv=logderiv, cache=cache, kay=kay)


@dataclass(frozen=True)
class AccumSeries:
    """Tabulated family values on a sorted grid for one spectral parameter.

    ``values`` has shape (2, N+1, len(grid)) for the CS family (cosine rows
    first) and (N+1, len(grid)) for the exponential families.  ``phase[i]``
    is the phase integral of the rate from the anchor to grid[i], oriented so
    that scale*phase is the exponent of the script prefactor.
    """

    mode: SpectralMode
    anchor: float
    direction: str
    family: str
    N: int
    grid: np.ndarray
    values: np.ndarray
    phase: np.ndarray

    @property
    def k(self):
        return self.mode.k if self.mode.k is not None else self.mode.kay

    def index_of(self, x: float) -> int:
        i = int(np.searchsorted(self.grid, x))
        for j in (i, i - 1, i + 1):
            if 0 <= j < len(self.grid) and abs(self.grid[j] - x) <= 1e-12 * max(1.0, abs(x)):
                return j
        raise CoverageError(f"x={x!r} is not a tabulated grid point of this series")

    def c(self, n: int) -> np.ndarray:
        if self.family != "CS":
            raise ValueError("cosine component only exists for the CS family")
        return self.values[0, n]

    def s(self, n: int) -> np.ndarray:
        if self.family != "CS":
            raise ValueError("sine component only exists for the CS family")
        return self.values[1, n]

    def e(self, n: int) -> np.ndarray:
        if self.family == "CS":
            raise ValueError("exponential component only exists for E families")
        return self.values[n]

    def component_stack(self) -> np.ndarray:
        """(N+1, n_grid) stack: cosine rows for CS, e rows otherwise."""
        return self.values[0] if self.family == "CS" else self.values

    def script_factor(self) -> np.ndarray:
        """exp(i * scale * phase) over the grid."""
        return np.exp(1j * self.mode.scale * self.phase)


def _rhs_factory(mode: SpectralMode, family: str, direction: str, N: int):
    scale = mode.scale
    rate = mode.rate
    logd = mode.logderiv
    if family == "CS":
        fwd_sign = 1.0 if direction == "forward" else -1.0
        parity = np.array([(-1.0) ** n for n in range(N + 1)])

        def rhs(x, y):
            rho = rate(x)
            lam = scale * rho
            half_l = 0.5 * logd(x)
            c = y[1:N + 2]
            s = y[N + 2:]
            dy = np.empty_like(y)
            dy[0] = rho
            if direction == "forward":
                dc = -parity * lam * s
                ds = parity * lam * c
                dc[1:] += half_l * c[:-1]
                ds[1:] += half_l * s[:-1]
            else:
                dc = lam * s
                ds = -lam * c
                dc[1:] -= half_l * c[:-1]
                ds[1:] += half_l * s[:-1]
            dy[1:N + 2] = dc
            dy[N + 2:] = ds
            return dy

        y0 = np.zeros(2 * (N + 1) + 1, dtype=complex)
        y0[1] = 1.0
        return rhs, y0
    # exponential families
    mask = np.array([1.0 - (-1.0) ** n for n in range(N + 1)])
    sign = 1.0 if family == "Etilde" else -1.0

    def rhs(x, y):
        rho = rate(x)
        lam = scale * rho
        half_l = 0.5 * logd(x)
        e = y[1:]
        dy = np.empty_like(y)
        dy[0] = rho
        de = sign * 1j * lam * mask * e
        de[1:] += sign * half_l * e[:-1]
        dy[1:] = de
        return dy

    y0 = np.zeros(N + 2, dtype=complex)
    y0[1] = 1.0
    return rhs, y0


def _propagate(mode: SpectralMode, family: str, direction: str, anchor: float,
               grid: np.ndarray, N: int, rtol: float = RTOL, atol: float = ATOL) -> AccumSeries:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be a sorted 1-D array")

    # Closed forms when the coefficient variation vanishes identically.
    if mode.cache.is_constant:
        rho0 = complex(mode.rate(np.array([anchor]))[()] if np.ndim(mode.rate(anchor)) else mode.rate(anchor))
        if direction == "forward":
            phase = rho0 * (grid - anchor)
        else:
            phase = rho0 * (anchor - grid)
        z = mode.scale * phase
        if family == "CS":
            vals = np.zeros((2, N + 1, len(grid)), dtype=complex)
            vals[0, 0] = np.cos(z)
            vals[1, 0] = np.sin(z)
        else:
            vals = np.zeros((N + 1, len(grid)), dtype=complex)
            vals[0] = 1.0
        return AccumSeries(mode, anchor, direction, family, N, grid,
                           vals, np.asarray(phase, dtype=complex))

    rhs, y0 = _rhs_factory(mode, family, direction, N)
    if direction == "forward":
        x0, x1 = anchor, grid[-1]
        t_eval = grid
    else:
        x0, x1 = anchor, grid[0]
        t_eval = grid[::-1]
    if x0 == x1:
        span = abs(grid[-1] - grid[0]) or 1.0
    else:
        span = abs(x1 - x0)
    max_step = min(span, max(2 * np.pi / (8.0 * (abs(mode.scale) + 1.0) *
                                          mode.cache.bounds.M_n(max(abs(mode.scale), 1.0))),
                             span / 2048.0))
    if x0 == x1:
        ys = np.repeat(y0[:, None], len(grid), axis=1)
    else:
        sol = solve_ivp(rhs, (x0, x1), y0, method="DOP853", t_eval=t_eval,
                        rtol=rtol, atol=atol, max_step=max_step, first_step=max_step / 4)
        if not sol.success:
            raise StiffnessError(f"accumulation propagation failed: {sol.message}",
                                 k=mode.scale, x=sol.t[-1] if len(sol.t) else x0)
        ys = sol.y if direction == "forward" else sol.y[:, ::-1]
        # Anchor may coincide with a grid endpoint not covered by the span.
        if direction == "forward" and grid[0] == anchor and not np.isclose(ys[1, 0], y0[1]):
            ys[:, 0] = y0
    phase = ys[0] if direction == "forward" else -ys[0]
    if family == "CS":
        vals = ys[1:].reshape(2, N + 1, len(grid))
    else:
        vals = ys[1:]
    return AccumSeries(mode, anchor, direction, family, N, grid, vals,
                       phase.astype(complex))


def accum_cs_forward(k, a: float, grid, N: int, cache: DispersionCache,
                     mode: Optional[SpectralMode] = None, *, rtol: float = RTOL,
                     atol: float = ATOL) -> AccumSeries:
    """Cosine/sine family on (a, x) for every grid point x >= a."""
    mode = mode or mode_from_k(k, cache)
    return _propagate(mode, "CS", "forward", a, grid, N, rtol=rtol, atol=atol)


def accum_cs_backward(k, b: float, grid, N: int, cache: DispersionCache,
                      mode: Optional[SpectralMode] = None, *, rtol: float = RTOL,
                      atol: float = ATOL) -> AccumSeries:
    """Cosine/sine family on (x, b) for every grid point x <= b."""
    mode = mode or mode_from_k(k, cache)
    return _propagate(mode, "CS", "backward", b, grid, N, rtol=rtol, atol=atol)


def accum_e_tail(k, grid, N: int, cache: DispersionCache,
                 mode: Optional[SpectralMode] = None, *, anchor: Optional[float] = None,
                 rtol: float = RTOL, atol: float = ATOL) -> AccumSeries:
    """Exponential family on (x, +infinity), truncated at the window edge.

    ``anchor`` overrides the truncation point, which turns the result into
    the same family over the finite window (x, anchor); used by tests.
    """
    mode = mode or mode_from_k(k, cache)
    if anchor is None:
        anchor = cache.domain.window[1]
    return _propagate(mode, "E", "backward", anchor, grid, N, rtol=rtol, atol=atol)


def accum_e_tilde_tail(k, grid, N: int, cache: DispersionCache,
                       mode: Optional[SpectralMode] = None, *, anchor: Optional[float] = None,
                       rtol: float = RTOL, atol: float = ATOL) -> AccumSeries:
    """Exponential family on (-infinity, x), truncated at the window edge."""
    mode = mode or mode_from_k(k, cache)
    if anchor is None:
        anchor = cache.domain.window[0]
    return _propagate(mode, "Etilde", "forward", anchor, grid, N, rtol=rtol, atol=atol)


def script_cs(series: AccumSeries) -> AccumSeries:
    """Multiply the CS family by its exponential prefactor exp(i*scale*phase)."""
    if series.family != "CS":
        raise ValueError("script transform applies to the CS family")
    factor = series.script_factor()
    vals = series.values * factor[None, None, :]
    return AccumSeries(series.mode, series.anchor, series.direction, "script-CS",
                       series.N, series.grid, vals, series.phase)


def cs_endpoint_batch(zs: np.ndarray, cache: DispersionCache, M: int,
                      reduced: bool, rtol: float = 1e-9, atol: float = 1e-12):
    """Forward CS endpoint values for a batch of spectral parameters.

    Integrates the stacked system for all parameters at once (shared adaptive
    steps) and returns arrays of shape (n_z, M+1) with the cosine and sine
    family values at the right end of the interval.  ``reduced`` selects the
    constant-gamma parameterization.
    """
    zs = np.asarray(zs, dtype=complex)
    nz = len(zs)
    xl, xr = cache.domain.x_l, cache.domain.x_r
    if cache.is_constant:
        if reduced:
            phase = zs * cache.mu_fast(xl) * (xr - xl)
        else:
            phase = zs * cache.mu_fast(xl) * g_dispersion(zs, cache.gamma_at(xl)) * (xr - xl)
        c = np.zeros((nz, M + 1), dtype=complex)
        s = np.zeros((nz, M + 1), dtype=complex)
        c[:, 0] = np.cos(phase)
        s[:, 0] = np.sin(phase)
        return c, s
    parity = np.array([(-1.0) ** n for n in range(M + 1)])

    def rhs(x, y):
        state = y.reshape(nz, 2 * (M + 1))
        c = state[:, :M + 1]
        s = state[:, M + 1:]
        mu = cache.mu_fast(x)
        if reduced:
            lam = zs * mu
            half_l = 0.25 * cache.drift(x)
        else:
            lam = zs * mu * g_dispersion(zs, cache.gamma_at(x))
            half_l = 0.25 * (cache.drift(x) + cache.d_gamma(x) / (zs**2 + cache.gamma_at(x)))
        dc = -(lam[:, None] * parity[None, :]) * s
        ds = (lam[:, None] * parity[None, :]) * c
        if np.ndim(half_l) == 0:
            dc[:, 1:] += half_l * c[:, :-1]
            ds[:, 1:] += half_l * s[:, :-1]
        else:
            dc[:, 1:] += half_l[:, None] * c[:, :-1]
            ds[:, 1:] += half_l[:, None] * s[:, :-1]
        return np.concatenate([dc, ds], axis=1).ravel()

    y0 = np.zeros((nz, 2 * (M + 1)), dtype=complex)
    y0[:, 0] = 1.0
    span = xr - xl
    max_step = min(span, 2 * np.pi / (8.0 * (np.max(np.abs(zs)) + 1.0)
                                      * cache.bounds.M_n(1.0)))
    sol = solve_ivp(rhs, (xl, xr), y0.ravel(), method="DOP853", rtol=rtol, atol=atol,
                    max_step=max_step, first_step=max_step / 4)
    if not sol.success:
        raise StiffnessError(f"batched propagation failed: {sol.message}")
    state = sol.y[:, -1].reshape(nz, 2 * (M + 1))
    return state[:, :M + 1], state[:, M + 1:]


# -- direct simplex quadrature (oracle path) --------------------------------

MAX_SIMPLEX_ORDER = 3


def _phase_spline(mode: SpectralMode, a: float, b: float, n_pts: int):
    xs = np.linspace(a, b, n_pts)
    rho = np.asarray(mode.rate(xs), dtype=complex)
    cum = cumulative_simpson_complex(rho, x=xs, initial=0.0)
    w = np.asarray(mode.logderiv(xs), dtype=complex)
    return xs, cum, w


def _iterated_simplex(mode: SpectralMode, a: float, b: float, lam_coeffs,
                      sigma_first: float, sigma_last: float, n_pts: int) -> complex:
    """Integral over a<y_1<...<y_n<b of prod_p w(y_p) e^{i*scale*lam_p*Phi(y_p)}.

    The phase of the generalized accumulation integrand separates per node
    (coefficient lam_p = sigma_{p-1} - sigma_p, plus boundary terms), turning
    the simplex integral into nested cumulative quadratures.
    """
    xs, Phi, w = _phase_spline(mode, a, b, n_pts)
    scale = mode.scale
    inner = np.ones_like(xs, dtype=complex)
    for lam in lam_coeffs:
        g = w * np.exp(1j * scale * lam * Phi) * inner
        inner = cumulative_simpson_complex(g, x=xs, initial=0.0)
    total = inner[-1]
    pref = np.exp(1j * scale * (sigma_last * Phi[-1] - sigma_first * 0.0))
    return complex(pref * total)


def _sigma_pattern(family: str, n: int, sign: int = +1):
    """sigma_p for p = 0..n for each family; CS uses two exponential patterns."""
    if family == "E":
        return [1 - (-1) ** (n - p) for p in range(n + 1)]
    if family == "Etilde":
        return [1 - (-1) ** p for p in range(n + 1)]
    if family == "CSexp":
        # 1 + (-1)^p for sign=+1 and 1 - (-1)^p for sign=-1
        return [1 + sign * (-1) ** p for p in range(n + 1)]
    raise ValueError(family)


def generalized_simplex(mode: SpectralMode, a: float, b: float, n: int,
                        sigma, rel_tol: float = 1e-9) -> complex:
    """J_n over (a,b) for an explicit sigma pattern, with grid-doubling control."""
    if n < 0:
        return 0.0
    if n == 0:
        xs, Phi, _ = _phase_spline(mode, a, b, 2049)
        return complex(np.exp(1j * mode.scale * sigma[0] * Phi[-1]))
    lam = [sigma[p - 1] - sigma[p] for p in range(1, n + 1)]
    prev = None
    for n_pts in (1025, 2049, 4097, 8193, 16385):
        val = _iterated_simplex(mode, a, b, lam, sigma[0], sigma[n], n_pts) / 2.0 ** n
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-14):
            return val
        prev = val
    raise QuadratureError(
        f"simplex quadrature did not converge to rel {rel_tol:g} (n={n}, k={mode.scale})")


def simplex_oracle(k, a: float, b: float, n: int, family: str,
                   cache: DispersionCache, mode: Optional[SpectralMode] = None,
                   rel_tol: float = 1e-9) -> complex:
    """Direct quadrature of one accumulation value, independent of the ODE path.

    family is one of "C", "S", "E", "Etilde".  Only n <= 3 is supported; the
    cost of the nested quadrature grows quickly with n.
    """
    if n > MAX_SIMPLEX_ORDER:
        raise ValueError(f"simplex oracle supports n <= {MAX_SIMPLEX_ORDER}")
    mode = mode or mode_from_k(k, cache)
    if family in ("E", "Etilde"):
        return generalized_simplex(mode, a, b, n, _sigma_pattern(family, n), rel_tol)
    jp = generalized_simplex(mode, a, b, n, _sigma_pattern("CSexp", n, +1), rel_tol)
    jm = generalized_simplex(mode, a, b, n, _sigma_pattern("CSexp", n, -1), rel_tol)
    # un-script: divide the even/odd combinations by the full-interval prefactor
    xs, Phi, _ = _phase_spline(mode, a, b, 2049)
    pref = np.exp(1j * mode.scale * Phi[-1])
    if family == "C":
        return complex(0.5 * (jp + jm) / pref)
    if family == "S":
        return complex((jp - jm) / (2j * pref))
    raise ValueError(f"unknown family {family!r}")
