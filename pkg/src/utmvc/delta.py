"""Characteristic function of the three problem families and boundary-case taxonomy.

The finite-interval characteristic function is assembled from the 2x4
concatenated boundary matrix through its 2x2 minors.  Its large-k leading
term depends on which of four admissible minor patterns (the Boundary Cases)
the matrix falls into; the classification also decides whether the problem is
regular (kernel/characteristic ratio stays bounded up to the boundary).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .accum import AccumSeries, SpectralMode, mode_from_k
from .coefficients import (
    DispersionCache,
    DomainKind,
    g_dispersion,
    sqrt_g_dispersion,
)
from .errors import BoundaryRankError, CaseError, ContourRadiusError


@dataclass(frozen=True)
class BoundaryConditions:
    """Boundary data: none (whole line), one row (half line) or a 2x4 matrix."""

    kind: DomainKind
    a0: complex = 0.0
    a1: complex = 0.0
    rows: Optional[np.ndarray] = None

    @staticmethod
    def whole_line() -> "BoundaryConditions":
        return BoundaryConditions(kind=DomainKind.WHOLE_LINE)

    @staticmethod
    def half_line(a0, a1) -> "BoundaryConditions":
        if a0 == 0 and a1 == 0:
            raise ValueError("half-line row must not vanish")
        return BoundaryConditions(kind=DomainKind.HALF_LINE, a0=complex(a0), a1=complex(a1))

    @staticmethod
    def finite_interval(rows) -> "BoundaryConditions":
        m = np.asarray(rows, dtype=complex)
        if m.shape != (2, 4):
            raise ValueError("finite-interval boundary data must be a 2x4 matrix")
        return BoundaryConditions(kind=DomainKind.FINITE_INTERVAL, rows=m)

    def minor(self, i: int, j: int) -> complex:
        """Determinant of columns (i, j), 1-indexed."""
        m = self.rows
        return complex(m[0, i - 1] * m[1, j - 1] - m[0, j - 1] * m[1, i - 1])

    def check_rank(self, tol: float = 1e-12):
        sv = np.linalg.svd(self.rows, compute_uv=False)
        if sv[1] <= tol * sv[0]:
            raise BoundaryRankError(f"boundary matrix is rank deficient (sigma ratio {sv[1]/sv[0]:.2e})")

    @property
    def matrix_scale(self) -> float:
        return float(np.max(np.abs(self.rows)))


class BoundaryCase(enum.Enum):
    CASE1 = 1
    CASE2 = 2
    CASE3 = 3
    CASE4 = 4
    UNSUPPORTED = 0


@dataclass(frozen=True)
class ClassifiedCase:
    case: BoundaryCase
    regular: bool
    m_c0: complex
    m_c1: complex
    m_s: complex
    u_plus: complex
    u_minus: complex


def classify(bc: BoundaryConditions, cache: DispersionCache,
             tol: float = 1e-12) -> ClassifiedCase:
    """Four-way decision tree on the boundary minors, applied in order.

    Zero tests are relative to the natural scale of each quantity.  A matrix
    matching no case (including a vanishing circle-interface discriminant) is
    reported as UNSUPPORTED rather than raised.
    """
    if bc.kind is not DomainKind.FINITE_INTERVAL:
        raise ValueError("classification applies to finite-interval boundary conditions")
    bc.check_rank()
    xl, xr = cache.domain.x_l, cache.domain.x_r
    mu_l = complex(cache.mu(xl))
    mu_r = complex(cache.mu(xr))
    u_l = complex(cache.ufrak(xl))
    u_r = complex(cache.ufrak(xr))
    ab14, ab23 = bc.minor(1, 4), bc.minor(2, 3)
    m_c0 = ab14 / mu_l - ab23 / mu_r
    m_c1 = ab14 / mu_l + ab23 / mu_r
    m_s = bc.minor(1, 3) / (mu_l * mu_r)
    u_plus = u_r + u_l
    u_minus = u_r - u_l

    scale = bc.matrix_scale
    mu_scale = max(abs(1 / mu_l), abs(1 / mu_r))
    tol_minor = tol * scale**2
    tol_m = tol * scale**2 * mu_scale

    def mk(case, regular):
        return ClassifiedCase(case, regular, m_c0, m_c1, m_s, u_plus, u_minus)

    if abs(bc.minor(2, 4)) > tol_minor:
        return mk(BoundaryCase.CASE1, True)
    if abs(m_c0) > tol_m:
        return mk(BoundaryCase.CASE2, True)
    if abs(m_c1) <= tol_m:
        if abs(bc.minor(1, 3)) > tol_minor:
            regular = abs(bc.minor(1, 2)) <= tol_minor and abs(bc.minor(3, 4)) <= tol_minor
            return mk(BoundaryCase.CASE3, regular)
        return mk(BoundaryCase.UNSUPPORTED, False)
    disc = m_c1 * u_plus - 8 * m_s
    disc_scale = max(abs(m_c1) * max(abs(u_plus), 1.0), 8 * abs(m_s), tol_m)
    if abs(disc) > 1e-9 * disc_scale:
        return mk(BoundaryCase.CASE4, False)
    warnings.warn("circle-interface discriminant is numerically zero; "
                  "classifying as UNSUPPORTED", stacklevel=2)
    return mk(BoundaryCase.UNSUPPORTED, False)


# -- endpoint factors --------------------------------------------------------

def _k_n_at(mode: SpectralMode, x: float) -> complex:
    """k * n(k, x); in the reduced regime this is kay * mu(x)."""
    return complex(mode.scale * np.asarray(mode.rate(x), dtype=complex))


def _k_sqrtbn_pair(mode: SpectralMode, xl: float, xr: float) -> complex:
    """k * sqrt(beta n)(k,xl) * sqrt(beta n)(k,xr); exact in both regimes."""
    cache = mode.cache
    sb = cache.sqrt_beta_mu(xl) * cache.sqrt_beta_mu(xr)
    if mode.kay is not None:
        return complex(mode.kay * sb)
    k = mode.k
    g_l = sqrt_g_dispersion(k, complex(np.asarray(cache.profile.gamma(xl), dtype=complex)))
    g_r = sqrt_g_dispersion(k, complex(np.asarray(cache.profile.gamma(xr), dtype=complex)))
    return complex(k * sb * g_l * g_r)


def delta_coefficients(bc: BoundaryConditions, mode: SpectralMode):
    """The scalar coefficients of the finite-interval characteristic function.

    Returns (a_coef, c_even, c_odd, s_even, s_odd): the constant term and the
    even/odd-order multipliers of the cosine and sine series.
    """
    cache = mode.cache
    xl, xr = cache.domain.x_l, cache.domain.x_r
    beta_l = complex(np.asarray(cache.profile.beta(xl), dtype=complex))
    beta_r = complex(np.asarray(cache.profile.beta(xr), dtype=complex))
    kn_l = _k_n_at(mode, xl)
    kn_r = _k_n_at(mode, xr)
    a_coef = (beta_r * bc.minor(1, 2) + beta_l * bc.minor(3, 4)) / _k_sqrtbn_pair(mode, xl, xr)
    c_even = bc.minor(1, 4) / kn_l - bc.minor(2, 3) / kn_r
    c_odd = -bc.minor(1, 4) / kn_l - bc.minor(2, 3) / kn_r
    s_base = bc.minor(1, 3) / (kn_l * kn_r)
    s_even = bc.minor(2, 4) + s_base
    s_odd = -bc.minor(2, 4) + s_base
    return a_coef, c_even, c_odd, s_even, s_odd


def delta_fi(bc: BoundaryConditions, forward: AccumSeries,
             bracket_only: bool = False) -> complex:
    """Finite-interval characteristic function from one forward CS series.

    With ``bracket_only`` the prefactor 2i*Xi is dropped; the bracket has the
    same zeros and is what the root finder uses.
    """
    mode = forward.mode
    cache = mode.cache
    xr = cache.domain.x_r
    i_r = forward.index_of(xr)
    a_coef, c_even, c_odd, s_even, s_odd = delta_coefficients(bc, mode)
    total = a_coef
    for n in range(forward.N + 1):
        cn = c_even if n % 2 == 0 else c_odd
        sn = s_even if n % 2 == 0 else s_odd
        total = total + cn * forward.c(n)[i_r] + sn * forward.s(n)[i_r]
    if bracket_only:
        return complex(total)
    xi = complex(np.exp(1j * mode.scale * forward.phase[i_r]))
    return complex(2j * xi * total)


def delta_hl(bc: BoundaryConditions, tail: AccumSeries) -> complex:
    """Half-line characteristic function from the tail series at the left edge."""
    mode = tail.mode
    xl = mode.cache.domain.x_l
    i_l = tail.index_of(xl)
    kn_l = _k_n_at(mode, xl)
    total = 0.0 + 0.0j
    for n in range(tail.N + 1):
        coef = ((-1) ** n * 1j * bc.a0 / kn_l) - bc.a1
        total += coef * tail.e(n)[i_l]
    return complex(2.0 * total)


def delta_wl(tilde: AccumSeries, tail: AccumSeries, split_x: float) -> complex:
    """Whole-line characteristic function via an interior split point."""
    i = tilde.index_of(split_x)
    j = tail.index_of(split_x)
    N = min(tilde.N, tail.N)
    total = 0.0 + 0.0j
    for n in range(0, N + 1, 2):
        total += sum(tilde.e(n - l)[i] * tail.e(l)[j] for l in range(n + 1))
    return complex(total)


def b0_asymptotic(k: complex, classified: Optional[ClassifiedCase],
                  bc: BoundaryConditions, cache: DispersionCache) -> complex:
    """Leading large-k term of the characteristic function."""
    if bc.kind is DomainKind.WHOLE_LINE:
        return 1.0 + 0.0j
    if bc.kind is DomainKind.HALF_LINE:
        xl = cache.domain.x_l
        n_l = complex(cache.mu(xl) * g_dispersion(k, complex(np.asarray(cache.profile.gamma(xl), dtype=complex))))
        return complex(2.0 * (1j * bc.a0 / (k * n_l) - bc.a1))
    if classified is None or classified.case is BoundaryCase.UNSUPPORTED:
        raise CaseError("no leading term for an unsupported boundary case")
    case = classified.case
    if case is BoundaryCase.CASE1:
        return -bc.minor(2, 4)
    if case is BoundaryCase.CASE2:
        return 1j * classified.m_c0 / k
    if case is BoundaryCase.CASE3:
        return -classified.m_s / k**2
    return (classified.m_c1 * classified.u_plus - 8 * classified.m_s) / (8 * k**2)


def require_outside_radius(k: complex, r: float):
    if abs(k) <= r:
        raise ContourRadiusError(f"|k| = {abs(k):.4g} must exceed the contour radius r = {r:.4g}")
