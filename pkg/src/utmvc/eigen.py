"""Finite-interval eigenvalues as roots of the truncated characteristic function.

For constant gamma the characteristic bracket, scaled by the reduced spectral
parameter, is an even entire function of kay = k*g(k).  Root finding then
happens in the w = kay^2 plane: the function is entire there, eigenvalues are
lambda = gamma - w, and the +-kappa pairing collapses to a single root.  For
non-constant gamma the search runs in the k plane directly, on rectangles
clipped away from the branch-point disc.

Roots are isolated by argument-principle winding counts on adaptively
subdivided rectangles and polished by Newton iteration; near-double roots
(every zeroth-order approximation is one) are split by a local quadratic
model when subdivision stalls.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .accum import accum_cs_forward, mode_from_k, mode_from_kay
from .coefficients import DispersionCache, DomainKind
from .delta import BoundaryConditions, BoundaryCase, ClassifiedCase, classify
from .errors import CaseError, RootIsolationError

WINDING_NODES = 512
MAX_WINDING_NODES = 8192
MAX_DEPTH = 24


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue with its eigenfunction coefficients and residual."""

    kappa: complex
    lam: complex
    N_used: int
    C_m: complex
    S_m: complex
    residual: float
    multiplicity: int = 1

    def eigenfunction_coeffs(self):
        return self.C_m, self.S_m


@dataclass(frozen=True)
class SearchRegion:
    """Rectangle in the root-search plane with isolation limits."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    max_roots: int = 32
    depth_limit: int = MAX_DEPTH


def _char_mode(cache: DispersionCache, z: complex, reduced: bool):
    return mode_from_kay(z, cache) if reduced else mode_from_k(z, cache)


class _CharFunction:
    """Scaled characteristic bracket, pole-free at the origin.

    In the reduced regime this is H(w) = kay * bracket(kay) evaluated at
    kay = sqrt(w); in the direct regime F(k) = k^2 * bracket(k).
    """

    def __init__(self, bc: BoundaryConditions, cache: DispersionCache, order: int,
                 reduced: bool):
        self.bc = bc
        self.cache = cache
        self.M = 2 * order  # truncation of the accumulation index
        self.reduced = reduced
        xl, xr = cache.domain.x_l, cache.domain.x_r
        self.xl, self.xr = xl, xr
        self.mu_l = complex(cache.mu(xl))
        self.mu_r = complex(cache.mu(xr))
        self.beta_l = complex(np.asarray(cache.profile.beta(xl), dtype=complex))
        self.beta_r = complex(np.asarray(cache.profile.beta(xr), dtype=complex))
        self.sbmu_l = complex(cache.sqrt_beta_mu(xl))
        self.sbmu_r = complex(cache.sqrt_beta_mu(xr))
        self._memo: dict = {}

    def _series_at_right(self, z: complex):
        key = complex(z)
        hit = self._memo.get(key)
        if hit is None:
            mode = _char_mode(self.cache, z, self.reduced)
            grid = np.array([self.xl, self.xr])
            fwd = accum_cs_forward(None, self.xl, grid, self.M, self.cache,
                                   mode=mode, atol=1e-13)
            hit = (fwd.values[0, :, 1], fwd.values[1, :, 1])
            if len(self._memo) > 4096:
                self._memo.clear()
            self._memo[key] = hit
        return hit

    def _kay_from_w(self, w: complex) -> complex:
        return cmath.sqrt(w)

    def batch(self, ws) -> np.ndarray:
        """Vectorized evaluation over an array of arguments (one stacked solve)."""
        from .accum import cs_endpoint_batch

        ws = np.asarray(ws, dtype=complex)
        bc = self.bc
        if self.reduced:
            kays = np.sqrt(ws)
            kays = np.where(kays == 0, 1e-9, kays)
            c_vals, s_vals = cs_endpoint_batch(kays, self.cache, self.M, reduced=True)
            kn_l = kays * self.mu_l
            kn_r = kays * self.mu_r
            a_term = (self.beta_r * bc.minor(1, 2) + self.beta_l * bc.minor(3, 4)) / (
                self.sbmu_l * self.sbmu_r)
            total = np.full(ws.shape, a_term, dtype=complex)
            for n in range(self.M + 1):
                cn_coef = (-1.0) ** n * bc.minor(1, 4) / self.mu_l - bc.minor(2, 3) / self.mu_r
                total += cn_coef * c_vals[:, n]
                total += (-1.0) ** n * bc.minor(2, 4) * kays * s_vals[:, n]
                total += bc.minor(1, 3) / (kn_l * kn_r) * kays * s_vals[:, n]
            return total
        ks = ws
        c_vals, s_vals = cs_endpoint_batch(ks, self.cache, self.M, reduced=False)
        from .coefficients import g_dispersion, sqrt_g_dispersion

        gam_l = complex(np.asarray(self.cache.profile.gamma(self.xl), dtype=complex))
        gam_r = complex(np.asarray(self.cache.profile.gamma(self.xr), dtype=complex))
        kn_l = ks * self.mu_l * g_dispersion(ks, gam_l)
        kn_r = ks * self.mu_r * g_dispersion(ks, gam_r)
        ksq = ks * self.sbmu_l * self.sbmu_r * sqrt_g_dispersion(ks, gam_l) * sqrt_g_dispersion(ks, gam_r)
        total = ks * (self.beta_r * bc.minor(1, 2) + self.beta_l * bc.minor(3, 4)) / ksq
        for n in range(self.M + 1):
            cn = (-1.0) ** n * bc.minor(1, 4) / kn_l - bc.minor(2, 3) / kn_r
            sn = (-1.0) ** n * bc.minor(2, 4) + bc.minor(1, 3) / (kn_l * kn_r)
            total += ks * cn * c_vals[:, n] + ks * sn * s_vals[:, n]
        return ks * total

    def __call__(self, w: complex) -> complex:
        bc = self.bc
        if self.reduced:
            kay = self._kay_from_w(w)
            if kay == 0:
                kay = 1e-9  # H is analytic; nudge off the exact origin
            c_vals, s_vals = self._series_at_right(kay)
            kn_l = kay * self.mu_l
            kn_r = kay * self.mu_r
            a_term = (self.beta_r * bc.minor(1, 2) + self.beta_l * bc.minor(3, 4)) / (
                self.sbmu_l * self.sbmu_r)
            total = a_term
            for n in range(self.M + 1):
                cn_coef = (-1.0) ** n * bc.minor(1, 4) / self.mu_l - bc.minor(2, 3) / self.mu_r
                total += cn_coef * c_vals[n]
                total += (-1.0) ** n * bc.minor(2, 4) * kay * s_vals[n]
                total += bc.minor(1, 3) / (kn_l * kn_r) * kay * s_vals[n]
            return complex(total)
        k = w
        c_vals, s_vals = self._series_at_right(k)
        mode = _char_mode(self.cache, k, False)
        kn_l = complex(mode.scale * np.asarray(mode.rate(self.xl), dtype=complex))
        kn_r = complex(mode.scale * np.asarray(mode.rate(self.xr), dtype=complex))
        from .delta import _k_sqrtbn_pair

        a_term = k * (self.beta_r * bc.minor(1, 2) + self.beta_l * bc.minor(3, 4)) / (
            _k_sqrtbn_pair(mode, self.xl, self.xr))
        total = a_term
        for n in range(self.M + 1):
            cn = (-1.0) ** n * bc.minor(1, 4) / kn_l - bc.minor(2, 3) / kn_r
            sn = (-1.0) ** n * bc.minor(2, 4) + bc.minor(1, 3) / (kn_l * kn_r)
            total += k * cn * c_vals[n] + k * sn * s_vals[n]
        return complex(k * total)


def _winding(fn, corners, n_nodes=WINDING_NODES):
    """Winding number of fn along the rectangle boundary; None if unstable."""
    (a, b), (c, d) = corners  # re interval, im interval
    n = n_nodes
    while n <= MAX_WINDING_NODES:
        per = max(n // 4, 8)
        pts = np.concatenate([
            np.linspace(a, b, per, endpoint=False) + 1j * c,
            b + 1j * np.linspace(c, d, per, endpoint=False),
            np.linspace(b, a, per, endpoint=False) + 1j * d,
            a + 1j * np.linspace(d, c, per, endpoint=False),
        ])
        if hasattr(fn, "batch"):
            vals = np.asarray(fn.batch(pts))
        else:
            vals = np.array([fn(z) for z in pts])
        if np.any(np.abs(vals) == 0.0):
            return None
        ph = np.angle(vals)
        jumps = np.diff(np.concatenate([ph, ph[:1]]))
        jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
        if np.max(np.abs(jumps)) < 0.8 * np.pi:
            return int(round(jumps.sum() / (2 * np.pi)))
        n *= 2
    return None


def _newton(fn, z0: complex, tol: float, max_iter: int = 60) -> Optional[complex]:
    z = complex(z0)
    h_base = 1e-6
    for _ in range(max_iter):
        f = fn(z)
        h = h_base * max(1.0, abs(z))
        d = (fn(z + h) - fn(z - h)) / (2 * h)
        if d == 0:
            return None
        step = f / d
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    return None


def _quadratic_roots(fn, center: complex, radius: float):
    """Fit a quadratic on five nearby samples and return its two roots."""
    zs = center + radius * np.exp(2j * np.pi * np.arange(5) / 5)
    zs = np.concatenate([[center], zs])
    vals = np.array([fn(z) for z in zs])
    A = np.vander(zs - center, 3)  # columns (z-c)^2, (z-c), 1
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    a2, a1, a0 = coef
    if abs(a2) < 1e-14 * max(abs(a1), abs(a0), 1e-30):
        if a1 == 0:
            return []
        return [center - a0 / a1]
    disc = cmath.sqrt(a1 * a1 - 4 * a2 * a0)
    return [center + (-a1 + s * disc) / (2 * a2) for s in (+1, -1)]


def _stable_winding(fn, a, b, c, d):
    """Winding on the rectangle, nudging the edges off nearby roots."""
    w = _winding(fn, ((a, b), (c, d)))
    if w is not None:
        return w, (a, b, c, d)
    size = max(b - a, d - c)
    for eps_rel in (1e-6, 4e-3, 1.7e-2, 6.3e-2):
        eps = eps_rel * size
        w = _winding(fn, ((a - eps, b + eps), (c - eps, d + eps)))
        if w is not None:
            return w, (a - eps, b + eps, c - eps, d + eps)
    raise RootIsolationError(
        f"winding count unstable on rectangle [{a},{b}]x[{c},{d}]")


def _critical_newton(fn, z0: complex, tol: float = 1e-10, max_iter: int = 40):
    """Newton on the numerical derivative: converges at double roots."""
    z = complex(z0)
    for _ in range(max_iter):
        h = 1e-5 * max(1.0, abs(z))
        fp = fn(z + h)
        fm = fn(z - h)
        f0 = fn(z)
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * f0 + fm) / (h * h)
        if d2 == 0:
            return None
        step = d1 / d2
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    return None


def _boundary_scale(fn, a, b, c, d):
    probes = [complex(a, 0.5 * (c + d)), complex(b, 0.5 * (c + d)),
              complex(0.5 * (a + b), c), complex(0.5 * (a + b), d)]
    return max(abs(fn(z)) for z in probes)


def _resolve_pair(fn, a, b, c, d, tol):
    """Resolve a winding-2 rectangle: two simple roots or one double root."""
    center = complex(0.5 * (a + b), 0.5 * (c + d))
    size = max(b - a, d - c)
    inside = lambda z: (a - 0.1 * size <= z.real <= b + 0.1 * size
                        and c - 0.1 * size <= z.imag <= d + 0.1 * size)
    candidates = _quadratic_roots(fn, center, 0.3 * size)
    found = []
    for z0 in candidates:
        z = _newton(fn, z0, tol)
        if z is not None and inside(z):
            if not any(abs(z - f) < 1e-8 * max(1.0, abs(z)) for f in found):
                found.append(z)
    if len(found) == 2:
        return [(found[0], 1), (found[1], 1)]
    zd = _critical_newton(fn, center)
    if zd is not None and inside(zd):
        scale = _boundary_scale(fn, a, b, c, d)
        if abs(fn(zd)) <= 1e-5 * max(scale, 1e-300):
            if len(found) == 1 and abs(found[0] - zd) > 1e-6 * max(1.0, abs(zd)):
                return [(found[0], 1), (zd, 1)]
            return [(zd, 2)]
    # one or zero confirmed roots: let subdivision separate the pair
    return None


def _isolate(fn, region: SearchRegion, tol: float):
    """Recursively subdivide until each rectangle holds one root, then polish."""
    roots = []
    stack = [((region.re_min, region.re_max), (region.im_min, region.im_max), 0)]
    while stack:
        (a, b), (c, d), depth = stack.pop()
        w, (a, b, c, d) = _stable_winding(fn, a, b, c, d)
        if w == 0:
            continue
        size = max(b - a, d - c)
        center = complex(0.5 * (a + b), 0.5 * (c + d))
        may_split = depth < region.depth_limit and size > 1e-7 * max(1.0, abs(center))
        if w == 1:
            inside = lambda z: (a - 0.05 * size <= z.real <= b + 0.05 * size
                                and c - 0.05 * size <= z.imag <= d + 0.05 * size)
            z = None
            for z0 in (center, center + 0.2 * size * (1 + 1j),
                       center - 0.2 * size * (1 + 1j)):
                cand = _newton(fn, z0, tol)
                if cand is not None and inside(cand):
                    z = cand
                    break
            if z is not None:
                roots.append((z, 1))
                continue
            # Newton escaped the rectangle: shrink until it stays local
            if not may_split:
                raise RootIsolationError("Newton refinement failed after isolation")
        elif w == 2:
            # only attempt pair resolution once the rectangle is small enough
            # for a local quadratic model to mean something
            resolve_scale = max(1.0, 0.02 * abs(center))
            if size <= resolve_scale or not may_split:
                got = _resolve_pair(fn, a, b, c, d, tol)
                if got is not None:
                    roots.extend(got)
                    continue
                if not may_split:
                    raise RootIsolationError("could not resolve a winding-2 rectangle")
        elif not may_split:
            raise RootIsolationError(
                f"subdivision stalled with winding {w} at depth {depth}")
        # off-center split so structure lines (e.g. the real axis) are not
        # repeatedly chosen as edges
        frac = 0.53 if depth % 2 == 0 else 0.47
        if (b - a) >= (d - c):
            mid = a + frac * (b - a)
            stack.append(((a, mid), (c, d), depth + 1))
            stack.append(((mid, b), (c, d), depth + 1))
        else:
            mid = c + frac * (d - c)
            stack.append(((a, b), (c, mid), depth + 1))
            stack.append(((a, b), (mid, d), depth + 1))
    return roots


def initial_guesses(cache: DispersionCache, m_max: int) -> list[complex]:
    """Zeroth-order eigenvalue-root seeds for constant-gamma problems.

    Derived from the reduced parameter at the zeros of the leading
    characteristic term for periodic-type conditions: kay_m = 2 m pi / M(x_r),
    giving kappa_m = sqrt(kay_m^2 - gamma).
    """
    if not cache.gamma_is_constant:
        raise CaseError("zeroth-order seeds need constant gamma; use a search region")
    m_b = complex(cache.mfrak(cache.domain.x_r))
    g0 = cache.gamma0
    out = []
    for m in range(1, m_max + 1):
        kay = 2 * m * np.pi / m_b
        out.append(_upper_half(cmath.sqrt(kay * kay - g0)))
    return out


def _upper_half(z: complex) -> complex:
    """Representative of the +-pair in the closed upper half plane."""
    if z.imag > 0 or (z.imag == 0 and z.real >= 0):
        return z
    return -z


def find_eigenvalues(bc: BoundaryConditions, cache: DispersionCache,
                     count: Optional[int] = None, order: Optional[int] = 2,
                     region: Optional[SearchRegion] = None,
                     newton_tol: float = 1e-12,
                     compute_residuals: bool = True) -> list[EigenPair]:
    """Roots of the truncated characteristic function as eigenvalue pairs.

    ``order`` follows the correction-order convention: the accumulation index
    is truncated at 2*order, so order=0 keeps only the leading trigonometric
    term.  ``order=None`` isolates at order 2 and then re-polishes each root
    at increasing orders until it stops moving (cap 4).  For constant gamma
    the search runs in the squared reduced-parameter plane; otherwise in the
    spectral plane inside ``region``.
    """
    if bc.kind is not DomainKind.FINITE_INTERVAL:
        raise CaseError("eigenvalue search applies to the finite interval")
    case = classify(bc, cache)
    if case.case is BoundaryCase.UNSUPPORTED:
        raise CaseError("unsupported boundary case")
    adaptive = order is None
    if adaptive:
        order = 0 if cache.is_constant else 2
    reduced = cache.gamma_is_constant
    fn = _CharFunction(bc, cache, order, reduced)
    raw: list[tuple[complex, int]] = []
    if reduced:
        m_b = complex(cache.mfrak(cache.domain.x_r))
        if region is None:
            if count is None:
                raise ValueError("need either count or region")
            # periodic-type roots pair up around (2 m pi / M)^2 (one pair per
            # m, plus the zero-frequency root); the other cases sit near
            # (m pi / M)^2 with one root each.
            if case.case is BoundaryCase.CASE2:
                ms = range(0, (count + 3) // 2 + 1)
                w_guess = [(2 * m * np.pi / m_b) ** 2 for m in ms]
            else:
                w_guess = [(m * np.pi / m_b) ** 2 for m in range(1, count + 2)]
            re_vals = [w.real for w in w_guess]
            im_vals = [w.imag for w in w_guess]
            margin = 4.0 + 0.15 * max(abs(w) for w in w_guess)
            region = SearchRegion(min(re_vals) - margin, max(re_vals) + margin,
                                  min(im_vals) - margin, max(im_vals) + margin)
        raw = _isolate(fn, region, newton_tol)
        pairs = []
        g0 = cache.gamma0
        for w, mult in raw:
            lam = g0 - w
            kappa = _upper_half(cmath.sqrt(w - g0))
            pairs.append((kappa, lam, mult))
    else:
        if region is None:
            raise ValueError("non-constant gamma needs an explicit search region")
        rmin = math.sqrt(cache.bounds.M_gamma) * (1 + 1e-3)
        if abs(complex(region.re_min, region.im_min)) < rmin and \
           abs(complex(region.re_max, region.im_max)) < rmin:
            raise ValueError("search region lies inside the branch-point disc")
        raw = _isolate(fn, region, newton_tol)
        pairs = []
        for k, mult in raw:
            if abs(k) <= rmin:
                continue
            pairs.append((_upper_half(k), -k * k, mult))
    # dedupe (the +- symmetry can surface the same eigenvalue twice)
    uniq: list[tuple[complex, complex, int]] = []
    for kappa, lam, mult in pairs:
        for j, (k2, l2, m2) in enumerate(uniq):
            if abs(lam - l2) <= 1e-7 * max(1.0, abs(lam)):
                uniq[j] = (k2, l2, max(m2, mult))
                break
        else:
            uniq.append((kappa, lam, mult))
    uniq.sort(key=lambda p: (abs(p[1]), p[1].imag, p[1].real))
    if count is not None:
        uniq = uniq[:count]
    if adaptive and not cache.is_constant:
        polished = []
        for kappa, lam, mult in uniq:
            kappa, lam, order_used = _polish_root(bc, cache, kappa, lam, mult,
                                                  order, reduced, newton_tol)
            polished.append((kappa, lam, mult, order_used))
        uniq = polished
    else:
        uniq = [(kappa, lam, mult, order) for kappa, lam, mult in uniq]
    out = []
    for kappa, lam, mult, order_used in uniq:
        C_m, S_m = _efun_coefficients(bc, cache, kappa, 2 * order_used, reduced)
        res = (eigen_residual_from_parts(bc, cache, kappa, lam, C_m, S_m,
                                         2 * order_used, reduced)
               if compute_residuals else float("nan"))
        out.append(EigenPair(kappa=kappa, lam=lam, N_used=order_used, C_m=C_m, S_m=S_m,
                             residual=res, multiplicity=mult))
    return out


def _polish_root(bc, cache, kappa, lam, mult, order, reduced, tol, order_cap: int = 4):
    """Re-run Newton at increasing truncation orders until the root settles."""
    g0 = cache.gamma0 if reduced else None
    w = (kappa * kappa + g0) if reduced else kappa
    order_used = order
    for higher in range(order + 1, order_cap + 1):
        fn = _CharFunction(bc, cache, higher, reduced)
        z = (_newton(fn, w, tol) if mult == 1 else _critical_newton(fn, w))
        if z is None:
            break
        moved = abs(z - w)
        w = z
        order_used = higher
        if moved <= 1e-9 * max(1.0, abs(w)):
            break
    if reduced:
        lam = g0 - w
        kappa = _upper_half(cmath.sqrt(w - g0))
    else:
        kappa = _upper_half(w)
        lam = -w * w
    return kappa, lam, order_used


def _eigen_mode(cache: DispersionCache, kappa: complex, reduced: bool):
    if reduced:
        kay = cmath.sqrt(kappa * kappa + cache.gamma0)
        return mode_from_kay(kay, cache)
    return mode_from_k(kappa, cache)


def _efun_series(cache: DispersionCache, kappa: complex, M: int, reduced: bool,
                 grid: np.ndarray):
    mode = _eigen_mode(cache, kappa, reduced)
    return accum_cs_forward(None, cache.domain.x_l, grid, M, cache, mode=mode,
                            atol=1e-13)


def _efun_coefficients(bc: BoundaryConditions, cache: DispersionCache,
                       kappa: complex, M: int, reduced: bool):
    """Eigenfunction combination coefficients from boundary row one.

    At degenerate (double) roots both coefficients vanish; the cosine-only
    combination is then the conventional representative.
    """
    xl, xr = cache.domain.x_l, cache.domain.x_r
    fwd = _efun_series(cache, kappa, M, reduced, np.array([xl, xr]))
    mode = fwd.mode
    sb_l = complex(_sb(mode, xl))
    sb_r = complex(_sb(mode, xr))
    kn_l = complex(mode.scale * np.asarray(mode.rate(xl), dtype=complex))
    kn_r = complex(mode.scale * np.asarray(mode.rate(xr), dtype=complex))
    a11, a12, b11, b12 = bc.rows[0]
    sum_c = sum(fwd.values[0, n, 1] for n in range(M + 1))
    sum_s = sum(fwd.values[1, n, 1] for n in range(M + 1))
    alt_c = sum((-1.0) ** n * fwd.values[0, n, 1] for n in range(M + 1))
    alt_s = sum((-1.0) ** n * fwd.values[1, n, 1] for n in range(M + 1))
    C_m = -a12 * kn_l / sb_l - b11 / sb_r * sum_s - b12 * kn_r / sb_r * alt_c
    S_m = a11 / sb_l + b11 / sb_r * sum_c - b12 * kn_r / sb_r * alt_s
    scale = max(abs(a11) + abs(a12), abs(b11) + abs(b12)) * max(abs(kn_l), 1.0)
    if abs(C_m) + abs(S_m) < 1e-9 * max(scale, 1e-30):
        return 1.0 + 0.0j, 0.0 + 0.0j
    return complex(C_m), complex(S_m)


def _sb(mode, x):
    from .kernels import _sqrt_beta_n

    return _sqrt_beta_n(mode, x)


def eigenfunction(pair: EigenPair, x, bc: BoundaryConditions,
                  cache: DispersionCache, reduced: Optional[bool] = None):
    """Evaluate the eigenfunction of a refined pair on the given points."""
    if reduced is None:
        reduced = cache.gamma_is_constant
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    M = 2 * pair.N_used
    grid = np.unique(np.concatenate([[cache.domain.x_l, cache.domain.x_r], x_arr]))
    fwd = _efun_series(cache, pair.kappa, M, reduced, grid)
    idx = np.array([fwd.index_of(v) for v in x_arr])
    sum_c = np.sum(fwd.values[0], axis=0)[idx]
    sum_s = np.sum(fwd.values[1], axis=0)[idx]
    sb = np.asarray(_sb(fwd.mode, x_arr), dtype=complex)
    vals = (pair.C_m * sum_c + pair.S_m * sum_s) / sb
    return vals if np.ndim(x) else vals[0]


def eigen_residual_from_parts(bc, cache, kappa, lam, C_m, S_m, M, reduced,
                              n_grid: int = 801) -> float:
    """Normalized defect of the differential equation and both boundary rows."""
    xl, xr = cache.domain.x_l, cache.domain.x_r
    xs = np.linspace(xl, xr, n_grid)
    pair = EigenPair(kappa=kappa, lam=lam, N_used=M // 2, C_m=C_m, S_m=S_m,
                     residual=float("nan"))
    X = np.asarray(eigenfunction(pair, xs, bc, cache, reduced=reduced), dtype=complex)
    h = xs[1] - xs[0]
    from .solver import _stencil_d1

    beta = np.asarray(cache.profile.beta(xs), dtype=complex)
    alpha = np.asarray(cache.profile.alpha(xs), dtype=complex)
    gamma = np.asarray(cache.profile.gamma(xs), dtype=complex)
    Xp = _stencil_d1(X, h)
    flux = _stencil_d1(beta * Xp, h)
    ode_res = alpha * flux + gamma * X - lam * X
    scale = max(abs(lam), 1.0) * float(np.max(np.abs(X)))
    res = float(np.max(np.abs(ode_res[3:-3]))) / scale
    for row in range(2):
        a1, a2, b1, b2 = bc.rows[row]
        val = a1 * X[0] + a2 * Xp[0] + b1 * X[-1] + b2 * Xp[-1]
        res = max(res, abs(val) / (float(np.max(np.abs(bc.rows[row]))) *
                                   float(np.max(np.abs(X))) * max(abs(kappa), 1.0)))
    return res


def eigen_residual(pair: EigenPair, bc: BoundaryConditions,
                   cache: DispersionCache) -> float:
    reduced = cache.gamma_is_constant
    return eigen_residual_from_parts(bc, cache, pair.kappa, pair.lam,
                                     pair.C_m, pair.S_m, 2 * pair.N_used, reduced)
