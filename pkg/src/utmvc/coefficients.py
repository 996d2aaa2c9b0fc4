"""Coefficient triple (alpha, beta, gamma), derived dispersion data, and contour geometry.

The central object is :class:`DispersionCache`, which samples the coefficient
functions once on a refined grid, fixes continuous arguments for the square
roots, tabulates the antiderivative of the local slowness ``mu = 1/sqrt(alpha*beta)``,
and records the global bounds that the contour construction needs.

Branch conventions: arguments of ``1 + gamma/k^2`` live in ``[-pi/2, 3*pi/2)``,
while the arguments of ``alpha`` and ``beta`` are unwrapped continuously in x,
anchored at the left edge of the computational window.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson as _cumulative_simpson_real
from scipy.interpolate import CubicSpline


def cumulative_simpson_complex(y, x, initial=0.0):
    """cumulative_simpson that keeps the imaginary part."""
    y = np.asarray(y)
    if np.iscomplexobj(y):
        re = _cumulative_simpson_real(y.real, x=x, initial=initial)
        im = _cumulative_simpson_real(y.imag, x=x, initial=initial)
        return re + 1j * im
    return _cumulative_simpson_real(y, x=x, initial=initial)

from .errors import (
    ContourRadiusError,
    DissipativityError,
    EvaluationError,
    TruncationError,
)

TWO_PI = 2.0 * np.pi


class DomainKind(enum.Enum):
    WHOLE_LINE = "whole_line"
    HALF_LINE = "half_line"
    FINITE_INTERVAL = "finite_interval"


@dataclass(frozen=True)
class Domain:
    """Spatial domain of the problem.

    ``truncation_extent`` is the half-width (whole line) or width (half line)
    of the computational window used for the unbounded kinds.
    """

    kind: DomainKind
    x_l: float = 0.0
    x_r: float = 1.0
    truncation_extent: float = 16.0

    def __post_init__(self):
        if self.kind is DomainKind.FINITE_INTERVAL and not self.x_l < self.x_r:
            raise ValueError("finite interval needs x_l < x_r")
        if self.truncation_extent <= 0:
            raise ValueError("truncation_extent must be positive")

    @property
    def window(self) -> tuple[float, float]:
        """Computational window (xa, xb) actually sampled."""
        if self.kind is DomainKind.FINITE_INTERVAL:
            return (self.x_l, self.x_r)
        if self.kind is DomainKind.HALF_LINE:
            return (self.x_l, self.x_l + self.truncation_extent)
        return (-self.truncation_extent, self.truncation_extent)

    @property
    def anchor(self) -> float:
        """Anchor for antiderivatives and continuous arguments."""
        if self.kind is DomainKind.WHOLE_LINE:
            return 0.0
        return self.x_l


def _richardson_derivative(f: Callable, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """4th-order central difference at steps h and h/2, Richardson-combined."""

    def central(hh):
        return (-f(x + 2 * hh) + 8 * f(x + hh) - 8 * f(x - hh) + f(x - 2 * hh)) / (12 * hh)

    d1 = central(h)
    d2 = central(h / 2)
    return (16 * d2 - d1) / 15


@dataclass(frozen=True)
class CoefficientProfile:
    """The coefficient functions and (optionally) their derivatives.

    All callables accept a real numpy array and return complex values.
    Missing derivatives are filled in by Richardson-extrapolated central
    differences.
    """

    alpha: Callable
    beta: Callable
    gamma: Callable
    domain: Domain
    alpha_prime: Optional[Callable] = None
    beta_prime: Optional[Callable] = None
    gamma_prime: Optional[Callable] = None

    def d_alpha(self, x):
        if self.alpha_prime is not None:
            return np.asarray(self.alpha_prime(x), dtype=complex)
        return _richardson_derivative(lambda u: np.asarray(self.alpha(u), dtype=complex), x)

    def d_beta(self, x):
        if self.beta_prime is not None:
            return np.asarray(self.beta_prime(x), dtype=complex)
        return _richardson_derivative(lambda u: np.asarray(self.beta(u), dtype=complex), x)

    def d_gamma(self, x):
        if self.gamma_prime is not None:
            return np.asarray(self.gamma_prime(x), dtype=complex)
        return _richardson_derivative(lambda u: np.asarray(self.gamma(u), dtype=complex), x)


def arg_upper(z):
    """Argument of z in [-pi/2, 3*pi/2)."""
    a = np.angle(z)
    return np.where(a < -np.pi / 2, a + TWO_PI, a)


@dataclass(frozen=True)
class Bounds:
    """Grid-estimated global bounds, with a 10% safety margin applied."""

    M_gamma: float
    m_ab: float
    M_ab: float
    Theta: float
    l1_drift: float
    l1_gamma_prime: float

    def m_n(self, r: float) -> float:
        """Lower bound on |n(k,x)| for |k| >= r."""
        return math.sqrt(max(1.0 - self.M_gamma / r**2, 0.0)) / math.sqrt(self.M_ab)

    def M_n(self, r: float) -> float:
        """Upper bound on |n(k,x)| for |k| >= r."""
        return math.sqrt(1.0 + self.M_gamma / r**2) / math.sqrt(self.m_ab)


@dataclass(frozen=True)
class ValidationItem:
    name: str
    passed: bool
    value: float
    requirement: str


@dataclass(frozen=True)
class ValidationReport:
    items: tuple[ValidationItem, ...]

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)

    def __str__(self):
        lines = []
        for it in self.items:
            mark = "PASS" if it.passed else "FAIL"
            lines.append(f"[{mark}] {it.name}: {it.value:.6g} ({it.requirement})")
        return "\n".join(lines)


class DispersionCache:
    """Sampled coefficient data, continuous arguments and slowness antiderivative.

    Immutable after construction; every method is pure, so instances can be
    shared freely across threads.
    """

    def __init__(self, profile: CoefficientProfile, n_grid: int = 4097,
                 max_refine: int = 4):
        self.profile = profile
        self.domain = profile.domain
        xa, xb = self.domain.window

        n = max(n_grid, 2049)
        for _ in range(max_refine + 1):
            xs = np.linspace(xa, xb, n)
            ok = self._sample(xs)
            if ok:
                break
            n = 2 * (n - 1) + 1
        else:
            raise EvaluationError("phase unwrapping did not stabilize under refinement")
        self._build_bounds()

    # -- construction -----------------------------------------------------

    def _sample(self, xs: np.ndarray) -> bool:
        p = self.profile
        a = np.asarray(p.alpha(xs), dtype=complex)
        b = np.asarray(p.beta(xs), dtype=complex)
        g = np.asarray(p.gamma(xs), dtype=complex)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(g))):
            raise EvaluationError("coefficient functions returned non-finite values")

        th_a = np.unwrap(np.angle(a))
        th_b = np.unwrap(np.angle(b))
        for th in (th_a, th_b):
            jumps = np.abs(np.diff(th))
            if jumps.size and jumps.max() >= np.pi / 2:
                return False

        self.xs = xs
        self.alpha_vals, self.beta_vals, self.gamma_vals = a, b, g
        self.th_alpha, self.th_beta = th_a, th_b
        self.d_alpha_vals = p.d_alpha(xs)
        self.d_beta_vals = p.d_beta(xs)
        self.d_gamma_vals = p.d_gamma(xs)

        mu = self._mu_from(a, th_a, b, th_b)
        self.mu_vals = mu
        self._mu_spline = CubicSpline(xs, mu)
        self._gamma_spline = CubicSpline(xs, g)
        self._dgamma_spline = CubicSpline(xs, self.d_gamma_vals)
        drift = self.d_beta_vals / b - self.d_alpha_vals / a
        self.drift_vals = drift
        self._drift_spline = CubicSpline(xs, drift)

        anchor = self.domain.anchor
        cum = cumulative_simpson_complex(mu, x=xs, initial=0.0)
        cum = cum - np.interp(anchor, xs, cum.real) - 1j * np.interp(anchor, xs, cum.imag)
        self._mfrak_spline = CubicSpline(xs, cum)
        return True

    @staticmethod
    def _mu_from(a, th_a, b, th_b):
        return np.exp(-0.5j * (th_a + th_b)) / np.sqrt(np.abs(a * b))

    def _build_bounds(self):
        xs = self.xs
        ab = self.alpha_vals * self.beta_vals
        phi = self.th_alpha + self.th_beta
        theta = float(np.max(np.abs(phi)))
        drift_abs = np.abs(self.drift_vals)
        l1_drift = float(np.trapezoid(drift_abs, xs))
        l1_gp = float(np.trapezoid(np.abs(self.d_gamma_vals), xs))
        self.bounds = Bounds(
            M_gamma=float(np.max(np.abs(self.gamma_vals))) * 1.1,
            m_ab=float(np.min(np.abs(ab))) * 0.9,
            M_ab=float(np.max(np.abs(ab))) * 1.1,
            Theta=min(theta * 1.1, theta + 0.05),
            l1_drift=l1_drift,
            l1_gamma_prime=l1_gp,
        )
        gp_scale = float(np.max(np.abs(self.d_gamma_vals), initial=0.0))
        self.is_constant = (
            float(np.max(drift_abs, initial=0.0)) < 1e-13 and gp_scale < 1e-13
        )
        self.gamma_is_constant = gp_scale < 1e-13 and (
            float(np.max(np.abs(self.gamma_vals - self.gamma_vals[0]))) < 1e-12
        )
        self.gamma0 = complex(self.gamma_vals[0]) if self.gamma_is_constant else None

    # -- continuous arguments and slowness --------------------------------

    def _theta_at(self, fvals_fn, th_grid, x):
        x = np.asarray(x, dtype=float)
        raw = np.angle(np.asarray(fvals_fn(x), dtype=complex))
        idx = np.clip(np.searchsorted(self.xs, x), 0, len(self.xs) - 1)
        ref = th_grid[idx]
        return raw + TWO_PI * np.round((ref - raw) / TWO_PI)

    def theta_alpha_at(self, x):
        return self._theta_at(self.profile.alpha, self.th_alpha, x)

    def theta_beta_at(self, x):
        return self._theta_at(self.profile.beta, self.th_beta, x)

    def mu(self, x):
        """Local slowness mu(x) = 1/sqrt(alpha*beta), continuous branch."""
        th = self.theta_alpha_at(x) + self.theta_beta_at(x)
        a = np.asarray(self.profile.alpha(x), dtype=complex)
        b = np.asarray(self.profile.beta(x), dtype=complex)
        return np.exp(-0.5j * th) / np.sqrt(np.abs(a * b))

    def mu_fast(self, x):
        """Splined mu for inner loops (error at interpolation level)."""
        return self._mu_spline(x)

    def sqrt_beta_mu(self, x):
        """Quarter-angle square root of beta*mu."""
        th_a = self.theta_alpha_at(x)
        th_b = self.theta_beta_at(x)
        a = np.asarray(self.profile.alpha(x), dtype=complex)
        b = np.asarray(self.profile.beta(x), dtype=complex)
        return np.abs(b / a) ** 0.25 * np.exp(0.25j * (th_b - th_a))

    def gamma_at(self, x):
        return self._gamma_spline(x)

    def drift(self, x):
        """beta'/beta - alpha'/alpha on the splined sample."""
        return self._drift_spline(x)

    def d_gamma(self, x):
        return self._dgamma_spline(x)

    def mfrak(self, x):
        """Antiderivative of mu from the domain anchor."""
        return self._mfrak_spline(x)

    def ufrak(self, x):
        """(beta'/beta - alpha'/alpha)/mu."""
        return self.drift(x) / self.mu(x)

    def log_deriv_beta_n(self, k, x):
        """x-derivative of log(beta*n) at spectral parameter k."""
        k2 = k * k
        return 0.5 * (self.drift(x) + self.d_gamma(x) / (k2 + self.gamma_at(x)))

    def l1_log_deriv(self, k, a=None, b=None):
        """L1 norm of the log-derivative over (a, b) on the sample grid."""
        xs = self.xs
        w = np.abs(self.log_deriv_beta_n(k, xs))
        mask = np.ones_like(xs, dtype=bool)
        if a is not None:
            mask &= xs >= a - 1e-14
        if b is not None:
            mask &= xs <= b + 1e-14
        return float(np.trapezoid(w[mask], xs[mask]))


def g_dispersion(k, gamma):
    """sqrt(1 + gamma/k^2) with argument taken in [-pi/2, 3*pi/2)."""
    w = 1.0 + gamma / (k * k)
    return np.sqrt(np.abs(w)) * np.exp(0.5j * arg_upper(w))


def sqrt_g_dispersion(k, gamma):
    w = 1.0 + gamma / (k * k)
    return np.abs(w) ** 0.25 * np.exp(0.25j * arg_upper(w))


def dispersion(k: complex, x, cache: DispersionCache):
    """Evaluate (mu, g, n, beta*n, sqrt(beta*n)) at spectral parameter k.

    Requires |k| > sqrt(M_gamma); inside that disc the square root g has its
    branch points.
    """
    if abs(k) <= math.sqrt(cache.bounds.M_gamma / 1.1):
        raise ContourRadiusError(
            f"|k|={abs(k):.3g} is not above sqrt(sup|gamma|)={math.sqrt(cache.bounds.M_gamma / 1.1):.3g}"
        )
    mu = cache.mu(x)
    gam = np.asarray(cache.profile.gamma(x), dtype=complex)
    g = g_dispersion(k, gam)
    n = mu * g
    beta = np.asarray(cache.profile.beta(x), dtype=complex)
    beta_n = beta * n
    sqrt_beta_n = cache.sqrt_beta_mu(x) * sqrt_g_dispersion(k, gam)
    return mu, g, n, beta_n, sqrt_beta_n


def dispersion_integral(k: complex, a: float, b: float, cache: DispersionCache):
    """Integral of n(k, xi) over (a, b).

    Constant gamma reduces to g(k) times the mu antiderivative; otherwise the
    splined integrand is integrated by composite Simpson with one refinement
    check.
    """
    if cache.gamma_is_constant:
        g = g_dispersion(k, cache.gamma0)
        return g * (cache.mfrak(b) - cache.mfrak(a))
    if a == b:
        return 0.0 + 0.0j

    def quad(n):
        xs = np.linspace(a, b, n)
        vals = cache.mu_fast(xs) * g_dispersion(k, cache.gamma_at(xs))
        from scipy.integrate import simpson

        return simpson(vals, x=xs)

    v1, v2 = quad(513), quad(1025)
    if abs(v1 - v2) > 1e-11 * max(1.0, abs(v2)):
        v1, v2 = v2, quad(2049)
    return v2


def validate_assumptions(profile: CoefficientProfile, cache: Optional[DispersionCache] = None,
                         check_smooth_ufrak: bool = False) -> ValidationReport:
    """Check the standing assumptions on the coefficient triple.

    Failures are hard errors for the solve path; the eigenvalue path treats
    them as warnings except where noted (the circle-interface boundary case
    also needs a continuous derivative of the drift/mu ratio).
    """
    if cache is None:
        cache = DispersionCache(profile)
    b = cache.bounds
    items = [
        ValidationItem("fully dissipative: sup|arg(alpha*beta)| < pi/2",
                       b.Theta < np.pi / 2, b.Theta, "< pi/2"),
        ValidationItem("inf|alpha*beta| > 0", b.m_ab > 0, b.m_ab, "> 0"),
        ValidationItem("sup|gamma| finite", np.isfinite(b.M_gamma), b.M_gamma, "finite"),
        ValidationItem("sup|alpha*beta| finite", np.isfinite(b.M_ab), b.M_ab, "finite"),
        ValidationItem("L1 norm of beta'/beta - alpha'/alpha finite",
                       np.isfinite(b.l1_drift), b.l1_drift, "finite"),
        ValidationItem("L1 norm of gamma' finite",
                       np.isfinite(b.l1_gamma_prime), b.l1_gamma_prime, "finite"),
    ]
    if check_smooth_ufrak:
        u = cache.ufrak(cache.xs)
        du = np.abs(np.diff(u)) / np.diff(cache.xs)
        # Continuity proxy: finite-difference slope of ufrak stays bounded.
        ok = bool(np.all(np.isfinite(du))) and (du.max() if du.size else 0.0) < 1e8
        items.append(ValidationItem("ufrak has a bounded continuous derivative",
                                    ok, float(du.max() if du.size else 0.0), "bounded"))
    return ValidationReport(tuple(items))


def contour_params(cache: DispersionCache, safety: float = 2.0) -> tuple[float, float]:
    """Radius r and ray angle theta0 for the deformed spectral contour.

    theta1 = (Theta + pi/2)/4 is the half-angle that the dispersion argument
    can reach; theta0 sits midway between theta1 and pi/4.  The radius is
    safety*sqrt(M_gamma + 1), enlarged if necessary so the argument of
    1 + gamma/k^2 stays within (pi/2 - Theta)/2 on |k| >= r.
    """
    if safety < 2.0:
        raise ValueError("safety must be >= 2")
    b = cache.bounds
    if b.Theta >= np.pi / 2:
        raise DissipativityError(f"sup|arg(alpha*beta)| = {b.Theta:.4f} >= pi/2")
    theta1 = (b.Theta + np.pi / 2) / 4.0
    theta0 = 0.5 * (theta1 + np.pi / 4)
    r = safety * math.sqrt(b.M_gamma + 1.0)
    margin = 0.5 * (np.pi / 2 - b.Theta)
    if b.M_gamma > 0 and math.asin(min(b.M_gamma / r**2, 1.0)) > margin:
        r = max(r, 1.05 * math.sqrt(b.M_gamma / math.sin(margin)))
    return r, theta0


def coefficient_truncation_window(profile: CoefficientProfile, tol: float = 1e-12,
                                  hard_cap: float = 64.0) -> float:
    """Smallest window extent whose coefficient-variation tail mass is below tol.

    Raises TruncationError when even the hard cap leaves too much tail mass.
    Only meaningful for the unbounded domain kinds.
    """
    dom = profile.domain
    if dom.kind is DomainKind.FINITE_INTERVAL:
        return dom.x_r - dom.x_l
    xa = -hard_cap if dom.kind is DomainKind.WHOLE_LINE else dom.x_l
    xb = hard_cap if dom.kind is DomainKind.WHOLE_LINE else dom.x_l + hard_cap
    xs = np.linspace(xa, xb, 16385)
    a = np.asarray(profile.alpha(xs), dtype=complex)
    bb = np.asarray(profile.beta(xs), dtype=complex)
    w = np.abs(profile.d_beta(xs) / bb - profile.d_alpha(xs) / a) + np.abs(profile.d_gamma(xs))
    cum = cumulative_simpson_complex(w, x=xs, initial=0.0)
    total = cum[-1]
    if dom.kind is DomainKind.WHOLE_LINE:
        # tail(X) = mass outside (-X, X)
        for ext in (4.0, 8.0, 16.0, 32.0, hard_cap):
            lo = np.interp(-ext, xs, cum)
            hi = np.interp(ext, xs, cum)
            if (total - hi) + lo < tol:
                return ext
    else:
        for ext in (4.0, 8.0, 16.0, 32.0, hard_cap):
            hi = np.interp(dom.x_l + ext, xs, cum)
            if total - hi < tol:
                return ext
    raise TruncationError(
        f"coefficient variation tail mass exceeds {tol:g} even at extent {hard_cap:g}")


# -- preset profiles -------------------------------------------------------

def preset_profile(name: str, domain: Domain, **params) -> CoefficientProfile:
    """Shipped coefficient presets: constant, linear, gaussian-bump, tanh-step, cgl."""
    if name == "constant":
        a0 = complex(params.get("alpha", 1.0))
        b0 = complex(params.get("beta", 1.0))
        g0 = complex(params.get("gamma", 0.0))
        return CoefficientProfile(
            alpha=lambda x: np.full_like(np.asarray(x, dtype=float), a0, dtype=complex),
            beta=lambda x: np.full_like(np.asarray(x, dtype=float), b0, dtype=complex),
            gamma=lambda x: np.full_like(np.asarray(x, dtype=float), g0, dtype=complex),
            alpha_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            beta_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            gamma_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            domain=domain,
        )
    if name == "linear":
        c = complex(params.get("slope", 0.5))
        a0 = complex(params.get("alpha", 1.0))
        return CoefficientProfile(
            alpha=lambda x: a0 + c * np.asarray(x, dtype=float),
            beta=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
            gamma=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            alpha_prime=lambda x: np.full_like(np.asarray(x, dtype=float), c, dtype=complex),
            beta_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            gamma_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            domain=domain,
        )
    if name == "gaussian-bump":
        amp = complex(params.get("amplitude", 0.5))
        width = float(params.get("width", 1.0))
        center = float(params.get("center", 0.5 * sum(domain.window)))
        base = complex(params.get("base", 1.0))

        def beta(x):
            x = np.asarray(x, dtype=float)
            return base + amp * np.exp(-((x - center) / width) ** 2)

        def beta_prime(x):
            x = np.asarray(x, dtype=float)
            return amp * np.exp(-((x - center) / width) ** 2) * (-2 * (x - center) / width**2)

        return CoefficientProfile(
            alpha=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
            beta=beta,
            gamma=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            alpha_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            beta_prime=beta_prime,
            gamma_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            domain=domain,
        )
    if name == "tanh-step":
        amp = complex(params.get("amplitude", 0.5))
        width = float(params.get("width", 1.0))
        center = float(params.get("center", 0.5 * sum(domain.window)))
        base = complex(params.get("base", 1.0))

        def alpha(x):
            x = np.asarray(x, dtype=float)
            return base + amp * np.tanh((x - center) / width)

        def alpha_prime(x):
            x = np.asarray(x, dtype=float)
            return amp / (width * np.cosh((x - center) / width) ** 2)

        return CoefficientProfile(
            alpha=alpha,
            beta=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
            gamma=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            alpha_prime=alpha_prime,
            beta_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            gamma_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            domain=domain,
        )
    if name == "cgl":
        # 1 + i*x*sin(2*pi*x) diffusion with unit linear gain
        def alpha(x):
            x = np.asarray(x, dtype=float)
            return 1.0 + 1j * x * np.sin(TWO_PI * x)

        def alpha_prime(x):
            x = np.asarray(x, dtype=float)
            return 1j * (np.sin(TWO_PI * x) + TWO_PI * x * np.cos(TWO_PI * x))

        return CoefficientProfile(
            alpha=alpha,
            beta=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
            gamma=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
            alpha_prime=alpha_prime,
            beta_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            gamma_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
            domain=domain,
        )
    raise ValueError(f"unknown preset {name!r}")
