import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utmvc.coefficients import (
    DispersionCache,
    Domain,
    DomainKind,
    contour_params,
    dispersion,
    dispersion_integral,
    preset_profile,
    validate_assumptions,
)
from utmvc.errors import ContourRadiusError, DissipativityError


def test_constant_profile_validates(heat_cache):
    report = validate_assumptions(heat_cache.profile, heat_cache)
    assert report.passed
    assert heat_cache.bounds.Theta == 0.0
    assert heat_cache.bounds.m_ab == pytest.approx(0.9)  # 10% margin on inf=1


def test_cgl_profile_validates(cgl_cache):
    report = validate_assumptions(cgl_cache.profile, cgl_cache)
    assert report.passed
    # sup |arg(1 + i x sin 2 pi x)| with the safety margin stays under pi/2
    assert 0 < cgl_cache.bounds.Theta < np.pi / 2


def test_rotated_profile_fails_dissipativity():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    rot = np.exp(1j * np.pi / 2)

    def alpha(x):
        return rot * np.ones_like(np.asarray(x, dtype=float), dtype=complex)

    prof = preset_profile("constant", dom)
    prof = prof.__class__(alpha=alpha, beta=prof.beta, gamma=prof.gamma, domain=dom)
    cache = DispersionCache(prof)
    report = validate_assumptions(prof, cache)
    assert not report.passed
    with pytest.raises(DissipativityError):
        contour_params(cache)


def test_dispersion_constant(heat_cache):
    mu, g, n, bn, sbn = dispersion(2.0 + 1.0j, 0.5, heat_cache)
    assert mu == pytest.approx(1.0)
    assert g == pytest.approx(1.0)
    assert n == pytest.approx(1.0)
    assert bn == pytest.approx(1.0)
    assert sbn == pytest.approx(1.0)


def test_dispersion_gamma_shift():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    cache = DispersionCache(preset_profile("constant", dom, gamma=1.0))
    _, g, _, _, _ = dispersion(2.0, 0.3, cache)
    assert g == pytest.approx(np.sqrt(1.25))


def test_dispersion_radius_guard():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    cache = DispersionCache(preset_profile("constant", dom, gamma=1.0))
    with pytest.raises(ContourRadiusError):
        dispersion(0.5, 0.3, cache)


def test_cgl_mu_at_origin(cgl_cache):
    assert complex(cgl_cache.mu(0.0)) == pytest.approx(1.0)


def test_ufrak_exponential_profile():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)

    def alpha(x):
        return np.exp(np.asarray(x, dtype=float)).astype(complex)

    def alpha_prime(x):
        return np.exp(np.asarray(x, dtype=float)).astype(complex)

    prof = preset_profile("constant", dom)
    prof = prof.__class__(alpha=alpha, beta=prof.beta, gamma=prof.gamma,
                          alpha_prime=alpha_prime, beta_prime=prof.beta_prime,
                          gamma_prime=prof.gamma_prime, domain=dom)
    cache = DispersionCache(prof)
    # u = (beta'/beta - alpha'/alpha)/mu with mu = e^{-x/2}: u(x) = -e^{x/2}
    for x in (0.2, 0.5, 0.8):
        assert complex(cache.ufrak(x)) == pytest.approx(-np.exp(x / 2), rel=1e-9)


def test_mfrak_constant_slope(heat_cache):
    assert complex(heat_cache.mfrak(0.75)) == pytest.approx(0.75, abs=1e-12)


def test_mfrak_additivity(cgl_cache, rng):
    """Antiderivative differences match fresh quadrature over subintervals."""
    from scipy.integrate import simpson

    for _ in range(10):
        a, b = np.sort(rng.uniform(0, 1, size=2))
        if b - a < 1e-3:
            continue
        xs = np.linspace(a, b, 4097)
        direct = simpson(cgl_cache.mu(xs), x=xs)
        cached = cgl_cache.mfrak(b) - cgl_cache.mfrak(a)
        assert abs(direct - cached) < 1e-10


@settings(max_examples=20, deadline=None)
@given(re=st.floats(2.1, 30.0), th=st.floats(0.1, 3.0), x=st.floats(0.01, 0.99))
def test_sqrt_branch_consistency(re, th, x):
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    cache = DispersionCache(preset_profile("cgl", dom))
    k = re * np.exp(1j * th * 0.5)
    _, _, _, bn, sbn = dispersion(k, x, cache)
    assert abs(sbn**2 - bn) < 1e-12 * max(abs(bn), 1.0)


def test_phase_continuity_refinement(cgl_cache):
    fine = DispersionCache(cgl_cache.profile, n_grid=2 * (len(cgl_cache.xs) - 1) + 1)
    xs = cgl_cache.xs[::8]
    assert np.max(np.abs(cgl_cache.theta_alpha_at(xs) - fine.theta_alpha_at(xs))) < 1e-10


def test_contour_params_formulas(heat_cache):
    r, theta0 = contour_params(heat_cache, safety=2.0)
    assert theta0 == pytest.approx(3 * np.pi / 16)
    assert r == pytest.approx(2.0)


def test_contour_params_nonzero_theta():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    prof = preset_profile("constant", dom, alpha=np.exp(1j * np.pi / 4))
    cache = DispersionCache(prof)
    # Theta = pi/4 plus the 10% estimation margin
    theta = cache.bounds.Theta
    _, theta0 = contour_params(cache)
    theta1 = (theta + np.pi / 2) / 4
    assert theta0 == pytest.approx(0.5 * (theta1 + np.pi / 4))


def test_nu_bounds_lemma(cgl_cache, rng):
    """Modulus of the local wavenumber stays inside the derived envelope."""
    r, theta0 = contour_params(cgl_cache)
    b = cgl_cache.bounds
    for _ in range(40):
        s = r * (1.0 + 4.0 * rng.random())
        th = theta0 + (np.pi - 2 * theta0) * rng.random()
        k = s * np.exp(1j * th)
        x = rng.uniform(0, 1)
        _, _, n, _, _ = dispersion(k, x, cgl_cache)
        assert b.m_n(r) <= abs(complex(n)) <= b.M_n(r)


def test_re_ikn_negative_on_sector(cgl_cache, rng):
    """Re(i k n) <= -m |k| on the exterior sector rays and interior."""
    r, theta0 = contour_params(cgl_cache)
    theta1 = (cgl_cache.bounds.Theta + np.pi / 2) / 4
    m_in = cgl_cache.bounds.m_n(r) * (theta0 - theta1) / 4
    for _ in range(60):
        s = r * (1.0 + 9.0 * rng.random())
        th = theta0 + (np.pi - 2 * theta0) * rng.random()
        k = s * np.exp(1j * th)
        x = rng.uniform(0, 1)
        _, _, n, _, _ = dispersion(k, x, cgl_cache)
        assert (1j * k * complex(n)).real <= -m_in * abs(k) + 1e-12


def test_dispersion_integral_matches_quadrature(bump_cache):
    from scipy.integrate import simpson

    k = 3.0 + 2.0j
    xs = np.linspace(0.2, 0.9, 8193)
    mu = bump_cache.mu(xs)
    from utmvc.coefficients import g_dispersion

    vals = mu * g_dispersion(k, np.asarray(bump_cache.profile.gamma(xs), dtype=complex))
    assert abs(dispersion_integral(k, 0.2, 0.9, bump_cache) - simpson(vals, x=xs)) < 1e-10


def test_numerical_derivative_fallback():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)

    def alpha(x):
        return (1.0 + 0.3 * np.sin(2 * np.pi * np.asarray(x, dtype=float))).astype(complex)

    prof = preset_profile("constant", dom)
    prof = prof.__class__(alpha=alpha, beta=prof.beta, gamma=prof.gamma, domain=dom)
    x = np.array([0.3, 0.6])
    exact = 0.3 * 2 * np.pi * np.cos(2 * np.pi * x)
    assert np.max(np.abs(prof.d_alpha(x) - exact)) < 1e-9
