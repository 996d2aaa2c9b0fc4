import numpy as np
import pytest

from utmvc.accum import (
    accum_cs_backward,
    accum_cs_forward,
    accum_e_tail,
    accum_e_tilde_tail,
    cs_endpoint_batch,
    mode_from_k,
    mode_from_kay,
    script_cs,
    simplex_oracle,
)
from utmvc.errors import CoverageError


def test_order_zero_is_trig(cgl_cache):
    k = 3.0 + 2.0j
    grid = np.linspace(0, 1, 9)
    fwd = accum_cs_forward(k, 0.0, grid, 2, cgl_cache)
    phases = fwd.phase
    assert np.max(np.abs(fwd.c(0) - np.cos(k * phases))) < 1e-10
    assert np.max(np.abs(fwd.s(0) - np.sin(k * phases))) < 1e-10


def test_anchor_initial_conditions(cgl_cache):
    k = 4.0 + 1.0j
    grid = np.linspace(0, 1, 5)
    fwd = accum_cs_forward(k, 0.0, grid, 3, cgl_cache)
    assert fwd.c(0)[0] == pytest.approx(1.0)
    for n in range(1, 4):
        assert abs(fwd.c(n)[0]) < 1e-14
        assert abs(fwd.s(n)[0]) < 1e-14
    bwd = accum_cs_backward(k, 1.0, grid, 3, cgl_cache)
    assert bwd.c(0)[-1] == pytest.approx(1.0)
    assert abs(bwd.s(0)[-1]) < 1e-14


def test_constant_coefficients_higher_orders_vanish(heat_cache):
    k = 5.0 + 3.0j
    grid = np.linspace(0, 1, 5)
    fwd = accum_cs_forward(k, 0.0, grid, 3, heat_cache)
    for n in range(1, 4):
        assert np.max(np.abs(fwd.c(n))) == 0.0
        assert np.max(np.abs(fwd.s(n))) == 0.0
    assert np.max(np.abs(fwd.c(0) - np.cos(k * grid))) < 1e-12


def test_backward_constant(heat_cache):
    k = 2.5 + 2.5j
    grid = np.linspace(0, 1, 5)
    bwd = accum_cs_backward(k, 1.0, grid, 2, heat_cache)
    assert np.max(np.abs(bwd.c(0) - np.cos(k * (1 - grid)))) < 1e-12


def test_tail_constant_is_unit(hl_cache):
    k = 3.0 + 3.0j
    grid = np.linspace(0, 12, 7)
    tail = accum_e_tail(k, grid, 3, hl_cache)
    assert np.max(np.abs(tail.e(0) - 1.0)) < 1e-12
    for n in range(1, 4):
        assert np.max(np.abs(tail.e(n))) == 0.0


@pytest.mark.parametrize("n,family", [(1, "C"), (2, "C"), (1, "S"), (2, "S"), (3, "S")])
def test_ode_path_matches_simplex_oracle(cgl_cache, n, family):
    k = 5.0 + 5.0j
    grid = np.array([0.0, 1.0])
    fwd = accum_cs_forward(k, 0.0, grid, 3, cgl_cache)
    got = fwd.c(n)[-1] if family == "C" else fwd.s(n)[-1]
    want = simplex_oracle(k, 0.0, 1.0, n, family, cgl_cache)
    assert abs(got - want) < 1e-6 * max(abs(want), 1e-10)


def test_e_families_match_oracle(wl_bump_cache):
    k = 4.0 + 3.0j
    grid = np.linspace(-2, 2, 9)
    tail = accum_e_tail(k, grid, 2, wl_bump_cache, anchor=2.0)
    tilde = accum_e_tilde_tail(k, grid, 2, wl_bump_cache, anchor=-2.0)
    for n in (1, 2):
        want = simplex_oracle(k, 0.0, 2.0, n, "E", wl_bump_cache)
        assert abs(tail.e(n)[4] - want) < 1e-6 * max(abs(want), 1e-10)
        want = simplex_oracle(k, -2.0, 0.0, n, "Etilde", wl_bump_cache)
        assert abs(tilde.e(n)[4] - want) < 1e-6 * max(abs(want), 1e-10)


def test_script_identity_order_zero(cgl_cache):
    """Scripted order-zero values follow the closed exponential forms."""
    k = 6.0 + 2.0j
    grid = np.array([0.0, 1.0])
    fwd = accum_cs_forward(k, 0.0, grid, 0, cgl_cache)
    scripted = script_cs(fwd)
    xi = np.exp(1j * k * fwd.phase[-1])
    assert scripted.values[0, 0, -1] == pytest.approx(0.5 * (xi**2 + 1), rel=1e-10)
    assert scripted.values[1, 0, -1] == pytest.approx((xi**2 - 1) / 2j, rel=1e-10)


def test_script_constant_at_pi(heat_cache):
    grid = np.array([0.0, 1.0])
    fwd = accum_cs_forward(np.pi, 0.0, grid, 0, heat_cache)
    scripted = script_cs(fwd)
    assert scripted.values[0, 0, -1] == pytest.approx(np.exp(1j * np.pi) * np.cos(np.pi))


def test_derivative_identities_fd(bump_cache):
    """Finite differences of the tabulation match the coupled rates."""
    k = 4.0 + 2.0j
    grid = np.linspace(0, 1, 2001)
    h = grid[1] - grid[0]
    mode = mode_from_k(k, bump_cache)
    fwd = accum_cs_forward(k, 0.0, grid, 3, bump_cache, mode=mode)
    lam = mode.scale * np.asarray(mode.rate(grid[2:-2]), dtype=complex)
    half_l = 0.5 * np.asarray(mode.logderiv(grid[2:-2]), dtype=complex)
    for n in range(4):
        c, s = fwd.c(n), fwd.s(n)
        dc = (-c[4:] + 8 * c[3:-1] - 8 * c[1:-3] + c[:-4]) / (12 * h)
        prev = fwd.c(n - 1)[2:-2] if n else 0.0
        ref = half_l * prev - (-1.0) ** n * lam * s[2:-2]
        assert np.max(np.abs(dc - ref)) / max(1.0, np.max(np.abs(lam))) < 1e-6


def test_composition_identity_per_order(bump_cache, rng):
    """Interval splitting at a random interior point, order by order."""
    for _ in range(3):
        k = 3.0 + 4.0 * rng.random() + 1j * (2.0 + 2.0 * rng.random())
        x = rng.uniform(0.2, 0.8)
        grid = np.array([0.0, x, 1.0])
        fwd = script_cs(accum_cs_forward(k, 0.0, grid, 6, bump_cache))
        bwd = script_cs(accum_cs_backward(k, 1.0, grid, 6, bump_cache))
        for n in range(7):
            lhs_c = fwd.values[0, n, 2]
            rhs_c = sum(fwd.values[0, n - l, 1] * bwd.values[0, l, 1]
                        - (-1.0) ** (n - l) * fwd.values[1, n - l, 1] * bwd.values[1, l, 1]
                        for l in range(n + 1))
            lhs_s = fwd.values[1, n, 2]
            rhs_s = sum(fwd.values[1, n - l, 1] * bwd.values[0, l, 1]
                        + (-1.0) ** (n - l) * fwd.values[0, n - l, 1] * bwd.values[1, l, 1]
                        for l in range(n + 1))
            ref = max(abs(lhs_c), abs(lhs_s), 1e-9)
            assert abs(lhs_c - rhs_c) / ref < 1e-8
            assert abs(lhs_s - rhs_s) / ref < 1e-8


def test_decay_along_ray(cgl_cache):
    """Higher-order values decrease monotonically along a sector ray."""
    grid = np.array([0.0, 1.0])
    vals = []
    for mag in (10.0, 20.0, 40.0):
        k = mag * np.exp(1j * 3 * np.pi / 16)
        fwd = script_cs(accum_cs_forward(k, 0.0, grid, 2, cgl_cache))
        vals.append(abs(fwd.values[0, 1, -1]))
    assert vals[0] > vals[1] > vals[2]


def test_coverage_error(cgl_cache):
    fwd = accum_cs_forward(2.0 + 2.0j, 0.0, np.array([0.0, 0.5, 1.0]), 1, cgl_cache)
    with pytest.raises(CoverageError):
        fwd.index_of(0.31)


def test_batch_matches_scalar_path(cgl_cache):
    kays = np.array([3.0 + 0.2j, 6.0 - 0.5j, 9.0 + 1.0j])
    c_b, s_b = cs_endpoint_batch(kays, cgl_cache, 2, reduced=True)
    for i, kay in enumerate(kays):
        mode = mode_from_kay(kay, cgl_cache)
        fwd = accum_cs_forward(None, 0.0, np.array([0.0, 1.0]), 2, cgl_cache, mode=mode)
        assert np.max(np.abs(c_b[i] - fwd.values[0, :, 1])) < 1e-8
        assert np.max(np.abs(s_b[i] - fwd.values[1, :, 1])) < 1e-8


def test_reduced_mode_requires_constant_gamma(bump_cache, cgl_cache):
    mode = mode_from_kay(2.0, cgl_cache)  # gamma constant: fine
    assert mode.kay == 2.0
    vary = bump_cache  # gamma identically zero is constant too; build a varying one
    from utmvc.coefficients import Domain, DomainKind, DispersionCache, CoefficientProfile

    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)

    def gam(x):
        return 0.3 * np.asarray(x, dtype=float).astype(complex)

    prof = CoefficientProfile(
        alpha=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
        beta=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex),
        gamma=gam, domain=dom)
    cache = DispersionCache(prof)
    with pytest.raises(ValueError):
        mode_from_kay(2.0, cache)
