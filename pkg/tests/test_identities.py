import numpy as np
import pytest

from utmvc.delta import BoundaryConditions
from utmvc.identities import (
    check_asymptotic_sandwich,
    check_bc_identity,
    check_derivative_identities,
    check_factorial_bound,
    run_identity_suite,
)

PERIODIC = [[1, 0, -1, 0], [0, 1, 0, -1]]


def test_suite_cgl_periodic(cgl_cache):
    results = run_identity_suite(cgl_cache, BoundaryConditions.finite_interval(PERIODIC),
                                 seed=5)
    for r in results:
        assert r.passed, str(r)


def test_suite_whole_line(wl_bump_cache):
    results = run_identity_suite(wl_bump_cache, BoundaryConditions.whole_line(), seed=6)
    for r in results:
        assert r.passed, str(r)


def test_suite_half_line():
    from utmvc.coefficients import DispersionCache, Domain, DomainKind, preset_profile

    dom = Domain(DomainKind.HALF_LINE, x_l=0.0, truncation_extent=10.0)
    cache = DispersionCache(preset_profile("tanh-step", dom, center=2.0, amplitude=0.3))
    results = run_identity_suite(cache, BoundaryConditions.half_line(1, 0.5), seed=7)
    for r in results:
        assert r.passed, str(r)


def test_bc_identity_strict(bump_cache, rng):
    r = check_bc_identity(bump_cache, rng, N=6)
    assert r.passed and r.measure < 1e-6


def test_factorial_bound_strict(bump_cache, rng):
    r = check_factorial_bound(bump_cache, rng, N=6)
    assert r.passed and r.measure <= 1.0 + 1e-9


@pytest.mark.parametrize("rows", [
    [[0, 1, 0, 0], [0, 0, 0, 1]],       # derivative-type rows: case 1
    [[1, 0, -1, 0], [0, 1, 0, -1]],     # coupling rows: case 2
    [[1, 0, 0, 0], [0, 0, 1, 0]],       # clamped rows: case 3 regular
    [[1, 0, -1, 0], [1, 1, 0, 1]],      # circle-interface rows: case 4
])
def test_sandwich_per_case(bump_cache, rows):
    r = check_asymptotic_sandwich(bump_cache, BoundaryConditions.finite_interval(rows))
    assert r.passed and r.measure < 0.5
