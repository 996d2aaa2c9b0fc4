import numpy as np
import pytest

from utmvc.coefficients import DispersionCache, Domain, DomainKind, preset_profile


@pytest.fixture(scope="session")
def heat_cache():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    return DispersionCache(preset_profile("constant", dom))


@pytest.fixture(scope="session")
def cgl_cache():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    return DispersionCache(preset_profile("cgl", dom))


@pytest.fixture(scope="session")
def bump_cache():
    dom = Domain(DomainKind.FINITE_INTERVAL, 0.0, 1.0)
    return DispersionCache(preset_profile("gaussian-bump", dom,
                                          amplitude=0.5, width=0.4, center=0.5))


@pytest.fixture(scope="session")
def wl_bump_cache():
    dom = Domain(DomainKind.WHOLE_LINE, truncation_extent=10.0)
    return DispersionCache(preset_profile("gaussian-bump", dom,
                                          amplitude=0.4, width=1.0, center=0.0))


@pytest.fixture(scope="session")
def hl_cache():
    dom = Domain(DomainKind.HALF_LINE, x_l=0.0, truncation_extent=12.0)
    return DispersionCache(preset_profile("constant", dom))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
