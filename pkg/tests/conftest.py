import warnings

import pytest
from hypothesis import HealthCheck, settings

from spdcwg.modes import WaveguideSpec
from spdcwg.phasematch import calibrated

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec():
    """Default waveguide with the poling period calibrated at degeneracy."""
    return calibrated(WaveguideSpec())


@pytest.fixture(scope="session")
def jsa(spec):
    from spdcwg.spectra import build_jsa
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        return build_jsa(spec, None, 400.63)
