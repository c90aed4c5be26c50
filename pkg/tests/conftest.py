import pytest
from hypothesis import HealthCheck, settings

from relaycap import ChannelVariances

settings.register_profile(
    "relaycap",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("relaycap")


@pytest.fixture
def unit_variances() -> ChannelVariances:
    return ChannelVariances.single(1.0, 1.0, 1.0)


@pytest.fixture
def skew_variances() -> ChannelVariances:
    # d_sr = 1/3, alpha = 2 collinear placement
    return ChannelVariances.single(1.0, 9.0, 2.25)
