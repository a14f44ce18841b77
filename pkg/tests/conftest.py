import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pvdtw import DayModel, FaultProfile, generate_fleet

settings.register_profile(
    "pvdtw", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pvdtw")

# A short day keeps DTW on full fleets cheap in unit tests.
MINI_DAY = DayModel(sunrise_min=60.0, sunset_min=300.0, peak_current=8.0,
                    noise_sigma=0.16, samples=360)


def mini_fleet(n_healthy=8, n_broken=4, scale=0.75, seed=0, noise=0.16, day=None):
    """Scaled-down version of the 12-panel reference scenario."""
    day = day or DayModel(
        sunrise_min=MINI_DAY.sunrise_min,
        sunset_min=MINI_DAY.sunset_min,
        peak_current=MINI_DAY.peak_current,
        noise_sigma=noise,
        samples=MINI_DAY.samples,
    )
    profiles = [FaultProfile.healthy()] * n_healthy + [
        FaultProfile.broken_glass(scale)
    ] * n_broken
    return generate_fleet(n_healthy + n_broken, profiles, day, seed)


@pytest.fixture
def small_fleet():
    fleet, labels = mini_fleet(n_healthy=5, n_broken=3, seed=11)
    return fleet, labels


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
