from __future__ import annotations

import math

import pytest

from p2p_topk.simkernel.churn import ChurnDistribution, ChurnModel
from p2p_topk.simkernel.events import SimulationConfigError


def test_no_churn_keeps_everyone():
    times = ChurnModel().departure_times(10, 0)
    assert all(math.isinf(t) for t in times)
    assert not ChurnModel().enabled


def test_exponential_lifetimes():
    model = ChurnModel(ChurnDistribution.EXPONENTIAL, mean_lifetime_seconds=2.0, seed=5)
    times = model.departure_times(20_000, 3)
    assert math.isinf(times[3])
    finite = times[[i for i in range(len(times)) if i != 3]]
    assert finite.mean() == pytest.approx(2000.0, rel=0.05)


def test_fixed_lifetimes_leave_uniform_residuals():
    model = ChurnModel(ChurnDistribution.FIXED, mean_lifetime_seconds=1.0, seed=5)
    times = model.departure_times(5000, 0)[1:]
    assert times.min() >= 0.0
    assert times.max() <= 1000.0
    assert times.mean() == pytest.approx(500.0, rel=0.05)


def test_departures_are_reproducible():
    model = ChurnModel(ChurnDistribution.EXPONENTIAL, seed=11)
    assert model.departure_times(50, 0).tolist() == model.departure_times(50, 0).tolist()


def test_invalid_lifetime_rejected():
    with pytest.raises(SimulationConfigError, match="meanLifetimeSeconds"):
        ChurnModel(ChurnDistribution.FIXED, mean_lifetime_seconds=0.0).validate()
    ChurnModel(ChurnDistribution.NONE, mean_lifetime_seconds=0.0).validate()


def test_parse_distribution():
    assert ChurnDistribution.parse("fixed") is ChurnDistribution.FIXED
    with pytest.raises(SimulationConfigError, match="unknown churn distribution"):
        ChurnDistribution.parse("weibull")
