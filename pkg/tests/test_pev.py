import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtr

from gridsim.errors import DomainError, ResolutionError
from gridsim.feeder import build_builtin_feeder
from gridsim.pev import (
    ChargingEvent,
    ChargingSpec,
    SocDriven,
    build_load_profile,
    charging_interval,
    fleet_size_for_pl,
    penetration_level,
    residential_shape,
    sample_events,
    write_events_csv,
)


@pytest.fixture(scope="module")
def model():
    return build_builtin_feeder()


def spec(model, n, **kw):
    return ChargingSpec.for_feeder(model, n_pev=n, **kw)


def wrapped_normal_cdf(x, mu=20.5, sigma=4.5, period=24.0, terms=6):
    """CDF on [0, period) of N(mu, sigma^2) folded modulo the period."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k in range(-terms, terms + 1):
        lo = k * period
        total += ndtr((x + lo - mu) / sigma) - ndtr((lo - mu) / sigma)
    return total


@pytest.mark.parametrize("soc, expected", [(0.0, 2.3), (1.0, 0.0), (0.5, 1.15)])
def test_charging_interval(soc, expected):
    assert charging_interval(23, soc, 10) == pytest.approx(expected)


@pytest.mark.parametrize("soc", [-0.1, 1.01])
def test_charging_interval_domain(soc):
    with pytest.raises(DomainError):
        charging_interval(23, soc, 10)


def test_no_vehicles_no_events(model):
    assert sample_events(spec(model, 0), np.random.default_rng(0)) == []


def test_negative_intervals_are_zeroed(model):
    events = sample_events(spec(model, 900), np.random.default_rng(1))
    assert len(events) == 900
    assert all(e.dt >= 0 for e in events)
    assert all(0 <= e.t_s < 24 for e in events)
    assert len({e.vehicle_id for e in events}) == 900


def test_sample_means(model):
    events = sample_events(spec(model, 10_000), np.random.default_rng(2))
    t_s = np.array([e.t_s for e in events])
    dt = np.array([e.dt for e in events])
    # Times live on a 24 h circle, so the centre is read as a circular mean.
    angle = np.angle(np.exp(2j * np.pi * t_s / 24.0).mean())
    assert (angle * 24.0 / (2 * np.pi)) % 24.0 == pytest.approx(20.5, abs=0.15)
    # The plain average of the wrapped values follows the folded density instead.
    assert t_s.mean() == pytest.approx(wrapped_mean(), abs=0.15)
    # E[max(X, 0)] for X ~ N(1.2, 0.6^2) is mu*Phi(2) + sigma*phi(2) = 1.2050944.
    assert 1.2 * 0.98 <= dt.mean() <= 1.3
    assert dt.mean() == pytest.approx(1.2050944, abs=0.02)


def wrapped_mean(mu=20.5, sigma=4.5):
    x = np.linspace(0, 24, 240001)
    cdf = wrapped_normal_cdf(x, mu, sigma)
    return float(np.trapezoid(1 - cdf, x))


def test_start_time_ks_against_wrapped_normal(model):
    events = sample_events(spec(model, 100_000), np.random.default_rng(3))
    t = np.sort([e.t_s for e in events])
    cdf = wrapped_normal_cdf(t)
    n = len(t)
    d = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
    assert d < 0.01


def test_reproducible_and_prefix_consistent(model):
    a = sample_events(spec(model, 300), np.random.default_rng(5), np.random.default_rng(6))
    b = sample_events(spec(model, 300), np.random.default_rng(5), np.random.default_rng(6))
    small = sample_events(spec(model, 150), np.random.default_rng(5), np.random.default_rng(6))
    assert a == b
    assert a[:150] == small


def test_allocation_follows_weights(model):
    events = sample_events(spec(model, 50_000), np.random.default_rng(8))
    counts = {}
    for e in events:
        counts[e.node] = counts.get(e.node, 0) + 1
    for node, w in model.load_weights.items():
        assert counts.get(node, 0) / 50_000 == pytest.approx(w, abs=0.01)


def test_soc_mode_intervals_bounded(model):
    s = spec(model, 2000, interval=SocDriven(0.4, 0.3))
    events = sample_events(s, np.random.default_rng(9))
    dt = np.array([e.dt for e in events])
    assert dt.min() >= 0 and dt.max() <= 23 / 10 + 1e-12


def test_spec_validation(model):
    assert spec(model, 10).validate() == []
    bad = ChargingSpec(battery_kwh=0, power_kw=-1, n_pev=-1, allocation=(("634", 0.5),))
    problems = bad.validate()
    assert len(problems) >= 3


def test_profile_without_events(model):
    shape = residential_shape(0.1)
    prof = build_load_profile(shape, model, [], 0.1)
    assert not prof.pev.any()
    assert prof.steps == 240
    assert shape.max() == 1.0
    total_peak = prof.baseline.sum(axis=0).max()
    assert total_peak == pytest.approx(3000.0)


def test_profile_single_event_steps(model):
    ev = ChargingEvent(0, "675", 20.0, 2.3)
    prof = build_load_profile(residential_shape(0.1), model, [ev], 0.1, pev_kw=10.0)
    series = prof.pev[model.index["675"]]
    on = np.flatnonzero(series)
    assert on[0] == 200 and len(on) == 23
    assert np.all(series[on] == 10.0)
    assert np.array_equal(prof.total, prof.baseline + prof.pev)


def test_profile_midnight_wrap_two_days(model):
    ev = ChargingEvent(0, "634", 23.5, 1.0)
    prof = build_load_profile(residential_shape(0.1), model, [ev], 0.1, horizon_days=2)
    on = np.flatnonzero(prof.pev[model.index["634"]])
    assert list(on) == [235, 236, 237, 238, 239, 240, 241, 242, 243, 244]


def test_profile_wraps_single_day(model):
    ev = ChargingEvent(0, "634", 23.5, 1.0)
    prof = build_load_profile(residential_shape(0.1), model, [ev], 0.1)
    on = np.flatnonzero(prof.pev[model.index["634"]])
    assert list(on) == [0, 1, 2, 3, 4, 235, 236, 237, 238, 239]


def test_resolution_must_divide_day(model):
    with pytest.raises(ResolutionError):
        residential_shape(0.7)
    with pytest.raises(ResolutionError):
        build_load_profile(np.ones(10), model, [], 0.7)


@pytest.mark.parametrize("n, expected", [(900, 300.0), (0, 0.0), (150, 50.0)])
def test_penetration_level(model, n, expected):
    assert penetration_level(spec(model, n), 3000.0) == pytest.approx(expected)


@pytest.mark.parametrize("pl, expected", [(300, 900), (0, 0), (50, 150)])
def test_fleet_size_for_pl(pl, expected):
    assert fleet_size_for_pl(pl, 3000, 10) == expected


@given(st.floats(0, 500))
def test_pl_round_trip_within_one_vehicle(pl):
    n = fleet_size_for_pl(pl, 3000.0, 10.0)
    got = penetration_level(ChargingSpec(n_pev=n), 3000.0)
    assert abs(got - pl) <= 100 * 10.0 / 3000.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 400), st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.25, 1.0]))
def test_pev_power_bounded_by_fleet(n, seed, dt):
    model = build_builtin_feeder()
    s = spec(model, n)
    events = sample_events(s, np.random.default_rng(seed))
    prof = build_load_profile(residential_shape(dt), model, events, dt, pev_kw=s.power_kw)
    assert prof.pev.sum(axis=0).max(initial=0) <= n * s.power_kw + 1e-9
    assert (prof.total >= 0).all()


def test_events_csv(tmp_path, model):
    events = sample_events(spec(model, 5), np.random.default_rng(0))
    path = tmp_path / "events.csv"
    write_events_csv(events, path)
    rows = list(csv.DictReader(open(path)))
    assert [r["vehicle_id"] for r in rows] == ["0", "1", "2", "3", "4"]
    assert float(rows[0]["t_s"]) == pytest.approx(events[0].t_s, rel=1e-11)
