"""Stochastic PEV charging events and per-node load profiles."""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ResolutionError
from .feeder import FeederModel

HOURS_PER_DAY = 24.0


@dataclass(frozen=True)
class GaussianInterval:
    mean: float = 1.2
    std: float = 0.6


@dataclass(frozen=True)
class SocDriven:
    """Initial SoC drawn from N(mean, std) and clipped to [0, 1]."""

    mean: float = 0.5
    std: float = 0.2


@dataclass(frozen=True)
class ChargingSpec:
    battery_kwh: float = 23.0
    power_kw: float = 10.0
    start_mean: float = 20.5
    start_std: float = 4.5
    interval: GaussianInterval | SocDriven = field(default_factory=GaussianInterval)
    n_pev: int = 0
    allocation: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "allocation", tuple((str(n), float(w)) for n, w in self.allocation))

    def validate(self) -> list[str]:
        problems = []
        if not self.battery_kwh > 0:
            problems.append("battery capacity must be > 0")
        if not self.power_kw > 0:
            problems.append("charging power must be > 0")
        if self.start_std < 0 or self.interval.std < 0:
            problems.append("standard deviations must be >= 0")
        if isinstance(self.interval, SocDriven) and not 0 <= self.interval.mean <= 1:
            problems.append("SoC mean must lie in [0, 1]")
        if self.n_pev < 0:
            problems.append("fleet size must be >= 0")
        weights = [w for _, w in self.allocation]
        if any(w < 0 for w in weights):
            problems.append("allocation weights must be nonnegative")
        if self.allocation and abs(sum(weights) - 1.0) > 1e-9:
            problems.append(f"allocation weights sum to {sum(weights)!r}, expected 1")
        if self.n_pev > 0 and not self.allocation:
            problems.append("allocation weights required when n_pev > 0")
        return problems

    @classmethod
    def for_feeder(cls, model: FeederModel, **kwargs) -> "ChargingSpec":
        """Spec whose vehicles are placed in proportion to base-load weights."""
        kwargs.setdefault("allocation", tuple(model.load_weights.items()))
        return cls(**kwargs)


@dataclass(frozen=True)
class ChargingEvent:
    vehicle_id: int
    node: str
    t_s: float
    dt: float
    day: int = 0


@dataclass(frozen=True)
class LoadProfile:
    """Per-node real power in kW, arrays shaped (n_nodes, n_steps)."""

    dt: float
    nodes: tuple[str, ...]
    baseline: np.ndarray
    pev: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.baseline + self.pev

    @property
    def steps(self) -> int:
        return self.baseline.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps) * self.dt

    def node_series(self, node: str) -> np.ndarray:
        return self.total[self.nodes.index(node)]


def charging_interval(capacity_kwh: float, soc: float, power_kw: float) -> float:
    """Hours to charge from ``soc`` to full at constant power."""
    if not 0.0 <= soc <= 1.0:
        raise DomainError(f"state of charge {soc!r} outside [0, 1]")
    if capacity_kwh <= 0 or power_kw <= 0:
        raise DomainError("capacity and power must be positive")
    return capacity_kwh * (1.0 - soc) / power_kw


def sample_events(
    spec: ChargingSpec,
    rng: np.random.Generator,
    placement_rng: np.random.Generator | None = None,
    day: int = 0,
) -> list[ChargingEvent]:
    """Draw one charging event per vehicle.

    Vehicle ``i`` consumes the ``i``-th pair of standard normals from ``rng``
    (start time, interval) and the ``i``-th uniform from ``placement_rng``, so a
    smaller fleet drawn from the same streams is a prefix of a larger one.
    """
    n = spec.n_pev
    if n == 0:
        return []
    z = rng.standard_normal((n, 2))
    t_s = np.mod(spec.start_mean + spec.start_std * z[:, 0], HOURS_PER_DAY)
    mode = spec.interval
    if isinstance(mode, SocDriven):
        soc = np.clip(mode.mean + mode.std * z[:, 1], 0.0, 1.0)
        dt = spec.battery_kwh * (1.0 - soc) / spec.power_kw
    else:
        dt = np.maximum(mode.mean + mode.std * z[:, 1], 0.0)
    nodes = [node for node, _ in spec.allocation]
    cdf = np.cumsum([w for _, w in spec.allocation])
    cdf /= cdf[-1]
    u = (placement_rng if placement_rng is not None else rng).random(n)
    picks = np.minimum(np.searchsorted(cdf, u, side="right"), len(nodes) - 1)
    return [
        ChargingEvent(i, nodes[picks[i]], float(t_s[i]), float(dt[i]), day)
        for i in range(n)
    ]


def steps_per_day(dt: float) -> int:
    if not dt > 0:
        raise ResolutionError(f"resolution must be positive, got {dt!r}")
    steps = HOURS_PER_DAY / dt
    n = round(steps)
    if n < 1 or abs(steps - n) > 1e-9 * max(1.0, steps):
        raise ResolutionError(f"resolution {dt!r} h does not divide 24 h")
    return n


def residential_shape(dt: float) -> np.ndarray:
    """Double-peak residential diurnal curve sampled every ``dt`` hours, max 1."""
    n = steps_per_day(dt)
    t = np.arange(n) * dt
    shape = np.full(n, 0.42)
    for centre, amp, width in ((7.5, 0.22, 1.6), (19.0, 0.58, 2.6)):
        for shift in (-24.0, 0.0, 24.0):
            shape += amp * np.exp(-0.5 * ((t - centre + shift) / width) ** 2)
    return shape / shape.max()


def _step_span(t_s: float, dt_h: float, res: float) -> tuple[int, int]:
    """Half-open step range [a, b) overlapping [t_s, t_s + dt_h)."""
    lo = t_s / res
    hi = (t_s + dt_h) / res
    lo_r, hi_r = round(lo), round(hi)
    a = lo_r if abs(lo - lo_r) < 1e-9 else math.floor(lo)
    b = hi_r if abs(hi - hi_r) < 1e-9 else math.ceil(hi)
    return a, max(a, b)


def build_load_profile(
    base_shape: np.ndarray,
    model: FeederModel,
    events: Sequence[ChargingEvent],
    dt: float,
    horizon_days: int = 1,
    pev_kw: float = 10.0,
) -> LoadProfile:
    """Baseline plus PEV real power per node over ``horizon_days``.

    Charging occupies every step overlapping [t_s, t_s + dt); anything running
    past the horizon wraps to its start, so a one-day horizon behaves as a
    periodic representative day.
    """
    per_day = steps_per_day(dt)
    base_shape = np.asarray(base_shape, dtype=float)
    if base_shape.shape != (per_day,):
        raise ResolutionError(f"base shape needs {per_day} entries at dt={dt}, got {base_shape.shape}")
    n_steps = per_day * horizon_days
    weights = model.weight_vector()
    baseline = np.outer(weights * model.peak_base_kw, np.tile(base_shape, horizon_days))

    pev = np.zeros((len(model.nodes), n_steps))
    if events:
        vehicles = sorted({e.vehicle_id for e in events})
        row = {v: r for r, v in enumerate(vehicles)}
        busy = np.zeros((len(vehicles), n_steps), dtype=bool)
        node_of = {}
        for e in events:
            a, b = _step_span(e.day * HOURS_PER_DAY + e.t_s, e.dt, dt)
            if b - a >= n_steps:
                busy[row[e.vehicle_id]] = True
            elif b > a:
                idx = np.arange(a, b) % n_steps
                busy[row[e.vehicle_id], idx] = True
            node_of[e.vehicle_id] = model.index[e.node]
        placement = np.zeros((len(model.nodes), len(vehicles)))
        for v, r in row.items():
            placement[node_of[v], r] = 1.0
        pev = placement @ busy.astype(float) * pev_kw
    return LoadProfile(dt, model.nodes, baseline, pev)


def penetration_level(spec: ChargingSpec, peak_base_kw: float) -> float:
    """Aggregate charging capacity over peak base load, in percent."""
    if not peak_base_kw > 0:
        raise DomainError("peak base load must be positive")
    return spec.n_pev * spec.power_kw / peak_base_kw * 100.0


def fleet_size_for_pl(pl: float, peak_base_kw: float, power_kw: float) -> int:
    return int(round(pl / 100.0 * peak_base_kw / power_kw))


def write_events_csv(events: Sequence[ChargingEvent], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle_id", "node", "t_s", "dt"])
        for e in events:
            w.writerow([e.vehicle_id, e.node, f"{e.day * HOURS_PER_DAY + e.t_s:.12g}", f"{e.dt:.12g}"])
