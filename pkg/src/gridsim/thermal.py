"""Transformer top-oil / hot-spot dynamics, aging acceleration and loss of life.

The dynamics follow the exponential-response loading-guide model: top-oil rise
and hot-spot rise each relax toward a load-dependent ultimate value with their
own time constant, and the hot-spot temperature is their sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, RangeError, StabilityError

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class TransformerThermalParams:
    top_oil_rise: float = 55.0      # rated top-oil rise over ambient, K
    hot_spot_rise: float = 25.0     # rated hot-spot rise over top oil, K
    tau_oil: float = 3.5            # h
    tau_winding: float = 0.08       # h
    oil_exponent: float = 0.8
    winding_exponent: float = 1.6
    loss_ratio: float = 5.0         # load loss / no-load loss at rated load
    alpha: float = 15000.0 / 383.0
    beta: float = 15000.0
    omega: float = 273.0
    insulation_life: float = 180000.0   # h

    def validate(self) -> list[str]:
        problems = []
        if not (self.tau_oil > 0 and self.tau_winding > 0):
            problems.append("thermal time constants must be > 0")
        for name in ("oil_exponent", "winding_exponent"):
            if not 0.5 < getattr(self, name) < 2.5:
                problems.append(f"{name} must lie in (0.5, 2.5)")
        if not self.insulation_life > 0:
            problems.append("insulation life must be > 0")
        if not self.beta > 0:
            problems.append("beta must be > 0")
        if self.loss_ratio < 0:
            problems.append("loss ratio must be >= 0")
        return problems


@dataclass(frozen=True)
class ThermalState:
    t: float
    top_oil: float          # degC
    hot_spot_rise: float    # K over top oil

    @property
    def hot_spot(self) -> float:
        return self.top_oil + self.hot_spot_rise


def ultimate_top_oil_rise(k: float, p: TransformerThermalParams) -> float:
    return p.top_oil_rise * ((1.0 + p.loss_ratio * k * k) / (1.0 + p.loss_ratio)) ** p.oil_exponent


def ultimate_hot_spot_rise(k: float, p: TransformerThermalParams) -> float:
    return p.hot_spot_rise * k ** p.winding_exponent


def steady_state(k: float, ambient: float, p: TransformerThermalParams, t: float = 0.0) -> ThermalState:
    return ThermalState(t, ambient + ultimate_top_oil_rise(k, p), ultimate_hot_spot_rise(k, p))


def step_thermal(
    state: ThermalState,
    k: float,
    ambient: float,
    dt: float,
    p: TransformerThermalParams,
    method: str = "exponential",
) -> ThermalState:
    """Advance the thermal state by ``dt`` hours under constant load factor ``k``.

    ``method="exponential"`` applies the exact relaxation for an input held over
    the step and is stable for any ``dt > 0``. ``method="euler"`` is the explicit
    forward update; it needs ``dt <= tau/2`` for each relaxation it integrates,
    and treats the hot-spot rise as quasi-stationary once ``tau_winding <= dt/2``.
    """
    if not dt > 0 or not math.isfinite(dt):
        raise StabilityError(f"time step must be positive and finite, got {dt!r}")
    if k < 0:
        raise DomainError(f"load factor must be >= 0, got {k!r}")
    oil_target = ambient + ultimate_top_oil_rise(k, p)
    hs_target = ultimate_hot_spot_rise(k, p)
    if method == "exponential":
        top_oil = oil_target + (state.top_oil - oil_target) * math.exp(-dt / p.tau_oil)
        rise = hs_target + (state.hot_spot_rise - hs_target) * math.exp(-dt / p.tau_winding)
    elif method == "euler":
        quasi_static = p.tau_winding <= dt / 2
        bound = p.tau_oil if quasi_static else min(p.tau_oil, p.tau_winding)
        if dt > bound / 2:
            raise StabilityError(f"explicit step dt={dt} exceeds stability bound {bound / 2}")
        top_oil = state.top_oil + dt / p.tau_oil * (oil_target - state.top_oil)
        if quasi_static:
            rise = hs_target
        else:
            rise = state.hot_spot_rise + dt / p.tau_winding * (hs_target - state.hot_spot_rise)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return ThermalState(state.t + dt, top_oil, rise)


def aging_factor(hot_spot, p: TransformerThermalParams = TransformerThermalParams()):
    """Accelerated aging factor exp(alpha - beta / (Q_HST + omega)); scalar or array."""
    q = np.asarray(hot_spot, dtype=float) + p.omega
    if np.any(q <= 0):
        raise DomainError("hot-spot temperature at or below absolute zero of the aging law")
    out = np.exp(p.alpha - p.beta / q)
    return float(out) if out.ndim == 0 else out


def _cumulative(times: np.ndarray, values: np.ndarray, t: float) -> float:
    """Integral of the piecewise-linear interpolant from times[0] to t."""
    seg = np.diff(times) * (values[1:] + values[:-1]) / 2.0
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(max(k, 0), len(times) - 2)
    whole = math.fsum(seg[:k])
    h = t - times[k]
    if h == 0.0:
        return whole
    slope = (values[k + 1] - values[k]) / (times[k + 1] - times[k])
    return whole + h * (values[k] + 0.5 * slope * h)


def loss_of_life(faa, times, insulation_life: float, t1: float, t2: float) -> float:
    """Fraction of insulation life consumed over [t1, t2] (trapezoidal in time).

    ``faa`` and ``times`` are matching samples; times in hours, ascending.
    """
    faa = np.asarray(faa, dtype=float)
    times = np.asarray(times, dtype=float)
    if t1 > t2:
        raise RangeError(f"window start {t1} after end {t2}")
    if len(times) < 2 or faa.shape != times.shape:
        raise RangeError("need at least two matching samples")
    tol = 1e-9 * max(1.0, abs(times[-1]))
    if t1 < times[0] - tol or t2 > times[-1] + tol:
        raise RangeError(f"window [{t1}, {t2}] outside series [{times[0]}, {times[-1]}]")
    if t1 == t2:
        return 0.0
    t1 = min(max(t1, times[0]), times[-1])
    t2 = min(max(t2, times[0]), times[-1])
    return float(_cumulative(times, faa, t2) - _cumulative(times, faa, t1)) / insulation_life


def transformer_lifetime(daily_loss: float, insulation_life: float = 180000.0) -> float:
    """Years until cumulative loss of life reaches 1 at a constant daily rate."""
    if daily_loss < 0:
        raise DomainError("daily loss of life must be >= 0")
    if daily_loss == 0:
        raise DegenerateError("zero aging: lifetime undefined", fallback=insulation_life / HOURS_PER_YEAR)
    return 1.0 / (365.0 * daily_loss)


@dataclass(frozen=True)
class ThermalTrajectory:
    times: np.ndarray
    top_oil: np.ndarray
    hot_spot: np.ndarray
    faa: np.ndarray

    def loss_of_life(self, p: TransformerThermalParams, t1=None, t2=None) -> float:
        t1 = self.times[0] if t1 is None else t1
        t2 = self.times[-1] if t2 is None else t2
        return loss_of_life(self.faa, self.times, p.insulation_life, t1, t2)


def simulate(k_series, ambient, dt: float, p: TransformerThermalParams,
             initial: ThermalState | None = None, method: str = "exponential") -> ThermalTrajectory:
    """Integrate over a load-factor series held constant per step.

    Returns ``len(k_series) + 1`` samples; the first is the initial state
    (steady state of the first step's loading unless given).
    """
    k_series = np.asarray(k_series, dtype=float)
    amb = np.broadcast_to(np.asarray(ambient, dtype=float), k_series.shape)
    state = initial if initial is not None else steady_state(k_series[0], amb[0], p)
    n = len(k_series)
    top = np.empty(n + 1)
    hs = np.empty(n + 1)
    top[0], hs[0] = state.top_oil, state.hot_spot
    for i in range(n):
        state = step_thermal(state, k_series[i], amb[i], dt, p, method)
        top[i + 1], hs[i + 1] = state.top_oil, state.hot_spot
    times = np.arange(n + 1) * dt
    return ThermalTrajectory(times, top, hs, aging_factor(hs, p))
