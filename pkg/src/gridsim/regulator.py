"""Voltage-regulator tap changer: control policy, tap travel and wear."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import DegenerateError, DomainError, RangeError

# Decisions scheduled exactly one cycle apart must not be lost to float drift.
_CYCLE_SLACK = 1e-9


@dataclass(frozen=True)
class RegulatorParams:
    v_set: float = 1.0
    step: float = 0.00625
    band_lo: float = 0.99
    band_hi: float = 1.01
    tap_min: int = -16
    tap_max: int = 16
    n_op: float = 100000.0
    cycle: float = 0.5            # h between tap decisions
    capital_cost: float = 10000.0

    def validate(self, resolution: float | None = None) -> list[str]:
        problems = []
        if not self.step > 0:
            problems.append("tap step size must be > 0")
        if not self.band_lo < self.v_set < self.band_hi:
            problems.append("dead-band must bracket the regulated voltage")
        if not self.tap_min < self.tap_max:
            problems.append("tap_min must be below tap_max")
        if not self.n_op > 0:
            problems.append("maximum tap operations must be > 0")
        if self.capital_cost < 0:
            problems.append("regulator capital cost must be >= 0")
        if resolution is not None and self.cycle < resolution - _CYCLE_SLACK:
            problems.append("operating cycle must be at least the profile resolution")
        return problems


@dataclass(frozen=True)
class TapState:
    tap: int = 0
    travel: int = 0
    last_decision: float = -math.inf


def raw_tap_command(v: float, p: RegulatorParams) -> float:
    """Literal (V - V_R) / step value, kept for audit; its sign lowers taps on sags."""
    return (v - p.v_set) / p.step


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def tap_correction(v: float, p: RegulatorParams) -> int:
    """Whole taps needed to bring ``v`` back to the set point; positive boosts."""
    return _round_half_away((p.v_set - v) / p.step)


def step_tap(state: TapState, v: float, t: float, p: RegulatorParams) -> TapState:
    """One control decision at time ``t`` (h) on sensed voltage ``v`` (pu)."""
    if not v > 0:
        raise DomainError(f"sensed voltage must be positive, got {v!r}")
    if t - state.last_decision < p.cycle - _CYCLE_SLACK:
        return state
    if p.band_lo <= v <= p.band_hi:
        return TapState(state.tap, state.travel, t)
    new = min(max(state.tap + tap_correction(v, p), p.tap_min), p.tap_max)
    return TapState(new, state.travel + abs(new - state.tap), t)


def settle_tap(v: float, p: RegulatorParams, tap: int = 0) -> int:
    """Tap position the controller would settle on for voltage ``v`` at ``tap``."""
    if p.band_lo <= v <= p.band_hi:
        return tap
    return min(max(tap + tap_correction(v, p), p.tap_min), p.tap_max)


def tap_ratio(tap: int, p: RegulatorParams) -> float:
    return 1.0 + tap * p.step


def tap_travel(history: Sequence[int], n1: int = 0, n2: int | None = None) -> int:
    n2 = len(history) - 1 if n2 is None else n2
    if not 0 <= n1 <= n2 <= len(history) - 1:
        raise RangeError(f"window [{n1}, {n2}] outside tap history of length {len(history)}")
    return sum(abs(history[n] - history[n - 1]) for n in range(n1 + 1, n2 + 1))


def vr_loss_of_life(history: Sequence[int], n_op: float, n1: int = 0, n2: int | None = None) -> float:
    """Share of rated tap operations used between samples n1 and n2."""
    return tap_travel(history, n1, n2) / n_op


def vr_lifetime(daily_travel: float, n_op: float) -> float:
    """Years to exhaust ``n_op`` operations at a constant daily tap travel."""
    if daily_travel < 0:
        raise DomainError("daily tap travel must be >= 0")
    if daily_travel == 0:
        raise DegenerateError("no wear observed", fallback=math.inf)
    return n_op / (365.0 * daily_travel)
