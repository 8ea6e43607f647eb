"""Total cost of ownership: the annual loss-evaluation form and its windowed form.

All windows are in years. ``pec_*`` return present-value energy cost factors
in $/kWh; multiplying by hours per year and a loss in kW gives dollars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class TcoParams:
    capital_cost: float = 4575.0
    core_loss_kw: float = 0.96
    load_loss_kw: float = 5.1
    energy_cost: float = 0.05
    interest: float = 0.05
    gamma: float = 0.2
    hours_per_year: float = HOURS_PER_YEAR
    insulation_life_years: float = 20.0
    rated_kva: float = 500.0
    annualize_capital: bool = True
    load_loss_hours: bool = False

    def validate(self) -> list[str]:
        problems = []
        for name in ("capital_cost", "core_loss_kw", "load_loss_kw", "energy_cost"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if not 0 < self.interest < 1:
            problems.append("interest rate must lie in (0, 1)")
        if not 0 <= self.gamma <= 1:
            problems.append("gamma must lie in [0, 1]")
        if not self.insulation_life_years > 0:
            problems.append("insulation life must be > 0")
        if not self.rated_kva > 0:
            problems.append("rated kVA must be > 0")
        return problems


@dataclass(frozen=True)
class CostBreakdown:
    t1: float
    t2: float
    capital: float
    core: float
    load: float
    replacements: int = 0

    @property
    def operating(self) -> float:
        return self.core + self.load

    @property
    def total(self) -> float:
        return self.capital + self.core + self.load

    def to_dict(self) -> dict:
        return {"t1": self.t1, "t2": self.t2, "capital": self.capital, "core": self.core,
                "load": self.load, "total": self.total, "replacements": self.replacements}


def pec_conventional(ec: float, i: float, years: float) -> float:
    """Present value of ``ec`` paid yearly for ``years`` at rate ``i``."""
    growth = (1.0 + i) ** years
    return ec * (growth - 1.0) / (i * growth)


def pec_window(ec: float, i: float, t1: float, t2: float) -> float:
    """Present value of yearly energy cost accruing between years t1 and t2."""
    if not 0 <= t1 <= t2:
        raise DomainError(f"need 0 <= t1 <= t2, got [{t1}, {t2}]")
    return ec / i * ((1.0 + i) ** -t1 - (1.0 + i) ** -t2)


def capital_recovery_factor(i: float, years: float) -> float:
    growth = (1.0 + i) ** years
    return i * growth / (growth - 1.0)


def loss_factor(mean_load: float, peak_load: float, gamma: float) -> float:
    if not peak_load > 0:
        raise DomainError("peak load must be positive")
    if mean_load < 0 or mean_load > peak_load * (1 + 1e-12):
        raise DomainError(f"mean load {mean_load} outside [0, peak={peak_load}]")
    return _lof(min(mean_load / peak_load, 1.0), gamma)


def _lof(r: float, gamma: float) -> float:
    # Expanded and summed exactly so that 1 - gamma is never rounded on its own.
    return math.fsum((gamma * r, r * r, -gamma * r * r))


def _load_loss_multiplier(params: TcoParams) -> float:
    return params.hours_per_year if params.load_loss_hours else 1.0


def conventional_tco(params: TcoParams, peak_norm: float, avg_ratio: float) -> float:
    """Annual TCO from average loading alone (capital levelized unless disabled).

    ``peak_norm`` is peak load over rating, ``avg_ratio`` is average over peak.
    """
    pec = pec_conventional(params.energy_cost, params.interest, params.insulation_life_years)
    capital = params.capital_cost
    if params.annualize_capital:
        capital *= capital_recovery_factor(params.interest, params.insulation_life_years)
    a = params.hours_per_year * pec
    lof = _lof(avg_ratio, params.gamma)
    b = lof * pec * peak_norm ** 2 * _load_loss_multiplier(params)
    return capital + params.core_loss_kw * a + params.load_loss_kw * b


def _window_operating(params: TcoParams, t1: float, t2: float, mean_kva: float, peak_kva: float):
    pec = pec_window(params.energy_cost, params.interest, t1, t2)
    core = params.core_loss_kw * params.hours_per_year * pec
    if peak_kva > 0:
        lof = loss_factor(mean_kva, peak_kva, params.gamma)
        p_hat = peak_kva / params.rated_kva
        load = params.load_loss_kw * lof * pec * p_hat ** 2 * _load_loss_multiplier(params)
    else:
        load = 0.0
    return core, load


def modified_tco_transformer(lol: float, params: TcoParams, expected_kva, t1: float, t2: float,
                             times=None) -> CostBreakdown:
    """Windowed transformer cost: depreciation L_x * C_o plus discounted losses.

    ``expected_kva`` is the Monte-Carlo mean apparent power series; its mean and
    peak over the window feed the loss factor. ``times`` (years) locate the
    samples; without it the series is taken to describe the whole window.
    """
    if lol < 0:
        raise DomainError("loss of life must be >= 0")
    s = np.asarray(expected_kva, dtype=float)
    if times is not None:
        times = np.asarray(times, dtype=float)
        if t1 < times[0] or t2 > times[-1]:
            raise RangeError(f"window [{t1}, {t2}] outside load series [{times[0]}, {times[-1]}]")
        s = s[(times >= t1) & (times <= t2)]
    if s.size == 0:
        raise RangeError("no load samples inside the window")
    core, load = _window_operating(params, t1, t2, float(s.mean()), float(s.max()))
    return CostBreakdown(t1, t2, lol * params.capital_cost, core, load)


def vr_tco(lv: float, capital_cost: float) -> float:
    if lv < 0:
        raise DomainError("regulator loss of life must be >= 0")
    return lv * capital_cost


def replacements_within(lifetime_years: float, horizon_years: float) -> int:
    """Units exhausted strictly before the horizon ends."""
    if not lifetime_years > 0 or math.isinf(lifetime_years):
        return 0
    return max(math.ceil(horizon_years / lifetime_years - 1e-12) - 1, 0)


def long_term_cost_with_replacement(
    daily_lol: float,
    mean_kva: float,
    peak_kva: float,
    params: TcoParams,
    horizon: float,
) -> CostBreakdown:
    """Cumulative cost over [0, horizon] of keeping one transformer in service.

    A unit is bought at year 0; each time the running loss of life reaches 1
    before the horizon a new one is bought and its wear starts from zero.
    Operating losses accrue continuously with the window's loading.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    lifetime = 1.0 / (365.0 * daily_lol) if daily_lol > 0 else math.inf
    n_rep = replacements_within(lifetime, horizon)
    core, load = _window_operating(params, 0.0, horizon, mean_kva, peak_kva)
    return CostBreakdown(0.0, horizon, params.capital_cost * (1 + n_rep), core, load, n_rep)


def cost_curve(daily_lol: float, mean_kva: float, peak_kva: float, params: TcoParams,
               horizon: float, years=None, *, conventional: bool = False) -> list[CostBreakdown]:
    """Cumulative cost at each year mark (0..horizon by default).

    ``conventional=True`` ignores the simulated aging and assumes the rated
    insulation life, as the annual-average method does.
    """
    if years is None:
        years = np.arange(0, int(math.floor(horizon)) + 1, dtype=float)
    if conventional:
        lifetime = params.insulation_life_years
    else:
        lifetime = 1.0 / (365.0 * daily_lol) if daily_lol > 0 else math.inf
    cap = replacements_within(lifetime, horizon)
    out = []
    for y in years:
        y = float(y)
        # Units bought by year y: exhaustion at k * lifetime <= y, never at the horizon itself.
        made = 0 if math.isinf(lifetime) else min(math.floor(y / lifetime + 1e-12), cap)
        core, load = _window_operating(params, 0.0, y, mean_kva, peak_kva)
        out.append(CostBreakdown(0.0, y, params.capital_cost * (1 + made), core, load, made))
    return out
