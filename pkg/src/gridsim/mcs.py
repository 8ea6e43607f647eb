"""Monte-Carlo quasi-static time-series runs and penetration-level sweeps.

Each scenario owns a random stream derived from (root seed, PL, index), so
results do not depend on worker count or completion order.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import feeder as fd
from . import pev, regulator as vr, tco, thermal
from .errors import DegenerateError, NonConvergence

log = logging.getLogger(__name__)

DEFAULT_PL = (0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0)


@dataclass(frozen=True)
class RunConfig:
    pl_levels: tuple[float, ...] = DEFAULT_PL
    scenarios: int = 100
    seed: int = 20170701
    horizon_days: int = 1
    dt: float = 0.1
    feeder: fd.FeederModel = field(default_factory=fd.build_builtin_feeder)
    charging: pev.ChargingSpec = field(default_factory=pev.ChargingSpec)
    thermal: thermal.TransformerThermalParams = field(default_factory=thermal.TransformerThermalParams)
    ambient: float | tuple[float, ...] = 30.0
    regulator: vr.RegulatorParams = field(default_factory=vr.RegulatorParams)
    tco: tco.TcoParams = field(default_factory=tco.TcoParams)
    eval_years: float = 20.0
    common_random_numbers: bool = True
    resample_placement: bool = True
    traces: bool = False

    def validate(self) -> list[str]:
        problems = []
        if self.scenarios < 1:
            problems.append("run.scenarios: must be >= 1")
        try:
            pev.steps_per_day(self.dt)
        except Exception as exc:
            problems.append(f"run.dt: {exc}")
        if any(not math.isfinite(pl) or pl < 0 for pl in self.pl_levels):
            problems.append("run.pl: penetration levels must be finite and >= 0")
        if not self.pl_levels:
            problems.append("run.pl: at least one penetration level required")
        if self.horizon_days < 1:
            problems.append("run.horizon_days: must be >= 1")
        if not self.eval_years > 0:
            problems.append("run.eval_years: must be > 0")
        try:
            self.feeder.validate()
        except ValueError as exc:
            problems.append(f"feeder: {exc}")
        problems += [f"charging: {p}" for p in replace(self.charging, n_pev=0).validate()]
        problems += [f"thermal: {p}" for p in self.thermal.validate()]
        problems += [f"regulator: {p}" for p in self.regulator.validate(self.dt)]
        problems += [f"tco: {p}" for p in self.tco.validate()]
        if isinstance(self.ambient, tuple):
            try:
                n = pev.steps_per_day(self.dt) * self.horizon_days
                if len(self.ambient) != n:
                    problems.append(f"thermal.ambient: series needs {n} values, got {len(self.ambient)}")
            except Exception:
                pass
        return problems

    def spec_for(self, pl: float) -> pev.ChargingSpec:
        n = pev.fleet_size_for_pl(pl, self.feeder.peak_base_kw, self.charging.power_kw)
        alloc = self.charging.allocation or tuple(self.feeder.load_weights.items())
        return replace(self.charging, n_pev=n, allocation=alloc)


@dataclass
class ScenarioResult:
    pl: float
    index: int
    seed: tuple[int, ...]
    n_events: int
    pev_energy_kwh: float
    times: np.ndarray            # step start times, h
    k: np.ndarray                # transformer load factor per step
    kva: np.ndarray              # transformer apparent power per step
    v_reg: np.ndarray            # sensed voltage per step, pu
    tap: np.ndarray              # tap in force during each step, plus the final tap
    decision_times: np.ndarray   # times the controller acted (incl. dead-band holds)
    top_oil: np.ndarray          # n+1 samples on the thermal grid
    hot_spot: np.ndarray
    faa: np.ndarray
    daily_lol: float
    daily_travel: float
    v_min: np.ndarray            # per node
    v_max: np.ndarray
    max_iterations: int
    max_residual: float
    events: list = field(default_factory=list, repr=False)

    @property
    def thermal_times(self) -> np.ndarray:
        return np.arange(len(self.faa)) * (self.times[1] - self.times[0] if len(self.times) > 1 else 0.0)


@dataclass
class PLAggregate:
    pl: float
    n_pev: int
    scenarios: int
    failed: list[str]
    daily_lol: np.ndarray
    daily_travel: np.ndarray
    expected_k: np.ndarray
    expected_kva: np.ndarray
    tap_min: int
    tap_max: int

    @property
    def mean_daily_lol(self) -> float:
        return float(np.mean(self.daily_lol))

    @property
    def std_daily_lol(self) -> float:
        return float(np.std(self.daily_lol, ddof=1)) if len(self.daily_lol) > 1 else 0.0

    @property
    def mean_daily_travel(self) -> float:
        return float(np.mean(self.daily_travel))

    @property
    def std_daily_travel(self) -> float:
        return float(np.std(self.daily_travel, ddof=1)) if len(self.daily_travel) > 1 else 0.0

    def stderr_daily_lol(self, n: int | None = None) -> float:
        x = self.daily_lol if n is None else self.daily_lol[:n]
        return float(np.std(x, ddof=1) / math.sqrt(len(x)))


@dataclass
class AggregateResult:
    config: RunConfig
    levels: list[PLAggregate]
    lifetimes: dict[float, float]        # transformer, years
    vr_lifetimes: dict[float, float]     # years; inf when no wear
    proposed: dict[float, list[tco.CostBreakdown]]
    conventional: dict[float, list[tco.CostBreakdown]]
    vr_cost: dict[float, float]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def level(self, pl: float) -> PLAggregate:
        for lv in self.levels:
            if lv.pl == pl:
                return lv
        raise KeyError(pl)


def scenario_seed(config: RunConfig, pl: float, index: int) -> tuple[int, ...]:
    """Entropy words for one scenario; PL is dropped under common random numbers."""
    pl_key = 0 if config.common_random_numbers else int(round(pl * 1000)) + 1
    return (int(config.seed), pl_key, int(index))


def _streams(config: RunConfig, pl: float, index: int):
    words = scenario_seed(config, pl, index)
    timing, placement = np.random.SeedSequence(words).spawn(2)
    if not config.resample_placement:
        placement = np.random.SeedSequence((int(config.seed), 0, 2 ** 31 - 1)).spawn(2)[1]
    return words, np.random.default_rng(timing), np.random.default_rng(placement)


def sample_scenario_events(config: RunConfig, pl: float, index: int) -> list[pev.ChargingEvent]:
    spec = config.spec_for(pl)
    _, rng, prng = _streams(config, pl, index)
    events = []
    for day in range(config.horizon_days):
        for e in pev.sample_events(spec, rng, prng, day=day):
            events.append(e)
    return events


def simulate_profile(config: RunConfig, profile: pev.LoadProfile, tap0: int | None = None):
    """Step power flow, tap control and thermal model through a load profile.

    The tap chosen at step n applies from step n + 1. Returns a dict of series.
    """
    model = config.feeder
    rp = config.regulator
    tp = config.thermal
    dt = profile.dt
    n = profile.steps
    loads = fd.load_to_pu(profile.total, model)          # (nodes, steps)
    ambient = np.broadcast_to(np.asarray(config.ambient, dtype=float), (n,))
    reg_idx = model.index[model.regulated_node] if model.regulated_node is not None else None

    k = np.empty(n)
    kva = np.empty(n)
    v_reg = np.empty(n)
    taps = np.empty(n + 1, dtype=int)
    decisions = []
    top = np.empty(n + 1)
    hs = np.empty(n + 1)
    v_min = np.full(len(model.nodes), np.inf)
    v_max = np.full(len(model.nodes), -np.inf)
    max_it, max_res = 0, 0.0

    if tap0 is None:
        tap0 = 0
        if reg_idx is not None:
            first = fd.solve_power_flow(model, loads[:, 0], vr.tap_ratio(0, rp))
            tap0 = vr.settle_tap(abs(first.voltage[reg_idx]), rp)
    state_tap = vr.TapState(tap0)
    state_th = None
    for i in range(n):
        t = i * dt
        taps[i] = state_tap.tap
        try:
            sol = fd.solve_power_flow(model, loads[:, i], vr.tap_ratio(state_tap.tap, rp))
        except NonConvergence as exc:
            raise exc.with_context(step=i, t=round(t, 9))
        vm = np.abs(sol.voltage)
        np.minimum(v_min, vm, out=v_min)
        np.maximum(v_max, vm, out=v_max)
        max_it = max(max_it, sol.iterations)
        max_res = max(max_res, sol.residual)
        kva[i] = fd.transformer_kva(sol, model)
        k[i] = kva[i] / model.transformer_kva
        if state_th is None:
            state_th = thermal.steady_state(k[i], ambient[i], tp)
            top[0], hs[0] = state_th.top_oil, state_th.hot_spot
        state_th = thermal.step_thermal(state_th, k[i], ambient[i], dt, tp)
        top[i + 1], hs[i + 1] = state_th.top_oil, state_th.hot_spot
        if reg_idx is not None:
            v_reg[i] = vm[reg_idx]
            before = state_tap.last_decision
            state_tap = vr.step_tap(state_tap, v_reg[i], t, rp)
            if state_tap.last_decision != before:
                decisions.append(t)
        else:
            v_reg[i] = np.nan
    taps[n] = state_tap.tap
    faa = thermal.aging_factor(hs, tp)
    return {
        "k": k, "kva": kva, "v_reg": v_reg, "tap": taps, "decision_times": np.array(decisions),
        "top_oil": top, "hot_spot": hs, "faa": faa, "travel": state_tap.travel,
        "v_min": v_min, "v_max": v_max, "max_iterations": max_it, "max_residual": max_res,
    }


def run_scenario(config: RunConfig, pl: float, index: int, keep_events: bool = False) -> ScenarioResult:
    """Sample events, build profiles and simulate one scenario deterministically."""
    words = scenario_seed(config, pl, index)
    events = sample_scenario_events(config, pl, index)
    shape = pev.residential_shape(config.dt)
    profile = pev.build_load_profile(shape, config.feeder, events, config.dt,
                                     config.horizon_days, config.charging.power_kw)
    try:
        out = simulate_profile(config, profile)
    except NonConvergence as exc:
        raise exc.with_context(pl=pl, scenario=index)
    n = profile.steps
    hours = n * config.dt
    th_times = np.arange(n + 1) * config.dt
    lol = thermal.loss_of_life(out["faa"], th_times, config.thermal.insulation_life, 0.0, hours)
    return ScenarioResult(
        pl=pl,
        index=index,
        seed=words,
        n_events=len(events),
        pev_energy_kwh=float(profile.pev.sum() * config.dt),
        times=profile.times,
        k=out["k"],
        kva=out["kva"],
        v_reg=out["v_reg"],
        tap=out["tap"],
        decision_times=out["decision_times"],
        top_oil=out["top_oil"],
        hot_spot=out["hot_spot"],
        faa=out["faa"],
        daily_lol=lol / config.horizon_days,
        daily_travel=out["travel"] / config.horizon_days,
        v_min=out["v_min"],
        v_max=out["v_max"],
        max_iterations=out["max_iterations"],
        max_residual=out["max_residual"],
        events=events if keep_events else [],
    )


def expected_series(results) -> tuple[np.ndarray, np.ndarray]:
    """Element-wise sample mean of K(t) and s(t) across scenarios."""
    results = list(results)
    if not results:
        raise ValueError("need at least one scenario")
    k = np.mean(np.stack([r.k for r in results]), axis=0)
    s = np.mean(np.stack([r.kva for r in results]), axis=0)
    return k, s


def _task(args):
    config, pl, index, keep = args
    try:
        return pl, index, run_scenario(config, pl, index, keep), None
    except NonConvergence as exc:
        return pl, index, None, str(exc)


def worker_count(requested: int | None = None) -> int:
    if requested is None:
        env = os.environ.get("GRIDSIM_THREADS")
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(requested))


def run_scenarios(config: RunConfig, tasks, workers: int | None = None, keep_events: bool = False):
    """Run (pl, index) tasks, returning results keyed by task in submission order."""
    jobs = [(config, pl, i, keep_events) for pl, i in tasks]
    workers = min(worker_count(workers), max(len(jobs), 1))
    if workers == 1:
        outs = [_task(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_task, jobs, chunksize=chunk))
    return {(pl, i): (res, err) for pl, i, res, err in outs}


def aggregate(config: RunConfig, pl: float, results, failures) -> PLAggregate:
    spec = config.spec_for(pl)
    if results:
        ek, es = expected_series(results)
        taps = np.concatenate([r.tap for r in results])
        tmin, tmax = int(taps.min()), int(taps.max())
    else:
        ek = es = np.array([])
        tmin = tmax = 0
    return PLAggregate(
        pl=pl,
        n_pev=spec.n_pev,
        scenarios=len(results),
        failed=list(failures),
        daily_lol=np.array([r.daily_lol for r in results]),
        daily_travel=np.array([r.daily_travel for r in results]),
        expected_k=ek,
        expected_kva=es,
        tap_min=tmin,
        tap_max=tmax,
    )


def run_mcs(config: RunConfig, workers: int | None = None, on_scenario=None) -> AggregateResult:
    """Full PL x scenario sweep with aggregation, lifetimes and cost curves.

    ``on_scenario(result)`` is called in deterministic order after all scenarios
    finish (used for trace export).
    """
    tasks = [(pl, i) for pl in config.pl_levels for i in range(config.scenarios)]
    done = run_scenarios(config, tasks, workers, keep_events=config.traces)
    levels, failures = [], []
    lifetimes, vr_life, proposed, conventional, vr_cost = {}, {}, {}, {}, {}
    for pl in config.pl_levels:
        results, failed = [], []
        for i in range(config.scenarios):
            res, err = done[(pl, i)]
            if err is not None:
                failed.append(err)
                log.warning("scenario failed: %s", err)
            else:
                results.append(res)
                if on_scenario is not None:
                    on_scenario(res)
        failures += failed
        agg = aggregate(config, pl, results, failed)
        levels.append(agg)
        if not results:
            continue
        daily = agg.mean_daily_lol
        try:
            lifetimes[pl] = thermal.transformer_lifetime(daily, config.thermal.insulation_life)
        except DegenerateError:
            lifetimes[pl] = math.inf
        try:
            vr_life[pl] = vr.vr_lifetime(agg.mean_daily_travel, config.regulator.n_op)
        except DegenerateError:
            vr_life[pl] = math.inf
        mean_kva = float(agg.expected_kva.mean())
        peak_kva = float(agg.expected_kva.max())
        proposed[pl] = tco.cost_curve(daily, mean_kva, peak_kva, config.tco, config.eval_years)
        conventional[pl] = tco.cost_curve(daily, mean_kva, peak_kva, config.tco, config.eval_years,
                                          conventional=True)
        lv = agg.mean_daily_travel * 365.0 * config.eval_years / config.regulator.n_op
        vr_cost[pl] = tco.vr_tco(lv, config.regulator.capital_cost)
    return AggregateResult(config, levels, lifetimes, vr_life, proposed, conventional, vr_cost, failures)
