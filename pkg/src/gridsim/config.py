"""JSON run configuration <-> RunConfig.

The document has sections ``feeder``, ``charging``, ``thermal``, ``regulator``,
``tco`` and ``run``; every key is optional and missing ones take the built-in
defaults. A ``manifest`` section (written by the CLI) is ignored on input so a
manifest can be fed back as a config.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

from . import feeder as fd
from . import pev, regulator as vr, tco, thermal
from .errors import ConfigError
from .mcs import RunConfig

SECTIONS = ("feeder", "charging", "thermal", "regulator", "tco", "run")
_RUN_KEYS = {
    "pl": "pl_levels", "scenarios": "scenarios", "seed": "seed", "horizon_days": "horizon_days",
    "dt": "dt", "eval_years": "eval_years", "common_random_numbers": "common_random_numbers",
    "resample_placement": "resample_placement", "traces": "traces",
}


def _coerce(value, target, where, problems):
    if target is bool:
        if isinstance(value, bool):
            return value
        problems.append(f"{where}: expected true/false, got {value!r}")
        return None
    if target is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            problems.append(f"{where}: expected an integer, got {value!r}")
            return None
        return int(value)
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{where}: expected a finite number, got {value!r}")
            return None
        return float(value)
    return value


def _section(cls, doc, name, problems, skip=()):
    """Build dataclass ``cls`` from mapping ``doc``, recording every problem."""
    if doc is None:
        return cls()
    if not isinstance(doc, dict):
        problems.append(f"{name}: expected an object")
        return cls()
    types = {f.name: f.type for f in dataclasses.fields(cls) if f.name not in skip}
    kwargs = {}
    for key, value in doc.items():
        if key not in types:
            problems.append(f"{name}.{key}: unknown field")
            continue
        target = {"float": float, "int": int, "bool": bool}.get(str(types[key]), None)
        v = _coerce(value, target, f"{name}.{key}", problems) if target else value
        if v is not None:
            kwargs[key] = v
    return cls(**kwargs)


def _charging(doc, problems) -> pev.ChargingSpec:
    doc = dict(doc or {})
    interval_doc = doc.pop("interval", None)
    alloc_doc = doc.pop("allocation", None)
    if "n_pev" in doc:
        problems.append("charging.n_pev: fleet size is derived from the penetration level")
        doc.pop("n_pev")
    spec = _section(pev.ChargingSpec, doc, "charging", problems, skip=("interval", "allocation", "n_pev"))
    if interval_doc is not None:
        if not isinstance(interval_doc, dict):
            problems.append("charging.interval: expected an object")
        else:
            interval_doc = dict(interval_doc)
            mode = interval_doc.pop("mode", "gaussian")
            cls = {"gaussian": pev.GaussianInterval, "soc": pev.SocDriven}.get(mode)
            if cls is None:
                problems.append(f"charging.interval.mode: expected 'gaussian' or 'soc', got {mode!r}")
            else:
                spec = dataclasses.replace(spec, interval=_section(cls, interval_doc, "charging.interval", problems))
    if alloc_doc is not None:
        if not isinstance(alloc_doc, dict):
            problems.append("charging.allocation: expected an object of node -> weight")
        else:
            pairs = []
            for node, w in alloc_doc.items():
                w = _coerce(w, float, f"charging.allocation.{node}", problems)
                if w is not None:
                    pairs.append((str(node), w))
            spec = dataclasses.replace(spec, allocation=tuple(pairs))
    return spec


def _feeder(doc, base: Path | None, problems) -> fd.FeederModel:
    if doc is None or doc == "builtin":
        return fd.build_builtin_feeder()
    try:
        if isinstance(doc, str):
            path = Path(doc)
            if base is not None and not path.is_absolute():
                path = base / path
            return fd.FeederModel.load(path)
        if isinstance(doc, dict) and set(doc) == {"path"}:
            return _feeder(doc["path"], base, problems)
        if isinstance(doc, dict):
            return fd.FeederModel.from_dict(doc)
        problems.append("feeder: expected 'builtin', a path, or a feeder document")
    except (OSError, ValueError) as exc:
        problems.append(f"feeder: {exc}")
    return fd.build_builtin_feeder()


def config_from_document(doc: dict, base: Path | None = None) -> RunConfig:
    """Resolve a config document against defaults; raises ConfigError listing all violations."""
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be a JSON object")
    problems: list[str] = []
    for key in doc:
        if key not in SECTIONS and key != "manifest":
            problems.append(f"{key}: unknown section")

    model = _feeder(doc.get("feeder"), base, problems)
    charging = _charging(doc.get("charging"), problems)

    th_doc = dict(doc.get("thermal") or {})
    ambient = th_doc.pop("ambient", 30.0)
    thermal_params = _section(thermal.TransformerThermalParams, th_doc, "thermal", problems)
    if isinstance(ambient, list):
        vals = [_coerce(a, float, "thermal.ambient[]", problems) for a in ambient]
        ambient = tuple(v for v in vals if v is not None)
    else:
        ambient = _coerce(ambient, float, "thermal.ambient", problems)
        ambient = 30.0 if ambient is None else ambient

    reg_params = _section(vr.RegulatorParams, doc.get("regulator"), "regulator", problems)
    tco_params = _section(tco.TcoParams, doc.get("tco"), "tco", problems)

    run_doc = doc.get("run") or {}
    kwargs = {}
    if not isinstance(run_doc, dict):
        problems.append("run: expected an object")
        run_doc = {}
    for key, value in run_doc.items():
        if key not in _RUN_KEYS:
            problems.append(f"run.{key}: unknown field")
            continue
        field = _RUN_KEYS[key]
        if field == "pl_levels":
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                value = [value]
            if not isinstance(value, list):
                problems.append("run.pl: expected a list of numbers")
                continue
            vals = [_coerce(v, float, "run.pl[]", problems) for v in value]
            kwargs[field] = tuple(v for v in vals if v is not None)
            continue
        target = {"scenarios": int, "seed": int, "horizon_days": int, "dt": float, "eval_years": float,
                  "common_random_numbers": bool, "resample_placement": bool, "traces": bool}[field]
        v = _coerce(value, target, f"run.{key}", problems)
        if v is not None:
            kwargs[field] = v

    config = RunConfig(feeder=model, charging=charging, thermal=thermal_params, ambient=ambient,
                       regulator=reg_params, tco=tco_params, **kwargs)
    config = dataclasses.replace(config, charging=dataclasses.replace(
        config.charging, allocation=config.charging.allocation or tuple(model.load_weights.items())))
    problems += config.validate()
    if problems:
        raise ConfigError(problems)
    return config


def config_to_document(config: RunConfig) -> dict:
    """Fully resolved document; feeding it back reproduces ``config``."""
    charging = config.charging
    interval = dataclasses.asdict(charging.interval)
    interval["mode"] = "soc" if isinstance(charging.interval, pev.SocDriven) else "gaussian"
    th = dataclasses.asdict(config.thermal)
    th["ambient"] = list(config.ambient) if isinstance(config.ambient, tuple) else config.ambient
    return {
        "feeder": config.feeder.to_dict(),
        "charging": {
            "battery_kwh": charging.battery_kwh,
            "power_kw": charging.power_kw,
            "start_mean": charging.start_mean,
            "start_std": charging.start_std,
            "interval": interval,
            "allocation": dict(charging.allocation),
        },
        "thermal": th,
        "regulator": dataclasses.asdict(config.regulator),
        "tco": dataclasses.asdict(config.tco),
        "run": {
            "pl": list(config.pl_levels),
            "scenarios": config.scenarios,
            "seed": config.seed,
            "horizon_days": config.horizon_days,
            "dt": config.dt,
            "eval_years": config.eval_years,
            "common_random_numbers": config.common_random_numbers,
            "resample_placement": config.resample_placement,
            "traces": config.traces,
        },
    }


def load_document(path: str | Path | None) -> tuple[dict, Path | None]:
    if path is None:
        return {}, None
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return doc, path.parent
