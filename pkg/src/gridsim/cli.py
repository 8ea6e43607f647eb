"""Command-line front end.

    gridsim run --config run.json --out results/
    gridsim sweep --pl-max 300 --pl-step 50 --out results/
    gridsim export-feeder feeder.json
    gridsim validate --config run.json

Exit codes: 0 ok, 1 simulation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import platform
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_from_document, config_to_document, load_document
from .errors import ConfigError
from .feeder import build_builtin_feeder
from .mcs import RunConfig, run_mcs, worker_count
from . import output

log = logging.getLogger("gridsim")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
OUTPUT_FILES = ("aggregate.csv", "tco_curve.csv", "expected.csv", "manifest.json")


def _pl_list(values):
    out = []
    for v in values or []:
        for part in str(v).split(","):
            part = part.strip()
            if part:
                try:
                    out.append(float(part))
                except ValueError:
                    raise ConfigError(f"--pl: {part!r} is not a number")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gridsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", "-c", help="JSON run configuration (built-in defaults when omitted)")
        if needs_out:
            p.add_argument("--out", "-o", default="results", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--pl", action="append", help="penetration level(s) in percent; repeat or comma-separate")
        p.add_argument("--scenarios", type=int)
        p.add_argument("--dt", type=float, help="time resolution in hours")
        p.add_argument("--days", type=int, help="simulated days per scenario")
        p.add_argument("--traces", action="store_true", help="write per-scenario traces")
        p.add_argument("--workers", type=int, help="worker processes (default: GRIDSIM_THREADS or CPU count)")
        p.add_argument("-v", "--verbose", action="count", default=0)

    common(sub.add_parser("run", help="run the configured PL list"))
    sweep = sub.add_parser("sweep", help="run a PL sweep 0..pl-max in pl-step increments")
    common(sweep)
    sweep.add_argument("--pl-max", type=float, default=300.0)
    sweep.add_argument("--pl-step", type=float, default=50.0)
    common(sub.add_parser("validate", help="check a configuration and print it resolved"), needs_out=False)
    exp = sub.add_parser("export-feeder", help="write the built-in feeder as an editable JSON document")
    exp.add_argument("path", nargs="?", default="-")
    exp.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def parse_and_validate(args: argparse.Namespace | list[str], document: dict | None = None,
                       base: Path | None = None) -> RunConfig:
    """Resolve config document plus CLI overrides into a validated RunConfig."""
    if not isinstance(args, argparse.Namespace):
        args = build_parser().parse_args(args)
    if document is None:
        document, base = load_document(getattr(args, "config", None))
    doc = json.loads(json.dumps(document)) if document else {}
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be a JSON object")
    run = doc.setdefault("run", {})
    if not isinstance(run, dict):
        raise ConfigError("run: expected an object")
    if getattr(args, "command", None) == "sweep":
        if not args.pl_step > 0 or args.pl_max < 0:
            raise ConfigError("--pl-step must be > 0 and --pl-max >= 0")
        n = int(round(args.pl_max / args.pl_step))
        run["pl"] = [round(i * args.pl_step, 9) for i in range(n + 1)]
    pls = _pl_list(getattr(args, "pl", None))
    if pls:
        run["pl"] = pls
    for flag, key in (("seed", "seed"), ("scenarios", "scenarios"), ("dt", "dt"), ("days", "horizon_days")):
        value = getattr(args, flag, None)
        if value is not None:
            run[key] = value
    if getattr(args, "traces", False):
        run["traces"] = True
    return config_from_document(doc, base)


def run_and_emit(config: RunConfig, outdir: str | Path, workers: int | None = None) -> int:
    """Simulate and write aggregate.csv, tco_curve.csv, expected.csv, traces/ and manifest.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in (*OUTPUT_FILES, "FAILED"):
        (outdir / name).unlink(missing_ok=True)
    trace_dir = outdir / "traces"
    if trace_dir.exists():
        shutil.rmtree(trace_dir)
    started = time.time()

    on_scenario = None
    if config.traces:
        def on_scenario(res):
            output.write_trace(res, config.dt, trace_dir)

    log.info("running %d PL levels x %d scenarios", len(config.pl_levels), config.scenarios)
    result = run_mcs(config, workers=workers, on_scenario=on_scenario)
    if result.failures:
        for msg in result.failures:
            log.error("scenario failed: %s", msg)
        for name in OUTPUT_FILES:
            (outdir / name).unlink(missing_ok=True)
        if trace_dir.exists():
            shutil.rmtree(trace_dir)
        (outdir / "FAILED").write_text("\n".join(result.failures) + "\n")
        print(f"error: {len(result.failures)} scenario(s) failed; see {outdir / 'FAILED'}", file=sys.stderr)
        return EXIT_FAILURE

    output.write_aggregate(result, outdir / "aggregate.csv")
    output.write_tco_curve(result, outdir / "tco_curve.csv")
    output.write_expected(result, outdir / "expected.csv")
    manifest = config_to_document(config)
    manifest["manifest"] = {
        "gridsim_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "root_seed": config.seed,
        "scenario_seed_words": "(root_seed, 0 if common_random_numbers else round(1000*pl)+1, index)",
        "workers": worker_count(workers),
        "wall_time_s": round(time.time() - started, 3),
        "outputs": list(OUTPUT_FILES[:-1]) + (["traces/"] if config.traces else []),
    }
    output.write_json(manifest, outdir / "manifest.json")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "export-feeder":
        text = json.dumps(build_builtin_feeder().to_dict(), indent=2) + "\n"
        if args.path == "-":
            sys.stdout.write(text)
        else:
            Path(args.path).write_text(text)
        return EXIT_OK

    try:
        config = parse_and_validate(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        doc = config_to_document(config)
        doc["feeder"] = {"nodes": len(config.feeder.nodes), "branches": len(config.feeder.branches),
                         "transformer": config.feeder.transformer_node, "regulator": config.feeder.regulator_branch}
        print(json.dumps(doc, indent=2))
        return EXIT_OK

    try:
        return run_and_emit(config, args.out, workers=args.workers)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
