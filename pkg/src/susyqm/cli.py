"""Command line entry point: ``susyqm <experiment> --config <path> [--out <dir>] [--seed <int>]``.

Exit status is 0 on success, 2 when the configuration is invalid (nothing is
written) and 3 when a numerical procedure fails.
"""

import argparse
import csv
import hashlib
from importlib import metadata, resources
import json
import os
from pathlib import Path
import platform
import sys

import jsonschema
import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import experiments
from .errors import ConfigError, NumericalError, SusyError, ValidationError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "SUSYQM_THREADS"


def load_schema():
    return json.loads(resources.files("susyqm").joinpath("config_schema.json").read_text())


def _canonical(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(_canonical(cfg).encode()).hexdigest()


def load_config(path, experiment, seed=None):
    """Read, schema-check and complete a configuration file."""
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.setdefault("experiment", experiment) != experiment:
        raise ConfigError(f"config is for experiment {cfg['experiment']!r}, not {experiment!r}")
    if seed is not None:
        cfg["seed"] = seed
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    check_preconditions(cfg)
    return cfg


def check_preconditions(cfg):
    """Build every model object named in ``cfg`` so bad values fail before any computation."""
    name = cfg["experiment"]
    units_spec = cfg.get("units")
    if name == "double-well":
        units_spec = {"wavenumbers": True, **(units_spec or {})}
    experiments.build_units(units_spec)
    if "potential" in cfg:
        experiments.build_potential(cfg["potential"], None)
    if "superpotential" in cfg:
        experiments.build_superpotential(cfg["superpotential"], None)
    params = cfg.get("parameters", {})
    if "partner" in params:
        experiments.build_potential(params["partner"], None)
    grid = cfg.get("grid", {})
    if grid:
        lo, hi = grid.get("x_min", -1.0), grid.get("x_max", 1.0)
        if not lo < hi:
            raise ConfigError("grid.x_min must be below grid.x_max")
    if name == "double-well":
        experiments.build_optimizer_config(cfg.get("optimizer"), cfg.get("seed"))
        domain = params.get("domain")
        if domain is not None and not domain[0] < domain[1]:
            raise ConfigError("parameters.domain must be an increasing interval")
    if name == "convergence":
        n_values = params.get("n_values", [40])
        if params.get("n_reference", 100) < max(n_values):
            raise ConfigError("parameters.n_reference must be at least max(n_values)")


def write_table(path, table):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_json(path, payload):
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _version(dist):
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def manifest(cfg, result, outputs, status, error=None):
    return {
        "experiment": cfg.get("experiment"),
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "schema_version": load_schema()["version"],
        "status": status,
        "error": error,
        "outputs": sorted(outputs),
        "tolerances": {} if result is None else result.tolerances,
        "versions": {
            "susyqm": _version("artifact"),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "threads": os.environ.get(THREADS_ENV),
    }


def write_outputs(out, cfg, result):
    out.mkdir(parents=True, exist_ok=True)
    written = []
    write_json(out / "report.json", result.report)
    written.append("report.json")
    for name, table in result.tables.items():
        write_table(out / f"{name}.csv", table)
        written.append(f"{name}.csv")
    for name, trace in result.traces.items():
        trace.to_csv(out / f"{name}.csv")
        written.append(f"{name}.csv")
    write_json(out / "manifest.json", manifest(cfg, result, written + ["manifest.json"], "ok"))


def thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def run(experiment, config_path, out=None, seed=None):
    """Run one experiment; returns the exit status."""
    try:
        limit = thread_limit()
        cfg = load_config(config_path, experiment, seed)
    except ValidationError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(out or cfg.get("output", {}).get("dir", f"susyqm-{experiment}"))
    try:
        with threadpool_limits(limits=limit):
            result = experiments.RUNNERS[experiment](cfg)
    except ValidationError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError) as exc:
        code = exc.code if isinstance(exc, SusyError) else "numpy.LinAlgError"
        print(f"error [{code}]: {exc}", file=sys.stderr)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "manifest.json", manifest(cfg, None, ["manifest.json"], "failed", code))
        return EXIT_NUMERICAL
    write_outputs(out, cfg, result)
    print(json.dumps(result.report, sort_keys=True, default=_jsonable))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="susyqm", description="Supersymmetric quantum mechanics experiments.")
    parser.add_argument("experiment", choices=sorted(experiments.RUNNERS))
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="overrides the optimizer seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.experiment, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
