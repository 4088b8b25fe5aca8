"""Command line experiment runner.

    horokit run CONFIG.json [--out DIR] [--seed N] [--verbose]

Exit status: 0 when every row passes, 1 when a row contradicts its expected
outcome, 2 when inconclusive rows are present, 3 for configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import domains as dm
from .experiments import EXPERIMENTS, ConfigError
from .verdict import INCONCLUSIVE, UNDECIDABLE, jsonable

SCHEMA = "1"

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 3

log = logging.getLogger("horokit")


def report_schema_version() -> str:
    return SCHEMA


class ExperimentConfig:
    """Parsed run configuration; ``to_dict`` reproduces the accepted input."""

    FIELDS = ("experiment", "domain", "metric", "payload", "output")

    def __init__(self, experiment, domain, metric, payload=None, output=None):
        self.experiment = experiment
        self.domain = domain
        self.metric = metric
        self.payload = payload or {}
        self.output = output or {}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        schema = str(data.get("schema", SCHEMA))
        if schema != SCHEMA:
            raise ConfigError("unsupported schema %r (this runner reads %r)" % (schema, SCHEMA))
        extra = set(data) - set(cls.FIELDS) - {"schema"}
        if extra:
            raise ConfigError("unknown configuration keys: %s" % ", ".join(sorted(extra)))
        name = data.get("experiment")
        if name not in EXPERIMENTS:
            raise ConfigError("unknown experiment %r" % (name,))
        try:
            domain = dm.domain_from_dict(data.get("domain", {"kind": dm.UNIT_DISC, "dim": 1}))
            metric = dm.MetricConfig.from_dict(data.get("metric", {}))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        payload = data.get("payload", {})
        if not isinstance(payload, dict):
            raise ConfigError("payload must be an object")
        return cls(name, domain, metric, payload, data.get("output", {}))

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "experiment": self.experiment,
                "domain": dm.domain_to_dict(self.domain), "metric": self.metric.to_dict(),
                "payload": self.payload, "output": self.output}


def _status(r: dict) -> str:
    outcome = r["verdict"]["outcome"]
    if "expected" in r:
        if outcome == r["expected"]:
            return "pass"
        return "inconclusive" if outcome == INCONCLUSIVE else "fail"
    return "inconclusive" if outcome in (INCONCLUSIVE, UNDECIDABLE) else "pass"


def _flatten(rows):
    out = []
    for r in rows:
        nested = r.pop("near", None)
        out.append(r)
        if nested:
            out.append(nested)
    return out


def run_config(cfg: ExperimentConfig):
    """Run one experiment; returns (report dict, plot points)."""
    fn = EXPERIMENTS[cfg.experiment]
    try:
        rows, points = fn(cfg.domain, cfg.metric, cfg.payload)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        # malformed payloads surface as lookup, type or value errors
        raise ConfigError("%s: %s" % (type(exc).__name__, exc)) from exc
    rows = _flatten(rows)
    for r in rows:
        r["status"] = _status(r)
    rows.sort(key=lambda r: r["key"])
    keys = [r["key"] for r in rows]
    if len(set(keys)) != len(keys):
        raise RuntimeError("duplicate report keys")
    summary = {s: sum(r["status"] == s for r in rows) for s in ("pass", "fail", "inconclusive")}
    echo = cfg.to_dict()
    echo.pop("output")
    report = {"schema": SCHEMA, "config": echo, "experiment": cfg.experiment,
              "rows": rows, "summary": summary}
    return jsonable(report), points


def exit_code(report: dict) -> int:
    s = report["summary"]
    if s["fail"]:
        return EXIT_FAIL
    if s["inconclusive"]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def write_report(report: dict, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def write_points(points, path: str, dim: int):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["tag"]
        for j in range(1, dim + 1):
            header += ["re%d" % j, "im%d" % j]
        w.writerow(header)
        for tag, z in points:
            z = np.asarray(z, dtype=complex)
            w.writerow([tag] + [repr(float(v)) for c in z for v in (c.real, c.imag)])


def load_config(path: str, seed=None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc)) from exc
    if seed is not None and isinstance(data, dict):
        data.setdefault("metric", {})
        data["metric"]["seed"] = int(seed)
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="horokit", description="Horosphere experiment runner")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("config")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--seed", type=int, default=None, help="override metric.seed")
    run.add_argument("--verbose", action="store_true")
    sub.add_parser("schema", help="print the report schema version")
    args = ap.parse_args(argv)

    if args.command == "schema":
        print(report_schema_version())
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        log.info("running %s on %r", cfg.experiment, cfg.domain)
        report, points = run_config(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    write_report(report, os.path.join(args.out, cfg.output.get("report", "report.json")))
    if points and cfg.output.get("points", "points.csv"):
        write_points(points, os.path.join(args.out, cfg.output.get("points", "points.csv")),
                     cfg.domain.dim)
    code = exit_code(report)
    for r in report["rows"]:
        log.info("%-28s %-12s %s", r["key"], r["verdict"]["outcome"], r["status"])
    log.info("summary %s -> exit %d", report["summary"], code)
    return code


if __name__ == "__main__":
    sys.exit(main())
