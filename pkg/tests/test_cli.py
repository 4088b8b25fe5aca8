import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from horokit import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def _run(tmp_path, data, *extra):
    out = tmp_path / "out"
    code = cli.main(["run", _write(tmp_path, data), "--out", str(out), *extra])
    report = None
    if (out / "report.json").exists():
        report = json.loads((out / "report.json").read_text())
    return code, report, out


def test_schema_version(capsys):
    assert cli.report_schema_version() == "1"
    assert cli.main(["schema"]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == "1"


def test_disc_slice_traces_closed_form(tmp_path):
    out = tmp_path / "slice"
    code = cli.main(["run", str(CONFIGS / "disc_slice.json"), "--out", str(out)])
    assert code == cli.EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["schema"] == "1"
    with open(out / "points.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["tag", "re1", "im1"]
    level = np.array([complex(float(r[1]), float(r[2])) for r in rows[1:] if r[0] == "level"])
    assert len(level) > 100
    # the horocycle of radius 1 at 1 is the circle |z - 1/2| = 1/2
    assert np.max(np.abs(np.abs(level - 0.5) - 0.5)) < 1e-2


def test_classify_interleaved_names_corner_class(tmp_path):
    out = tmp_path / "cls"
    code = cli.main(["run", str(CONFIGS / "classify_interleaved.json"), "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert code == cli.EXIT_OK
    assert report["rows"][0]["canonical"] == "BidiscW1(1, 1)"


def test_oracle_suite_passes(tmp_path):
    data = json.loads((CONFIGS / "oracle_suite.json").read_text())
    code, report, _ = _run(tmp_path, data)
    assert code == cli.EXIT_OK
    assert report["summary"] == {"pass": 11, "fail": 0, "inconclusive": 0}


def test_rows_carry_diagnostics(tmp_path):
    data = json.loads((CONFIGS / "oracle_suite.json").read_text())
    _, report, _ = _run(tmp_path, data)
    for r in report["rows"]:
        assert {"estimate", "margin", "converged", "outcome"} <= set(r["verdict"])
    keys = [r["key"] for r in report["rows"]]
    assert keys == sorted(keys)


def test_determinism_across_runs_and_threads(tmp_path, monkeypatch):
    cfg = str(CONFIGS / "oracle_suite.json")
    blobs = []
    for i, threads in enumerate(("1", "4")):
        monkeypatch.setenv("HOROKIT_THREADS", threads)
        out = tmp_path / ("run%d" % i)
        assert cli.main(["run", cfg, "--out", str(out), "--seed", "3"]) == cli.EXIT_OK
        blobs.append((out / "report.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_seed_override(tmp_path):
    data = {"experiment": "delta-estimate", "domain": {"kind": "UnitDisc"},
            "payload": {"scales": [2.0], "triangles": 2}}
    _, report, _ = _run(tmp_path, data, "--seed", "17")
    assert report["config"]["metric"]["seed"] == 17


def test_failed_expectation_exit_code(tmp_path):
    data = {"experiment": "equivalence", "domain": {"kind": "UnitDisc"},
            "payload": {"a": {"label": "Radial", "params": {"p": [1]}},
                        "b": {"label": "Radial", "params": {"p": [-1]}},
                        "expect": "true"}}
    code, report, _ = _run(tmp_path, data)
    assert code == cli.EXIT_FAIL
    assert report["rows"][0]["status"] == "fail"


def test_inconclusive_exit_code(tmp_path):
    # a rotation has an interior fixed point: the orbit never reaches the boundary
    data = {"experiment": "denjoy-wolff", "domain": {"kind": "UnitDisc"},
            "payload": {"map": {"kind": "DiscAutomorphism", "params": {"a": 0, "theta": 1.0}},
                        "z0": [0.3]}}
    code, report, _ = _run(tmp_path, data)
    assert code == cli.EXIT_INCONCLUSIVE
    assert report["summary"]["inconclusive"] >= 1


@pytest.mark.parametrize("data", [
    {"schema": "2", "experiment": "oracle-suite"},
    {"experiment": "no-such-experiment"},
    {"experiment": "oracle-suite", "colour": "blue"},
    {"experiment": "oracle-suite", "domain": {"kind": "Torus"}},
    {"experiment": "oracle-suite", "metric": {"tol": -1}},
    {"experiment": "horosphere-slice", "domain": {"kind": "UnitDisc"}, "payload": {}},
    {"experiment": "classify-bidisc", "domain": {"kind": "UnitDisc"},
     "payload": {"sequence": {"label": "BidiscW2", "params": {"p": [1]}}}},
    {"experiment": "cluster-set", "domain": {"kind": "UnitDisc"},
     "payload": {"map": {"kind": "DiscAutomorphism", "params": {"a": "bad"}}, "point": [1]}},
    {"experiment": "oracle-suite", "payload": {"only": ["nope"]}},
], ids=["future-schema", "unknown-experiment", "unknown-key", "bad-domain", "bad-metric",
        "missing-sequence", "wrong-domain", "bad-map", "bad-suite-entry"])
def test_config_errors(tmp_path, data, capsys):
    code, report, _ = _run(tmp_path, data)
    assert code == cli.EXIT_CONFIG
    assert report is None
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p)]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_config_roundtrip():
    data = json.loads((CONFIGS / "denjoy_wolff_ball.json").read_text())
    cfg = cli.ExperimentConfig.from_dict(data)
    again = cli.ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert cfg.output == {"report": "report.json", "points": "orbit.csv"}


def test_custom_output_names(tmp_path):
    out = tmp_path / "dw"
    code = cli.main(["run", str(CONFIGS / "denjoy_wolff_ball.json"), "--out", str(out)])
    assert code == cli.EXIT_OK
    assert (out / "orbit.csv").exists() and not (out / "points.csv").exists()


def test_report_is_strict_json(tmp_path):
    data = {"experiment": "impression", "domain": {"kind": "UnitDisc"},
            "payload": {"sequence": {"label": "Radial", "params": {"p": [1]}}}}
    _, _, out = _run(tmp_path, data)
    text = (out / "report.json").read_text()
    assert "NaN" not in text and "Infinity" not in text


def test_console_entry_point(tmp_path):
    env = dict(os.environ, HOROKIT_THREADS="2")
    res = subprocess.run([sys.executable, "-m", "horokit.cli", "run",
                          str(CONFIGS / "classify_interleaved.json"), "--out", str(tmp_path),
                          "--verbose"], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert "summary" in res.stderr
