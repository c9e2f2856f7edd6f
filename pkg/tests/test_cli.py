import csv
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from zipkit import cli
from zipkit.config import build_config
from zipkit.errors import InvalidInput
from zipkit.output import atomic_write, fmt_float, load_schema

FAST = ["--param", "steady_points=11", "--param", "hopf_scan_points=64",
        "--param", "omega_points=40", "--param", "map_mu_points=3"]


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), *FAST])


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        return first, list(csv.DictReader(fh))


def validate(tmp_path, name):
    doc = json.loads((tmp_path / f"{name}.json").read_text())
    jsonschema.validate(doc, load_schema(name))
    return doc


@pytest.mark.parametrize("name", ["steady", "hopf", "normalform", "buffer", "bode"])
def test_commands_write_valid_outputs(tmp_path, name):
    assert run(tmp_path, name) == 0
    header, rows = read_csv(tmp_path / f"{name}.csv")
    assert header == f"# schema=zipkit.{name} version=1"
    assert rows
    doc = validate(tmp_path, name)
    assert doc["schema"] == f"zipkit.{name}" and doc["version"] == 1
    assert len(doc["records"]) == len(rows)


def test_orbits_and_report(tmp_path):
    args = ["--param", "orbit_points=6"]
    assert run(tmp_path, "orbits", *args) == 0
    doc = validate(tmp_path, "orbits")
    assert doc["summary"]["n_failed"] == 0
    assert run(tmp_path, "report", *args) == 0
    rep = validate(tmp_path, "report")
    assert rep["summary"]["all_passed"], [c for c in rep["summary"]["checks"] if not c["passed"]]
    assert not (tmp_path / "report.csv").exists()


def test_hopf_values(tmp_path):
    assert run(tmp_path, "hopf", "--format", "json") == 0
    assert not (tmp_path / "hopf.csv").exists()
    recs = validate(tmp_path, "hopf")["records"]
    assert [round(r["mu_star"], 3) for r in recs] == [0.19, 12.643]
    assert [r["center_index"] for r in recs] == [1, -1]


def test_floats_have_full_precision(tmp_path):
    assert run(tmp_path, "steady", "--format", "csv") == 0
    _, rows = read_csv(tmp_path / "steady.csv")
    val = rows[5]["u1"]
    assert float(val) == float(fmt_float(float(val)))
    assert len(val.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) >= 15
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "nan" and fmt_float(float("-inf")) == "-inf"


def test_reproducible_bit_for_bit(tmp_path):
    assert run(tmp_path, "normalform") == 0
    first = [(tmp_path / f"normalform.{e}").read_bytes() for e in ("csv", "json")]
    assert run(tmp_path, "normalform") == 0
    assert first == [(tmp_path / f"normalform.{e}").read_bytes() for e in ("csv", "json")]


def test_missing_output_directory_is_created(tmp_path):
    out = tmp_path / "x" / "y"
    assert run(out, "steady") == 0
    assert (out / "steady.csv").exists()


def test_precedence_flag_over_file_over_default(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("[scan]\nmu_hi = 20  # comment\nsteady_points = 7\n"
                        "[output]\nformat = json\n")
    cfg = build_config(str(cfg_file), ["scan.mu_hi=10"], out=None, format="csv")
    assert cfg.mu_hi == 10.0          # flag beats file
    assert cfg.steady_points == 7     # file beats default
    assert cfg.format == "csv"        # dedicated flag beats file
    assert cfg.gamma1 == 380.0        # default
    assert build_config(str(cfg_file)).format == "json"


@pytest.mark.parametrize("args", [
    ["steady", "--param", "mu_hi=-1"],
    ["steady", "--param", "nonsense=1"],
    ["steady", "--param", "kappa=abc"],
    ["steady", "--param", "noequals"],
    ["steady", "--format", "xml"],
    ["frobnicate"],
    ["steady", "--config", "/nonexistent/file.ini"],
    ["bode", "--param", "mu0=0"],
    ["steady", "--param", "gamma1=-5"],
])
def test_invalid_input_exit_code(tmp_path, args):
    assert cli.main([*args, "--out", str(tmp_path)]) == 2


def test_malformed_config_file(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("mu_hi = 3\n")
    assert cli.main(["steady", "--config", str(bad), "--out", str(tmp_path)]) == 2
    with pytest.raises(InvalidInput):
        build_config(None, ["scan.kappa=1"])


def test_numerical_failure_exit_code(tmp_path):
    # only one Hopf point in range, so no orbit branch can be built
    assert run(tmp_path, "orbits", "--param", "mu_hi=5") == 1


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "f.csv"
    atomic_write(target, "old\n")

    def boom(*a):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["f.csv"]


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "zipkit.cli", "steady", "--out", str(tmp_path),
                          "--param", "steady_points=3"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "steady.csv" in out.stdout
    bad = subprocess.run([sys.executable, "-m", "zipkit.cli", "steady", "--param", "x=1"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert bad.returncode == 2 and "invalid input" in bad.stderr


def test_gnuplot_blocks(tmp_path):
    assert run(tmp_path, "bode", "--gnuplot") == 0
    text = (tmp_path / "bode.dat").read_text()
    assert text.startswith("# p1 omega")
    assert text.count("\n\n\n") == 4
