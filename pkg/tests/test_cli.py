import json
import math
import sys

import pytest

from paraspace.cli import main
from paraspace.errors import NodeUnavailable
from paraspace.project import load_project
from paraspace.region import Interval, save_region
from paraspace.table import RowStatus

SINE_CMD = f"{sys.executable} -m paraspace.workers.sine"
OSC_CMD = f"{sys.executable} -m paraspace.workers.oscillator"


def run_cli(*args):
    return main([str(a) for a in args])


def test_init_with_node_registers_descriptor(tmp_path):
    folder = tmp_path / "demo"
    assert run_cli("init", "--project", folder, "--node-cmd", SINE_CMD) == 0
    project = load_project(folder)
    assert [v.name for v in project.table.factors] == ["phi", "f", "a"]
    assert project.table.variable("a").default == 1.0
    assert project.table.variable("solution").role.value == "response"
    assert project.nodes[0].name == "sine"


def test_init_plain_variables(tmp_path):
    folder = tmp_path / "plain"
    assert run_cli("init", "--project", folder,
                   "--var", "x:factor:0.5", "--var", "score:derived") == 0
    project = load_project(folder)
    assert project.table.variable("x").default == 0.5


def test_sample_to_stdout(tmp_path, capsys):
    region = tmp_path / "roi.region.json"
    save_region(Interval("x", 0.0, 1.0), region)
    assert run_cli("sample", "--region", region, "--count", 5, "--seed", 3) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "x"
    assert len(out) == 6
    assert all(0.0 <= float(v) <= 1.0 for v in out[1:])


def test_sample_grid_box(tmp_path, capsys):
    assert run_cli("sample", "--box", "x=0:1,y=0:1", "--method", "grid",
                   "--levels", "x=3,y=3") == 0
    assert len(capsys.readouterr().out.splitlines()) == 10


def test_full_pipeline(tmp_path, capsys):
    folder = tmp_path / "pipe"
    assert run_cli("init", "--project", folder, "--node-cmd", OSC_CMD) == 0
    assert run_cli("sample", "--project", folder, "--box", "k=0:4,c=0:4",
                   "--count", 40, "--seed", 11) == 0
    assert run_cli("run", "--project", folder, "--workers", 2) == 0
    project = load_project(folder)
    assert all(r.status is RowStatus.COMPUTED for r in project.table.rows)

    assert run_cli("feature", "--project", folder, "--feature", "crossings") == 0
    assert run_cli("feature", "--project", folder, "--feature", "x_min") == 0
    assert run_cli("feature", "--project", folder, "--expr", "c*c - 4*k",
                   "--name", "margin") == 0
    project = load_project(folder)
    for row in project.table.rows:
        expected = row.values["c"] ** 2 - 4.0 * row.values["k"]
        assert row.values["margin"] == pytest.approx(expected, rel=1e-12)

    spectrum = tmp_path / "spectrum.csv"
    assert run_cli("embed", "--project", folder, "--columns", "x_min,crossings",
                   "--kernel", "gaussian", "--weights", "auto",
                   "--spectrum-out", spectrum) == 0
    project = load_project(folder)
    assert all("embed_x" in r.values for r in project.table.rows)
    lines = spectrum.read_text().splitlines()
    assert lines[0] == "index,eigenvalue"
    assert len(lines) == 41  # header + one eigenvalue per embedded row
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert values == sorted(values, reverse=True)

    region = tmp_path / "osc.region.json"
    save_region(Interval("margin", 0.0, 100.0), region)
    assert run_cli("label", "--project", folder, "--column", "regime",
                   "--label", "monotone", "--region", region) == 0
    assert run_cli("summarize", "--project", folder, "--column", "regime",
                   "--label", "monotone") == 0
    summary_out = capsys.readouterr().out
    assert "monotone" in summary_out and "k:" in summary_out

    out_csv = tmp_path / "out.csv"
    assert run_cli("export", "--project", folder, "--out", out_csv) == 0
    header = out_csv.read_text().splitlines()[0]
    assert header.startswith("k,c,solution")


def test_export_empty_table(tmp_path, capsys):
    folder = tmp_path / "empty"
    run_cli("init", "--project", folder, "--var", "x:factor")
    capsys.readouterr()
    assert run_cli("export", "--project", folder) == 0
    assert capsys.readouterr().out == "x\n"


def test_run_without_node_exit_code(tmp_path, capsys):
    folder = tmp_path / "nonode"
    run_cli("init", "--project", folder, "--var", "x:factor:0")
    code = run_cli("run", "--project", folder)
    assert code == NodeUnavailable.exit_code
    assert "error" in capsys.readouterr().err


def test_paraspace_home_resolves_relative_paths(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PARASPACE_HOME", str(tmp_path))
    assert run_cli("init", "--project", "rel", "--var", "x:factor:0") == 0
    assert (tmp_path / "rel" / "project.json").exists()
    assert run_cli("export", "--project", "rel") == 0


def test_usage_error_exit_code():
    assert run_cli("sample", "--count", "oops") == 2
