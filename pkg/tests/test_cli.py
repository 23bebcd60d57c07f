import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from noncomp_lab.cli import ExperimentSpec, SCHEMAS, load_spec, main, parse_scale, run, validate
from noncomp_lab.errors import SchemaError

SMALL = {
    "enumerate": ["--budget", "64"],
    "derivative": ["--trials", "12", "--scale", "0.9invalpha", "--budget", "64", "--nonmembers", "5"],
    "removable": ["--budget", "64"],
    "embed": ["--harness", "tracking", "--trials", "6", "--j-max", "10"],
    "classify": ["--field", "radial:rho2=1", "--k", "16", "--level", "5", "--points", "0.2:0.1,0.5:-0.5"],
}


def run_cli(tmp_path, name, command, extra, seed=7):
    out = tmp_path / name
    code = main([command, "--seed", str(seed), "--out", str(out)] + extra)
    assert code == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.parametrize("command", sorted(SMALL))
def test_determinism(tmp_path, command, monkeypatch):
    a = run_cli(tmp_path, "a", command, SMALL[command])
    monkeypatch.setenv("NONCOMP_LAB_THREADS", "3")
    b = run_cli(tmp_path, "b", command, SMALL[command])
    assert a == b
    assert f"{command}.json" in a


def test_derivative_contract(tmp_path):
    files = run_cli(tmp_path, "d", "derivative", ["--trials", "100", "--scale", "0.9invalpha"])
    rep = json.loads(files["derivative.json"])
    assert rep["misclassifications"] == 0 and rep["gap_violations"] == 0
    assert rep["format_version"] == 1
    assert "derivative.csv" in files


def test_classify_unit_disk(tmp_path):
    files = run_cli(tmp_path, "c", "classify", ["--field", "radial:rho2=1", "--k", "16", "--level", "6"])
    rep = json.loads(files["classify.json"])
    assert rep["counts"]["InW_s"] + rep["counts"]["Excluded(B)"] == rep["cells"]
    # the only excluded cells form the strip around the repelling unit circle
    rows = list(csv.DictReader(io.StringIO(files["classify.csv"].decode())))
    for r in rows:
        if r["verdict"] != "InW_s":
            assert float(Fraction(r["x1"])) ** 2 + float(Fraction(r["x2"])) ** 2 > (1 - 1 / 16) ** 2
    assert files["classify.svg"].startswith(b"<?xml")
    assert rep["exclusivity"]["violations"] == 0


def test_spec_file_and_override(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"command": "enumerate", "params": {"budget": 32}, "seed": 1}))
    assert main(["--spec", str(spec)]) == 0
    small = json.loads(capsys.readouterr().out)
    assert main(["--spec", str(spec), "enumerate", "--budget", "64"]) == 0
    big = json.loads(capsys.readouterr().out)
    assert big["spec"]["params"]["budget"] == 64
    assert big["values"][: len(small["values"])] == small["values"]


@pytest.mark.parametrize("text", ["", "{}", "[]", '{"params": {}}', '{"command": "enumerate", "bogus": 1}'])
def test_empty_or_malformed_spec(tmp_path, text):
    spec = tmp_path / "spec.json"
    spec.write_text(text)
    with pytest.raises(SchemaError):
        load_spec(str(spec))
    assert main(["--spec", str(spec)]) == 2


def test_schema_errors():
    with pytest.raises(SchemaError):
        validate(ExperimentSpec("nope"))
    with pytest.raises(SchemaError):
        validate(ExperimentSpec("enumerate", {"colour": "red"}))
    with pytest.raises(SchemaError):
        validate(ExperimentSpec("enumerate", {"budget": "many"}))
    assert main(["classify", "--mode", "sloppy", "--level", "3"]) == 2
    assert main([]) == 2


def test_module_errors_exit_nonzero(capsys):
    assert main(["classify", "--field", "plateau:M=4", "--level", "3"]) == 3
    assert "NotStructurallyStable" in capsys.readouterr().err


def test_parse_scale():
    assert parse_scale("0.9invalpha", Fraction(5, 2)) == Fraction(9, 25)
    assert parse_scale("invalpha", Fraction(5, 2)) == Fraction(2, 5)
    assert parse_scale("1/3", Fraction(5, 2)) == Fraction(1, 3)


def test_every_command_has_defaults():
    for command in SCHEMAS:
        if command != "report":
            validate(ExperimentSpec(command))


def test_report_aggregates(tmp_path):
    run_cli(tmp_path, "d", "derivative", SMALL["derivative"])
    run_cli(tmp_path, "c", "classify", SMALL["classify"])
    art = run(ExperimentSpec("report", {"inputs": [str(tmp_path / "d" / "derivative.json"),
                                                    str(tmp_path / "c" / "classify.json")]}))
    kinds = [r["kind"] for r in art.report["rows"]]
    assert kinds == ["derivative-harness", "basin-grid"]
    assert "report.csv" in art.files


def test_python_m_entry_point():
    proc = subprocess.run([sys.executable, "-m", "noncomp_lab", "removable", "--budget", "32"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["kind"]
