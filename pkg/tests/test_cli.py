import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hoprob import cli

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"


def run(*argv):
    buf = io.StringIO()
    code = cli.main([str(a) for a in argv], stream=buf)
    return code, buf.getvalue()


@pytest.mark.parametrize("argv, golden", [
    (["gaussian"], "gaussian.csv"),
    (["semicircle"], "semicircle.csv"),
    (["gaussian", "--sigma2", "2", "--format", "json"], "gaussian_sigma2_2.json"),
])
def test_golden_output(argv, golden):
    code, out = run(*argv)
    assert code == 0
    assert out == (GOLDEN / golden).read_text()


def test_output_is_deterministic():
    assert run("check", DATA / "random_mixed.json")[1] == run("check", DATA / "random_mixed.json")[1]


@pytest.mark.parametrize("command, fixture", [
    ("check", "gaussian.json"),
    ("check", "random_mixed.json"),
    ("descend", "random_mixed.json"),
    ("transfer", "random_mixed.json"),
    ("transfer", "gaussian.json"),
    ("flow", "gaussian.json"),
    ("law", "gaussian.json"),
    ("clt", "clt.json"),
])
def test_commands_pass_on_fixtures(command, fixture):
    code, out = run(command, DATA / fixture)
    assert code == 0, out
    assert out.rstrip().endswith("# status: pass")


def test_flat_on_dual_numbers():
    code, out = run("flat", DATA / "dual_numbers.json", "--order", "4", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert all(entry["ok"] for entry in report["checks"].values())
    mgf = {row["monomial"]: row["coeff"] for row in report["tables"]["mgf"]}
    assert mgf["1"] == 1
    assert mgf["t[x]"] == "1/2"
    assert mgf["t[1]*t[x]"] == "1/2"


def test_bad_product_reports_witness():
    code, out = run("check", DATA / "bad_m2.json")
    assert code == 1
    assert "m symmetric in the last two slots" in out
    assert "witness" in out


@pytest.mark.parametrize("argv, code", [
    (["check", DATA / "missing.json"], 2),
    (["gaussian", "--nmax", "13"], 3),
    (["gaussian", "--degree-cap", "41"], 3),
])
def test_error_exit_codes(argv, code, tmp_path):
    got, out = run(*argv)
    assert got == code
    assert json.loads(out)["status"] == "error"


def test_malformed_json_is_a_schema_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"basis\": 3}")
    assert run("check", bad)[0] == 2
    bad.write_text("not json")
    assert run("check", bad)[0] == 2


def test_out_directory(tmp_path):
    code, _ = run("gaussian", "--max-moment", "6", "--out", tmp_path)
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"report.json", "summary.txt", "moments.csv", "cumulants.csv"} <= names
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "pass"
    assert (tmp_path / "moments.csv").read_text().splitlines()[:3] == ["n,moment", "0,1", "1,0"]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hoprob.cli", "semicircle", "--max-moment", "6"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "6,5" in proc.stdout
