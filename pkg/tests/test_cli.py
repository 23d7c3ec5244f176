import csv
import io
import json
import subprocess
import sys

import pytest

from lamebands import cli, floquet
from lamebands.integrate import IntegratorError


def run(*args):
    out = io.StringIO()
    code = cli.main(list(args), stdout=out)
    return code, out.getvalue()


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_edges_first_row():
    code, text = run("edges", "--a", "3", "--b", "2", "--m", "0.5", "--format", "csv")
    assert code == 0
    rows = csv_rows(text)
    assert float(rows[0]["E"]) == pytest.approx(4.5)
    assert rows[0]["nodes"] == "0"


def test_edges_include_4k_edge_at_three():
    code, text = run("edges", "--a", "3", "--b", "1", "--m", "0.5", "--format", "json")
    data = json.loads(text)
    assert code == 0
    assert data["a"] == "3" and data["m"] == "0.5"
    hits = [r for r in data["edges"] if abs(float(r["E"]) - 3) < 1e-9]
    assert hits and hits[0]["period"] == "4K"


def test_edges_equal_strengths():
    code, text = run("edges", "--a", "1", "--b", "1", "--m", "0.5")
    assert code == 0
    assert "period=K" in text
    assert "zero-width gaps: 0" in text


def test_rationals_echo_back():
    code, text = run("edges", "--a", "7/2", "--b", "1/2", "--m", "0.25", "--format", "json", "--emax", "20")
    data = json.loads(text)
    assert (data["a"], data["b"], data["p"], data["q"]) == ("7/2", "1/2", "63/4", "3/4")


@pytest.mark.parametrize(
    "args",
    [
        ("edges", "--a", "3", "--b", "2", "--m", "1"),
        ("edges", "--a", "3", "--b", "2", "--m", "1.5"),
        ("edges", "--a", "1", "--b", "2", "--m", "0.5"),
        ("edges", "--a", "x", "--b", "2", "--m", "0.5"),
        ("edges", "--a", "3", "--b", "2"),
        ("scan", "--a", "3", "--b", "2", "--m-range", "0.9:0.1:0.1"),
        ("scan", "--a", "3", "--b", "2", "--m", "0.5", "--workers", "0"),
        ("verify", "--only", "NOPE"),
        ("frobnicate",),
        (),
    ],
)
def test_usage_errors_exit_1(args, capsys):
    code, _ = run(*args)
    assert code == 1


def test_numerical_failure_exits_2(monkeypatch):
    def boom(*a, **k):
        raise IntegratorError("synthetic", 1.0, 0.5)

    monkeypatch.setattr(cli, "analyze", boom)
    code, _ = run("edges", "--a", "3", "--b", "2", "--m", "0.5")
    assert code == 2


def test_scan_partial_failure_is_flagged(monkeypatch, capsys):
    real = floquet.analyze

    def flaky(params, e_max=None, gaptol=floquet.GAPTOL):
        if params.m == 0.2:
            raise IntegratorError("synthetic", None, params.m)
        return real(params, e_max, gaptol)

    monkeypatch.setattr(floquet, "analyze", flaky)
    code, text = run("scan", "--a", "1", "--b", "0", "--m", "0.1,0.2", "--emax", "10")
    assert code == 2
    rows = csv_rows(text)
    assert [r["edge_index"] for r in rows if r["m"] == "0.2"] == ["FAILED"]
    assert "m=0.2" in capsys.readouterr().err


def test_scan_csv_deterministic(tmp_path):
    args = ["scan", "--a", "3", "--b", "1", "--m-range", "0.2:0.6:0.2", "--emax", "30"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "--out", str(a))[0] == 0
    assert run(*args, "--out", str(b), "--workers", "2")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = csv_rows(a.read_text())
    assert list(rows[0]) == list(floquet.CSV_COLUMNS)
    assert sorted({r["m"] for r in rows}) == ["0.2", "0.4", "0.6"]


def test_scan_row_count_matches_edges():
    code, text = run("scan", "--a", "2", "--b", "1", "--m", "0.3,0.7", "--format", "json", "--emax", "25")
    data = json.loads(text)
    chart = floquet.scan_m(2, 1, [0.3, 0.7], 25.0)
    assert len(data["rows"]) == sum(len(s.edges) for s in chart.structures)


def test_midband_command():
    code, text = run("midband", "--a", "3/2", "--b", "0", "--m", "0.5", "--emax", "3", "--format", "csv")
    assert code == 0
    es = [float(r["E"]) for r in csv_rows(text)]
    assert es == pytest.approx([1.0089745962155614, 2.7410254037844386], abs=1e-9)


def test_verify_single_entry():
    code, text = run("verify", "--only", "MB-1/2-1")
    assert code == 0
    assert "E = (9+m)/4" in text
    assert "1/1 entries PASS" in text


def test_verify_perturbed_fails_with_name():
    code, text = run("verify", "--only", "MB-1/2-1", "--only", "ALP-12-6-ground", "--perturb", "1e-3", "--m", "0.5")
    assert code == 3
    assert "failed: MB-1/2-1, ALP-12-6-ground" in text


def test_verify_json_and_env_tolerance(monkeypatch):
    monkeypatch.setenv("LAMEBANDS_FLOQUET_TOL", "1e-2")
    monkeypatch.setenv("LAMEBANDS_RESIDUAL_TOL", "1e-2")
    code, text = run("verify", "--only", "MB-1/2-1", "--perturb", "1e-3", "--m", "0.5", "--format", "json", "--no-nodes")
    assert code == 0
    data = json.loads(text)
    assert data["passed"] == data["total"] == 1


def test_bad_env_tolerance(monkeypatch):
    monkeypatch.setenv("LAMEBANDS_GAPTOL", "banana")
    assert run("edges", "--a", "1", "--b", "0", "--m", "0.5")[0] == 1


def test_catalog_command():
    code, text = run("catalog", "--format", "json", "--only", "ALP-12-6-ground")
    assert code == 0
    data = json.loads(text)
    assert data["entries"][0]["energy"]["text"] == "E = 9m"
    code, text = run("catalog")
    assert code == 0 and "MB-7/2-0" in text


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lamebands", "catalog", "--only", "MB-1/2-1"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "MB-1/2-1" in proc.stdout
