import csv
import io
import json
import subprocess
import sys

import pytest

from poisson_chaos import cli


def run_main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_threepath_example(tmp_path, capsys):
    cfg = write(tmp_path, "suite = gamma-inner-threepath\nn = 4\nphi = 1/2*x - 1/3\npsi = 1/4 + 1/5*x**2\n")
    code, out, err = run_main(["--spec", cfg], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["schema"] == 1
    assert max(r["float_max_rel_dev"] for r in rep["identities"]) < 1e-10
    assert all(r["exact_equal"] for r in rep["identities"])
    assert "PASS" in err


def test_charlier_example_off_diagonal(tmp_path, capsys):
    cfg = write(tmp_path, "suite = charlier-orth\nn = 1\nm = 2\nphi = 1/2*x - 3/10\npsi = indicator(0.5, 1.5, 0.7)\n")
    code, out, _ = run_main(["--spec", cfg, "--samples", "100000"], capsys)
    r = json.loads(out)["identities"][0]
    assert code == 0
    assert abs(r["estimates"]["lhs"]) < 3 * r["standard_errors"]["lhs"]


def test_unknown_suite_exit_code(tmp_path, capsys):
    code, _, err = run_main(["--spec", write(tmp_path, "suite = nope\n")], capsys)
    assert code == 2 and "line 1, column 9" in err
    code, _, _ = run_main(["--suite", "nope"], capsys)
    assert code == 2
    code, _, _ = run_main([], capsys)
    assert code == 2
    code, _, _ = run_main(["--spec", str(tmp_path / "missing.cfg")], capsys)
    assert code == 2


def test_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "run", lambda spec: {"schema": 1, "suite": "mecke", "identities": [{"identity": "x", "pass": False}], "pass": False})
    code, _, err = run_main(["--suite", "mecke"], capsys)
    assert code == 1 and "FAIL" in err


def test_reports_are_byte_identical_and_flags_override(tmp_path, capsys):
    cfg = write(tmp_path, "suite = mecke\nseed = 1\nsamples = 5000\n")
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    run_main(["--spec", cfg, "--out", str(a)], capsys)
    run_main(["--spec", cfg, "--out", str(a) + ".tmp"], capsys)
    run_main(["--spec", cfg, "--seed", "2", "--out", str(b)], capsys)
    run_main(["--spec", cfg, "--threads", "3", "--out", str(c)], capsys)
    ra, rb, rc = (json.loads(p.read_text()) for p in (a, b, c))
    assert a.read_bytes() == (tmp_path / "a.json.tmp").read_bytes().replace(b"a.json.tmp", b"a.json")
    assert ra["seed"] == 1 and rb["seed"] == 2 and rb["identities"] != ra["identities"]
    assert rc["identities"] == ra["identities"]
    assert "wall_time" not in ra


def test_timing_flag(capsys):
    code, out, _ = run_main(["--suite", "gamma-inner-threepath", "--timing"], capsys)
    assert code == 0 and json.loads(out)["wall_time"] > 0


def test_csv_output(capsys):
    code, out, _ = run_main(["--suite", "gamma-inner-threepath", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9 and rows[1]["exact"] == "11/36"
    code, out, _ = run_main(["--suite", "mecke", "--samples", "2000", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3 and set(rows[0]) == set(cli.CSV_FIELDS)


def test_report_embeds_inputs_for_audit(capsys):
    _, out, _ = run_main(["--suite", "laguerre-classical"], capsys)
    rep = json.loads(out)
    assert rep["inputs"].startswith("suite = laguerre-classical")
    assert rep["kappa"] == {str(n): __import__("math").factorial(n) for n in range(7)}
    for r in rep["identities"]:
        if "tolerance" in r:
            assert r["pass"] == (r["deviation"] <= r["tolerance"])


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "poisson_chaos", "--suite", "bogus"], capture_output=True, text=True)
    assert p.returncode == 2
