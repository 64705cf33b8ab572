import csv
import io
import json

import pytest

from charm_kit.cli import _attach_negative_values, main

from .conftest import shipped


@pytest.fixture()
def one_gen_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"semicircles": [{"index": 0, "center": 0.0, "radius": 1.0},
                                             {"index": 1, "center": 3.0, "radius": 1.0}],
                             "truncation": {"max_word_length": 8, "target_tail": 1e-12}}))
    return str(p)


@pytest.fixture()
def gaps_file(tmp_path):
    p = tmp_path / "gaps.json"
    p.write_text(json.dumps({"gaps": [{"a": -3.0, "b": -1.0}, {"a": 1.0, "b": 3.0}], "lambda_star": -2.0}))
    return str(p)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_negative_values_are_attached():
    assert _attach_negative_values(["--z", "-0.7,1.3", "--x-range", "-1:1:3", "--out", "f"]) == [
        "--z=-0.7,1.3", "--x-range=-1:1:3", "--out", "f"]


def test_green_eval(capsys, one_gen_file):
    code, out, _ = _run(capsys, "green", "eval", "--config", one_gen_file, "--z", "-0.7,1.3")
    doc = json.loads(out)
    assert code == 0 and 0 < doc["value"]["re"] ** 2 + doc["value"]["im"] ** 2 < 1


def test_green_critical(capsys, one_gen_file):
    code, out, _ = _run(capsys, "green", "critical", "--config", one_gen_file)
    doc = json.loads(out)
    assert code == 0 and len(doc["critical_points"]) == 1 and 0 < doc["widom_product"] < 1


def test_missing_critical_point_is_an_error(capsys, one_gen_file):
    code, _, err = _run(capsys, "green", "critical", "--config", one_gen_file, "--zstar", "0,2")
    assert code == 1 and "CriticalPointNotFound" in err


def test_martin_commands(capsys, one_gen_file):
    code, out, _ = _run(capsys, "martin", "critical", "--config", one_gen_file)
    assert code == 0 and len(json.loads(out)["critical_points"]) == 2
    code, out, _ = _run(capsys, "martin", "conditions", "--config", one_gen_file)
    assert code == 0 and json.loads(out)["verdict_a"]["verdict"] == "holds"


def test_approx_sweep(capsys, one_gen_file):
    code, out, _ = _run(capsys, "approx", "sweep", "--config", one_gen_file, "--levels", "0;0,1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["kept"] for r in rows] == ["0", "0 1"]


def test_boundary_commands(capsys, one_gen_file):
    code, out, _ = _run(capsys, "boundary", "julia", "--zeros", "0,1;-1,0.5", "--x-range", "-1:1:3")
    rows = list(csv.reader(io.StringIO(out)))[1:]
    assert code == 0 and len(rows) == 3
    for _, exact, fd in rows:
        assert float(exact) == pytest.approx(float(fd), rel=1e-5)
    code, out, _ = _run(capsys, "boundary", "gprime", "--config", one_gen_file, "--x", "-2")
    _, series, fd = list(csv.reader(io.StringIO(out)))[1]
    assert code == 0 and float(series) == pytest.approx(float(fd), rel=1e-6)
    code, _, err = _run(capsys, "boundary", "density")
    assert code == 1 and "--config" in err


def test_comb_commands(capsys, gaps_file):
    code, out, _ = _run(capsys, "comb", "solve", "--gaps", gaps_file)
    doc = json.loads(out)
    assert code == 0 and doc["martin"]["mu"][0] == pytest.approx(-doc["martin"]["mu"][1])
    code, out, _ = _run(capsys, "comb", "eval", "--gaps", gaps_file, "--kind", "martin",
                        "--x-range", "-5:5:5", "--y", "0.5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and all(float(r["theta_im"]) > 0 for r in rows)
    code, out, _ = _run(capsys, "comb", "eval", "--gaps", gaps_file, "--lam", "-2,0")
    assert code == 1


def test_run_scenario(capsys, tmp_path):
    path = tmp_path / "trivial.json"
    path.write_text(json.dumps(shipped("trivial")))
    out_file = tmp_path / "r.csv"
    code, _, err = _run(capsys, "run", "--scenario", str(path), "--format", "csv", "--out", str(out_file))
    assert code == 0 and "trivial: pass" in err
    assert out_file.read_text().startswith("path,value\n")


def test_run_missing_file(capsys, tmp_path):
    code, _, err = _run(capsys, "run", "--scenario", str(tmp_path / "none.json"))
    assert code == 1 and "error" in err
