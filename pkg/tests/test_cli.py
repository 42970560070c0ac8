import csv
import json

import pytest

from strathet.cli import run_cli


def run(argv, capsys):
    code = run_cli(argv)
    out = capsys.readouterr()
    return code, out


def json_run(argv, capsys):
    code, out = run(argv, capsys)
    assert code == 0, out.err
    return json.loads(out.out)


@pytest.fixture
def small_csv(tmp_path):
    rows = ["y,treat,g,x"]
    for i in range(24):
        g = "a" if i < 12 else "b"
        rows.append(f"{(i * 7) % 11 + (3 if g == 'b' and i % 2 else 0)},{i % 2},{g},{i}")
    path = tmp_path / "small.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def test_usage_errors(capsys):
    assert run_cli([]) == 2
    assert run_cli(["het-test"]) == 2
    assert run_cli(["simulate", "--scenario", "A1"]) == 2  # seed is required
    capsys.readouterr()


def test_runtime_error_exit(tmp_path, capsys):
    code, out = run(["het-test", "--input", str(tmp_path / "absent.csv"), "--outcome", "y",
                     "--arm", "t", "--stratum-column", "g"], capsys)
    assert code == 1
    assert "error" in out.err


def test_het_test_small(small_csv, capsys, tmp_path):
    out_path = tmp_path / "res.json"
    code, _ = run(["het-test", "--input", str(small_csv), "--outcome", "y", "--arm", "treat",
                   "--stratum-column", "g", "--reference-draws", "2000", "--seed", "3",
                   "--output", str(out_path)], capsys)
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["command"] == "het-test"
    assert set(report) == {"command", "config", "results", "timing"}
    res = report["results"]
    assert [s["label"] for s in res["strata"]] == ["a", "b"]
    assert 0.0 <= res["p_value"] <= 1.0
    assert "H" in res["lrt"]


def test_het_test_deterministic(small_csv, capsys):
    argv = ["het-test", "--input", str(small_csv), "--outcome", "y", "--arm", "treat",
            "--stratify-threshold", "x:11", "--reference-draws", "2000", "--estimator", "sampled",
            "--m-multiplier", "20", "--seed", "9"]
    a = json_run(argv, capsys)["results"]
    b = json_run(argv, capsys)["results"]
    assert a == b


def test_lrt_and_mann_whitney(small_csv, capsys):
    res = json_run(["lrt", "--input", str(small_csv), "--outcome", "y", "--arm", "treat",
                    "--stratum-column", "g"], capsys)["results"]
    assert res["lrt"]["df"] == 1
    res = json_run(["mann-whitney", "--input", str(small_csv), "--outcome", "y", "--arm", "treat"],
                   capsys)["results"]["mann_whitney"]
    assert res["n_treatment"] == res["n_control"] == 12
    assert 0.0 <= res["statistic"] <= 1.0


def test_log_transform_requires_positive(small_csv, capsys):
    code, _ = run(["lrt", "--input", str(small_csv), "--outcome", "y", "--arm", "treat",
                   "--stratum-column", "g", "--transform", "log"], capsys)
    assert code == 1  # y contains zeros


def test_simulate(tmp_path, capsys):
    csv_path = tmp_path / "sim.csv"
    report = json_run(["simulate", "--scenario", "a4", "--sizes", "10,10,10", "--replicates", "5",
                       "--reference-draws", "1000", "--m-multiplier", "20", "--seed", "1",
                       "--csv", str(csv_path)], capsys)
    assert report["config"]["log_transform"] is True
    assert report["results"]["reports"][0]["replicates"] == 5
    with open(csv_path, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_power(tmp_path, capsys):
    csv_path = tmp_path / "power.csv"
    report = json_run(["power", "--scenario", "A3", "--gammas", "0,1", "--ns", "10",
                       "--replicates", "3", "--reference-draws", "1000", "--m-multiplier", "20",
                       "--seed", "2", "--csv", str(csv_path)], capsys)
    assert len(report["results"]["reports"]) == 2
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["gamma"] for r in rows] == ["0.0", "0.0", "1.0", "1.0"]


def test_nsw_income_split(nsw_path, capsys):
    res = json_run(["het-test", "--input", str(nsw_path), "--outcome", "re78", "--arm", "treat",
                    "--stratify-threshold", "re74:0", "--seed", "7"], capsys)["results"]
    assert res["u_vector"][0]["mode"] == "exact"
    assert res["u_vector"][0]["value"] == pytest.approx(0.409, abs=0.001)
    assert res["p_value"] == pytest.approx(0.032, abs=0.01)


def test_nsw_case_study(nsw_path, capsys):
    res = json_run(["case-study", "--input", str(nsw_path), "--reference-draws", "10000"],
                   capsys)["results"]
    assert res["mann_whitney"]["statistic"] == pytest.approx(0.43, abs=0.005)
    assert [(s["n_treatment"], s["n_control"]) for s in res["age"]["strata"]] == [
        (47, 83), (41, 56), (49, 60), (48, 61)]
    assert len(res["age"]["u_vector"]) == 6
