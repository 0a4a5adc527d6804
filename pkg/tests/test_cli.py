import csv
import dataclasses
import io
import json

import pytest

from fbstcal.calibrate import optimal_cutoff
from fbstcal.cli import TABLE_N, main
from fbstcal.model import TestConfig
from fbstcal.risk import expected_type2_error, power, type1_error


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestEvidence:
    def test_at_null(self, capsys):
        code, out, _ = run(capsys, "evidence", "--m", "0", "--v2", "1", "--sigma2", "1",
                           "--n", "10", "--theta0", "0", "--xbar", "0")
        assert (code, out) == (0, "1\n")

    def test_ten_significant_digits(self, capsys):
        _, out, _ = run(capsys, "evidence", "--n", "4", "--xbar", "1")
        assert out == "0.07363827012\n"

    def test_missing_n(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["evidence", "--xbar", "1"])
        assert info.value.code == 2
        assert "--n" in capsys.readouterr().err

    @pytest.mark.parametrize("flag, value", [("--v2", "-1"), ("--sigma2", "0"), ("--n", "0"), ("--xbar", "nan")])
    def test_invalid_flag_named(self, capsys, flag, value):
        argv = ["evidence", "--n", "4", "--xbar", "1"]
        if flag in argv:
            argv[argv.index(flag) + 1] = value
        else:
            argv += [flag, value]
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
        assert flag in capsys.readouterr().err


def test_power_alpha_beta_bar(capsys):
    config = TestConfig.of(n=50, v2=1.0)
    _, out, _ = run(capsys, "power", "--n", "50", "--k", "0.2", "--theta", "0.3", "--format", "json")
    assert json.loads(out) == {"k": 0.2, "theta": 0.3, "power": power(0.2, 0.3, config)}
    _, out, _ = run(capsys, "alpha", "--n", "50", "--k", "0.2", "--format", "json")
    assert json.loads(out)["alpha"] == type1_error(0.2, config)
    _, out, _ = run(capsys, "beta-bar", "--n", "50", "--k", "0.2", "--format", "json")
    assert json.loads(out)["beta_bar"] == expected_type2_error(0.2, config)


def test_k_out_of_range(capsys):
    with pytest.raises(SystemExit) as info:
        main(["alpha", "--n", "50", "--k", "0"])
    assert info.value.code == 2
    assert "--k" in capsys.readouterr().err


class TestCalibrate:
    def test_json_round_trip(self, capsys):
        code, out, _ = run(capsys, "calibrate", "--n", "50", "--v2", "1", "--format", "json")
        assert code == 0
        assert json.loads(out) == dataclasses.asdict(optimal_cutoff(TestConfig.of(n=50, v2=1.0)))

    def test_csv_fields(self, capsys):
        _, out, _ = run(capsys, "calibrate", "--n", "50")
        (row,) = rows(out)
        assert list(row) == ["k_star", "alpha_star", "beta_bar_star", "objective_star", "evaluations", "converged"]
        assert row["converged"] == "true"
        res = optimal_cutoff(TestConfig.of(n=50))
        assert row["k_star"] == "%.12g" % res.k_star
        assert "," not in row["k_star"] and "." in row["k_star"]

    def test_default_weights(self, capsys):
        _, explicit, _ = run(capsys, "calibrate", "--n", "30", "--a", "1", "--b", "1")
        _, implicit, _ = run(capsys, "calibrate", "--n", "30")
        assert explicit == implicit

    @pytest.mark.parametrize("argv, expected", [
        (["--n", "10", "--v2", "0.1", "--sigma2", "10", "--design-v2", "0.01"], 0.76244),
        (["--n", "100", "--v2", "1", "--sigma2", "10"], 0.12234),
    ])
    def test_reference_cutoffs(self, capsys, argv, expected):
        _, out, _ = run(capsys, "calibrate", *argv, "--format", "json")
        assert json.loads(out)["k_star"] == pytest.approx(expected, abs=0.005)

    def test_non_convergence_exit_code(self, capsys):
        code, out, err = run(capsys, "calibrate", "--n", "50", "--grid-points", "100",
                             "--k-tol", "1e-15", "--max-evaluations", "105", "--format", "json")
        assert code == 3
        assert json.loads(out)["converged"] is False
        assert "no convergence" in err


class TestTable:
    def test_single_row(self, capsys):
        code, out, _ = run(capsys, "table", "--n-list", "10", "--v2-list", "1")
        assert code == 0
        table = rows(out)
        assert len(table) == 1
        assert list(table[0])[:5] == ["n", "v2", "k_star", "alpha_star", "beta_bar_star"]

    def test_sorted_by_v2_then_n(self, capsys):
        _, out, _ = run(capsys, "table", "--n-list", "100,10", "--v2-list", "1,0.1")
        keys = [(float(r["v2"]), int(r["n"])) for r in rows(out)]
        assert keys == [(0.1, 10), (0.1, 100), (1.0, 10), (1.0, 100)]

    def test_full_reference_list(self, capsys, tmp_path):
        path = tmp_path / "table.csv"
        code, _, _ = run(capsys, "table", "--output", str(path), "--workers", "4")
        assert code == 0
        table = rows(path.read_text())
        assert len(table) == 2 * len(TABLE_N) == 28
        manifest = json.loads((tmp_path / "table.csv.manifest.json").read_text())
        assert manifest["command"] == "table"
        assert manifest["parameters"]["n_list"] == list(TABLE_N)
        assert {"tool_version", "timestamp", "argv"} <= set(manifest)

    def test_json_rows(self, capsys):
        _, out, _ = run(capsys, "table", "--n-list", "10,20", "--v2-list", "1", "--format", "json")
        data = json.loads(out)
        assert [r["n"] for r in data] == [10, 20]

    def test_unwritable_path(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["table", "--n-list", "10", "--v2-list", "1",
                  "--output", str(tmp_path / "missing" / "t.csv")])
        assert info.value.code == 4


def test_risk_curve_rows(capsys):
    _, out, _ = run(capsys, "risk-curve", "--n", "50", "--v2", "1", "--grid", "200")
    curve = rows(out)
    assert len(curve) == 200
    assert list(curve[0]) == ["k", "alpha", "beta_bar", "objective"]
    alpha = [float(r["alpha"]) for r in curve]
    assert alpha == sorted(alpha)


def test_error_vs_n(capsys):
    _, out, _ = run(capsys, "error-vs-n", "--v2", "1", "--workers", "4")
    data = rows(out)
    assert [int(r["n"]) for r in data] == list(TABLE_N)
    objective = [float(r["objective_star"]) for r in data]
    assert all(x > y for x, y in zip(objective, objective[1:]))


class TestSimulate:
    def test_k_one(self, capsys):
        _, out, _ = run(capsys, "simulate", "--n", "10", "--k", "1", "--draws", "1000", "--seed", "7",
                        "--format", "json")
        data = json.loads(out)
        assert data["value"] == 1.0 and data["seed"] == 7 and data["draws"] == 1000

    def test_requires_seed_and_draws(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--n", "10", "--k", "0.5", "--draws", "1000"])
        assert info.value.code == 2

    def test_type2_and_workers(self, capsys):
        argv = ["simulate", "--n", "50", "--k", "0.2", "--quantity", "type2",
                "--draws", "200000", "--seed", "3"]
        _, one, _ = run(capsys, *argv)
        _, four, _ = run(capsys, *argv, "--workers", "4")
        assert one == four

    def test_manifest_records_seed(self, capsys, tmp_path):
        path = tmp_path / "sim.json"
        run(capsys, "simulate", "--n", "10", "--k", "0.3", "--draws", "5000", "--seed", "42",
            "--format", "json", "--output", str(path))
        manifest = json.loads((tmp_path / "sim.json.manifest.json").read_text())
        assert manifest["seed"] == 42


def test_manifest_rerun_reproduces_output(capsys, tmp_path):
    first = tmp_path / "a.csv"
    run(capsys, "calibrate", "--n", "80", "--v2", "0.1", "--output", str(first))
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    argv = list(manifest["argv"])
    second = tmp_path / "b.csv"
    argv[argv.index("--output") + 1] = str(second)
    main(argv)
    assert first.read_bytes() == second.read_bytes()


def test_table_design_variances(capsys):
    _, out, _ = run(capsys, "table", "--n-list", "10", "--v2-list", "0.1,1", "--sigma2", "10",
                    "--design-v2-list", "0.01,1", "--format", "json")
    data = json.loads(out)
    assert [round(r["k_star"], 2) for r in data] == [0.76, 0.41]
