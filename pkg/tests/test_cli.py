"""Command-line interface tests: grid parsing, output schemas, config
files, exit-status contract."""

import csv
import json
import math

import pytest

from spherehit.cli import main, parse_band, parse_grid


class TestGridParsing:
    def test_single_value(self):
        assert parse_grid("2.5") == [2.5]

    def test_linear(self):
        grid = parse_grid("0:1:5")
        assert grid == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_log(self):
        grid = parse_grid("log:1:100:3")
        assert grid == pytest.approx([1.0, 10.0, 100.0])

    def test_negative_endpoints(self):
        assert parse_grid("-1:1:3") == pytest.approx([-1.0, 0.0, 1.0])

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_grid("1:2")
        with pytest.raises(ValueError):
            parse_grid("log:-1:10:3")
        with pytest.raises(ValueError):
            parse_grid("5:1:3")

    def test_band(self):
        band = parse_band("-0.5,0.75")
        assert band.x_lo == -0.5 and band.x_hi == 0.75


class TestCommands:
    def test_density_csv_shape(self, tmp_path):
        out = tmp_path / "dens.csv"
        rc = main([
            "density", "--d", "3", "--a", "2", "--r", "1",
            "--t-grid", "0.5:1.5:3", "--x-grid", "-1:1:5",
            "--format", "csv", "--out", str(out),
        ])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 15
        assert "value" in rows[0] and "error_bound_or_stderr" in rows[0]
        # 17 significant digit round trip
        val = float(rows[0]["value"])
        assert math.isfinite(val)

    def test_json_roundtrip_lossless(self, tmp_path, capsys):
        rc = main([
            "marginal", "--d", "3", "--a", "0.5", "--x-grid", "0:1:3",
        ])
        assert rc == 0
        text = capsys.readouterr().out
        records = json.loads(text)
        assert len(records) == 3
        for rec in records:
            assert set(rec) == {"inputs", "value", "error_bound_or_stderr", "convergence"}
        assert json.loads(json.dumps(records)) == records

    def test_laplace_collapse_through_cli(self, capsys):
        rc = main([
            "laplace", "--d", "2", "--a", "0.5", "--lam-grid", "1",
        ])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)[0]
        import spherehit as sh
        ref = sh.fpt_laplace(0.0, 0.5, 1.0, 1.0)
        assert rec["value"] == pytest.approx(ref, abs=1e-10)

    def test_tail_and_asymp(self, capsys):
        rc = main([
            "tail", "--d", "3", "--a", "2", "--r", "1",
            "--band", "-1,1", "--t-grid", "100",
        ])
        assert rc == 0
        tail_rec = json.loads(capsys.readouterr().out)[0]
        rc = main([
            "asymp", "--d", "3", "--a", "2", "--r", "1",
            "--band", "-1,1", "--t-grid", "100",
        ])
        assert rc == 0
        asymp_rec = json.loads(capsys.readouterr().out)[0]
        assert tail_rec["value"] == pytest.approx(asymp_rec["value"], rel=0.01)

    def test_drift_band_command(self, capsys):
        rc = main([
            "drift-band", "--d", "2", "--a", "0.5", "--v1", "1", "--v-perp", "0",
            "--band", "0,1", "--t1", "0", "--t2", "inf",
        ])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)[0]
        assert 0.9 < rec["value"] <= 1.0

    def test_mc_record(self, capsys):
        rc = main([
            "mc", "--d", "3", "--a", "0.5", "--r", "1", "--band", "0,1",
            "--t1", "0", "--t2", "inf", "--paths", "20000", "--seed", "42",
            "--base-step", "0.05", "--horizon", "60",
        ])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)[0]
        assert {"n_escaped", "n_horizon", "series_value", "z_score"} <= set(rec["convergence"])
        assert abs(rec["convergence"]["z_score"]) < 4.0

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("d = 3\na = 0.5\nx-grid = 0:1:2\n")
        rc = main(["marginal", "--config", str(cfg)])
        assert rc == 0
        records = json.loads(capsys.readouterr().out)
        assert len(records) == 2
        # flags override the file
        rc = main(["marginal", "--config", str(cfg), "--x-grid", "0:1:4"])
        assert rc == 0
        assert len(json.loads(capsys.readouterr().out)) == 4

    def test_verify_single_suite(self, capsys):
        rc = main(["verify", "--suite", "u0-collapse"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("PASS u0-collapse")


class TestExitCodes:
    def test_numerical_failure_is_one(self, capsys):
        rc = main([
            "band", "--d", "3", "--a", "2", "--r", "1", "--band", "0.5,1",
            "--t1", "0.2", "--t2", "1.0", "--n-max", "2",
        ])
        assert rc == 1
        assert "band_probability" in capsys.readouterr().err

    def test_usage_failure_is_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["density", "--bogus-flag", "1"])
        assert exc.value.code == 2

    def test_missing_required_is_usage_error(self):
        with pytest.raises(SystemExit):
            main(["density", "--d", "3"])

    def test_bad_grid_is_two(self):
        rc = main([
            "density", "--d", "3", "--a", "2", "--r", "1",
            "--t-grid", "1:2", "--x-grid", "0",
        ])
        assert rc == 2
