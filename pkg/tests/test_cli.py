import json
import math

import numpy as np
import pytest

from braggtrap.cli import main, parse_config


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParseConfig:
    def test_defaults_manifest(self):
        sub, params, manifest = parse_config(["gain"])
        assert sub == "gain"
        assert params["n_atoms"] == 1000
        assert params["atom_mass_kg"] == pytest.approx(1.4431e-25)
        assert params["omega_x_hz"] == 20.0
        assert params["omega_y_hz"] == 20.0
        assert params["omega_z_hz"] == 100.0
        assert manifest["tool"] == "braggtrap"
        assert manifest["subcommand"] == "gain"
        assert manifest["parameters"]["scattering_length_m"] == pytest.approx(5.2e-9)

    def test_flag_overrides_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_atoms = 1000\n")
        _, params, _ = parse_config(["gain", "--config", str(cfg), "--n-atoms", "100"])
        assert params["n_atoms"] == 100

    def test_file_overrides_default(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment line\nomega_z_hz = 250  # trailing comment\n")
        _, params, _ = parse_config(["gain", "--config", str(cfg)])
        assert params["omega_z_hz"] == 250.0

    def test_unknown_key_is_hard_error(self, tmp_path):
        from braggtrap.cli import UsageError

        cfg = tmp_path / "run.cfg"
        cfg.write_text("omega_q_hz = 10\n")
        with pytest.raises(UsageError, match="omega_q_hz"):
            parse_config(["gain", "--config", str(cfg)])

    def test_negative_frequency_names_key(self, tmp_path):
        from braggtrap.cli import UsageError

        cfg = tmp_path / "run.cfg"
        cfg.write_text("omega_z_hz = -5\n")
        with pytest.raises(UsageError, match="omega_z_hz"):
            parse_config(["gain", "--config", str(cfg)])

    def test_unparsable_number(self):
        from braggtrap.cli import UsageError

        with pytest.raises(UsageError, match="n_atoms"):
            parse_config(["gain", "--n-atoms", "many"])


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        code, _, err = run_cli(["gain", "--n-atoms", "-3"], capsys)
        assert code == 1
        assert "n_atoms" in err

    def test_numerical_failure_is_two(self, capsys):
        # beta = pi/2 makes the slope vanish: a numerical failure, not usage
        code, _, err = run_cli(["gain", "--beta-rad", str(math.pi / 2)], capsys)
        assert code == 2
        assert "slope" in err or "numerical" in err

    def test_success_is_zero(self, capsys):
        code, out, err = run_cli(["gain"], capsys)
        assert code == 0
        assert err == ""


class TestGainCommand:
    def test_trivial_gain_json(self, capsys):
        code, out, _ = run_cli(["gain", "--tau", "0", "--tau-tilde", "0"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["gain"] == pytest.approx(1.0, abs=1e-9)
        assert payload["delta_theta"] == pytest.approx(1.0 / math.sqrt(1000), rel=1e-9)

    def test_from_trap(self, capsys):
        code, out, _ = run_cli(["gain", "--from-trap", "--beta-rad", "0.5"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["tau"] == pytest.approx(0.0014390983947411562, rel=1e-6)
        assert payload["tau_tilde"] == pytest.approx(0.0014390983947411562, rel=1e-6)


class TestScanCommands:
    def test_scan_m_headline(self, tmp_path, capsys):
        out_file = tmp_path / "scan.csv"
        code, _, _ = run_cli(
            ["scan-m", "--m-values", "1,1.5,2", "--output", str(out_file)], capsys
        )
        assert code == 0
        lines = out_file.read_text().strip().splitlines()
        header = lines[0].split(",")
        assert header == ["m", "gamma", "omega_z_hz", "n_atoms", "tau", "tau_tilde",
                          "alpha_rad", "beta_rad", "gain", "gain_linear"]
        gains = [float(line.split(",")[8]) for line in lines[1:]]
        assert max(gains) == pytest.approx(3.5, abs=0.5)
        manifest = json.loads((tmp_path / "scan.csv.manifest.json").read_text())
        assert manifest["subcommand"] == "scan-m"

    def test_scan_trap_smoke(self, capsys):
        code, out, _ = run_cli(
            ["scan-trap", "--sweep", "gamma", "--sweep-values", "0.2",
             "--m-values", "0.5", "--alpha-policy", "fixed"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert float(row["gamma"]) == pytest.approx(0.2, rel=1e-9)
        assert float(row["gain"]) > 1.0

    def test_tau_columns_ordered(self, capsys):
        code, out, _ = run_cli(["tau", "--sweep", "omega-z",
                                "--sweep-values", "50,100,200"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].split(",")[0] == "omega_z_hz"
        idx_num = lines[0].split(",").index("tau_numeric")
        idx_closed = lines[0].split(",").index("tau_closed")
        for line in lines[1:]:
            cells = line.split(",")
            assert float(cells[idx_num]) <= float(cells[idx_closed])

    def test_squeeze_curve(self, capsys):
        code, out, _ = run_cli(
            ["squeeze", "--n-atoms", "200", "--tau-min", "0.001",
             "--tau-max", "0.05", "--tau-steps", "30"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "tau,xi,xi_closed"
        xis = [float(line.split(",")[1]) for line in lines[1:]]
        closed = [float(line.split(",")[2]) for line in lines[1:]]
        np.testing.assert_allclose(xis, closed, rtol=1e-6)
        assert min(xis) < 0.5


class TestCurveCommands:
    def test_fringe(self, capsys):
        code, out, _ = run_cli(
            ["fringe", "--n-atoms", "40", "--theta-steps", "9"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "theta_rad,sz_mean,sz_var"
        for line in lines[1:]:
            theta, sz, var = map(float, line.split(","))
            assert sz == pytest.approx(-20.0 * math.sin(theta), abs=1e-8)
            # rotated coherent state: Var S_z = (S/2) cos^2(theta)
            assert var == pytest.approx(10.0 * math.cos(theta) ** 2, abs=1e-8)

    def test_husimi(self, capsys):
        code, out, _ = run_cli(
            ["husimi", "--n-atoms", "30", "--n-polar", "16", "--n-azimuth", "8"],
            capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "polar,azimuth,q_value"
        assert len(lines) == 1 + 16 * 8
        values = [float(line.split(",")[2]) for line in lines[1:]]
        assert all(v >= 0.0 for v in values)


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ["fringe", "--n-atoms", "30", "--theta-steps", "11", "--tau", "0.05"]
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert run_cli(args + ["--output", str(first)], capsys)[0] == 0
        assert run_cli(args + ["--output", str(second)], capsys)[0] == 0
        assert first.read_bytes() == second.read_bytes()

    def test_twelve_significant_digits(self, capsys):
        _, out, _ = run_cli(["fringe", "--n-atoms", "10", "--theta-steps", "9"], capsys)
        cell = out.strip().splitlines()[1].split(",")[0]
        mantissa = cell.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) == 12


class TestHelp:
    def test_help_documents_units(self, capsys):
        code = main(["gain", "--help"])
        assert code == 0
        text = capsys.readouterr().out
        assert "Hz" in text
        assert "2*pi" in text
        assert "kg" in text
        assert "rad" in text

    def test_subcommand_required(self, capsys):
        code, _, err = run_cli([], capsys)
        assert code == 1
        assert "subcommand" in err
