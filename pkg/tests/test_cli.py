"""End-to-end tests of the command-line front-end."""

import json
import math

import numpy as np
import pytest

from phonheom import cli


def run_cli(argv):
    return cli.main(argv)


def write_config(path, **overrides):
    path.write_text(json.dumps(overrides))
    return str(path)


SMALL = dict(basis_size=3, n_max=2, steps=40, stride=20)


class TestConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("")
        cfg = cli.parse_config(str(p))
        assert cfg == cli.DEFAULTS

    def test_no_file_gives_defaults(self):
        assert cli.parse_config(None) == cli.DEFAULTS

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", dq=0.5, nmax=3)
        with pytest.raises(cli.ConfigError, match="nmax"):
            cli.parse_config(cfg)

    def test_invalid_values_named(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", dq=-1.0)
        with pytest.raises(cli.ConfigError, match="dq"):
            cli.parse_config(cfg)

    def test_beta_validation(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", beta=-2.0)
        with pytest.raises(cli.ConfigError, match="beta"):
            cli.parse_config(cfg)


class TestRun:
    def test_trajectory_csv_schema(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", **SMALL)
        out = tmp_path / "run.csv"
        assert run_cli(["run", "--config", cfg, "--out", str(out)]) == 0
        data = cli.read_csv(str(out))
        assert list(data) == ["t_eVinv", "wSt", "xi_q", "xi_p", "xi_qq", "xi_pp",
                              "norm", "w0", "w1", "w2", "n_mean", "raw_xi_q",
                              "raw_xi_p", "raw_xi_qq", "raw_xi_pp"]
        assert len(data["t_eVinv"]) == 3  # t=0 plus the stride rows at 20 and 40
        assert data["wSt"] == pytest.approx(2.0 * data["t_eVinv"])
        assert data["norm"][0] == pytest.approx(1.0)

    def test_config_echo_written(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", **SMALL)
        out = tmp_path / "run.csv"
        run_cli(["run", "--config", cfg, "--out", str(out)])
        echo = json.loads((tmp_path / "run.csv.config.json").read_text())
        assert echo["basis_size"] == 3
        assert echo["dq"] == cli.DEFAULTS["dq"]

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", **SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["run", "--config", cfg, "--out", str(a)])
        run_cli(["run", "--config", cfg, "--out", str(b), "--threads", "2"])
        assert a.read_bytes() == b.read_bytes()

    def test_plot_files_created(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", **SMALL)
        out = tmp_path / "run.csv"
        run_cli(["run", "--config", cfg, "--out", str(out), "--plot"])
        assert (tmp_path / "run_moments.png").exists()
        assert (tmp_path / "run_phonons.png").exists()


class TestTables:
    def test_bath_table(self, tmp_path):
        out = tmp_path / "tab.csv"
        assert run_cli(["bath-table", "--out", str(out)]) == 0
        data = cli.read_csv(str(out))
        assert list(data) == ["k", "lambda_k"]
        assert len(data["k"]) == 10
        assert np.all(np.diff(data["lambda_k"]) >= 0)

    def test_lambda_t_table(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", basis_size=3, steps=8, stride=4)
        out = tmp_path / "lt.csv"
        assert run_cli(["lambda-t", "--config", cfg, "--out", str(out)]) == 0
        data = cli.read_csv(str(out))
        assert list(data) == ["t_eVinv", "k", "kp", "re", "im"]
        assert len(data["k"]) == 3 * 9  # 3 output times x full 3x3 table


class TestOracles:
    def test_oracle_moments_schema_and_nans(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", steps=20, stride=10,
                           oracle_modes=128, n_max=2)
        out = tmp_path / "om.csv"
        assert run_cli(["oracle-moments", "--config", cfg, "--out", str(out)]) == 0
        data = cli.read_csv(str(out))
        assert math.isnan(data["w0"][0])
        assert data["xi_q"][0] == pytest.approx(-1.0)

    def test_oracle_discrete_runs(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", density="discrete",
                           mode_freqs=[1.5], mode_couplings=[0.2],
                           steps=20, stride=10, oracle_cutoffs=[4], n_max=2)
        out = tmp_path / "od.csv"
        assert run_cli(["oracle-discrete", "--config", cfg, "--out", str(out)]) == 0
        data = cli.read_csv(str(out))
        assert abs(data["norm"][-1] - 1.0) < 1e-8

    def test_oracle_discrete_rejects_continuum(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", steps=4)
        assert run_cli(["oracle-discrete", "--config", cfg,
                        "--out", str(tmp_path / "x.csv")]) == 2


class TestCompare:
    def make_run(self, tmp_path, name, **overrides):
        cfg = write_config(tmp_path / f"{name}.json", **{**SMALL, **overrides})
        out = tmp_path / f"{name}.csv"
        assert run_cli(["run", "--config", cfg, "--out", str(out)]) == 0
        return str(out)

    def test_self_compare_is_zero(self, tmp_path, capsys):
        a = self.make_run(tmp_path, "a")
        capsys.readouterr()  # drop the run output
        assert run_cli(["compare", a, a]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "column,max_abs,rms"
        assert len(lines) > 1
        for line in lines[1:]:
            _, mx, rms = line.split(",")
            assert float(mx) == 0.0
            assert float(rms) == 0.0

    def test_threshold_failure_sets_exit_code(self, tmp_path):
        a = self.make_run(tmp_path, "a")
        b = self.make_run(tmp_path, "b", coupling_strength=0.2)
        assert run_cli(["compare", a, b, "--threshold", "xi_q=1e-12"]) == 1
        assert run_cli(["compare", a, b, "--threshold", "xi_q=10"]) == 0

    def test_schema_mismatch_exit_code(self, tmp_path):
        a = self.make_run(tmp_path, "a")
        b = self.make_run(tmp_path, "c", n_max=1)  # different weight columns
        assert run_cli(["compare", a, b]) == 2

    def test_window_filters_rows(self, tmp_path):
        a = self.make_run(tmp_path, "a")
        b = self.make_run(tmp_path, "b", coupling_strength=0.2)
        # full-window max exceeds the tiny threshold, the t=0-only window passes
        assert run_cli(["compare", a, b, "--threshold", "xi_q=1e-12",
                        "--window", "0:0"]) == 0

    def test_bad_window_rejected(self, tmp_path):
        a = self.make_run(tmp_path, "a")
        assert run_cli(["compare", a, a, "--window", "oops"]) == 2

    def test_report_written_and_overlay_plot(self, tmp_path):
        a = self.make_run(tmp_path, "a")
        rep = tmp_path / "rep.csv"
        assert run_cli(["compare", a, a, "--out", str(rep), "--plot"]) == 0
        assert rep.exists()
        assert (tmp_path / "rep_overlay.png").exists()

    def test_run_vs_oracle_agreement(self, tmp_path):
        # the hierarchy run tracks the exact moments at weak coupling
        overrides = dict(coupling_strength=0.1, basis_size=6, n_max=3,
                         steps=160, stride=40, oracle_modes=512)
        a = self.make_run(tmp_path, "a", **overrides)
        cfg = write_config(tmp_path / "om.json", **{**SMALL, **overrides})
        out = tmp_path / "om.csv"
        assert run_cli(["oracle-moments", "--config", cfg, "--out", str(out)]) == 0
        assert run_cli(["compare", a, str(out), "--threshold",
                        "xi_q=0.02,xi_p=0.02"]) == 0
