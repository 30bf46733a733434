from __future__ import annotations

import json

import numpy as np
import pytest

from hmdfusion.cli import EXIT_NUMERICAL, EXIT_USAGE, main, parse_estimate
from hmdfusion.report import OUTPUT_ENV, read_series_csv
from hmdfusion.scenarios import ConfigError

E1 = ["mean=0.5,1", "cov=2.5,-1,-1,1.2"]
E2 = ["mean=2,1", "cov=0.8,-0.5,-0.5,4"]


def csv_files(path):
    return sorted(p for p in path.iterdir() if p.suffix == ".csv")


class TestRun:
    def test_consistency1_all_fusers(self, tmp_path, capsys):
        code = main(["run", "--scenario", "consistency1", "--fusers", "naive,ci,ici,hmd-ga,centralized",
                     "--mc-runs", "200", "--seed", "42", "--output-dir", str(tmp_path)])
        assert code == 0
        fusers = {p.name.split("__")[1] for p in csv_files(tmp_path)}
        assert fusers == {"naive", "ci", "ici", "hmd-ga", "centralized"}
        assert (tmp_path / "consistency1__summary.json").exists()
        ell = json.loads((tmp_path / "consistency1__ellipses.json").read_text())
        assert len(ell) == 10

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["run", "--scenario", "consistency2", "--mc-runs", "100", "--seed", "7",
                         "--output-dir", str(out)]) == 0
        fa, fb = csv_files(a), csv_files(b)
        assert [p.name for p in fa] == [p.name for p in fb]
        for x, y in zip(fa, fb):
            assert x.read_bytes() == y.read_bytes()

    def test_header_echoes_config(self, tmp_path):
        main(["run", "--scenario", "scalar_weight", "--mc-runs", "5", "--set", "rho=0.3",
              "--output-dir", str(tmp_path)])
        path = tmp_path / "scalar_weight__ci__omega_mean.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "# hmdfusion-report schema_version=1"
        assert "# config params.rho=0.3" in lines
        assert "# config mc_runs=5" in lines
        assert "step,time_s,metric,value,lower_bound,upper_bound" in lines
        data = read_series_csv(path)
        assert len(data["value"]) == 50 and np.all(data["value"] == 0.0)

    def test_bundled_config_by_name(self, tmp_path):
        assert main(["run", "--config", "scalar_weight", "--mc-runs", "3", "--output-dir", str(tmp_path)]) == 0

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
        assert main(["run", "--scenario", "scalar_weight", "--mc-runs", "2"]) == 0
        assert csv_files(tmp_path / "env")

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "consistency2", "mc_runs": 10, "fusers": ["ci"]}))
        assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "o")]) == 0
        assert {p.name.split("__")[1] for p in csv_files(tmp_path / "o")} == {"ci"}

    @pytest.mark.parametrize("argv", [
        ["run", "--scenario", "consistency1", "--fusers", "ci,bogus"],
        ["run", "--config", "/nonexistent/cfg.json"],
        ["run", "--scenario", "scalar_weight", "--set", "no_such_key=1"],
        ["run", "--scenario", "scalar_weight", "--mc-runs", "0"],
        ["run"],
    ])
    def test_usage_errors(self, argv, tmp_path, capsys):
        assert main(argv + ["--output-dir", str(tmp_path)]) == EXIT_USAGE
        assert "error:" in capsys.readouterr().err

    def test_bad_json(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_USAGE

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = main(["run", "--scenario", "scalar_weight", "--mc-runs", "2", "--output-dir", str(blocker / "sub")])
        assert code == EXIT_USAGE


class TestFuse:
    def test_hmd_s(self, capsys):
        assert main(["fuse", "--e1", *E1, "--e2", *E2, "--method", "hmd-s", "--samples", "5000"]) == 0
        out = capsys.readouterr().out
        assert "fused mean" in out and "86.5% ellipse" in out

    def test_closed_form_reports_weight(self, capsys):
        assert main(["fuse", "--e1", *E1, "--e2", *E2, "--method", "ci"]) == 0
        assert "omega" in capsys.readouterr().out

    def test_parse_estimate(self):
        e = parse_estimate(E1)
        np.testing.assert_allclose(e.cov, [[2.5, -1.0], [-1.0, 1.2]])
        with pytest.raises(ConfigError):
            parse_estimate(["mean=1,2", "cov=1,0,0"])

    def test_non_pd_is_usage_error(self, capsys):
        assert main(["fuse", "--e1", "mean=0,0", "cov=1,2,2,1", "--e2", *E2]) == EXIT_USAGE
        assert "error:" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    import hmdfusion.cli as cli_mod

    def boom(*args, **kwargs):
        raise RuntimeError("fusion failure rate too high")

    monkeypatch.setattr(cli_mod, "run", boom)
    assert main(["run", "--scenario", "scalar_weight", "--output-dir", str(tmp_path)]) == EXIT_NUMERICAL


def test_bench(tmp_path, capsys):
    assert main(["bench", "--calls", "200", "--pairs", "20", "--output-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "bench.json").read_text())
    assert data["relative"]["naive"] == 1.0
    assert set(data["relative"]) == {"naive", "ci", "ici", "hmd-ga"}


def test_demo_mixture(tmp_path):
    assert main(["demo-mixture", "--samples", "2000", "--resolution", "61", "--output-dir", str(tmp_path)]) == 0
    grid = np.loadtxt(tmp_path / "demo_mixture__grid.csv", delimiter=",", skiprows=1)
    assert grid.shape == (61 * 61, 6)
    rec = json.loads((tmp_path / "demo_mixture__fused.json").read_text())
    assert sum(c["weight"] for c in rec["fused_mixture"]) == pytest.approx(1.0)
