"""
The longjump command line: commands, result files and exit codes.
"""
import json

import numpy as np
import pytest
import yaml

from longjump.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, run
from longjump.output import OutputWriter


def write_config(folder, **overrides):
    data = {
        "mode": "validate",
        "params": {"N": 17, "gamma": 3.0, "theta": 0.0, "alpha": 0.2, "beta": 0.8},
        "times": [0.01],
        "seeds": 4,
        "bins": 4,
        "boxcar_eps": 0.2,
        "pde": {"M": 40},
        "output": str(folder / "results"),
    }
    data.update(overrides)
    path = folder / "experiment.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


class TestKernelInfo:
    def test_constants(self, capsys):
        assert run(["kernel-info", "--gamma", "3"]) == EXIT_PASS
        info = json.loads(capsys.readouterr().out)
        assert info["c_gamma"] == pytest.approx(45.0 / np.pi**4)
        assert info["upper_tail"]["1"] == pytest.approx(0.5)
        assert info["N"] == 100

    def test_domain(self):
        assert run(["kernel-info", "--gamma", "2"]) == EXIT_CONFIG


class TestSweep:
    def test_regime_map(self, tmp_path):
        code = run(["sweep", "--gamma-range", "2.5:3:0.5", "--theta-range", "-2:2:1", "--output", str(tmp_path)])
        assert code == EXIT_PASS
        lines = (tmp_path / "regime_map.csv").read_text().splitlines()
        assert lines[0] == "gamma,theta,regime,sigma_hat,kappa_hat,m_hat,time_scale_exponent"
        assert len(lines) == 1 + 2 * 5
        assert lines[1].startswith("2.5,-2,reaction,")

    @pytest.mark.parametrize("gamma_range", ["2:3:0.5", "x", "3:2:0.5"])
    def test_bad_ranges(self, tmp_path, gamma_range):
        code = run(["sweep", "--gamma-range", gamma_range, "--theta-range", "0", "--output", str(tmp_path)])
        assert code == EXIT_CONFIG

    def test_sweep_config(self, tmp_path):
        path = write_config(tmp_path, mode="sweep", sweep={"gammas": [3.0], "thetas": [0.0, 1.0, 2.0]})
        assert run(["run", "--config", str(path)]) == EXIT_PASS
        lines = (tmp_path / "results" / "regime_map.csv").read_text().splitlines()
        assert [line.split(",")[2] for line in lines[1:]] == ["dirichlet", "robin", "neumann"]


class TestConfigCommands:
    def test_bad_config(self, tmp_path, capsys):
        path = write_config(tmp_path, bins=0)
        assert run(["run", "--config", str(path)]) == EXIT_CONFIG
        assert "bins" in capsys.readouterr().out

    def test_missing_config(self, tmp_path):
        assert run(["run", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG

    def test_pde(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "pde_out"
        assert run(["pde", "--config", str(path), "--output", str(out)]) == EXIT_PASS
        lines = (out / "pde.csv").read_text().splitlines()
        assert lines[0] == "t,q,rho"
        assert len(lines) == 1 + 2 * 40
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["mode"] == "validate"
        assert manifest["regime"] == "dirichlet"
        assert manifest["M"] == 40

    def test_simulate(self, tmp_path):
        path = write_config(tmp_path)
        assert run(["simulate", "--config", str(path)]) == EXIT_PASS
        results = tmp_path / "results"
        assert (results / "profiles.csv").read_text().splitlines()[0] == "t,q,value,stderr"
        assert len((results / "snapshots.csv").read_text().splitlines()) == 1 + 4 * 4
        manifest = json.loads((results / "manifest.json").read_text())
        assert manifest["seeds"] == [0, 1, 2, 3]
        assert "ensemble" in manifest["timings"]

    def test_stationary_from_config(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert run(["stationary", "--config", str(path)]) == EXIT_PASS
        assert (tmp_path / "results" / "stationary.csv").exists()
        assert "shape check passed" in capsys.readouterr().out

    def test_validate(self, tmp_path):
        path = write_config(tmp_path)
        assert run(["validate", "--config", str(path), "--tolerance", "1.0"]) == EXIT_PASS
        report = json.loads((tmp_path / "results" / "validation.json").read_text())
        assert report["passed"] is True
        assert len(report["rows"]) == 1
        assert run(["validate", "--config", str(path), "--tolerance", "1e-9"]) == EXIT_FAIL

    def test_convergence_table(self, tmp_path):
        path = write_config(tmp_path, convergence={"N_list": [9, 17]})
        code = run(["validate", "--config", str(path), "--tolerance", "1.0"])
        results = tmp_path / "results"
        manifest = json.loads((results / "manifest.json").read_text())
        assert code == (EXIT_PASS if manifest["convergence_decreasing"] else EXIT_FAIL)
        lines = (results / "convergence.csv").read_text().splitlines()
        assert lines[0] == "N,l1,linf,seeds"
        assert [line.split(",")[0] for line in lines[1:]] == ["9", "17"]

    def test_profiles_reproducible(self, tmp_path):
        path = write_config(tmp_path, mode="simulate")
        assert run(["run", "--config", str(path), "--output", str(tmp_path / "a")]) == EXIT_PASS
        assert run(["simulate", "--config", str(path), "--workers", "2", "--output", str(tmp_path / "b")]) == EXIT_PASS
        first = (tmp_path / "a" / "profiles.csv").read_bytes()
        second = (tmp_path / "b" / "profiles.csv").read_bytes()
        assert first == second


class TestStationaryCommand:
    def test_reaction(self, tmp_path, capsys):
        code = run(["stationary", "--regime", "reaction", "--M", "100", "--output", str(tmp_path)])
        assert code == EXIT_PASS
        lines = (tmp_path / "stationary.csv").read_text().splitlines()
        assert lines[0] == "q,rho_bar"
        assert len(lines) == 101
        assert "shape check passed" in capsys.readouterr().out

    def test_neumann_needs_config(self, tmp_path):
        assert run(["stationary", "--regime", "neumann", "--output", str(tmp_path)]) == EXIT_CONFIG

    def test_needs_regime_or_config(self, tmp_path):
        assert run(["stationary", "--output", str(tmp_path)]) == EXIT_CONFIG

    def test_case2_has_no_reaction(self, tmp_path):
        code = run(["stationary", "--regime", "reaction", "--variant", "case2", "--output", str(tmp_path)])
        assert code == EXIT_CONFIG


class TestOutputErrors:
    """Output problems end the run with exit code 1 instead of a traceback."""

    def test_filename_outside_folder(self, tmp_path, monkeypatch, capsys):
        def escaping(writer, sp, filename="stationary"):
            return writer.write_csv("../stationary", ["q", "rho_bar"], [])
        monkeypatch.setattr(OutputWriter, "write_stationary", escaping)
        code = run(["stationary", "--regime", "reaction", "--M", "10", "--output", str(tmp_path / "out")])
        assert code == EXIT_FAIL
        assert "Invalid output filename" in capsys.readouterr().out
        assert not (tmp_path / "stationary.csv").exists()

    def test_output_is_a_file(self, tmp_path):
        taken = tmp_path / "taken"
        taken.write_text("")
        code = run(["sweep", "--gamma-range", "3", "--theta-range", "0", "--output", str(taken)])
        assert code == EXIT_FAIL
