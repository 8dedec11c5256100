import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from kreinamo.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, obj):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return str(path)


class TestConfigValidation:
    def test_schema_violation_exits_2(self, runner, tmp_path):
        cfg = write_config(tmp_path, {"family": {"family": "constant-alpha0"}})
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 2
        err = json.loads(result.stderr)
        assert err["error"]["type"] == "config"

    def test_command_mismatch_exits_2(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "triple",
            "family": {"family": "constant-alpha0"},
            "param_range": [0, 1], "steps": 3,
            "bc": {"kind": "idealized_dirichlet", "l": 0}, "M": 30,
        })
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 2

    def test_missing_config_file_exits_2(self, runner):
        result = runner.invoke(main, ["spectrum", "--config", "/nonexistent.json"])
        assert result.exit_code == 2

    def test_unknown_family_exits_2(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "family": {"family": "nope"},
            "param_range": [0, 1], "steps": 3,
            "bc": {"kind": "idealized_dirichlet", "l": 0}, "M": 30,
            "out_dir": str(tmp_path / "out"),
        })
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 2

    def test_numeric_failure_exits_3(self, runner, tmp_path):
        # domain mismatch: [0,1] profile on a box of length 10
        cfg = write_config(tmp_path, {
            "family": {"family": "constant-alpha0"},
            "param_range": [0, 1], "steps": 3,
            "bc": {"kind": "box_dirichlet", "X": 10.0, "l": 0}, "M": 30,
            "out_dir": str(tmp_path / "out"),
        })
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 3
        err = json.loads(result.stderr)
        assert "domain" in err["error"]["message"]


class TestSpectrumCommand:
    def test_artifacts_and_idempotence(self, runner, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, {
            "family": {"family": "constant-alpha0"},
            "param_range": [0.0, 2.0], "steps": 5,
            "bc": {"kind": "idealized_dirichlet", "l": 0},
            "M": 40, "mode_count": 4, "out_dir": str(out),
        })
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 0, result.output
        branches = (out / "branches.csv").read_bytes()
        svg = (out / "spectrum.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg and "http" not in svg.split("xmlns")[0]
        header = branches.decode().splitlines()[0]
        assert header == "branch_id,param,re_lambda,im_lambda,is_real,grid_M"
        # byte-identical rerun
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 0
        assert (out / "branches.csv").read_bytes() == branches

    def test_matrix_dump_flag(self, runner, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, {
            "family": {"family": "constant-alpha0"},
            "param_range": [0.0, 1.0], "steps": 2,
            "bc": {"kind": "idealized_dirichlet", "l": 0},
            "M": 20, "mode_count": 2, "out_dir": str(out),
            "dump_matrix": True, "detect_eps": False,
        })
        result = runner.invoke(main, ["spectrum", "--config", cfg])
        assert result.exit_code == 0
        dumped = np.loadtxt(out / "matrix.txt")
        assert dumped.shape == (40, 40)


class TestMeshCommand:
    def test_flags_only(self, runner, tmp_path):
        result = runner.invoke(main, [
            "mesh", "--l", "0", "--alpha0-max", "25", "--n-max", "6",
            "--out-dir", str(tmp_path),
        ])
        assert result.exit_code == 0, result.output
        text = (tmp_path / "mesh.csv").read_text()
        sections = text.split("\n\n")
        assert len(sections) == 2
        assert sections[0].splitlines()[0] == "n,eps,alpha0,lambda"
        dp_lines = sections[1].splitlines()
        assert dp_lines[0] == "dp_n,eps,dp_m,delta,alpha0_c,lambda0,same_type,j"
        assert len(dp_lines) > 10
        assert (tmp_path / "mesh.svg").exists()


class TestUnfoldCommand:
    def test_report(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "dp": {"n": 2, "eps": 1, "m": 1, "delta": -1, "l": 0},
            "phi": {"terms": [{"kind": "sin", "k": 1, "amplitude": 1.0}]},
            "amplitude": 0.05, "M": 121, "out_dir": str(tmp_path),
        })
        result = runner.invoke(main, ["unfold", "--config", cfg])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "unfold.json").read_text())
        assert report["complex_split"] is True
        assert report["parabola_j"] == 3
        assert report["match_within_10pct"] is True


class TestResonanceCommand:
    def test_csv_written(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "n_max": 3, "phi": {"terms": [{"kind": "cos", "k": 2, "amplitude": 1.0}]},
            "amplitude": 0.05, "M": 121, "alpha0_window": [0.0, 7.0],
            "out_dir": str(tmp_path),
            "overcritical_scan": [0.0, 5.0],
            "alpha0": 2.5,
        })
        result = runner.invoke(main, ["resonance", "--config", cfg])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "resonance.csv").read_text().splitlines()
        assert lines[0].startswith("dp_n,dp_m,eps,delta,alpha0_c,lambda0,j")
        counts = (tmp_path / "overcritical_counts.csv").read_text().splitlines()
        assert counts[0] == "amplitude,overcritical_oscillatory"
        assert len(counts) == 3


class TestSolitonBranchCommand:
    def test_branch_and_jordan_outputs(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "l_list": [0], "x0_range": [0.4, 1.6], "X": 25.0, "M": 500,
            "samples": 7, "out_dir": str(tmp_path),
        })
        result = runner.invoke(main, ["soliton-branch", "--config", cfg])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "branch_l0.csv").read_text().splitlines()
        assert lines[0] == "l,x0,re_lambda,im_lambda,epsilon_re,epsilon_im,localized_flag,X,M"
        report = json.loads((tmp_path / "jordan_l0.json").read_text())
        assert report["x_J"] == pytest.approx(0.881, abs=0.01)
        assert report["kernel_residual"] <= 1e-4
        assert report["xi1_residual"] <= 1e-6
        assert (tmp_path / "soliton_branch.svg").exists()


class TestCutoffCommand:
    def test_outputs(self, runner, tmp_path):
        cfg = write_config(tmp_path, {
            "l": 0, "x0": 5.0, "X_list": [8.0, 12.0, 16.0], "mode_count": 2,
            "density": 20.0, "out_dir": str(tmp_path),
        })
        result = runner.invoke(main, ["cutoff", "--config", cfg])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "cutoff.json").read_text())
        assert "2" in report["exponents"]
        lines = (tmp_path / "cutoff.csv").read_text().splitlines()
        assert lines[0] == "n,X,re_lambda,im_lambda,overlap_ok"


class TestTripleCommand:
    def test_report_written_not_found_case(self, runner, tmp_path):
        # a window far from the coalescence: the report still lands, found=false
        cfg = write_config(tmp_path, {
            "window": {"zeta": [0.30, 0.34], "C": [0.70, 0.72]},
            "l": 1, "M": 80, "coarse": 3, "candidates": 6,
            "out_dir": str(tmp_path),
        })
        result = runner.invoke(main, ["triple", "--config", cfg])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "triple.json").read_text())
        assert report["found"] is False
        assert 0.30 <= report["zeta"] <= 0.34


class TestSelftest:
    def test_subset_runs(self, runner):
        result = runner.invoke(main, [
            "selftest", "--criteria", "soliton-constraint,discrete-krein-symmetry",
        ])
        assert result.exit_code == 0, result.output
        lines = [ln for ln in result.output.splitlines() if ln.startswith("[")]
        assert len(lines) == 2
        assert all(ln.startswith("[PASS]") for ln in lines)
