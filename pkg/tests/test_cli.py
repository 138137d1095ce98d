import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from metavqe.cli import (
    ConfigError,
    ExperimentConfig,
    cmd_run,
    format_config,
    main,
    parse_config,
)

FAST_ARGS = [
    "--n", "2", "--l1", "1", "--l2", "1", "--train-points", "3",
    "--test-points", "5", "--max-iterations", "40", "--train-restarts", "2",
    "--threads", "1",
]


def run_cli(argv, cwd=None, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "metavqe", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=full_env,
    )


class TestConfig:
    def test_roundtrip_identity(self):
        config = ExperimentConfig(n=5, field=0.33, algorithms=("meta", "exact"), seed=9)
        assert parse_config(format_config(config)) == config

    def test_roundtrip_default(self):
        assert parse_config(format_config(ExperimentConfig())) == ExperimentConfig()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("bogus = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("n = 3\nn = 4\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("n = 3\nfield = abc\n")

    def test_comments_and_blanks(self):
        config = parse_config("# comment\n\nn = 6  # inline\n")
        assert config.n == 6

    def test_validation_catches_bad_algorithm(self):
        with pytest.raises(ConfigError, match="unknown algorithm"):
            ExperimentConfig(algorithms=("nope",)).validate()

    def test_validation_meta_needs_encoding_layers(self):
        with pytest.raises(ConfigError, match="l1"):
            ExperimentConfig(l1=0, algorithms=("meta",)).validate()

    def test_validation_model_file_needs_path(self):
        with pytest.raises(ConfigError, match="hamiltonian-file"):
            ExperimentConfig(model="file").validate()

    def test_validation_range(self):
        with pytest.raises(ConfigError, match="meta-start"):
            ExperimentConfig(meta_start=2.0, meta_stop=-2.0).validate()


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    result = run_cli(["run", *FAST_ARGS, "--algorithms", "meta,ga,vqe,opt-meta,opt-ga",
                      "--output-dir", str(out)])
    assert result.returncode == 0, result.stderr
    return out


class TestRun:
    def test_artifacts_present(self, tiny_run):
        names = {p.name for p in tiny_run.iterdir()}
        for algorithm in ("exact", "meta", "ga", "vqe", "opt-meta", "opt-ga"):
            assert f"profile_{algorithm}.csv" in names
        assert {"train_meta.json", "train_ga.json", "trace_meta.csv", "trace_ga.csv",
                "summary.json"} <= names
        assert {"trace_vqe.csv", "trace_opt-meta.csv", "trace_opt-ga.csv"} <= names

    def test_profile_schema(self, tiny_run):
        lines = (tiny_run / "profile_meta.csv").read_text().strip().splitlines()
        assert lines[0] == "meta_value,energy,exact,abs_err,rel_err,algorithm,n,L1,L2,seed,termination"
        assert len(lines) == 6  # header + 5 test points

    def test_summary_keys(self, tiny_run):
        doc = json.loads((tiny_run / "summary.json").read_text())
        assert set(doc) == {"timestamp", "config", "algorithms"}
        assert set(doc["algorithms"]) == {"meta", "ga", "vqe", "opt-meta", "opt-ga"}
        stats = doc["algorithms"]["vqe"]
        assert {"median_abs_err", "max_abs_err", "median_rel_err", "max_rel_err"} <= set(stats)

    def test_variational_bound_holds(self, tiny_run):
        for name in ("profile_meta.csv", "profile_vqe.csv", "profile_opt-meta.csv"):
            rows = (tiny_run / name).read_text().strip().splitlines()[1:]
            for row in rows:
                cells = row.split(",")
                assert float(cells[1]) >= float(cells[2]) - 1e-8

    def test_deterministic_rerun(self, tiny_run, tmp_path):
        result = run_cli(["run", *FAST_ARGS, "--algorithms", "meta,ga,vqe,opt-meta,opt-ga",
                          "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        for path in tiny_run.iterdir():
            if path.suffix == ".csv":
                assert (tmp_path / path.name).read_text() == path.read_text(), path.name
        def stable_lines(path):
            # timestamp and output-dir legitimately differ between runs
            return [
                line
                for line in path.read_text().splitlines()
                if "timestamp" not in line and "output-dir" not in line
            ]

        assert stable_lines(tiny_run / "summary.json") == stable_lines(tmp_path / "summary.json")

    def test_threads_do_not_change_results(self, tiny_run, tmp_path):
        result = run_cli(["run", *FAST_ARGS[:-2], "--threads", "2",
                          "--algorithms", "meta,ga,vqe,opt-meta,opt-ga",
                          "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "profile_vqe.csv").read_text() == (tiny_run / "profile_vqe.csv").read_text()


class TestRunModes:
    def test_exact_only(self, tmp_path):
        result = run_cli(["run", *FAST_ARGS, "--algorithms", "exact", "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        names = {p.name for p in tmp_path.iterdir()}
        assert names == {"profile_exact.csv", "summary.json"}

    def test_model_file(self, tmp_path):
        ham = tmp_path / "toy.txt"
        ham.write_text("qubits 2\n1.0 X0 X1\n@d 1.0 Z0\n@d 1.0 Z1\n")
        result = run_cli([
            "run", *FAST_ARGS, "--model", "file", "--hamiltonian-file", str(ham),
            "--algorithms", "meta,vqe", "--meta-start", "-1", "--meta-stop", "1",
            "--output-dir", str(tmp_path / "out"),
        ])
        assert result.returncode == 0, result.stderr
        header, first, *_ = (tmp_path / "out" / "profile_meta.csv").read_text().splitlines()
        assert first.split(",")[5] == "meta"

    def test_env_var_output_dir(self, tmp_path):
        result = run_cli(
            ["run", *FAST_ARGS, "--algorithms", "exact"],
            cwd=tmp_path,
            env={"METAVQE_OUTPUT_DIR": str(tmp_path / "from-env")},
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "from-env" / "profile_exact.csv").exists()

    def test_config_file_plus_flag_override(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("n = 2\nl1 = 1\nl2 = 1\ntrain-points = 3\ntest-points = 4\n"
                       "max-iterations = 30\nalgorithms = exact\n")
        result = run_cli(["run", "--config", str(cfg), "--test-points", "6",
                          "--threads", "1", "--output-dir", str(tmp_path / "o")])
        assert result.returncode == 0, result.stderr
        rows = (tmp_path / "o" / "profile_exact.csv").read_text().strip().splitlines()
        assert len(rows) == 7  # override wins over config file

    def test_invalid_config_exit_2(self, tmp_path):
        result = run_cli(["run", "--n", "1", "--output-dir", str(tmp_path)])
        assert result.returncode == 2
        assert "error" in result.stderr

    def test_missing_config_file_exit_2(self, tmp_path):
        result = run_cli(["run", "--config", str(tmp_path / "nope.cfg")])
        assert result.returncode == 2

    def test_gaussian_squared_flag(self, tmp_path):
        result = run_cli(["run", *FAST_ARGS, "--gaussian-squared", "--algorithms", "meta",
                          "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        doc = json.loads((tmp_path / "train_meta.json").read_text())
        assert doc["encoding"] == "gaussian-squared"


class TestExactCommand:
    def test_prints_pairs(self):
        result = run_cli(["exact", "--n", "3", "--points", "5", "--start", "-1", "--stop", "1"])
        assert result.returncode == 0
        rows = result.stdout.strip().splitlines()
        assert len(rows) == 5
        first = rows[0].split()
        assert float(first[0]) == -1.0
        assert float(first[1]) < 0


class TestValidateConfig:
    def test_ok(self, tmp_path):
        cfg = tmp_path / "good.cfg"
        cfg.write_text("n = 4\n")
        result = run_cli(["validate-config", str(cfg)])
        assert result.returncode == 0
        assert "ok" in result.stdout

    def test_bad(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n = 4\nwat = 1\n")
        result = run_cli(["validate-config", str(cfg)])
        assert result.returncode == 2


class TestPlotdata:
    def test_single_profile_two_columns(self, tiny_run, tmp_path):
        result = run_cli(["plotdata", str(tiny_run / "profile_vqe.csv"),
                          "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        rows = (tmp_path / "plot_energy.dat").read_text().strip().splitlines()
        assert rows[0] == "# meta_value vqe"
        assert len(rows[1].split()) == 2
        assert len(rows) == 6

    def test_five_profiles_six_columns(self, tiny_run, tmp_path):
        paths = [str(tiny_run / f"profile_{a}.csv") for a in ("meta", "ga", "vqe", "opt-meta", "exact")]
        result = run_cli(["plotdata", *paths, "--output-dir", str(tmp_path)])
        assert result.returncode == 0, result.stderr
        rows = (tmp_path / "plot_energy.dat").read_text().strip().splitlines()
        assert rows[0].split() == ["#", "meta_value", "exact", "meta", "ga", "vqe", "opt-meta"]
        assert len(rows[1].split()) == 6
        err_rows = (tmp_path / "plot_abs_error.dat").read_text().strip().splitlines()
        assert err_rows[0].split() == ["#", "meta_value", "meta", "ga", "vqe", "opt-meta"]

    def test_mismatched_grid_names_file(self, tiny_run, tmp_path):
        other = tmp_path / "other"
        result = run_cli(["run", *FAST_ARGS[:8], "--test-points", "7", "--threads", "1",
                          "--algorithms", "exact", "--output-dir", str(other)])
        assert result.returncode == 0, result.stderr
        bad = run_cli(["plotdata", str(tiny_run / "profile_vqe.csv"),
                       str(other / "profile_exact.csv"), "--output-dir", str(tmp_path)])
        assert bad.returncode == 2
        assert "profile_exact.csv" in bad.stderr

    def test_schema_mismatch_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        result = run_cli(["plotdata", str(bad)])
        assert result.returncode == 2


class TestMainInProcess:
    def test_main_returns_exit_code(self, tmp_path):
        assert main(["run", "--n", "0", "--output-dir", str(tmp_path)]) == 2

    def test_cmd_run_direct(self, tmp_path):
        config = ExperimentConfig(
            n=2, l1=1, l2=1, train_points=2, test_points=3, max_iterations=20,
            train_restarts=1, algorithms=("exact",),
        )
        assert cmd_run(config, tmp_path, workers=1) == 0
        assert (tmp_path / "profile_exact.csv").exists()
