import json
import shutil
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from osclab.cli import main
from osclab.runner import RunRecord

FIXTURES = Path(__file__).parent / "fixtures"
STUB = str(Path(__file__).parent / "stub_bridge.py")


def write_tiny_config(path, **overrides):
    data = {
        "schema": 1,
        "env": "crawler",
        "variant": "full",
        "seeds": [0],
        "budget_steps": 12_000,  # one generation
        "population_size": 30,
    }
    data.update(overrides)
    path.write_text(yaml.safe_dump(data))
    return path


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_missing_config_exits_1(self):
        assert main(["optimize", "missing.toml"]) == 1

    def test_missing_record_exits_1(self):
        assert main(["evaluate", "nowhere.json"]) == 1

    def test_bad_endpoint_exits_2(self):
        assert main(["bridge-check", f"stdio:{sys.executable} -c 'import sys; sys.exit(1)'"]) == 2


class TestOptimizeCommand:
    def test_print_config_resolves_defaults(self, tmp_path, capsys):
        config = write_tiny_config(tmp_path / "exp.yaml")
        assert main(["optimize", str(config), "--print-config"]) == 0
        printed = yaml.safe_load(capsys.readouterr().out)
        assert printed["env"] == "crawler"
        assert printed["search_space"]["amplitude"] == [-0.5, 0.5]
        assert printed["population_size"] == 30

    def test_end_to_end_writes_records_and_csv(self, tmp_path, capsys):
        config = write_tiny_config(tmp_path / "exp.yaml")
        out = tmp_path / "runs"
        assert main(["optimize", str(config), "--out", str(out)]) == 0
        run_dirs = list(out.iterdir())
        assert len(run_dirs) == 1
        record_path = run_dirs[0] / "record_seed0.json"
        record = RunRecord.load(record_path)
        assert len(record.best_per_generation) == 1
        csv_text = (run_dirs[0] / "generations.csv").read_text()
        assert csv_text.startswith("env,method,variant,seed,generation,return\n")


class TestEvaluateCommand:
    def make_record(self, tmp_path):
        config = write_tiny_config(tmp_path / "exp.yaml")
        out = tmp_path / "runs"
        main(["optimize", str(config), "--out", str(out)])
        return next(out.iterdir()) / "record_seed0.json"

    def test_reproduces_stored_fitness(self, tmp_path, capsys):
        record_path = self.make_record(tmp_path)
        record = RunRecord.load(record_path)
        assert main(["evaluate", str(record_path)]) == 0
        printed = capsys.readouterr().out
        assert repr(record.best_fitness) in printed

    def test_writes_action_stream(self, tmp_path):
        record_path = self.make_record(tmp_path)
        out = tmp_path / "eval"
        assert main(["evaluate", str(record_path), "--seeds", "0,1", "--out", str(out)]) == 0
        data = np.load(out / "actions.npz")
        assert data["seed_0"].shape == (400, 1)


class TestRobustnessCommand:
    def test_sweep_reports(self, tmp_path):
        config = write_tiny_config(tmp_path / "exp.yaml")
        out = tmp_path / "runs"
        main(["optimize", str(config), "--out", str(out)])
        record_path = next(out.iterdir()) / "record_seed0.json"
        sweep = tmp_path / "sweep.yaml"
        sweep.write_text(
            yaml.safe_dump(
                {
                    "seeds": [0, 1],
                    "perturbations": [
                        {"kind": "gaussian_noise", "sigma": 0.2},
                        {"kind": "failure_type_i"},
                    ],
                }
            )
        )
        report_dir = tmp_path / "rob"
        assert main(
            ["robustness", str(record_path), str(sweep), "--out", str(report_dir)]
        ) == 0
        returns = (report_dir / "returns.csv").read_text().splitlines()
        assert returns[0] == "env,method,variant,seed,generation,return"
        methods = {line.split(",")[1] for line in returns[1:]}
        assert {"gaussian_noise_0.2", "failure_type_i", "unperturbed"} <= methods

    def test_bad_sweep_block_exits_1(self, tmp_path):
        config = write_tiny_config(tmp_path / "exp.yaml")
        out = tmp_path / "runs"
        main(["optimize", str(config), "--out", str(out)])
        record_path = next(out.iterdir()) / "record_seed0.json"
        sweep = tmp_path / "sweep.yaml"
        sweep.write_text(yaml.safe_dump({"perturbations": [{"sigma": 0.2}]}))
        assert main(["robustness", str(record_path), str(sweep)]) == 1


class TestMetricsCommand:
    def test_fixture_summary_byte_for_byte(self, tmp_path):
        csv_dir = tmp_path / "csvs"
        csv_dir.mkdir()
        shutil.copy(FIXTURES / "scores.csv", csv_dir / "scores.csv")
        out = tmp_path / "report"
        assert main(["metrics", str(csv_dir), "--out", str(out)]) == 0
        produced = (out / "summary.json").read_bytes()
        expected = (FIXTURES / "expected" / "summary.json").read_bytes()
        assert produced == expected
        assert (out / "profiles.csv").read_bytes() == (
            FIXTURES / "expected" / "profiles.csv"
        ).read_bytes()
        assert (out / "aggregates.csv").read_bytes() == (
            FIXTURES / "expected" / "aggregates.csv"
        ).read_bytes()

    def test_missing_anchor_methods_exit_1(self, tmp_path):
        csv_dir = tmp_path / "csvs"
        csv_dir.mkdir()
        (csv_dir / "scores.csv").write_text(
            "env,method,variant,seed,generation,return\n"
            "e,solo,full,0,0,1.0\n"
        )
        assert main(["metrics", str(csv_dir)]) == 1

    def test_empty_dir_exits_1(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        assert main(["metrics", str(empty)]) == 1


class TestBridgeCheckCommand:
    def test_stub_server_passes(self, capsys):
        endpoint = f"stdio:{sys.executable} {STUB} check"
        assert main(["bridge-check", endpoint]) == 0
        assert "bridge ok" in capsys.readouterr().out

    def test_summary_contains_spec(self, capsys):
        endpoint = f"stdio:{sys.executable} {STUB} check"
        main(["bridge-check", endpoint])
        out = capsys.readouterr().out
        assert "obs_dim=3" in out and "act_dim=2" in out


def test_record_fixture_json_shape(tmp_path):
    record = RunRecord(
        env="crawler", variant="full", seed=0, config_hash="ab", population_size=30
    )
    record.save(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["schema"] == 1
    assert data["incomplete"] is True
