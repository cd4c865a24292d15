"""
Tests for the command-line front end.
"""

import json

import pytest
import yaml

from latticeclimber.cli import EXIT_OK, EXIT_SIZE_CAP, EXIT_USAGE, main
from latticeclimber.core.runner import read_csv


@pytest.fixture
def cli(config_file):
    def run(*argv):
        return main(["--config", str(config_file), "--quiet", *argv])

    return run


@pytest.fixture
def canonical_file(cli, tmp_path):
    def make(name):
        path = tmp_path / f"config_{name}.json"
        assert cli("gen", "--kind", "canonical", "--name", name, "--output", str(path)) == EXIT_OK
        return path

    return make


class TestGen:
    def test_angle_instance(self, cli, tmp_path):
        path = tmp_path / "angle.json"
        assert cli("gen", "--kind", "angle", "--r", "0.9", "--theta", "0.8", "--output", str(path)) == EXIT_OK
        data = json.loads(path.read_text())
        assert data["kind"] == "linear" and data["d"] == 2
        assert len(data["classifiers"]) == 2
        assert "budget" not in data

    def test_random_instance_is_reproducible(self, cli, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        for path in (first, second):
            args = ["gen", "--kind", "random", "--d", "16", "--m", "4", "--seed", "7", "--output", str(path)]
            assert cli(*args) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    @pytest.mark.parametrize("kind", ["softmax", "mlp"])
    def test_multiclass_instances(self, cli, tmp_path, kind):
        path = tmp_path / f"{kind}.json"
        assert cli("gen", "--kind", kind, "--d", "4", "--m", "3", "--k", "3", "--output", str(path)) == EXIT_OK
        assert json.loads(path.read_text())["k"] == 3

    def test_theta_out_of_range(self, cli, tmp_path):
        assert cli("gen", "--kind", "angle", "--theta", "4", "--output", str(tmp_path / "x.json")) == EXIT_USAGE

    def test_angle_needs_theta(self, cli, tmp_path):
        assert cli("gen", "--kind", "angle", "--output", str(tmp_path / "x.json")) == EXIT_USAGE

    def test_canonical_stores_its_budget(self, canonical_file):
        data = json.loads(canonical_file("b").read_text())
        assert data["budget"] == {"norm": "l2", "epsilon": 0.8}


class TestAttack:
    def test_config_d(self, cli, canonical_file, tmp_path, capsys):
        output = tmp_path / "results" / "attacks.csv"
        assert cli("attack", str(canonical_file("d")), "--attack", "lca", "--trace", "--output", str(output)) == EXIT_OK
        assert "Trace" in capsys.readouterr().out
        rows = read_csv(output)
        assert rows["score"].tolist() == [pytest.approx(1.0)]
        assert rows["fooled"].astype(str).tolist() == ["0 1"]
        assert rows["delta_norm"].iloc[0] <= 0.8 + 1e-9

    def test_rows_are_appended(self, cli, canonical_file, tmp_path):
        output = tmp_path / "attacks.csv"
        path = canonical_file("a")
        for attack in ("lca", "arc", "apgd"):
            assert cli("attack", str(path), "--attack", attack, "--output", str(output)) == EXIT_OK
        rows = read_csv(output)
        assert rows["attack"].tolist() == ["lca", "arc", "apgd"]
        assert rows["score"].tolist() == [0.0, 0.0, 0.0]

    def test_budget_override(self, cli, tmp_path):
        path = tmp_path / "angle.json"
        output = tmp_path / "attacks.csv"
        cli("gen", "--kind", "angle", "--r", "0.9", "--theta", "0.5", "--output", str(path))
        assert cli("attack", str(path), "--epsilon", "1.0", "--output", str(output)) == EXIT_OK
        assert read_csv(output)["score"].iloc[0] == pytest.approx(1.0)

    def test_missing_budget(self, cli, tmp_path):
        path = tmp_path / "angle.json"
        cli("gen", "--kind", "angle", "--theta", "0.5", "--output", str(path))
        assert cli("attack", str(path)) == EXIT_USAGE

    def test_unknown_attack(self, cli, canonical_file):
        assert cli("attack", str(canonical_file("d")), "--attack", "fgsm") == EXIT_USAGE

    def test_missing_file(self, cli, tmp_path):
        assert cli("attack", str(tmp_path / "nope.json"), "--epsilon", "1.0") == EXIT_USAGE

    def test_malformed_file(self, cli, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"kind": "linear",')
        assert cli("attack", str(path), "--epsilon", "1.0") == EXIT_USAGE


class TestOracle:
    def test_config_c(self, cli, canonical_file, tmp_path):
        output = tmp_path / "lattice.json"
        assert cli("oracle", str(canonical_file("c")), "--output", str(output)) == EXIT_OK
        report = json.loads(output.read_text())
        assert report["maximal_regions"] == [[0], [1]]
        assert report["optimal_score"] == pytest.approx(0.6)

    def test_default_output_path(self, cli, canonical_file):
        path = canonical_file("d")
        assert cli("oracle", str(path)) == EXIT_OK
        assert (path.parent / "config_d_lattice.json").exists()

    def test_size_cap(self, cli, tmp_path):
        path = tmp_path / "big.json"
        cli("gen", "--kind", "random", "--d", "4", "--m", "20", "--epsilon", "1.0", "--output", str(path))
        assert cli("oracle", str(path)) == EXIT_SIZE_CAP

    def test_size_cap_override(self, cli, tmp_path):
        path = tmp_path / "five.json"
        cli("gen", "--kind", "random", "--d", "4", "--m", "5", "--epsilon", "1.0", "--output", str(path))
        assert cli("oracle", str(path), "--max-m", "4") == EXIT_SIZE_CAP


class TestExperiments:
    def test_sweep_angle(self, cli, tmp_path):
        output = tmp_path / "sweep.csv"
        args = ["sweep-angle", "--r", "0.9", "--epsilon", "1.0", "--thetas", "0.3,2.5", "--attacks", "lca", "arc"]
        assert cli(*args, "--output", str(output)) == EXIT_OK
        assert "# critical_angle=" in output.read_text()
        frame = read_csv(output)
        scores = {(round(t, 2), a): s for t, a, s in frame.itertuples(index=False)}
        assert scores[(0.3, "lca")] == pytest.approx(1.0)
        assert scores[(2.5, "lca")] == pytest.approx(0.5)
        assert scores[(2.5, "arc")] == pytest.approx(0.5)

    def test_bench_random(self, cli, tmp_path):
        output, raw = tmp_path / "bench.csv", tmp_path / "raw.csv"
        args = ["bench-random", "--m-grid", "1", "2", "--trials", "2", "--d", "16", "--attacks", "lca", "arc"]
        assert cli(*args, "--output", str(output), "--raw", str(raw)) == EXIT_OK
        summary = read_csv(output)
        assert list(summary.columns) == ["m", "attack", "mean_score", "std_score", "trials"]
        assert len(summary) == 4
        assert len(read_csv(raw)) == 8
        assert "# sign_test_p=" in output.read_text()

    def test_default_output_goes_to_results(self, cli, tmp_path):
        assert cli("sweep-angle", "--points", "1", "--attacks", "arc") == EXIT_OK
        assert (tmp_path / "results" / "angle_sweep.csv").exists()

    def test_bad_bias_setting(self, cli):
        assert cli("bench-random", "--bias-setting", "9", "--trials", "1") == EXIT_USAGE

    def test_run_experiment_file(self, cli, tmp_path):
        output = tmp_path / "angle.csv"
        experiment = tmp_path / "angle.yaml"
        experiment.write_text(yaml.safe_dump({
            "experiment": "angle_sweep",
            "attacks": ["arc"],
            "budget": {"norm": "l2", "epsilon": 1.0},
            "instance": {"r": 0.9, "points": 3},
            "output": str(output),
        }))
        assert cli("run", str(experiment)) == EXIT_OK
        assert len(read_csv(output)) == 3

    def test_run_unknown_experiment(self, cli, tmp_path):
        experiment = tmp_path / "bad.yaml"
        experiment.write_text(yaml.safe_dump({"experiment": "transfer"}))
        assert cli("run", str(experiment)) == EXIT_USAGE

    def test_run_missing_file(self, cli, tmp_path):
        assert cli("run", str(tmp_path / "missing.yaml")) == EXIT_USAGE


def test_help_exits_cleanly():
    assert main(["--help"]) == EXIT_OK


def test_missing_command():
    assert main([]) == EXIT_USAGE
