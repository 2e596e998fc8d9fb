import json

import pytest
from click.testing import CliRunner

from core.bootstrap import Dataset
from parallel_bootstrap_cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(cli, [str(a) for a in args], env=env)


def test_help_lists_subcommands(runner):
    result = invoke(runner, "--help")
    assert result.exit_code == 0
    for name in ("simulate", "predict", "plan", "verify", "sweep"):
        assert name in result.output


def test_simulate_reports_matching_counters(runner):
    result = invoke(runner, "simulate", "--strategy", "dbsa", "--D", 100, "--N", 40, "--P", 4,
                    "--deterministic")
    assert result.exit_code == 0, result.output
    doc = json.loads(result.stdout)
    assert list(doc)[:5] == ["spec", "estimate", "measured", "predicted", "match"]
    assert doc["match"] is True
    assert doc["measured"]["bytes"] == 1224
    assert doc["spec"]["strategy"] == "dbsa"
    assert "generated_at" not in doc


def test_simulate_reads_float32_file(runner, tmp_path):
    path = tmp_path / "points.bin"
    Dataset.synthetic(16, 3).to_file(path)
    result = invoke(runner, "simulate", "--strategy", "ddrs", "--D", 16, "--N", 4, "--P", 2,
                    "--data", path, "--deterministic")
    assert result.exit_code == 0, result.output
    doc = json.loads(result.stdout)
    assert doc["measured"]["bytes_by_channel"]["results_back"] == 16
    assert doc["spec"]["data_path"] == str(path)


def test_simulate_over_cap_exits_infeasible(runner):
    result = invoke(runner, "simulate", "--strategy", "fsd", "--memory-cap", 100)
    assert result.exit_code == 3
    doc = json.loads(result.stdout)
    assert doc["error"] == "infeasible"
    assert doc["strategy"] == "FSD"


def test_invalid_experiment_is_a_usage_error(runner):
    result = invoke(runner, "predict", "--strategy", "dbsr", "--N", 10, "--P", 4)
    assert result.exit_code == 2


def test_ddrs_needs_divisible_dataset(runner):
    result = invoke(runner, "simulate", "--strategy", "ddrs", "--D", 10, "--N", 4, "--P", 4)
    assert result.exit_code == 2


def test_predict_large_case(runner):
    result = invoke(runner, "predict", "--strategy", "dbsr", "--D", 10_000, "--N", 1000,
                    "--P", 4)
    assert result.exit_code == 0, result.output
    doc = json.loads(result.stdout)
    assert doc["predicted"]["comm_bytes"] == 30_120_000
    assert doc["predicted"]["comm_reduction_vs_dbsr"] == 1.0


def test_plan_chooses_ddrs_under_tight_cap(runner):
    result = invoke(runner, "plan", "--memory-cap", 3000, "--D", 10_000, "--N", 1000, "--P", 4,
                    "--B", 1e8, "--S", 1e8)
    assert result.exit_code == 0, result.output
    doc = json.loads(result.stdout)
    assert doc["chosen"] == "ddrs"


def test_plan_with_no_feasible_strategy_exits_3(runner):
    result = invoke(runner, "plan", "--memory-cap", 100, "--D", 10_000, "--N", 1000, "--P", 4)
    assert result.exit_code == 3
    doc = json.loads(result.stdout)
    assert doc["chosen"] is None


def test_verify_deterministic_output_is_stable(runner):
    first = invoke(runner, "verify", "--deterministic")
    second = invoke(runner, "verify", "--deterministic")
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
    doc = json.loads(first.stdout)
    assert doc["ok"] is True
    assert [row["status"] for row in doc["rows"]] == ["ok"] * 4


def test_verify_with_threads_matches_serial(runner):
    serial = invoke(runner, "verify", "--deterministic")
    threaded = invoke(runner, "verify", "--deterministic", "--jobs", 4)
    assert threaded.exit_code == 0
    assert serial.stdout == threaded.stdout


def test_verify_marks_strategies_over_cap_infeasible(runner):
    result = invoke(runner, "verify", "--memory-cap", 29, "--deterministic")
    assert result.exit_code == 0, result.output
    statuses = {row["strategy"]: row["status"] for row in json.loads(result.stdout)["rows"]}
    assert statuses == {"fsd": "infeasible", "dbsr": "infeasible", "dbsa": "infeasible",
                        "ddrs": "ok"}


def test_verify_marks_ddrs_not_applicable(runner):
    result = invoke(runner, "verify", "--D", 10, "--N", 4, "--P", 4, "--deterministic")
    assert result.exit_code == 0, result.output
    rows = json.loads(result.stdout)["rows"]
    assert rows[-1]["status"] == "not_applicable"


def test_desynchronized_rank_exits_4(runner):
    result = invoke(runner, "verify", "--desync-rank", 1, "--deterministic")
    assert result.exit_code == 4
    rows = json.loads(result.stdout)["rows"]
    assert rows[-1]["status"] == "sync_fault"


@pytest.mark.parametrize("rank", [4, 7])
def test_desync_rank_outside_fabric_is_a_usage_error(runner, rank):
    result = invoke(runner, "verify", "--desync-rank", rank, "--P", 4, "--deterministic")
    assert result.exit_code == 2
    assert "--desync-rank" in result.output


def test_sweep_csv(runner):
    result = invoke(runner, "sweep", "--vary", "N", "--values", "4,8,12", "--format", "csv")
    assert result.exit_code == 0, result.output
    lines = result.stdout.strip().splitlines()
    assert lines[0].startswith("N,strategy,comm_bytes")
    assert len(lines) == 1 + 3 * 4


def test_sweep_rejects_non_integers(runner):
    result = invoke(runner, "sweep", "--vary", "D", "--values", "10,abc")
    assert result.exit_code == 2


def test_output_format_from_environment(runner):
    result = invoke(runner, "predict", "--strategy", "dbsa", env={"BOOTSIM_OUTPUT_FORMAT": "text"})
    assert result.exit_code == 0, result.output
    assert result.stdout.splitlines()[0].split()[0] == "kind"


def test_config_file_overrides_defaults(runner, tmp_path):
    path = tmp_path / "override.yaml"
    path.write_text("experiment:\n  dataset_size: 200\n")
    result = runner.invoke(cli, ["--config", str(path), "predict", "--strategy", "dbsa"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.stdout)["spec"]["D"] == 200


def test_malformed_config_file_is_a_usage_error(runner, tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("- just\n- a list\n")
    result = runner.invoke(cli, ["--config", str(path), "predict", "--strategy", "dbsa"])
    assert result.exit_code == 2
