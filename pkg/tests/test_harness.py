import csv
import json
from fractions import Fraction

import pytest

from app.core.config import settings
from app.core.errors import ConfigError, ExitCode, InvariantViolation, UsageError
from app.main import run
from app.modules.harness.enums import Subcommand
from app.modules.harness.service import (
    artifact_path,
    failure_path,
    load_config,
    parse_overrides,
    read_failure_artifact,
    same_failures,
)


def read_csv(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("# ")]
    return list(csv.DictReader(lines))


def write_artifact(path, config, failures):
    path.write_text(json.dumps({"header": {"config": config}, "failures": failures}))
    return path


def test_parse_overrides():
    assert parse_overrides(["d=3", "M=4", "d=2"]) == {"d": "2", "M": "4"}
    with pytest.raises(UsageError):
        parse_overrides(["lambda"])
    with pytest.raises(UsageError):
        parse_overrides(["=1"])


def test_load_config_from_file_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"d": 2, "M": 3, "lambda": "1/2, 2", "v0": [0, 0]}))
    config = load_config("exact", path, ["M=2", "burn-in=5"])
    assert config.subcommand is Subcommand.EXACT
    assert (config.d, config.M, config.burn_in) == (2, 2, 5)
    assert config.activities() == [Fraction(1, 2), Fraction(2)]
    assert config.v0 == (0, 0)
    assert config.echo()["lambda"] == ["1/2", "2"]
    assert artifact_path(config).name == "exact.json"


@pytest.mark.parametrize(("subcommand", "overrides"), [
    ("flow-audit", ["bogus=1"]),
    ("sample", ["sweeps=10", "burn-in=10"]),
    ("gap-scan", ["sweeps=10", "burn-in=20"]),
    ("flow-audit", ["force-large=true", "small-only=true"]),
    ("flow-audit", ["v0=(1,0,0)"]),
    ("flow-audit", ["d=0"]),
])
def test_invalid_configs(subcommand, overrides):
    with pytest.raises(ConfigError):
        load_config(subcommand, None, overrides)


@pytest.mark.parametrize("subcommand", ["exact", "contour-audit", "approx-audit", "flow-audit", "iso"])
def test_sweeps_only_checked_when_sampling(subcommand):
    config = load_config(subcommand, None, ["sweeps=10", "burn-in=10"])
    assert (config.sweeps, config.burn_in) == (10, 10)


def test_replay_needs_artifact():
    with pytest.raises(ConfigError):
        load_config("replay")


def test_unreadable_config(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config("exact", path)
    with pytest.raises(ConfigError):
        load_config("exact", tmp_path / "missing.json")


def test_failure_path(tmp_path):
    assert failure_path(tmp_path / "flow.json") == tmp_path / "flow.failures.json"


def test_same_failures_ignores_key_order():
    assert same_failures([{"a": 1, "b": [2]}], [{"b": [2], "a": 1}])
    assert not same_failures([{"a": 1}], [])


def test_exact_run(tmp_path):
    output = tmp_path / "exact.json"
    assert run(["exact", "v0=0,0", "lambda=1,1/2", f"output={output}"]) == 0
    payload = json.loads(output.read_text())
    assert payload["header"]["config"]["lambda"] == ["1", "1/2"]
    values = [(r["value_num"], r["value_den"]) for r in payload["records"]]
    assert values == [(1, 2), (1, 3)]
    assert not failure_path(output).exists()


def test_exact_partition_function(tmp_path):
    output = tmp_path / "z.json"
    assert run(["exact", "quantity=partition_function", "lambda=2", f"output={output}"]) == 0
    record = json.loads(output.read_text())["records"][0]
    assert record["value_num"] == 2 ** 3 * 3 ** 5


def test_usage_errors_exit_with_two(tmp_path):
    assert run(["exact", "bogus=1", f"output={tmp_path / 'x.json'}"]) == 2
    assert run(["exact", "novalue"]) == 2
    assert run(["exact", "M=40", f"output={tmp_path / 'big.json'}"]) == 2


def test_exit_codes():
    assert [int(code) for code in ExitCode] == [0, 1, 2]
    assert UsageError("x").exit_code is ExitCode.USAGE
    assert InvariantViolation("x").exit_code is ExitCode.INVARIANT_FAILURE


def test_budget_override_is_scoped_to_the_run(tmp_path):
    before = settings.ENUMERATION_BUDGET
    assert run(["exact", "v0=0,0", "enumeration-budget=4", f"output={tmp_path / 'small.json'}"]) == 2
    assert settings.ENUMERATION_BUDGET == before
    assert run(["exact", "v0=0,0", f"output={tmp_path / 'full.json'}"]) == 0


def test_flow_audit_on_smallest_torus(tmp_path):
    output = tmp_path / "flow.json"
    assert run(["flow-audit", "force-large=true", "lambda=1,2", f"output={output}"]) == 0
    records = json.loads(output.read_text())["records"]
    assert [r["summary"]["rows"] for r in records] == [0, 0]
    assert all(r["summary"]["prob_J0"] == "0" for r in records)


def test_contour_audit_on_smallest_torus(tmp_path):
    output = tmp_path / "contour.jsonl"
    assert run(["contour-audit", f"output={output}"]) == 0
    lines = [json.loads(line) for line in output.read_text().splitlines()]
    assert "header" in lines[0]
    assert lines[-1]["summary"]["audited"] == 0


def test_iso_run(tmp_path):
    output = tmp_path / "iso.csv"
    assert run(["iso", "d=2", "r-max=4", "q=3", f"output={output}"]) == 0
    strata = read_csv(output)
    assert len(strata) == 5 * 3
    balls = read_csv(tmp_path / "iso_balls.csv")
    assert [int(row["b_r"]) for row in balls] == [1, 5, 13, 25, 41]
    assert output.read_text().startswith("# created_at=")


def test_sample_run(tmp_path):
    output = tmp_path / "sample.csv"
    assert run(["sample", "v0=0,0", "sweeps=60", "burn-in=10", "seed=3", f"output={output}"]) == 0
    (row,) = read_csv(output)
    assert row["lambda"] == "1.0" and row["seed"] == "3"
    assert 0.0 <= float(row["estimate"]) <= 1.0


def test_violation_is_recorded(tmp_path, monkeypatch):
    def broken(config):
        raise InvariantViolation("Row does not sum to one", {"I_mask": 5})

    monkeypatch.setattr("app.modules.harness.router.exact_outcome", broken)
    output = tmp_path / "exact.json"
    assert run(["exact", f"output={output}"]) == 1
    config, failures = read_failure_artifact(failure_path(output))
    assert config.subcommand is Subcommand.EXACT
    assert failures == [{"detail": "Row does not sum to one", "I_mask": 5}]


def test_replay_reproduces(tmp_path):
    artifact = write_artifact(tmp_path / "old.failures.json", {"subcommand": "exact", "v0": [0, 0]}, [])
    output = tmp_path / "replay.json"
    assert run(["replay", f"artifact={artifact}", f"output={output}"]) == 0
    (record,) = json.loads(output.read_text())["records"]
    assert record == {"replayed": "exact", "recorded_failures": 0, "replayed_failures": 0, "reproduced": True}


def test_replay_reports_vanished_failures(tmp_path):
    artifact = write_artifact(
        tmp_path / "old.failures.json",
        {"subcommand": "contour-audit"},
        [{"I_mask": 1, "v0": 1, "failed": ["GA5"]}],
    )
    output = tmp_path / "replay.json"
    assert run(["replay", f"artifact={artifact}", f"output={output}"]) == 0
    (record,) = json.loads(output.read_text())["records"]
    assert record["reproduced"] is False and record["recorded_failures"] == 1


def test_replay_rejects_bad_artifacts(tmp_path):
    nested = write_artifact(tmp_path / "nested.json", {"subcommand": "replay", "artifact": "x.json"}, [])
    assert run(["replay", f"artifact={nested}", f"output={tmp_path / 'r.json'}"]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{}")
    assert run(["replay", f"artifact={broken}", f"output={tmp_path / 'r.json'}"]) == 2


@pytest.mark.parametrize("subcommand", ["contour-audit", "approx-audit"])
def test_sampled_audit_beyond_enumeration(tmp_path, subcommand):
    output = tmp_path / f"{subcommand}.jsonl"
    args = [subcommand, "M=4", "lambda=5", "samples=200", "burn-in=100", "seed=1", f"output={output}"]
    assert run(args) == 0
    lines = [json.loads(line) for line in output.read_text().splitlines()]
    assert lines[0]["header"]["config"]["samples"] == 200
    summary = lines[-1]["summary"]
    assert summary["audited"] > 0 and summary["failed"] == 0
    assert len(lines) == summary["audited"] + 2
    assert not failure_path(output).exists()
