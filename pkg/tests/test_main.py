"""
Tests for the command-line entry point.
"""
import json
from unittest.mock import patch

import pytest

import main
from core.config import RunConfig
from core.reports import InequalityReport


def _outcome(lhs):
    return {
        "suite": "content",
        "reports": [InequalityReport(name="lattice_count[M=1,N=1]", lhs=lhs, rhs=1.0)],
        "scans": [],
        "errors": [],
        "results": {},
    }


@pytest.fixture
def cli(clean_env):
    with patch("main.load_dotenv"):
        yield main.main


@pytest.fixture
def fake_orchestrator():
    with patch("main.Orchestrator") as orchestrator:
        yield orchestrator


class TestPrintDefaults:

    def test_prints_embedded_defaults(self, cli, capsys):
        assert cli(["print-defaults"]) == main.EXIT_PASS
        assert capsys.readouterr().out == RunConfig().to_env_text()

    def test_merges_a_file(self, cli, capsys, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("seed=7\n")
        assert cli(["print-defaults", "--config", str(path)]) == main.EXIT_PASS
        assert "seed=7\n" in capsys.readouterr().out


class TestExitCodes:

    def test_invalid_config(self, cli, tmp_path, capsys):
        path = tmp_path / "bad.env"
        path.write_text("n_nodes=7\n")
        assert cli(["content", "--config", str(path)]) == main.EXIT_CONFIG
        assert "Invalid configuration" in capsys.readouterr().err

    def test_missing_config(self, cli, tmp_path):
        assert cli(["content", "--config", str(tmp_path / "missing.env")]) == main.EXIT_CONFIG

    def test_pass(self, cli, fake_orchestrator, tmp_path, capsys):
        fake_orchestrator.return_value.process.return_value = _outcome(0.5)
        out = tmp_path / "report"
        assert cli(["content", "--out", str(out), "--seed", "11"]) == main.EXIT_PASS
        config = fake_orchestrator.call_args.args[0]
        assert config.seed == 11
        assert fake_orchestrator.call_args.args[1] == "content"
        with open(out / "report.json", encoding="utf-8") as handle:
            assert json.load(handle)["config"]["seed"] == 11
        assert "0 scans" in capsys.readouterr().out

    def test_fail(self, cli, fake_orchestrator, tmp_path):
        fake_orchestrator.return_value.process.return_value = _outcome(2.0)
        assert cli(["content", "--out", str(tmp_path / "report")]) == main.EXIT_FAIL

    def test_unwritable_output(self, cli, fake_orchestrator, tmp_path):
        fake_orchestrator.return_value.process.return_value = _outcome(0.5)
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        assert cli(["content", "--out", str(blocker)]) == main.EXIT_OUTPUT

    def test_tolerance_scale_reaches_config(self, cli, fake_orchestrator, tmp_path):
        fake_orchestrator.return_value.process.return_value = _outcome(0.5)
        cli(["content", "--out", str(tmp_path / "report"), "--tol-scale", "2"])
        assert fake_orchestrator.call_args.args[0].tol_scale == 2.0


def test_unknown_subcommand(cli):
    with pytest.raises(SystemExit):
        cli(["everything"])
