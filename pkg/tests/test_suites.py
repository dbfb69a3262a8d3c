"""
Tests for the suite workflows and the orchestrator.
"""
from unittest.mock import MagicMock, patch

import pytest
from langgraph.graph import END, StateGraph

from core.reports import InequalityReport, ScanResult
from suites.base_suite import BaseSuite, SuiteState, suite_step
from suites.build_suite import BuildSuite
from suites.inequality_suite import InequalitySuite
from suites.orchestrator import CHECK_SUITES, Orchestrator, outcome_passed


class _TwoStepSuite(BaseSuite):
    name = "two_step"
    needs_context = False

    def _create_graph(self) -> StateGraph:
        workflow = StateGraph(SuiteState)
        workflow.add_node("ok", self._ok)
        workflow.add_node("boom", self._boom)
        workflow.set_entry_point("ok")
        workflow.add_edge("ok", "boom")
        workflow.add_edge("boom", END)
        return workflow.compile()

    @suite_step("ok")
    def _ok(self, state: SuiteState) -> None:
        state.reports.append(InequalityReport(name="fine", lhs=0.0, rhs=1.0))

    @suite_step("boom")
    def _boom(self, state: SuiteState) -> None:
        raise ValueError("bad input")


class _ContextSuite(_TwoStepSuite):
    name = "needs_context"
    needs_context = True


class _FakeCheckSuite:
    seen = []

    def __init__(self, config):
        self.config = config

    def process(self, context=None):
        _FakeCheckSuite.seen.append(context)
        return {
            "reports": [InequalityReport(name=f"check_{len(_FakeCheckSuite.seen)}", lhs=0.0, rhs=1.0)],
            "scans": [],
            "errors": [],
            "results": {"ran": True},
            "context": context,
        }


def _fake_build(complete=True):
    context = MagicMock()
    context.complete = complete
    build = MagicMock()
    build.return_value.process.return_value = {
        "reports": [InequalityReport(name="build_report", lhs=0.0, rhs=1.0)],
        "scans": [],
        "errors": [],
        "results": {"make_grid_status": "success"},
        "context": context,
    }
    return build, context


class TestSuiteStep:

    def test_error_is_recorded_and_graph_continues(self, small_config):
        outcome = _TwoStepSuite(small_config).process()
        assert [r.name for r in outcome["reports"]] == ["fine"]
        assert outcome["results"] == {"ok_status": "success", "boom_status": "error"}
        assert outcome["errors"] == [{"suite": "two_step", "task": "boom", "error_type": "ValueError",
                                      "message": "bad input"}]

    def test_missing_context_skips(self, small_config):
        outcome = _ContextSuite(small_config).process(context=None)
        assert outcome["reports"] == []
        assert outcome["results"]["ok_status"] == "skipped"
        assert {e["error_type"] for e in outcome["errors"]} == {"Skipped"}

    def test_base_suite_needs_a_graph(self, small_config):
        with pytest.raises(NotImplementedError):
            BaseSuite(small_config)


class TestBuildSuite:

    def test_build_is_complete(self, small_config):
        outcome = BuildSuite(small_config).process()
        assert outcome["errors"] == []
        context = outcome["context"]
        assert context.complete
        assert context.space.dim <= small_config.dim_limit
        assert len(context.samples) == 2 * small_config.observable_count - 1
        assert all(status == "success" for key, status in outcome["results"].items() if key.endswith("_status"))


class TestInequalitySuite:

    def test_harmonic_separations_use_the_diameter(self, small_config):
        context = BuildSuite(small_config).process()["context"]
        state = SuiteState(config=small_config, context=context)
        InequalitySuite(small_config)._harmonic(state)
        assert state.results["harmonic_status"] == "success"
        separated = [r.name for r in state.reports if r.name.startswith("harmonic_sum")]
        assert separated
        assert all("sep=4.0" in name for name in separated)


class TestOrchestrator:

    def test_unknown_suite(self, small_config):
        with pytest.raises(ValueError):
            Orchestrator(small_config, "everything")

    def test_all_suites_fan_out(self, small_config):
        build, context = _fake_build()
        _FakeCheckSuite.seen = []
        fakes = {name: _FakeCheckSuite for name in CHECK_SUITES}
        with patch.dict("suites.orchestrator.CHECK_SUITES", fakes), \
                patch("suites.orchestrator.BuildSuite", build):
            outcome = Orchestrator(small_config, "all").process()
        assert outcome["suite"] == "all"
        assert len(_FakeCheckSuite.seen) == len(CHECK_SUITES)
        assert all(seen is context for seen in _FakeCheckSuite.seen)
        assert list(outcome["results"]) == sorted(["build", *CHECK_SUITES])
        names = [r.name for r in outcome["reports"]]
        assert names == sorted(names)
        assert outcome_passed(outcome)

    def test_incomplete_build_withholds_context(self, small_config):
        build, _ = _fake_build(complete=False)
        _FakeCheckSuite.seen = []
        with patch.dict("suites.orchestrator.CHECK_SUITES", {"content": _FakeCheckSuite}), \
                patch("suites.orchestrator.BuildSuite", build):
            Orchestrator(small_config, "content").process()
        assert _FakeCheckSuite.seen == [None]

    def test_build_only(self, small_config):
        build, _ = _fake_build()
        with patch("suites.orchestrator.BuildSuite", build):
            outcome = Orchestrator(small_config, "build").process()
        assert [r.name for r in outcome["reports"]] == ["build_report"]
        assert list(outcome["results"]) == ["build"]

    def test_spectrum_run(self, small_config):
        outcome = Orchestrator(small_config, "spectrum").process()
        assert outcome["errors"] == []
        assert outcome["reports"]


class TestOutcomePassed:

    def _outcome(self, reports=(), scans=(), errors=()):
        return {"reports": list(reports), "scans": list(scans), "errors": list(errors)}

    def test_all_clear(self):
        assert outcome_passed(self._outcome([InequalityReport(name="a", lhs=0.0, rhs=1.0)]))

    def test_failed_report(self):
        assert not outcome_passed(self._outcome([InequalityReport(name="a", lhs=2.0, rhs=1.0)]))

    def test_failed_scan(self):
        scan = ScanResult(name="s", parameter_name="t", grid=[1.0], values=[0.0], passed=False)
        assert not outcome_passed(self._outcome(scans=[scan]))

    def test_errors(self):
        assert not outcome_passed(self._outcome(errors=[{"suite": "x", "task": "y"}]))
