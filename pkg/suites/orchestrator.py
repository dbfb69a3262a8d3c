"""
Orchestrator using LangGraph.
Runs the build stage, then fans the selected check suites out in parallel and
collects their reports.
"""
import logging
import operator
from typing import Annotated, Any, Dict, List, Optional

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict, Field

from core.config import RunConfig
from core.reports import InequalityReport, ScanResult, sort_reports
from suites.build_suite import BuildSuite
from suites.content_suite import ContentSuite
from suites.inequality_suite import InequalitySuite
from suites.relaxation_suite import RelaxationSuite
from suites.spectrum_suite import SpectrumSuite

logger = logging.getLogger(__name__)

CHECK_SUITES = {
    "spectrum": SpectrumSuite,
    "inequalities": InequalitySuite,
    "content": ContentSuite,
    "relaxation": RelaxationSuite,
}
SUITE_CHOICES = ("build", *CHECK_SUITES, "all")


def _merge(left: Dict[str, Any], right: Dict[str, Any]) -> Dict[str, Any]:
    return {**left, **right}


class PipelineState(BaseModel):
    """State for the pipeline; parallel suites append through the reducers."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    context: Optional[Any] = None
    reports: Annotated[List[InequalityReport], operator.add] = Field(default_factory=list)
    scans: Annotated[List[ScanResult], operator.add] = Field(default_factory=list)
    errors: Annotated[List[Dict[str, str]], operator.add] = Field(default_factory=list)
    results: Annotated[Dict[str, Any], _merge] = Field(default_factory=dict)


class Orchestrator:
    """Coordinates the build stage and the check suites."""

    def __init__(self, config: RunConfig, suite: str = "all"):
        """
        Initialize the orchestrator for one suite selection.

        Args:
            config: validated run configuration
            suite: "build", a check suite name or "all"
        """
        if suite not in SUITE_CHOICES:
            raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITE_CHOICES)}")
        self.config = config
        self.suite = suite
        if suite == "all":
            self.selected = list(CHECK_SUITES)
        elif suite == "build":
            self.selected = []
        else:
            self.selected = [suite]
        self.build_suite = BuildSuite(config)
        self.suites = {name: CHECK_SUITES[name](config) for name in self.selected}
        self.graph = self._create_graph()

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph: build, then every selected suite in parallel."""
        workflow = StateGraph(PipelineState)

        workflow.add_node("build", self._build)
        workflow.set_entry_point("build")
        if not self.selected:
            workflow.add_edge("build", END)
        for name in self.selected:
            workflow.add_node(name, self._runner(name))
            workflow.add_edge("build", name)
            workflow.add_edge(name, END)

        return workflow.compile()

    def _build(self, state: PipelineState) -> Dict[str, Any]:
        """Build the shared context; an incomplete build leaves the context empty."""
        outcome = self.build_suite.process()
        context = outcome["context"]
        if context is not None and not context.complete:
            logger.error("Build stage incomplete; check suites will be skipped")
            context = None
        return {
            "context": context,
            "reports": outcome["reports"],
            "scans": outcome["scans"],
            "errors": outcome["errors"],
            "results": {"build": outcome["results"]},
        }

    def _runner(self, name: str):
        suite = self.suites[name]

        def run(state: PipelineState) -> Dict[str, Any]:
            logger.info("Running %s suite", name)
            outcome = suite.process(state.context)
            return {
                "reports": outcome["reports"],
                "scans": outcome["scans"],
                "errors": outcome["errors"],
                "results": {name: outcome["results"]},
            }

        return run

    def process(self) -> Dict[str, Any]:
        """
        Run the selected suites.

        Returns:
            Dictionary with sorted reports and scans, errors and per-suite results
        """
        state = PipelineState(config=self.config)
        final_state = self.graph.invoke(state)

        if isinstance(final_state, dict):
            reports = final_state.get("reports", [])
            scans = final_state.get("scans", [])
            errors = final_state.get("errors", [])
            results = final_state.get("results", {})
        else:
            reports, scans = final_state.reports, final_state.scans
            errors, results = final_state.errors, final_state.results

        return {
            "suite": self.suite,
            "reports": sort_reports(list(reports)),
            "scans": sort_reports(list(scans)),
            "errors": sorted(errors, key=lambda e: (e.get("suite", ""), e.get("task", ""))),
            "results": {name: results[name] for name in sorted(results)},
        }


def outcome_passed(outcome: Dict[str, Any]) -> bool:
    """True when every report and scan passed and no suite step errored."""
    return (not outcome["errors"]
            and all(report.passed for report in outcome["reports"])
            and all(scan.passed for scan in outcome["scans"]))
