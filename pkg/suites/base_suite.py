"""
Base suite implementation using LangGraph.
"""
import logging
from functools import wraps
from typing import Any, Callable, Dict, List, Optional

from langgraph.graph import StateGraph
from pydantic import BaseModel, ConfigDict, Field

from core.config import RunConfig
from core.reports import InequalityReport, ScanResult

logger = logging.getLogger(__name__)


class SuiteState(BaseModel):
    """State for a suite workflow."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    context: Optional[Any] = None
    current_task: str = Field(default="")
    reports: List[InequalityReport] = Field(default_factory=list)
    scans: List[ScanResult] = Field(default_factory=list)
    errors: List[Dict[str, str]] = Field(default_factory=list)
    results: Dict[str, Any] = Field(default_factory=dict)


def suite_step(task: str) -> Callable:
    """
    Wrap a node so that a failure is recorded in the state instead of aborting the graph.

    The wrapped method receives the state and returns nothing; the decorator
    sets current_task, the "<task>_status" result and the error entry.
    """
    def decorate(method: Callable[[Any, SuiteState], None]) -> Callable[[Any, SuiteState], SuiteState]:
        @wraps(method)
        def node(self, state: SuiteState) -> SuiteState:
            state.current_task = task
            if state.context is None and self.needs_context:
                state.results[f"{task}_status"] = "skipped"
                state.errors.append({"suite": self.name, "task": task, "error_type": "Skipped",
                                     "message": "build context unavailable"})
                return state
            try:
                method(self, state)
                state.results[f"{task}_status"] = "success"
            except Exception as e:
                logger.exception("%s/%s failed", self.name, task)
                state.results[f"{task}_status"] = "error"
                state.errors.append({"suite": self.name, "task": task,
                                     "error_type": type(e).__name__, "message": str(e)})
            return state
        return node
    return decorate


class BaseSuite:
    """Base suite class with common functionality."""

    name = "base"
    needs_context = True

    def __init__(self, config: RunConfig):
        """Initialize the suite and compile its graph."""
        self.config = config
        self.graph = self._create_graph()

    def _create_graph(self) -> StateGraph:
        """Create the suite's workflow graph."""
        raise NotImplementedError("Subclasses must implement _create_graph")

    def tol(self, name: str) -> float:
        return self.config.tol(name)

    def process(self, context: Optional[Any] = None) -> Dict[str, Any]:
        """
        Run the suite on a build context.

        Args:
            context: BuildContext from the build suite (None for the build suite itself)

        Returns:
            Dictionary with reports, scans, errors, results and context
        """
        state = SuiteState(config=self.config, context=context)
        final_state = self.graph.invoke(state)

        if isinstance(final_state, dict):
            return {
                "reports": list(final_state.get("reports", [])),
                "scans": list(final_state.get("scans", [])),
                "errors": list(final_state.get("errors", [])),
                "results": dict(final_state.get("results", {})),
                "context": final_state.get("context"),
            }
        return {
            "reports": list(final_state.reports),
            "scans": list(final_state.scans),
            "errors": list(final_state.errors),
            "results": dict(final_state.results),
            "context": final_state.context,
        }
