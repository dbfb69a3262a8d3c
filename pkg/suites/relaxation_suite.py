"""
Relaxation Suite using LangGraph.
Timelike relaxation scans, the translation-deviation bound for narrow
spectral windows, the shrinking-window scan and the sub-gap content limit.
"""
import logging

import numpy as np
from langgraph.graph import END, StateGraph

from core.fock import OneParticleState, WeylSample
from core.relaxation import (
    content_limit_check,
    deviation_sweep,
    packet,
    shrinking_norm_scan,
    timelike_scan,
    window_center,
)
from suites.base_suite import BaseSuite, SuiteState, suite_step

logger = logging.getLogger(__name__)

# energy cap of the sub-gap content check, in units of m
SUB_GAP_FRACTION = 0.5


class RelaxationSuite(BaseSuite):
    """Suite for the relaxation of translated states."""

    name = "relaxation"

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph for the relaxation checks."""
        workflow = StateGraph(SuiteState)

        workflow.add_node("timelike", self._timelike)
        workflow.add_node("translation_deviation", self._translation_deviation)
        workflow.add_node("shrinking_window", self._shrinking_window)
        workflow.add_node("content_limit", self._content_limit)

        workflow.set_entry_point("timelike")
        workflow.add_edge("timelike", "translation_deviation")
        workflow.add_edge("translation_deviation", "shrinking_window")
        workflow.add_edge("shrinking_window", "content_limit")
        workflow.add_edge("content_limit", END)

        return workflow.compile()

    @suite_step("timelike")
    def _timelike(self, state: SuiteState) -> None:
        cfg = state.config
        grid = state.context.grid
        sample = state.context.samples[0]
        t_grid = np.linspace(cfg.t_max / cfg.t_count, cfg.t_max, cfg.t_count) / cfg.m

        state.scans.append(timelike_scan(packet(grid), sample, grid, t_grid, ratio=cfg.timelike_ratio,
                                         name="timelike[packet]"))
        vacuum = OneParticleState(np.zeros((grid.dim, 0), dtype=complex), np.zeros(0), grid, vacuum_weight=1.0)
        state.scans.append(timelike_scan(vacuum, sample, grid, t_grid, name="timelike[vacuum]"))
        identity = WeylSample(1.0, np.zeros(grid.dim, dtype=complex), "I")
        state.scans.append(timelike_scan(packet(grid), identity, grid, t_grid, name="timelike[identity]"))

    @suite_step("translation_deviation")
    def _translation_deviation(self, state: SuiteState) -> None:
        cfg = state.config
        grid = state.context.grid
        center = window_center(grid, cfg.window_momentum)
        r = cfg.r_grid[len(cfg.r_grid) // 2] if cfg.r_grid else 0.2
        state.reports.append(deviation_sweep(grid, state.context.samples, center, r, cfg.deviation_trials,
                                             cfg.seed, tol=self.tol("deviation")))

    @suite_step("shrinking_window")
    def _shrinking_window(self, state: SuiteState) -> None:
        cfg = state.config
        grid = state.context.grid
        center = window_center(grid, cfg.window_momentum)
        state.scans.append(shrinking_norm_scan(grid, state.context.samples, center, cfg.r_grid, cfg.net_size,
                                               cfg.seed, cfg.shrinking_points, max(cfg.delta_values) / cfg.m,
                                               tol=self.tol("monotone")))

    @suite_step("content_limit")
    def _content_limit(self, state: SuiteState) -> None:
        cfg = state.config
        state.reports.append(content_limit_check(state.context.space, SUB_GAP_FRACTION * cfg.m,
                                                 state.context.samples, cfg.content_epsilon, cfg.net_size,
                                                 cfg.seed))
