"""
Content Suite using LangGraph.
Counts lattice points and additivity tuples, packs the sampled translated
restriction map and checks the product bound on the epsilon-content.
"""
import logging

import numpy as np
from langgraph.graph import END, StateGraph
from scipy import special

from core.bounds import separated_points
from core.content import (
    additivity_count,
    additivity_count_check,
    build_theta,
    content_chain_check,
    epsilon_content_bruteforce,
    key_lemma_bound,
    lattice_count_check,
    lattice_rounding_check,
    product_log_bound,
    theorem1_bound,
    theorem1_growth_check,
)
from core.expansion import nuclear_pnorm_bound
from core.reports import InequalityReport, ScanResult
from suites.base_suite import BaseSuite, SuiteState, suite_step

logger = logging.getLogger(__name__)

# (N, cE) pairs where the additivity count meets (N+1)^cE
ADDITIVITY_EQUALITIES = ((2, 0), (2, 1))


class ContentSuite(BaseSuite):
    """Suite for the epsilon-content estimates."""

    name = "content"

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph for the content checks."""
        workflow = StateGraph(SuiteState)

        workflow.add_node("lattice_counts", self._lattice_counts)
        workflow.add_node("additivity_counts", self._additivity_counts)
        workflow.add_node("theta_packing", self._theta_packing)
        workflow.add_node("product_bound", self._product_bound)

        workflow.set_entry_point("lattice_counts")
        workflow.add_edge("lattice_counts", "additivity_counts")
        workflow.add_edge("additivity_counts", "theta_packing")
        workflow.add_edge("theta_packing", "product_bound")
        workflow.add_edge("product_bound", END)

        return workflow.compile()

    def _pnorm(self, state: SuiteState) -> float:
        cfg = state.config
        return nuclear_pnorm_bound(cfg.theorem_p, state.context.lub.eigenvalues, cfg.mass_ratio)

    @suite_step("lattice_counts")
    def _lattice_counts(self, state: SuiteState) -> None:
        cfg = state.config
        for N in range(1, cfg.lattice_max_n + 1):
            for M in range(0, min(cfg.lattice_max_m, 2 * N) + 1):
                state.reports.append(lattice_count_check(M, N))

    @suite_step("additivity_counts")
    def _additivity_counts(self, state: SuiteState) -> None:
        cfg = state.config
        for N in range(1, cfg.additivity_max_n + 1):
            for cE in range(0, cfg.additivity_max_ce + 1):
                state.reports.append(additivity_count_check(N, cE))
        gaps = [abs(additivity_count(N, cE) - (N + 1) ** cE) for N, cE in ADDITIVITY_EQUALITIES]
        state.reports.append(InequalityReport(
            name="additivity_equality",
            lhs=float(max(gaps)),
            rhs=0.0,
            parameters={"pairs": [list(pair) for pair in ADDITIVITY_EQUALITIES]},
        ))

    @suite_step("theta_packing")
    def _theta_packing(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        pnorm = self._pnorm(state)
        delta = max(cfg.delta_values) / cfg.m
        counts, greedy, keys = [], [], []
        for N in sorted(cfg.content_counts):
            points = separated_points(N, delta, cfg.r, cfg.s)
            theta = build_theta(context.net, context.samples, points)
            state.reports.append(content_chain_check(theta, cfg.content_epsilon, cfg.theorem_p, pnorm,
                                                     label=f"[N={N}]"))
            if N == min(cfg.content_counts):
                state.reports.append(lattice_rounding_check(theta, cfg.content_epsilon))
            counts.append(float(N))
            greedy.append(float(epsilon_content_bruteforce(theta, cfg.content_epsilon)))
            keys.append(key_lemma_bound(theta.norm_2, cfg.content_epsilon, N).log)
        state.scans.append(ScanResult(
            name="content_growth",
            parameter_name="N",
            grid=counts,
            values=greedy,
            deviations=[max(key - float(np.log(value)), 0.0) for key, value in zip(keys, greedy)],
            decay={"log_greedy_last": float(np.log(greedy[-1])), "key_log_last": keys[-1]},
            description="greedy epsilon-content across N separated regions; deviation is the key-lemma log margin",
            passed=all(np.log(value) <= key + 1e-12 for key, value in zip(keys, greedy)),
        ))

    @suite_step("product_bound")
    def _product_bound(self, state: SuiteState) -> None:
        cfg = state.config
        p, epsilon = cfg.theorem_p, cfg.content_epsilon
        pnorm = self._pnorm(state)
        state.reports.append(theorem1_growth_check(p, pnorm, epsilon, sorted(cfg.content_counts)))
        a = 2 / (3 * p)
        for N in sorted(cfg.content_counts):
            result = theorem1_bound(p, pnorm, epsilon, N)
            product = product_log_bound(p, pnorm, epsilon, N)
            closed = (2 ** 11 * np.pi * pnorm ** 2 * result.zeta.upper ** 2 * special.zeta(a) / epsilon ** 2
                      * np.log(4 * np.e * N))
            agreement = abs(product - closed) / closed if closed else 0.0
            state.reports.append(InequalityReport(
                name=f"product_bound[N={N}]",
                lhs=product,
                rhs=result.bound.log,
                tolerance=1e-9 * result.bound.log,
                parameters={"N": N, "p": p, "pnorm": pnorm, "closed_form": float(closed), "agreement": agreement,
                            "epsilon_total": result.epsilon_total},
                conditions={"matches_closed_form": bool(agreement <= 1e-6),
                            "epsilon_budget": bool(result.epsilon_total <= epsilon / 4 + 1e-15)},
            ))
