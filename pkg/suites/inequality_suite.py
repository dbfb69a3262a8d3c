"""
Inequality Suite using LangGraph.
Runs the expansion exactness checks, the harmonic-analysis bounds, clustering,
the seminorm bound, the p-norm chain and the Plancherel check.
"""
import logging
from typing import List

import numpy as np
from langgraph.graph import END, StateGraph

from core.bounds import (
    b_norm_check,
    brace_factor,
    chain_uniformity_check,
    clustering_correlator,
    clustering_decay_scan,
    damping_constant,
    harmonic_bound_check,
    harmonic_deltas,
    harmonic_integral_check,
    plancherel_check,
    pnorm_bound_chain,
    semibound_sweep,
    separated_points,
)
from core.expansion import (
    S_norm_bound,
    enumerate_index_pairs,
    expansion_residual,
    expansion_table,
    sampled_S_norms,
    tau_matrix,
    tau_norm_bound,
    translated_S_norms,
)
from core.fock import weyl_defect
from core.relaxation import packet
from core.reports import InequalityReport
from suites.base_suite import BaseSuite, SuiteState, suite_step

logger = logging.getLogger(__name__)


class InequalitySuite(BaseSuite):
    """Suite for the analytic inequalities behind the nuclearity bound."""

    name = "inequalities"

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph for the inequality checks."""
        workflow = StateGraph(SuiteState)

        workflow.add_node("expansion_exactness", self._expansion_exactness)
        workflow.add_node("term_bounds", self._term_bounds)
        workflow.add_node("harmonic", self._harmonic)
        workflow.add_node("clustering", self._clustering)
        workflow.add_node("semibound", self._semibound)
        workflow.add_node("pnorm_chain", self._pnorm_chain)
        workflow.add_node("plancherel", self._plancherel)

        workflow.set_entry_point("expansion_exactness")
        workflow.add_edge("expansion_exactness", "term_bounds")
        workflow.add_edge("term_bounds", "harmonic")
        workflow.add_edge("harmonic", "clustering")
        workflow.add_edge("clustering", "semibound")
        workflow.add_edge("semibound", "pnorm_chain")
        workflow.add_edge("pnorm_chain", "plancherel")
        workflow.add_edge("plancherel", END)

        return workflow.compile()

    def _points(self, state: SuiteState, count: int, delta: float) -> List[np.ndarray]:
        cfg = state.config
        return separated_points(count, delta / cfg.m, cfg.r, cfg.s)

    @suite_step("expansion_exactness")
    def _expansion_exactness(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        expansion = context.expansion
        rng = np.random.default_rng(cfg.seed + 1)
        worst, defect = 0.0, 0.0
        for trial in range(cfg.random_trials):
            phi = context.net[trial % len(context.net)]
            a = rng.standard_normal(context.modes.K)
            b = rng.standard_normal(context.modes.K)
            c = expansion.u_plus @ a + 1j * (expansion.u_minus @ b)
            norm = np.linalg.norm(c)
            if norm == 0:
                continue
            c = cfg.weyl_norm * c / norm
            f = context.modes.vectors @ c
            worst = max(worst, expansion_residual(expansion, phi, f))
            defect = max(defect, weyl_defect(context.space, c))
        state.reports.append(InequalityReport(
            name="expansion_exactness",
            lhs=worst,
            rhs=0.0,
            tolerance=self.tol("expansion"),
            truncation_defect=defect,
            parameters={"trials": cfg.random_trials, "weyl_norm": cfg.weyl_norm,
                        "indices": len(expansion.indices)},
        ))

    @suite_step("term_bounds")
    def _term_bounds(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        expansion = context.expansion
        t = context.modes.t

        state.reports.append(b_norm_check(expansion, cfg.energy, tol=self.tol("expansion")))

        pairs = enumerate_index_pairs(context.modes.K, cfg.mass_ratio)
        sampled = sampled_S_norms(expansion, context.net, pairs)
        bounds = np.array([S_norm_bound(mu, nu, t, cfg.mass_ratio) for mu, nu in pairs])
        excess = sampled - bounds
        worst = int(np.argmax(excess))
        state.reports.append(InequalityReport(
            name="S_norm_bound",
            lhs=float(excess[worst]),
            rhs=0.0,
            tolerance=self.tol("expansion"),
            parameters={"pairs": len(pairs), "worst_pair": f"{pairs[worst][0].label()},{pairs[worst][1].label()}"},
            note="lhs is the largest sampled |S| minus its bound over the retained pairs",
        ))
        state.results["expansion_table"] = expansion_table(expansion, context.net, t)

        ceiling = 2.0 ** (5 * cfg.mass_ratio)
        pair_bounds = np.array([[tau_norm_bound(mu, nu) for nu in expansion.indices] for mu in expansion.indices])
        largest, within = 0.0, True
        for sample in context.samples:
            values = np.abs(sample.coefficient * tau_matrix(expansion, sample.vector))
            largest = max(largest, float(values.max()))
            within = within and bool(np.all(values <= pair_bounds + self.tol("expansion")))
        state.reports.append(InequalityReport(
            name="tau_norm_bound",
            lhs=largest,
            rhs=ceiling,
            tolerance=self.tol("expansion"),
            parameters={"samples": len(context.samples), "largest_pair_bound": float(pair_bounds.max())},
            conditions={"within_pair_bounds": within, "pair_bounds_below_ceiling": bool(pair_bounds.max() <= ceiling)},
        ))

    @suite_step("harmonic")
    def _harmonic(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        modes = context.modes
        for j in range(min(cfg.harmonic_modes, modes.K)):
            g = modes.vectors[:, j]
            for separation in harmonic_deltas(cfg.separations, cfg.r):
                rhs_by_count: List[float] = []
                for N in sorted(cfg.point_counts):
                    points = separated_points(N, separation, cfg.r, cfg.s)
                    report = harmonic_bound_check(context.space, g, points, cfg.energy, self.tol("inequality"),
                                                  label=f"[j={j},N={N},sep={separation}]")
                    state.reports.append(report)
                    rhs_by_count.append(report.rhs)
                if any(b < a - self.tol("monotone") for a, b in zip(rhs_by_count, rhs_by_count[1:])):
                    raise AssertionError(f"harmonic bound decreases in N at j={j}, separation={separation}")
            state.reports.append(harmonic_integral_check(context.space, g, cfg.energy, cfg.integral_points,
                                                         self.tol("inequality"), label=f"[j={j}]"))

    @suite_step("clustering")
    def _clustering(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        grid = context.grid
        c = damping_constant(cfg.epsilon, cfg.beta, cfg.m, cfg.s)
        deltas = np.linspace(cfg.cluster_delta_min, cfg.cluster_delta_max, cfg.cluster_points) / cfg.m
        for half, vectors in (("+", context.expansion.plus_vectors), ("-", context.expansion.minus_vectors)):
            g = vectors[:, 0]
            for delta in deltas:
                x = np.zeros(cfg.s + 1)
                x[1] = delta + 2 * cfg.r
                plain, damped = clustering_correlator(grid, g, x, cfg.beta, cfg.epsilon, cfg.r, c,
                                                      self.tol("inequality"), label=f"[L{half},delta={delta:.3g}]")
                state.reports.extend([plain, damped])
            state.scans.append(clustering_decay_scan(grid, g, deltas, cfg.epsilon, cfg.r, self.tol("decay_slack"),
                                                     name=f"clustering_decay[L{half}]"))

    @suite_step("semibound")
    def _semibound(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        for N in cfg.semibound_counts:
            for delta in cfg.delta_values:
                points = self._points(state, N, delta)
                state.reports.append(semibound_sweep(
                    context.expansion, points, cfg.energy, cfg.beta, cfg.epsilon, context.modes.t, context.net,
                    cfg.r, self.tol("inequality"), label=f"[N={N},delta={delta}]",
                ))
        c = damping_constant(cfg.epsilon, cfg.beta, cfg.m, cfg.s)
        single = brace_factor(1, c, cfg.m, cfg.epsilon, min(cfg.delta_values))
        far = [brace_factor(N, c, cfg.m, cfg.epsilon, float("inf")) for N in cfg.semibound_counts]
        state.reports.append(InequalityReport(
            name="brace_factor_limits",
            lhs=max(abs(single - 1.0), *(abs(value - 1.0) for value in far)),
            rhs=0.0,
            parameters={"single_point": single, "infinite_separation": far},
        ))

    @suite_step("pnorm_chain")
    def _pnorm_chain(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        t_all = context.lub.eigenvalues
        N = max(cfg.semibound_counts)
        delta = max(cfg.delta_values)
        points = self._points(state, N, delta)
        sampled = translated_S_norms(context.expansion, context.net, points)
        c = damping_constant(cfg.epsilon, cfg.beta, cfg.m, cfg.s)
        for p in cfg.p_list:
            state.reports.extend(pnorm_bound_chain(context.expansion, p, cfg.energy, cfg.beta, cfg.epsilon, t_all,
                                                   points, context.net, cfg.r, self.tol("inequality"),
                                                   sampled=sampled))
            state.reports.append(chain_uniformity_check(p, cfg.mass_ratio, cfg.beta, cfg.energy, t_all, cfg.m,
                                                        cfg.epsilon, delta / cfg.m, cfg.semibound_counts, c,
                                                        limit=self.tol("uniformity")))

    @suite_step("plancherel")
    def _plancherel(self, state: SuiteState) -> None:
        cfg = state.config
        context = state.context
        phi = packet(context.grid)
        state.reports.append(plancherel_check(phi, context.samples[0], context.grid, cfg.plancherel_boxes,
                                              cfg.plancherel_step, self.tol("box_increment"),
                                              self.tol("plancherel"), label="[packet]"))
