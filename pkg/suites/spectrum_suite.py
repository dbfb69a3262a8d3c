"""
Spectrum Suite using LangGraph.
Checks the least upper bound T, its spectrum, the energy bounds and the p-norm sums.
"""
import logging

import numpy as np
from langgraph.graph import END, StateGraph

from core.bounds import (
    damping_constant,
    damping_constant_closed_form,
    energy_bound_check,
    energy_damping_check,
)
from core.expansion import nuclear_pnorm_bound, pnorm_sum
from core.fock import spectral_mask
from core.lub import domination_floor, schatten_norm, trace_power
from core.reports import InequalityReport, ScanResult
from suites.base_suite import BaseSuite, SuiteState, suite_step

logger = logging.getLogger(__name__)

DOMINATION_POWERS = (1, 2, 4)
TRACE_POWERS = (0.5, 1.0)


class SpectrumSuite(BaseSuite):
    """Suite for T, the energy cutoff and the p-norm sums."""

    name = "spectrum"

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph for the spectrum checks."""
        workflow = StateGraph(SuiteState)

        workflow.add_node("lub_checks", self._lub_checks)
        workflow.add_node("t_spectrum", self._t_spectrum)
        workflow.add_node("energy_checks", self._energy_checks)
        workflow.add_node("damping_constant", self._damping_constant)
        workflow.add_node("pnorm_sums", self._pnorm_sums)

        workflow.set_entry_point("lub_checks")
        workflow.add_edge("lub_checks", "t_spectrum")
        workflow.add_edge("t_spectrum", "energy_checks")
        workflow.add_edge("energy_checks", "damping_constant")
        workflow.add_edge("damping_constant", "pnorm_sums")
        workflow.add_edge("pnorm_sums", END)

        return workflow.compile()

    @suite_step("lub_checks")
    def _lub_checks(self, state: SuiteState) -> None:
        context = state.context
        T = context.lub.T
        operators = context.restrictions

        state.reports.append(InequalityReport(
            name="lub_norm",
            lhs=T.norm(),
            rhs=1.0,
            tolerance=self.tol("lub_norm"),
            parameters={"iterations": context.lub.iterations, "limit_gap": context.lub.limit_gap},
        ))
        for label, S in sorted(operators.items()):
            for n in DOMINATION_POWERS:
                floor = domination_floor(T, S, n)
                state.reports.append(InequalityReport(
                    name=f"lub_domination[{label},n={n}]",
                    lhs=-floor,
                    rhs=0.0,
                    tolerance=self.tol("psd_floor"),
                    parameters={"n": n, "min_eigenvalue": floor},
                ))
        for p in TRACE_POWERS:
            total = sum(trace_power(S, p) for S in operators.values())
            state.reports.append(InequalityReport(
                name=f"lub_trace[p={p}]",
                lhs=trace_power(T, p),
                rhs=total,
                tolerance=self.tol("inequality") * max(total, 1.0),
                parameters={"p": p, "schatten_T": schatten_norm(T, p)},
            ))
        if not context.lub.converged:
            logger.warning("power means stopped after %d steps at residual %.3g",
                           context.lub.iterations, context.lub.residual)

    @suite_step("t_spectrum")
    def _t_spectrum(self, state: SuiteState) -> None:
        t = state.context.lub.eigenvalues
        if t.size == 0:
            state.results["t_spectrum"] = "empty"
            return
        descending = bool(np.all(np.diff(t) <= 0))
        state.scans.append(ScanResult(
            name="t_spectrum",
            parameter_name="j",
            grid=[float(j) for j in range(1, t.size + 1)],
            values=t.tolist(),
            reference=1.0,
            decay={"t_1": float(t[0]), "t_last": float(t[-1]), "trace": float(t.sum())},
            description=f"{t.size} eigenvalues of T in descending order",
            passed=bool(descending and t[0] <= 1 + self.tol("lub_norm")),
        ))

    @suite_step("energy_checks")
    def _energy_checks(self, state: SuiteState) -> None:
        cfg = state.config
        space = state.context.space
        rank = int(np.count_nonzero(spectral_mask(space, cfg.energy)))
        state.results["energy_projection_rank"] = rank
        state.results["retained_indices"] = len(state.context.expansion.indices)
        if cfg.energy < cfg.m and rank != 1:
            raise AssertionError(f"below the mass gap P_E must be the vacuum projection, rank is {rank}")
        state.reports.extend(energy_bound_check(space, cfg.energy, cfg.random_trials, cfg.seed,
                                                tol=self.tol("inequality")))
        state.reports.append(energy_damping_check(space, cfg.beta, cfg.energy, tol=self.tol("inequality")))

    @suite_step("damping_constant")
    def _damping_constant(self, state: SuiteState) -> None:
        cfg = state.config
        c = damping_constant(cfg.epsilon, cfg.beta, cfg.m, cfg.s)
        state.results["damping_constant"] = c
        if cfg.s == 1:
            closed = damping_constant_closed_form(cfg.epsilon, cfg.beta, cfg.m)
            state.reports.append(InequalityReport(
                name="damping_constant_quadrature",
                lhs=abs(c - closed),
                rhs=0.0,
                tolerance=1e-8 * closed,
                parameters={"quadrature": c, "closed_form": closed, "epsilon": cfg.epsilon, "beta": cfg.beta},
            ))

    @suite_step("pnorm_sums")
    def _pnorm_sums(self, state: SuiteState) -> None:
        cfg = state.config
        t = state.context.lub.eigenvalues
        bounds = {}
        for p in cfg.p_list:
            direct, closed = pnorm_sum(p, t, cfg.mass_ratio)
            state.reports.append(InequalityReport(
                name=f"pnorm_sum[p={p}]",
                lhs=direct,
                rhs=closed,
                tolerance=self.tol("inequality") * max(closed, 1.0),
                parameters={"p": p, "M_E": cfg.mass_ratio, "modes": int(t.size)},
            ))
            bounds[str(p)] = nuclear_pnorm_bound(p, t, cfg.mass_ratio)
        state.results["nuclear_pnorm_bound"] = bounds
