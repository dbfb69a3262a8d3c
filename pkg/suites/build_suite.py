"""
Build Suite using LangGraph.
Assembles grid, test family, local subspaces, T, Fock space and expansion for the check suites.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from langgraph.graph import END, StateGraph

from core.errors import NuclabError
from core.expansion import NuclearExpansion
from core.fock import (
    ModeSet,
    StateFunctional,
    TruncatedFockSpace,
    WeylSample,
    build_fock,
    functional_net,
    local_observables,
    select_modes,
    weyl,
)
from core.grid import (
    GRAM_CONDITION_LIMIT,
    MomentumGrid,
    SubspaceBasis,
    TestFunctionFamily,
    apply_conjugation,
    build_local_subspaces,
    build_test_family,
    make_grid,
)
from core.lub import CompactOperator, LubResult, build_damped_restrictions, lub_iterate
from core.reports import InequalityReport
from suites.base_suite import BaseSuite, SuiteState, suite_step

logger = logging.getLogger(__name__)


@dataclass
class BuildContext:
    """Everything the check suites share, filled stage by stage."""

    grid: Optional[MomentumGrid] = None
    family: Optional[TestFunctionFamily] = None
    plus: Optional[SubspaceBasis] = None
    minus: Optional[SubspaceBasis] = None
    restrictions: Dict[str, CompactOperator] = field(default_factory=dict)
    lub: Optional[LubResult] = None
    modes: Optional[ModeSet] = None
    space: Optional[TruncatedFockSpace] = None
    expansion: Optional[NuclearExpansion] = None
    net: List[StateFunctional] = field(default_factory=list)
    samples: List[WeylSample] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.expansion is not None and bool(self.net) and bool(self.samples)

    def require(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) in (None, [], {})]
        if missing:
            raise NuclabError(f"earlier build stages did not produce: {', '.join(missing)}")


class BuildSuite(BaseSuite):
    """Suite that builds the shared numerical objects."""

    name = "build"
    needs_context = False

    def _create_graph(self) -> StateGraph:
        """Create the workflow graph for the build pipeline."""
        workflow = StateGraph(SuiteState)

        workflow.add_node("make_grid", self._make_grid)
        workflow.add_node("test_family", self._test_family)
        workflow.add_node("subspaces", self._subspaces)
        workflow.add_node("least_upper_bound", self._least_upper_bound)
        workflow.add_node("fock_space", self._fock_space)
        workflow.add_node("expansion", self._expansion)

        workflow.set_entry_point("make_grid")
        workflow.add_edge("make_grid", "test_family")
        workflow.add_edge("test_family", "subspaces")
        workflow.add_edge("subspaces", "least_upper_bound")
        workflow.add_edge("least_upper_bound", "fock_space")
        workflow.add_edge("fock_space", "expansion")
        workflow.add_edge("expansion", END)

        return workflow.compile()

    @suite_step("make_grid")
    def _make_grid(self, state: SuiteState) -> None:
        cfg = state.config
        context = BuildContext()
        state.context = context
        context.grid = make_grid(cfg.s, cfg.p_max, cfg.n_nodes, cfg.m)
        state.results["grid"] = context.grid.describe()

    @suite_step("test_family")
    def _test_family(self, state: SuiteState) -> None:
        cfg = state.config
        context: BuildContext = state.context
        context.require("grid")
        family = build_test_family(context.grid, cfg.r, cfg.family_count, cfg.fine_points, cfg.leakage_tol)
        context.family = family
        state.results["family"] = {
            "labels": family.labels,
            "leakage": family.leakage.tolist(),
            "band_loss": family.band_loss.tolist(),
            "gram_condition": family.gram_condition,
        }
        state.reports.append(InequalityReport(
            name="family_gram_condition",
            lhs=family.gram_condition,
            rhs=GRAM_CONDITION_LIMIT,
            parameters={"r": cfg.r, "count": cfg.family_count},
        ))

    @suite_step("subspaces")
    def _subspaces(self, state: SuiteState) -> None:
        context: BuildContext = state.context
        context.require("family")
        context.plus, context.minus = build_local_subspaces(context.family)
        for basis in (context.plus, context.minus):
            gram = basis.columns.conj().T @ basis.columns
            state.reports.append(InequalityReport(
                name=f"subspace_orthonormality[{basis.kind}]",
                lhs=float(np.max(np.abs(gram - np.eye(basis.rank)))),
                rhs=0.0,
                tolerance=self.tol("orthonormal"),
                parameters={"rank": basis.rank, "discarded": basis.discarded.tolist()},
            ))
            state.reports.append(InequalityReport(
                name=f"subspace_j_invariance[{basis.kind}]",
                lhs=basis.j_defect,
                rhs=0.0,
                tolerance=self.tol("j_invariance"),
                parameters={"rank": basis.rank},
            ))

    @suite_step("least_upper_bound")
    def _least_upper_bound(self, state: SuiteState) -> None:
        cfg = state.config
        context: BuildContext = state.context
        context.require("plus", "minus")
        context.restrictions = build_damped_restrictions(context.plus, context.minus, cfg.energy, cfg.beta)
        ops = context.restrictions
        context.lub = lub_iterate(ops["S_E+"], ops["S_E-"], ops["S_beta+"], ops["S_beta-"],
                                  tol=cfg.lub_tol, n_max=cfg.lub_n_max)
        lub = context.lub
        state.results["lub"] = {
            "iterations": lub.iterations,
            "residual": lub.residual,
            "residual_history": lub.residual_history,
            "limit_gap": lub.limit_gap,
            "converged": lub.converged,
            "residual_monotone": bool(np.all(np.diff(lub.residual_history[1:]) <= 0)),
            "t_j_defect": lub.j_defect,
            "rank": int(lub.eigenvalues.size),
            "t": lub.eigenvalues.tolist(),
        }
        if lub.eigenvectors.size:
            defect = float(np.max(np.abs(apply_conjugation(context.grid, lub.eigenvectors) - lub.eigenvectors)))
        else:
            defect = 0.0
        state.reports.append(InequalityReport(
            name="eigenbasis_j_reality",
            lhs=defect,
            rhs=0.0,
            tolerance=self.tol("j_invariance"),
            parameters={"rank": int(lub.eigenvalues.size)},
        ))

    @suite_step("fock_space")
    def _fock_space(self, state: SuiteState) -> None:
        cfg = state.config
        context: BuildContext = state.context
        context.require("lub")
        context.modes = select_modes(context.lub.eigenvectors, context.lub.eigenvalues, context.grid, cfg.modes)
        context.space = build_fock(context.modes, cfg.n_max, E_cap=cfg.energy, dim_limit=cfg.dim_limit)
        space = context.space
        state.results["fock"] = {
            "K": space.K,
            "N_max": space.n_max,
            "dim": space.dim,
            "mode_omega": context.modes.omega.tolist(),
            "mode_momentum": context.modes.momentum.tolist(),
            "mode_t": context.modes.t.tolist(),
            "omega_leakage": context.modes.omega_leakage.tolist(),
            "low_particle_bound": space.low_particle_bound(),
        }

    @suite_step("expansion")
    def _expansion(self, state: SuiteState) -> None:
        cfg = state.config
        context: BuildContext = state.context
        context.require("space")
        context.expansion = NuclearExpansion(context.space, context.plus, context.minus, cfg.mass_ratio)
        context.net = functional_net(context.space, cfg.energy, cfg.net_size, cfg.seed)
        context.samples = local_observables(context.family, cfg.observable_count, cfg.seed, cfg.weyl_norm)

        unitarity, truncation = 0.0, 0.0
        for sample in context.samples:
            op = weyl(context.space, sample.vector, waive_leakage=True)
            unitarity = max(unitarity, op.defects["unitarity"])
            truncation = max(truncation, op.defects["truncation"])
        state.reports.append(InequalityReport(
            name="weyl_unitarity",
            lhs=unitarity,
            rhs=0.0,
            tolerance=self.tol("unitarity"),
            truncation_defect=truncation,
            parameters={"samples": len(context.samples), "weyl_norm": cfg.weyl_norm},
        ))
        state.results["expansion"] = {
            "M_E": cfg.mass_ratio,
            "indices": len(context.expansion.indices),
            "net_size": len(context.net),
            "observables": [sample.label for sample in context.samples],
            "weyl_truncation_defect": truncation,
        }
        logger.info("Build complete: dim=%d, %d indices, %d functionals",
                    context.space.dim, len(context.expansion.indices), len(context.net))
