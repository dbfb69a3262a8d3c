"""
Nuclearity Lab Suites Package.

This package contains the pipeline stages:
- BuildSuite: Builds grid, test family, subspaces, T, Fock space and expansion
- SpectrumSuite: Checks T, the energy bounds and the p-norm sums
- InequalitySuite: Checks the expansion, harmonic, clustering and p-norm chain bounds
- ContentSuite: Checks lattice counts, additivity and the epsilon-content bounds
- RelaxationSuite: Runs timelike, deviation and shrinking-window scans
- Orchestrator: Runs the build stage and fans the check suites out in parallel
"""

from suites.base_suite import BaseSuite, SuiteState
from suites.build_suite import BuildContext, BuildSuite
from suites.spectrum_suite import SpectrumSuite
from suites.inequality_suite import InequalitySuite
from suites.content_suite import ContentSuite
from suites.relaxation_suite import RelaxationSuite
from suites.orchestrator import Orchestrator, PipelineState, SUITE_CHOICES, outcome_passed

__all__ = [
    'BaseSuite',
    'SuiteState',
    'BuildContext',
    'BuildSuite',
    'SpectrumSuite',
    'InequalitySuite',
    'ContentSuite',
    'RelaxationSuite',
    'Orchestrator',
    'PipelineState',
    'SUITE_CHOICES',
    'outcome_passed',
]

__version__ = '1.0.0'
