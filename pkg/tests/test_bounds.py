"""
Tests for the inequality checks.
"""
import numpy as np
import pytest

from core.bounds import (
    brace_factor,
    chain_final_bound,
    chain_uniformity_check,
    clustering_correlator,
    clustering_decay_scan,
    configuration_separation,
    damping_constant,
    damping_constant_closed_form,
    energy_bound_check,
    energy_damping_check,
    harmonic_bound_check,
    harmonic_deltas,
    plancherel_check,
    pnorm_bound_chain,
    semibound_sweep,
    separated_points,
    spacelike_separation,
)
from core.relaxation import packet


class TestGeometry:

    def test_spacelike_separation(self):
        assert spacelike_separation([0.0, 5.0], 1.0) == pytest.approx(3.0)
        assert spacelike_separation([1.0, 5.0], 1.0) == pytest.approx(2.0)

    def test_single_point_is_infinitely_separated(self):
        assert configuration_separation([np.zeros(2)], 1.0) == float("inf")

    @pytest.mark.parametrize("count,delta", [(2, 1.0), (4, 5.0)])
    def test_separated_points(self, count, delta):
        points = separated_points(count, delta, 0.5)
        assert len(points) == count
        assert configuration_separation(points, 0.5) == pytest.approx(delta)

    def test_harmonic_deltas_scale_with_diameter(self):
        deltas = harmonic_deltas([2.0, 5.0, 10.0], 1.0)
        assert deltas == pytest.approx([4.0, 10.0, 20.0])
        points = separated_points(2, deltas[0], 1.0)
        assert configuration_separation(points, 1.0) == pytest.approx(4.0)


class TestDampingConstant:

    @pytest.mark.parametrize("epsilon,beta", [(0.5, 0.2), (0.3, 0.5), (0.9, 1.0)])
    def test_quadrature_matches_closed_form(self, epsilon, beta):
        c = damping_constant(epsilon, beta, 1.0)
        assert c == pytest.approx(damping_constant_closed_form(epsilon, beta, 1.0), rel=1e-8)

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError):
            damping_constant(1.0, 0.2, 1.0)

    def test_brace_factor_limits(self):
        c = damping_constant(0.5, 0.2, 1.0)
        assert brace_factor(1, c, 1.0, 0.5, 0.1) == 1.0
        assert brace_factor(5, c, 1.0, 0.5, float("inf")) == 1.0
        assert brace_factor(5, c, 1.0, 0.5, 1.0) > brace_factor(5, c, 1.0, 0.5, 10.0) > 1.0


class TestEnergyChecks:

    def test_annihilator_products(self, space, small_config):
        reports = energy_bound_check(space, small_config.energy, trials=3, seed=1)
        assert [r.name for r in reports] == ["energy_bound[n=1]", "energy_bound[n=2]", "energy_bound[n=3]"]
        assert all(r.passed for r in reports)

    def test_damping_on_energy_subspace(self, space, small_config):
        report = energy_damping_check(space, small_config.beta, small_config.energy)
        assert report.passed
        assert report.lhs >= 1.0


class TestHarmonicBound:

    def test_single_point(self, space, modes, small_config):
        report = harmonic_bound_check(space, modes.vectors[:, 0], [np.zeros(2)], small_config.energy)
        assert report.passed
        assert report.parameters["N"] == 1

    def test_bound_grows_with_points(self, space, modes, small_config):
        g = modes.vectors[:, 0]
        rhs = [harmonic_bound_check(space, g, separated_points(N, 2.0, 1.0), small_config.energy).rhs
               for N in (1, 2, 3)]
        assert rhs[0] <= rhs[1] <= rhs[2]


class TestClustering:

    def test_overlapping_regions_skip_the_undamped_bound(self, grid, expansion):
        plain, damped = clustering_correlator(grid, expansion.plus_vectors[:, 0], [0.0, 0.5], 0.2, 0.5, 1.0)
        assert plain.passed
        assert "vacuous" in plain.note
        assert damped.parameters["c"] == pytest.approx(damping_constant(0.5, 0.2, 1.0))

    def test_decay_scan_shape(self, grid, expansion):
        scan = clustering_decay_scan(grid, expansion.plus_vectors[:, 0], [0.5, 1.0, 2.0], 0.5, 1.0)
        assert scan.grid == [0.5, 1.0, 2.0]
        assert len(scan.values) == 3
        assert "min_rate" in scan.decay


class TestSemibound:

    def test_sweep(self, expansion, net, modes, small_config):
        cfg = small_config
        points = separated_points(2, 5.0, cfg.r)
        report = semibound_sweep(expansion, points, cfg.energy, cfg.beta, cfg.epsilon, modes.t, net, cfg.r,
                                 label="[N=2]")
        assert report.name == "semibound[N=2]"
        assert report.conditions["vacuum_term_vanishes"]
        assert report.passed

    def test_chain(self, expansion, net, lub, small_config):
        cfg = small_config
        points = separated_points(2, 5.0, cfg.r)
        reports = pnorm_bound_chain(expansion, 0.5, cfg.energy, cfg.beta, cfg.epsilon, lub.eigenvalues,
                                    points, net, cfg.r)
        assert [r.name for r in reports] == ["pnorm_chain_tau[p=0.5]", "pnorm_chain_semibound[p=0.5]",
                                             "pnorm_chain_final[p=0.5]"]
        assert reports[0].passed

    def test_chain_rejects_large_p(self, expansion, net, lub, small_config):
        with pytest.raises(ValueError):
            pnorm_bound_chain(expansion, 1.5, 2.5, 0.2, 0.5, lub.eigenvalues, [np.zeros(2)], net, 1.0)

    def test_uniformity_far_apart(self, lub):
        c = damping_constant(0.5, 0.2, 1.0)
        report = chain_uniformity_check(0.5, 2.5, 0.2, 2.5, lub.eigenvalues, 1.0, 0.5, 1e3, [2, 4, 8], c)
        assert report.passed
        assert report.lhs == pytest.approx(0.0, abs=1e-12)

    def test_final_bound_grows_with_brace(self, lub):
        low = chain_final_bound(0.5, 2.5, 0.2, 2.5, lub.eigenvalues, 1.0)
        high = chain_final_bound(0.5, 2.5, 0.2, 2.5, lub.eigenvalues, 4.0)
        assert high == pytest.approx(2 * low)


class TestPlancherel:

    def test_fourier_side_agrees(self, grid, samples):
        report = plancherel_check(packet(grid), samples[0], grid, [2.0, 4.0], 0.5, label="[packet]")
        assert report.name == "plancherel[packet]"
        assert report.conditions["plancherel_agreement"]
        assert len(report.parameters["increments"]) == 1
