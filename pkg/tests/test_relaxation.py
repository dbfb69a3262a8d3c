"""
Tests for the relaxation checks.
"""
import numpy as np
import pytest

from core.fock import OneParticleState, WeylSample
from core.relaxation import (
    content_limit_check,
    deviation_sweep,
    packet,
    shrinking_norm_scan,
    timelike_scan,
    translation_deviation_check,
    window_center,
    window_mask,
    window_net,
    window_state,
)


@pytest.fixture(scope="module")
def center(grid):
    return window_center(grid, 1.0)


class TestWindows:

    def test_center_is_on_shell(self, grid, center):
        assert center[0] == pytest.approx(np.sqrt(2.0))
        assert center[1] == 1.0

    def test_mask_shrinks_with_radius(self, grid, center):
        assert window_mask(grid, center, 0.8).sum() >= window_mask(grid, center, 0.4).sum() > 0

    def test_empty_window_gives_zero(self, grid, center):
        state = window_state(grid, center, 1e-6, seed=1)
        assert state.weights.size == 0
        assert state.trace_norm() == 0.0

    def test_window_state_is_normalised(self, grid, center):
        state = window_state(grid, center, 0.8, seed=1)
        assert abs(state.trace()) < 1e-12
        assert state.trace_norm() == pytest.approx(1.0)

    def test_nets_are_nested(self, grid, center):
        nets = window_net(grid, center, [0.8, 0.4], size=3, seed=2)
        assert len(nets) == 2
        assert len(nets[0]) >= len(nets[1])
        for inner in nets[1]:
            assert any(inner is outer for outer in nets[0])


class TestTimelikeScan:

    def test_vacuum_does_not_deviate(self, grid, samples):
        vacuum = OneParticleState(np.zeros((grid.dim, 0), dtype=complex), np.zeros(0), grid, vacuum_weight=1.0)
        scan = timelike_scan(vacuum, samples[0], grid, np.linspace(0.5, 4.0, 8))
        np.testing.assert_allclose(scan.deviations, 0.0, atol=1e-14)
        assert scan.passed

    def test_times_beyond_resolution_are_trimmed(self, grid, samples):
        limit = 0.9 * np.pi / grid.spacing
        scan = timelike_scan(packet(grid), samples[0], grid, [1.0, 2.0, limit + 1.0])
        assert scan.grid == [1.0, 2.0]

    def test_rejects_spacelike_direction(self, grid, samples):
        with pytest.raises(ValueError):
            timelike_scan(packet(grid), samples[0], grid, [1.0, 2.0], e_hat=[0.0, 1.0])

    def test_boosted_direction(self, grid, samples):
        e_hat = [np.cosh(0.3), np.sinh(0.3)]
        scan = timelike_scan(packet(grid), samples[0], grid, [1.0, 2.0, 3.0, 4.0], e_hat=e_hat)
        assert scan.parameter_name == "t"
        assert len(scan.deviations) == 4


class TestTranslationDeviation:

    def test_single_translation(self, grid, center, samples):
        phi = window_state(grid, center, 0.4, seed=3)
        report = translation_deviation_check(phi, samples[0], [0.3, 0.5], 0.4, grid)
        assert report.passed

    def test_sweep(self, grid, center, samples):
        report = deviation_sweep(grid, samples, center, 0.4, trials=6, seed=4)
        assert report.passed
        assert report.conditions["all_trials"]
        assert report.parameters["worst_ratio"] <= 1.0 + 1e-9


class TestShrinkingWindow:

    def test_scan_runs_upward_in_r(self, grid, center, samples):
        scan = shrinking_norm_scan(grid, samples, center, [0.8, 0.4], net_size=2, seed=5, point_count=2,
                                   spread=5.0)
        assert scan.grid == [0.4, 0.8]
        assert scan.parameter_name == "r"
        assert all(d >= 0 for d in scan.deviations)

    def test_radii_must_decrease(self, grid, center, samples):
        with pytest.raises(ValueError):
            shrinking_norm_scan(grid, samples, center, [0.4, 0.8], 2, 5, 2, 5.0)


def test_content_limit_below_the_gap(space, samples):
    report = content_limit_check(space, 0.5, samples, 0.25, net_size=4, seed=6)
    assert report.lhs == 1.0
    assert report.passed


def test_packet_is_a_state(grid):
    state = packet(grid, momentum=0.5)
    assert state.trace() == pytest.approx(1.0)
    assert state.evaluate_weyl(WeylSample(1.0, np.zeros(grid.dim, dtype=complex))) == pytest.approx(1.0)
