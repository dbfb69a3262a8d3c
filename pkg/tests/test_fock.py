"""
Tests for the truncated Fock space, Weyl operators and normal functionals.
"""
import numpy as np
import pytest

from core.errors import FockError
from core.fock import (
    EnergyMomentumBall,
    OneParticleState,
    StateFunctional,
    TruncatedFockSpace,
    WeylSample,
    functional_net,
    hamiltonian,
    jordan_decompose,
    ladder,
    number_operator,
    second_quantize,
    select_modes,
    spectral_mask,
    spectral_project,
    translate_op,
    weyl,
    weyl_for_sample,
)

# two nodes next to p = 0
NODES = (31, 32)


@pytest.fixture(scope="module")
def node_modes(grid):
    vectors = np.eye(grid.dim, dtype=complex)[:, list(NODES)]
    return select_modes(vectors, np.array([0.9, 0.5]), grid, 2)


@pytest.fixture(scope="module")
def small_space(node_modes):
    return TruncatedFockSpace(node_modes, 3, e_cap=2.5)


class TestModes:

    def test_diagonal_kinematics(self, node_modes, grid):
        np.testing.assert_allclose(node_modes.omega, grid.omega[list(NODES)])
        np.testing.assert_allclose(node_modes.momentum[:, 0], grid.nodes[list(NODES), 0])
        np.testing.assert_allclose(node_modes.omega_leakage, 0.0, atol=1e-14)

    def test_too_many_modes(self, grid):
        with pytest.raises(FockError):
            select_modes(np.eye(grid.dim)[:, :2], np.ones(2), grid, 3)


class TestTruncatedFockSpace:

    def test_dimension_and_prefix(self, node_modes, small_space):
        assert small_space.dim == 10
        smaller = TruncatedFockSpace(node_modes, 2)
        np.testing.assert_array_equal(small_space.basis[:smaller.dim], smaller.basis)
        assert small_space.sector_size(2) == smaller.dim

    def test_dimension_limit(self, node_modes):
        with pytest.raises(FockError):
            TruncatedFockSpace(node_modes, 3, dim_limit=5)
        with pytest.raises(FockError):
            TruncatedFockSpace(node_modes, 0)

    def test_vacuum_is_annihilated(self, small_space):
        for a in small_space.annihilators:
            np.testing.assert_allclose(a @ small_space.vacuum(), 0.0)

    def test_canonical_commutation_below_top_grade(self, small_space):
        low = small_space.particle_number < small_space.n_max
        for i, ai in enumerate(small_space.annihilators):
            for j, aj in enumerate(small_space.annihilators):
                ai_d, aj_d = ai.toarray(), aj.toarray()
                commutator = ai_d @ aj_d.conj().T - aj_d.conj().T @ ai_d
                expected = np.eye(small_space.dim) * (i == j)
                np.testing.assert_allclose(commutator[:, low], expected[:, low], atol=1e-12)

    def test_number_and_energy(self, small_space):
        N = second_quantize(small_space, np.eye(small_space.K))
        assert N.hermitian
        np.testing.assert_allclose(N.matrix, number_operator(small_space).matrix, atol=1e-12)
        np.testing.assert_allclose(np.diag(hamiltonian(small_space).matrix).real, small_space.energies)

    def test_low_particle_bound(self, small_space):
        lightest = small_space.modes.omega.min()
        assert small_space.low_particle_bound() == min(3, int(np.floor(2.5 / lightest)))


class TestOperators:

    def test_ladder_kinds(self, small_space):
        c = np.array([0.3, -0.1j])
        a = ladder(small_space, c, "annihilate", in_modes=True)
        a_star = ladder(small_space, c, "create", in_modes=True)
        np.testing.assert_allclose(a_star.matrix, a.matrix.conj().T)
        with pytest.raises(FockError):
            ladder(small_space, c, "raise", in_modes=True)
        with pytest.raises(FockError):
            ladder(small_space, np.zeros(3), "create", in_modes=True)

    def test_leakage_outside_modes(self, small_space, grid):
        outside = np.zeros(grid.dim, dtype=complex)
        outside[0] = 1.0
        with pytest.raises(FockError):
            ladder(small_space, outside, "annihilate")
        waived = ladder(small_space, outside, "annihilate", waive_leakage=True)
        assert waived.defects["leakage"] == pytest.approx(1.0)

    def test_weyl_unitary_with_vacuum_expectation(self, small_space):
        c = np.array([0.2, 0.1 + 0.2j])
        W = weyl(small_space, c, in_modes=True)
        assert W.defects["unitarity"] < 1e-10
        vacuum = small_space.vacuum()
        expected = np.exp(-0.5 * np.vdot(c, c).real)
        assert np.vdot(vacuum, W.matrix @ vacuum) == pytest.approx(expected, abs=1e-4)
        assert W.defects["truncation"] >= 0.0

    def test_weyl_composition(self, small_space):
        f = np.array([0.05, 0.02j])
        g = np.array([0.04j, -0.03])
        product = weyl(small_space, f, in_modes=True).matrix @ weyl(small_space, g, in_modes=True).matrix
        combined = weyl(small_space, f + g, in_modes=True).matrix
        phase = np.exp(-1j * np.vdot(f, g).imag)
        vacuum = small_space.vacuum()
        np.testing.assert_allclose(product @ vacuum, phase * combined @ vacuum, atol=1e-4)
        assert abs(phase - 1) > 1e-3

    def test_weyl_adjoint(self, small_space):
        c = np.array([0.2, -0.1 + 0.3j])
        W = weyl(small_space, c, in_modes=True)
        np.testing.assert_allclose(W.matrix.conj().T, weyl(small_space, -c, in_modes=True).matrix, atol=1e-10)

    def test_weyl_norm_cap(self, small_space):
        with pytest.raises(FockError):
            weyl(small_space, np.array([1.0, 0.0]), in_modes=True, norm_cap=0.5)

    def test_translation_of_node_modes(self, small_space):
        U = translate_op(small_space, [0.4, 1.5])
        np.testing.assert_allclose(U.matrix.conj().T @ U.matrix, np.eye(small_space.dim), atol=1e-12)
        assert U.defects["leakage"] < 1e-12
        np.testing.assert_allclose(U.matrix @ small_space.vacuum(), small_space.vacuum(), atol=1e-12)

    def test_weyl_for_sample_outside_part(self, small_space, grid):
        vector = np.zeros(grid.dim, dtype=complex)
        vector[0] = 0.5
        _, factor = weyl_for_sample(small_space, WeylSample(2.0, vector))
        assert factor == pytest.approx(2.0 * np.exp(-0.125))


class TestSpectralRegions:

    def test_below_the_gap_only_vacuum(self, small_space):
        mask = spectral_mask(small_space, 0.5)
        assert mask[0] and mask.sum() == 1

    def test_energy_cap(self, small_space):
        mask = spectral_mask(small_space, 2.5)
        np.testing.assert_array_equal(mask, small_space.energies <= 2.5 + 1e-12)

    def test_projection_operator(self, small_space):
        P = spectral_project(small_space, 2.5)
        assert P.hermitian
        np.testing.assert_allclose(P.matrix @ P.matrix, P.matrix)
        np.testing.assert_array_equal(np.diag(P.matrix).real.astype(bool), spectral_mask(small_space, 2.5))

    def test_ball_around_origin(self, small_space):
        ball = EnergyMomentumBall(center=(0.0, 0.0), radius=0.1)
        mask = spectral_mask(small_space, ball)
        assert mask[0] and mask.sum() == 1


class TestStateFunctional:

    def test_pure_state(self, small_space):
        rng = np.random.default_rng(4)
        psi = rng.standard_normal(small_space.dim) + 1j * rng.standard_normal(small_space.dim)
        phi = StateFunctional.pure(small_space, psi)
        assert phi.trace() == pytest.approx(1.0)
        assert phi.trace_norm() == pytest.approx(1.0)
        assert phi.evaluate(np.eye(small_space.dim)) == pytest.approx(1.0)

    def test_vacuum_subtraction(self, small_space):
        psi = np.zeros(small_space.dim, dtype=complex)
        psi[1] = 1.0
        phi = StateFunctional.pure(small_space, psi).subtract_vacuum()
        assert abs(phi.trace()) < 1e-14
        assert phi.vacuum_subtracted
        assert phi.trace_norm() == pytest.approx(2.0)
        assert phi.normalized().trace_norm() == pytest.approx(1.0)

    def test_from_rho_and_jordan_parts(self, small_space):
        rng = np.random.default_rng(5)
        rho = rng.standard_normal((small_space.dim,) * 2) + 1j * rng.standard_normal((small_space.dim,) * 2)
        phi = StateFunctional.from_rho(small_space, rho)
        np.testing.assert_allclose(phi.rho, rho, atol=1e-10)
        parts = jordan_decompose(phi)
        np.testing.assert_allclose(parts.reassemble().rho, rho, atol=1e-10)
        for part in parts:
            assert np.all(part.weights.real >= 0)

    def test_transformed_keeps_trace(self, small_space):
        phi = StateFunctional.vacuum_state(small_space)
        U = translate_op(small_space, [1.0, 2.0])
        assert phi.transformed(U).trace() == pytest.approx(1.0)


class TestFunctionalNet:

    def test_net_members(self, small_space):
        net = functional_net(small_space, 2.5, 5, seed=7)
        assert len(net) == 5
        for phi in net:
            assert abs(phi.trace()) < 1e-12
            assert phi.trace_norm() == pytest.approx(1.0)

    def test_net_is_seeded(self, small_space):
        first = functional_net(small_space, 2.5, 3, seed=7)
        second = functional_net(small_space, 2.5, 3, seed=7)
        for a, b in zip(first, second):
            np.testing.assert_allclose(a.rho, b.rho)

    def test_vacuum_only_region(self, small_space):
        net = functional_net(small_space, 0.5, 4, seed=7)
        assert len(net) == 1
        assert net[0].rank == 0

    def test_empty_region(self, small_space):
        with pytest.raises(FockError):
            functional_net(small_space, EnergyMomentumBall(center=(50.0, 0.0), radius=0.1), 3, seed=7)


class TestOneParticleState:

    def test_weyl_expectation(self, grid):
        h = np.zeros(grid.dim, dtype=complex)
        h[10] = 1.0
        g = np.zeros(grid.dim, dtype=complex)
        g[20] = 0.4
        state = OneParticleState.packet(grid, h)
        assert state.trace() == pytest.approx(1.0)
        assert state.evaluate_weyl(WeylSample(1.0, g)) == pytest.approx(np.exp(-0.08))
        parallel = WeylSample(1.0, 0.4 * h)
        assert state.evaluate_weyl(parallel) == pytest.approx(np.exp(-0.08) * (1 - 0.16))

    def test_vacuum_subtracted_packet(self, grid):
        h = np.ones(grid.dim, dtype=complex)
        state = OneParticleState.packet(grid, h, subtract_vacuum=True)
        assert state.vacuum_subtracted
        assert state.subtract_vacuum().trace() == pytest.approx(0.0)


def test_local_observables(family, small_config, samples):
    count = small_config.observable_count
    assert len(samples) == 2 * count - 1
    for sample in samples[:count]:
        assert np.linalg.norm(sample.vector) == pytest.approx(small_config.weyl_norm)
        assert sample.norm == pytest.approx(1.0)


def test_local_observable_products(samples, small_config):
    count = small_config.observable_count
    for i in range(count - 1):
        f, g = samples[i].vector, samples[i + 1].vector
        product = samples[count + i]
        np.testing.assert_allclose(product.vector, f + g)
        assert product.coefficient == pytest.approx(np.exp(-1j * np.vdot(f, g).imag))
        assert product.label == f"W(f{i})W(f{i + 1})"
