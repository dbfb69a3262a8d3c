"""
Tests for the rank-one expansion.
"""
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.expansion import (
    MultiIndexPair,
    S_matrix,
    build_B,
    eval_S,
    eval_tau_on_weyl,
    enumerate_index_pairs,
    enumerate_multi_indices,
    expansion_residual,
    expansion_table,
    npoint_norm,
    nuclear_pnorm_bound,
    phi_norm_bound,
    pnorm_sum,
    restricted_norms,
    tau_matrix,
    tau_norm_bound,
    translated_S_norms,
)
from core.fock import StateFunctional, weyl_defect


class TestMultiIndices:

    def test_counts_per_grade(self):
        # |mu| <= 2 over 2K = 4 slots
        indices = enumerate_multi_indices(2, 2.9)
        assert len(indices) == sum(comb(4 + n - 1, n) for n in range(3))
        assert indices[0].order == 0
        assert [mu.order for mu in indices] == sorted(mu.order for mu in indices)

    def test_below_the_gap_only_zero(self):
        indices = enumerate_multi_indices(3, 0.5)
        assert len(indices) == 1
        assert indices[0] == MultiIndexPair((0, 0, 0), (0, 0, 0))

    def test_pairs_start_with_zero(self):
        pairs = enumerate_index_pairs(2, 1.0)
        assert len(pairs) == 25
        assert pairs[0][0].order == pairs[0][1].order == 0

    def test_arithmetic(self):
        mu = MultiIndexPair((2, 0), (1, 0))
        nu = MultiIndexPair((0, 1), (1, 0))
        assert (mu + nu) == MultiIndexPair((2, 1), (2, 0))
        assert mu.order == 3
        assert mu.factorial == 2
        assert mu.label() == "20|10"
        assert mu.power(np.array([0.5, 0.25])) == pytest.approx(0.125)

    def test_phi_norm_bound(self):
        assert phi_norm_bound(MultiIndexPair((0, 0), (0, 0))) == 1.0
        assert phi_norm_bound(MultiIndexPair((2, 0), (1, 0))) == pytest.approx(64 * np.sqrt(2))

    def test_invalid_mode_count(self):
        with pytest.raises(ValueError):
            enumerate_multi_indices(0, 2.0)

    @settings(max_examples=30, deadline=None)
    @given(K=st.integers(min_value=1, max_value=2), M_E=st.floats(min_value=0.0, max_value=3.5))
    def test_tau_bound_below_ceiling(self, K, M_E):
        top = max(tau_norm_bound(mu, nu) for mu, nu in enumerate_index_pairs(K, M_E))
        assert top <= 2.0 ** (5 * M_E) * (1 + 1e-12)


class TestPnormSums:

    @pytest.mark.parametrize("p", [0.25, 0.5, 1.0])
    def test_direct_sum_below_bound(self, p):
        direct, bound = pnorm_sum(p, np.array([0.6, 0.3, 0.1]), 2.5)
        assert 0 < direct <= bound

    def test_invalid_p(self):
        with pytest.raises(ValueError):
            pnorm_sum(1.5, np.array([0.5]), 2.0)

    def test_empty_spectrum(self):
        direct, bound = pnorm_sum(0.5, np.zeros(0), 2.0)
        assert direct == 0.0
        assert bound == pytest.approx(2.0 ** (0.5 * 2.0))

    def test_nuclear_bound_grows_with_energy(self):
        t = np.array([0.6, 0.3])
        assert nuclear_pnorm_bound(0.5, t, 3.0) > nuclear_pnorm_bound(0.5, t, 1.5)


class TestNuclearExpansion:

    def test_indices_follow_energy(self, expansion, small_config):
        assert expansion.indices == enumerate_multi_indices(small_config.modes, small_config.mass_ratio)

    def test_coordinates_resolve_span_vectors(self, expansion, span_vector):
        _, _, residual = expansion.coordinates(span_vector)
        assert residual < 1e-10

    def test_vacuum_expansion_is_exact(self, expansion, space, span_vector):
        vacuum = StateFunctional.vacuum_state(space)
        assert expansion_residual(expansion, vacuum, span_vector) < 1e-4

    def test_vacuum_has_only_the_zero_term(self, expansion, space):
        S = S_matrix(expansion, StateFunctional.vacuum_state(space))
        assert S[0, 0] == pytest.approx(1.0)
        S[0, 0] = 0.0
        np.testing.assert_allclose(S, 0.0, atol=1e-12)

    def test_net_expansion_is_exact(self, expansion, space, net, span_vector):
        c = expansion.modes.vectors.conj().T @ span_vector
        allowed = 1e-6 + 2 * weyl_defect(space, c)
        for phi in net:
            assert expansion_residual(expansion, phi, span_vector) <= allowed

    def test_excited_state_expansion_is_exact(self, expansion, space, span_vector):
        psi = np.zeros(space.dim, dtype=complex)
        psi[1] = 1.0
        phi = StateFunctional.pure(space, psi)
        c = expansion.modes.vectors.conj().T @ span_vector
        assert expansion_residual(expansion, phi, span_vector) <= 1e-6 + 2 * weyl_defect(space, c)

    def test_s_matrix_matches_single_entries(self, expansion, net):
        phi = net[0]
        S = S_matrix(expansion, phi)
        for a in (0, 1, len(expansion.indices) - 1):
            for b in (0, 2):
                pair = (expansion.indices[a], expansion.indices[b])
                assert eval_S(expansion, pair, phi) == pytest.approx(S[a, b], abs=1e-12)

    def test_vacuum_subtracted_net_kills_zero_term(self, expansion, net):
        for phi in net:
            assert abs(S_matrix(expansion, phi)[0, 0]) < 1e-12

    def test_zero_functional(self, expansion, space):
        S = S_matrix(expansion, StateFunctional.zero(space))
        assert not S.any()

    def test_tau_matrix_entries(self, expansion, span_vector):
        values = tau_matrix(expansion, span_vector)
        for a, b in ((0, 0), (1, 2), (3, 1)):
            pair = (expansion.indices[a], expansion.indices[b])
            assert values[a, b] == pytest.approx(eval_tau_on_weyl(expansion, pair, span_vector), abs=1e-12)
        assert values[0, 0] == pytest.approx(np.exp(-0.045))

    def test_translated_norms_at_origin(self, expansion, net):
        origin = translated_S_norms(expansion, net, [np.zeros(2)])
        direct = np.max([np.abs(S_matrix(expansion, phi)) ** 2 for phi in net], axis=0)
        np.testing.assert_allclose(origin, direct, atol=1e-12)

    def test_b_operators(self, expansion, space):
        zero = build_B(expansion, expansion.indices[0])
        np.testing.assert_allclose(zero.matrix, np.eye(space.dim))
        first = build_B(expansion, expansion.indices[1])
        np.testing.assert_allclose(first.matrix @ space.vacuum(), 0.0, atol=1e-14)

    def test_npoint_norm_of_one_point(self, net, samples):
        origin = [np.zeros(2)]
        assert npoint_norm(net, samples, origin) == pytest.approx(float(restricted_norms(net, samples, origin).max()))
        assert npoint_norm(net, samples, [np.zeros(2), np.array([0.0, 30.0])]) >= npoint_norm(net, samples, origin)

    def test_table_rows(self, expansion, net, modes):
        rows = expansion_table(expansion, net, modes.t)
        assert len(rows) == len(expansion.indices) ** 2
        assert set(rows[0]) == {"mu", "nu", "S_sampled", "S_bound", "tau_bound"}
        assert rows[0]["tau_bound"] == 1.0
