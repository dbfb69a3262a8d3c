"""
Tests for the damped restrictions and their least upper bound.
"""
import numpy as np
import pytest

from core.config import RunConfig
from core.errors import LubError
from core.grid import apply_conjugation, build_local_subspaces, build_test_family, make_grid
from core.lub import (
    CompactOperator,
    build_damped_restrictions,
    domination_floor,
    j_commutator_defect,
    j_real_eigenbasis,
    lub_iterate,
    psd_power,
    schatten_norm,
    spectral_join,
    trace_power,
)


class TestMatrixHelpers:

    def test_psd_power(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 5))
        A = x @ x.T
        np.testing.assert_allclose(psd_power(A, 2.0), A @ A, atol=1e-9)
        root = psd_power(A, 0.5)
        np.testing.assert_allclose(root @ root, A, atol=1e-9)

    def test_schatten_and_trace(self):
        D = np.diag([3.0, 4.0, 0.0])
        assert schatten_norm(D, 1.0) == pytest.approx(7.0)
        assert schatten_norm(D, 2.0) == pytest.approx(5.0)
        assert trace_power(np.diag([4.0, 9.0]), 0.5) == pytest.approx(5.0)
        with pytest.raises(ValueError):
            schatten_norm(D, 0.0)

    def test_join_of_commuting_projections(self):
        join = spectral_join([np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 2.0, 0.0])])
        np.testing.assert_allclose(join, np.diag([1.0, 2.0, 0.0]), atol=1e-12)

    def test_join_dominates_inputs(self):
        rng = np.random.default_rng(2)
        inputs = []
        for _ in range(3):
            x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
            inputs.append(x @ x.conj().T)
        join = spectral_join(inputs)
        for A in inputs:
            assert np.linalg.eigvalsh(join - A).min() >= -1e-7
        assert np.linalg.norm(join, 2) <= max(np.linalg.norm(A, 2) for A in inputs) + 1e-10

    def test_join_of_overlapping_ranges_keeps_the_norm(self):
        rng = np.random.default_rng(6)
        shared, _ = np.linalg.qr(rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4)))
        inputs = []
        for top in (0.98, 0.97, 0.9, 0.5):
            values = np.array([top, top / 2, top / 3, top / 5])
            mixed, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
            vectors = shared @ mixed
            inputs.append((vectors * values) @ vectors.conj().T)
        join = spectral_join(inputs)
        assert np.linalg.norm(join, 2) <= 0.98 + 1e-10
        assert np.linalg.matrix_rank(join, tol=1e-8) == 4
        for A in inputs:
            assert np.linalg.eigvalsh(join - A).min() >= -1e-10

    def test_join_of_one_operator_is_itself(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        A = x @ x.conj().T
        np.testing.assert_allclose(spectral_join([A, A, A]), A, atol=1e-10)

    def test_non_finite_operator(self, grid):
        with pytest.raises(LubError):
            CompactOperator(np.full((grid.dim, grid.dim), np.nan), grid, "bad")


class TestDampedRestrictions:

    def test_four_operators(self, restrictions):
        assert sorted(restrictions) == ["S_E+", "S_E-", "S_beta+", "S_beta-"]
        for op in restrictions.values():
            assert op.norm() <= 1 + 1e-10

    def test_invalid_parameters(self, subspaces):
        plus, minus = subspaces
        with pytest.raises(LubError):
            build_damped_restrictions(plus, minus, 0.0, 0.2)
        with pytest.raises(LubError):
            build_damped_restrictions(plus, minus, 2.5, -1.0)


class TestLubIterate:

    def test_spectrum(self, lub):
        t = lub.eigenvalues
        assert t.size > 0
        assert np.all(np.diff(t) <= 1e-12)
        assert t[0] <= 1 + 1e-10
        assert np.all(t > 0)
        assert lub.residual_history[-1] < lub.residual_history[0]
        assert lub.limit_gap < 1e-6

    def test_norm_matches_largest_input(self, lub, restrictions):
        top = max(op.norm() for op in restrictions.values())
        assert lub.T.norm() <= top + 1e-10
        assert lub.j_defect < 1e-12

    def test_eigenbasis_reconstructs_t(self, lub):
        e, t = lub.eigenvectors, lub.eigenvalues
        np.testing.assert_allclose((e * t) @ e.conj().T, lub.T.matrix, atol=1e-8)
        np.testing.assert_allclose(e.conj().T @ e, np.eye(t.size), atol=1e-10)

    def test_eigenbasis_is_j_real(self, lub, grid):
        np.testing.assert_allclose(apply_conjugation(grid, lub.eigenvectors), lub.eigenvectors, atol=1e-8)

    def test_dominates_every_input(self, lub, restrictions):
        for op in restrictions.values():
            assert domination_floor(lub.T, op, 1) >= -1e-6

    def test_zero_inputs(self, grid):
        zero = CompactOperator(np.zeros((grid.dim, grid.dim)), grid, "0")
        result = lub_iterate(zero, zero, zero, zero)
        assert result.eigenvalues.size == 0
        assert result.converged

    def test_rejects_bad_tolerance(self, restrictions):
        ops = [restrictions[k] for k in ("S_E+", "S_E-", "S_beta+", "S_beta-")]
        with pytest.raises(LubError):
            lub_iterate(*ops, tol=0.0)

    def test_power_means_of_commuting_inputs(self, grid):
        a, b = 5, 9
        first, second, zero = (np.zeros((grid.dim, grid.dim)) for _ in range(3))
        first[a, a], first[b, b] = 0.9, 0.6
        second[a, a], second[b, b] = 0.6, 0.9
        ops = [CompactOperator(M, grid, name) for M, name in ((first, "1"), (second, "2"), (zero, "0"))]
        result = lub_iterate(ops[0], ops[1], ops[2], ops[2], tol=1e-8, n_max=30)
        assert result.converged
        assert np.all(np.diff(result.residual_history) <= 0)
        assert result.limit_gap < 1e-7
        expected = np.zeros((grid.dim, grid.dim))
        expected[a, a] = expected[b, b] = 0.9
        np.testing.assert_allclose(result.T.matrix, expected, atol=1e-12)
        # mean of 0.9^e and 0.6^e over four slots at e = 2
        np.testing.assert_allclose(result.residual_history[0],
                                   np.sqrt((0.81 + 0.36) / 4) - (0.9 + 0.6) / 4, rtol=1e-9)

    def test_identical_inputs_return_the_input(self, grid):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((grid.dim, 5)) + 1j * rng.standard_normal((grid.dim, 5))
        A = x @ x.conj().T
        S = CompactOperator(0.8 * A / np.linalg.norm(A, 2), grid, "S")
        result = lub_iterate(S, S, S, S)
        np.testing.assert_allclose(result.T.matrix, S.matrix, atol=1e-10)
        assert result.converged
        assert result.j_defect > 1e-3
        e, t = result.eigenvectors, result.eigenvalues
        assert t.size == 5
        np.testing.assert_allclose((e * t) @ e.conj().T, S.matrix, atol=1e-10)


class TestJRealEigenbasis:

    def test_degenerate_mirror_pair(self, grid):
        i = 3
        j = int(grid.mirror[i])
        T = np.zeros((grid.dim, grid.dim), dtype=complex)
        T[i, i] = T[j, j] = 0.7
        T[0, 0] = T[grid.mirror[0], grid.mirror[0]] = 0.2
        t, e = j_real_eigenbasis(CompactOperator(T, grid, "T"))
        np.testing.assert_allclose(t, [0.7, 0.7, 0.2, 0.2])
        np.testing.assert_allclose(apply_conjugation(grid, e), e, atol=1e-12)
        np.testing.assert_allclose(e.conj().T @ e, np.eye(4), atol=1e-12)
        np.testing.assert_allclose((e * t) @ e.conj().T, T, atol=1e-12)

    def test_non_commuting_operator(self, grid):
        i = 3
        T = np.zeros((grid.dim, grid.dim), dtype=complex)
        T[i, i] = 1.0
        assert j_commutator_defect(T, grid) == pytest.approx(1.0)
        with pytest.raises(LubError):
            j_real_eigenbasis(CompactOperator(T, grid, "T"))


class TestDefaultConfiguration:

    @pytest.fixture(scope="class")
    def default_restrictions(self):
        cfg = RunConfig()
        grid = make_grid(cfg.s, cfg.p_max, cfg.n_nodes, cfg.m)
        family = build_test_family(grid, cfg.r, cfg.family_count, cfg.fine_points, cfg.leakage_tol)
        plus, minus = build_local_subspaces(family)
        return build_damped_restrictions(plus, minus, cfg.energy, cfg.beta)

    @pytest.fixture(scope="class")
    def default_lub(self, default_restrictions):
        ops = [default_restrictions[k] for k in ("S_E+", "S_E-", "S_beta+", "S_beta-")]
        return lub_iterate(*ops)

    def test_norm_and_domination(self, default_lub, default_restrictions):
        top = max(op.norm() for op in default_restrictions.values())
        assert default_lub.T.norm() <= top + 1e-10
        for op in default_restrictions.values():
            assert domination_floor(default_lub.T, op, 1) >= -1e-6

    def test_eigenbasis_is_j_real(self, default_lub):
        grid = default_lub.T.grid
        e = default_lub.eigenvectors
        assert e.shape[1] > 0
        np.testing.assert_allclose(apply_conjugation(grid, e), e, atol=1e-8)

    def test_power_means_approach_t(self, default_lub):
        history = default_lub.residual_history
        assert default_lub.iterations <= 30
        assert history[-1] < 1e-6
        assert history[-1] < history[0]
        assert default_lub.limit_gap < 1e-6
