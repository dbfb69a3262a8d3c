"""
Damped restriction operators, their least upper bound T, a J-real eigenbasis
of T and Schatten norms.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from core.errors import LubError
from core.grid import MomentumGrid, SubspaceBasis, apply_conjugation, energy_indicator

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-12
JOIN_RANK_TOL = 1e-8
J_COMMUTATION_TOL = 1e-8
LEVEL_MERGE_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_SWEEPS = 40


@dataclass(frozen=True)
class CompactOperator:
    """Dense operator on the weighted grid basis."""

    matrix: np.ndarray = field(repr=False)
    grid: MomentumGrid = field(repr=False)
    label: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise LubError(f"{self.label}: non-finite entries")

    def norm(self) -> float:
        return float(linalg.norm(self.matrix, 2))

    def singular_values(self) -> np.ndarray:
        return linalg.svdvals(self.matrix)

    def absolute(self) -> "CompactOperator":
        """|A| = (A*A)^(1/2)."""
        return CompactOperator(psd_power(self.matrix.conj().T @ self.matrix, 0.5), self.grid,
                               f"|{self.label}|")


@dataclass(frozen=True)
class LubResult:
    """Least upper bound T with its J-real spectral data."""

    T: CompactOperator = field(repr=False)
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    residual_history: List[float] = field(default_factory=list)
    limit_gap: float = 0.0
    converged: bool = True
    power_mean: np.ndarray = field(default=None, repr=False)
    j_defect: float = 0.0


def _hermitian_eig(matrix: np.ndarray, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = linalg.eigh((matrix + matrix.conj().T) / 2)
    values = np.where(values < floor, 0.0, values)
    return values, vectors


def psd_power(matrix: np.ndarray, q: float, floor: float = EIGEN_FLOOR) -> np.ndarray:
    """Power of a Hermitian PSD matrix; eigenvalues below floor are clamped to zero."""
    values, vectors = _hermitian_eig(matrix, floor)
    powered = np.zeros_like(values)
    positive = values > 0
    powered[positive] = values[positive] ** q
    return (vectors * powered) @ vectors.conj().T


def build_damped_restrictions(plus: SubspaceBasis, minus: SubspaceBasis, E: float,
                              beta: float) -> Dict[str, CompactOperator]:
    """
    S_{E,+-} = Q_E L+- and S_{beta,+-} = exp(-(beta|p|)^2/2) L+-.

    Args:
        plus: basis of L+
        minus: basis of L-
        E: energy cutoff of Q_E
        beta: damping width

    Returns:
        The four operators keyed "S_E+", "S_E-", "S_beta+", "S_beta-"
    """
    if E <= 0 or beta <= 0:
        raise LubError(f"E and beta must be positive, got E={E}, beta={beta}")
    grid = plus.parent
    edge = float(np.sqrt(grid.p_max ** 2 + grid.m ** 2))
    if E > edge:
        logger.warning("E=%.3g exceeds omega(P_max)=%.3g; Q_E is truncated by the grid", E, edge)

    q_e = energy_indicator(grid, E)
    damping = np.exp(-0.5 * beta ** 2 * np.sum(grid.nodes ** 2, axis=1))
    operators = {}
    for sign, basis in (("+", plus), ("-", minus)):
        projector = basis.projector()
        operators[f"S_E{sign}"] = CompactOperator(q_e[:, None] * projector, grid, f"S_E{sign}")
        operators[f"S_beta{sign}"] = CompactOperator(damping[:, None] * projector, grid,
                                                     f"S_beta{sign}")
    return operators


def _positive_spectrum(matrix: np.ndarray, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = _hermitian_eig(matrix, floor)
    keep = values > 0
    return values[keep], vectors[:, keep]


def _merged_levels(values: np.ndarray) -> np.ndarray:
    """Cluster representatives: descending values closer than LEVEL_MERGE_TOL share the top one."""
    levels = np.sort(values)[::-1]
    representative = levels.copy()
    for k in range(1, levels.size):
        if representative[k - 1] - levels[k] <= LEVEL_MERGE_TOL * representative[k - 1]:
            representative[k] = representative[k - 1]
    return representative


def _orthogonal_complement(block: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the part of `block` outside span(basis)."""
    for _ in range(2):
        block = block - basis @ (basis.conj().T @ block)
    u, sigma, _ = linalg.svd(block, full_matrices=False)
    new = u[:, sigma > JOIN_RANK_TOL]
    if new.shape[1] == 0:
        return new
    new = new - basis @ (basis.conj().T @ new)
    q, _ = linalg.qr(new, mode="economic")
    return q


def spectral_join(operators: Sequence[np.ndarray]) -> np.ndarray:
    """
    Supremum of Hermitian PSD matrices in the spectral order.

    The spectral projection of the result for [lam, inf) is the join of the
    corresponding projections of the inputs. Levels closer than LEVEL_MERGE_TOL
    are merged, and each level only adds directions orthogonal to the ones
    already placed, so the norm of the result is the largest input eigenvalue.
    """
    dim = operators[0].shape[0]
    spectra = [_positive_spectrum(op) for op in operators]
    values = np.concatenate([v for v, _ in spectra])
    vectors = np.hstack([e for _, e in spectra]) if values.size else np.zeros((dim, 0))

    result = np.zeros((dim, dim), dtype=complex)
    if values.size == 0:
        return result
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    levels = _merged_levels(values)

    basis = np.zeros((dim, 0), dtype=complex)
    for level in np.unique(levels)[::-1]:
        new = _orthogonal_complement(vectors[:, levels == level], basis)
        if new.shape[1] == 0:
            continue
        result += level * (new @ new.conj().T)
        basis = np.hstack([basis, new])
    return (result + result.conj().T) / 2


def j_commutator_defect(matrix: np.ndarray, grid: MomentumGrid) -> float:
    """max |JAJ - A| relative to max(1, max |A|)."""
    flipped = np.conj(matrix[np.ix_(grid.mirror, grid.mirror)])
    scale = max(float(np.max(np.abs(matrix))), 1.0) if matrix.size else 1.0
    return float(np.max(np.abs(flipped - matrix))) / scale if matrix.size else 0.0


def j_symmetrize(matrix: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    """(A + JAJ)/2, made Hermitian."""
    flipped = np.conj(matrix[np.ix_(grid.mirror, grid.mirror)])
    average = (matrix + flipped) / 2
    return (average + average.conj().T) / 2


def _graded_power_mean(coordinates: np.ndarray, values: np.ndarray, exponent: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs of (1/4 sum_k values_k^exponent c_k c_k*)^(1/exponent).

    One-sided Jacobi on the columns sqrt(w_k) c_k, each held as a unit vector
    with a log scale, so weights far below the double range keep their
    directions. A column whose remainder after a rotation drops under
    JOIN_RANK_TOL is dependent on the others and is removed.

    Returns:
        (eigenvalues, eigenvectors as columns) in the coordinates given
    """
    Y = coordinates / np.linalg.norm(coordinates, axis=0)
    log_scale = (exponent * np.log(values) - np.log(4.0)) / 2 + np.log(np.linalg.norm(coordinates, axis=0))
    alive = np.ones(values.size, dtype=bool)

    for _ in range(JACOBI_SWEEPS):
        rotated = False
        for i in range(values.size):
            for j in range(i + 1, values.size):
                if not (alive[i] and alive[j]):
                    continue
                hi, lo = (i, j) if log_scale[i] >= log_scale[j] else (j, i)
                overlap = np.vdot(Y[:, hi], Y[:, lo])
                size = abs(overlap)
                if size < JACOBI_TOL:
                    continue
                rotated = True
                rho = np.exp(log_scale[lo] - log_scale[hi])
                u = (1 - rho ** 2) / (2 * size)
                tau = -1.0 / (u + np.hypot(rho, u))
                c = 1.0 / np.sqrt(1 + (rho * tau) ** 2)
                aligned = Y[:, lo] * (np.conj(overlap) / size)
                upper = c * (Y[:, hi] - tau * rho ** 2 * aligned)
                lower = c * (tau * Y[:, hi] + aligned)

                upper_norm = np.linalg.norm(upper)
                Y[:, hi] = upper / upper_norm
                log_scale[hi] += np.log(upper_norm)
                lower_norm = np.linalg.norm(lower)
                if lower_norm < JOIN_RANK_TOL:
                    alive[lo] = False
                    continue
                Y[:, lo] = lower / lower_norm
                log_scale[lo] += np.log(lower_norm)
        if not rotated:
            break
    else:
        logger.debug("Jacobi sweeps hit the limit at exponent %.3g", exponent)

    return np.exp(2 * log_scale[alive] / exponent), Y[:, alive]


def lub_iterate(S1: CompactOperator, S2: CompactOperator, S3: CompactOperator, S4: CompactOperator,
                tol: float = 1e-10, n_max: int = 30) -> LubResult:
    """
    Run the power means A_n = (1/4 sum_i |S_i|^(2^n))^(2^-n) and return the least upper bound.

    The returned T is the limit of the power means, obtained in closed form by
    spectral_join; the residual history and the distance of the last mean to T
    are recorded. Non-convergence within n_max is logged, not raised.

    When every |S_i| commutes with J, T is averaged with JTJ and its eigenbasis
    is J-real. Otherwise the J defect is recorded and a plain eigenbasis is returned.
    """
    inputs = (S1, S2, S3, S4)
    grid = S1.grid
    if any(op.matrix.shape != S1.matrix.shape for op in inputs):
        raise LubError("operators live on different grids")
    if tol <= 0:
        raise LubError(f"tol must be positive, got {tol}")

    absolutes = [op.absolute().matrix for op in inputs]
    scale = max(op.norm() for op in inputs)
    if scale == 0:
        zero = CompactOperator(np.zeros((grid.dim, grid.dim), dtype=complex), grid, "T")
        return LubResult(T=zero, eigenvalues=np.zeros(0), eigenvectors=np.zeros((grid.dim, 0)),
                         iterations=0, residual=0.0, residual_history=[0.0], limit_gap=0.0,
                         converged=True, power_mean=zero.matrix)

    input_defect = max(j_commutator_defect(a, grid) for a in absolutes)
    j_invariant = input_defect <= J_COMMUTATION_TOL
    T = spectral_join(absolutes)
    if j_invariant:
        T = j_symmetrize(T, grid)

    spectra = [_positive_spectrum(a / scale) for a in absolutes]
    values = np.concatenate([v for v, _ in spectra])
    columns = np.hstack([e for _, e in spectra])
    frame = linalg.orth(columns, rcond=EIGEN_FLOOR)
    coordinates = frame.conj().T @ columns

    def power_mean(n: int) -> np.ndarray:
        levels, vectors = _graded_power_mean(coordinates, values, 2.0 ** n)
        vectors = frame @ vectors
        return scale * (vectors * levels) @ vectors.conj().T

    history: List[float] = []
    current = power_mean(0)
    converged = False
    iterations = 0
    for n in range(1, n_max + 1):
        following = power_mean(n)
        history.append(float(linalg.norm(following - current, 2)))
        current = following
        iterations = n
        if history[-1] < tol:
            converged = True
            break

    if not converged:
        logger.warning("Power means did not reach tol=%.1e in %d steps (last residual %.3g)",
                       tol, n_max, history[-1])

    T_op = CompactOperator(T, grid, "T")
    if j_invariant:
        t, e = j_real_eigenbasis(T_op)
    else:
        logger.warning("Inputs do not commute with J (defect %.3g); eigenbasis is not J-real", input_defect)
        t, e = plain_eigenbasis(T_op)
    return LubResult(
        T=T_op,
        eigenvalues=t,
        eigenvectors=e,
        iterations=iterations,
        residual=history[-1],
        residual_history=history,
        limit_gap=float(linalg.norm(current - T, 2)),
        converged=converged,
        power_mean=current,
        j_defect=j_commutator_defect(T, grid),
    )


def _real_frame(grid: MomentumGrid) -> np.ndarray:
    """Unitary whose columns are J-real: (d_i + d_-i)/sqrt2, i(d_i - d_-i)/sqrt2."""
    frame = np.zeros((grid.dim, grid.dim), dtype=complex)
    column = 0
    for i in range(grid.dim):
        j = int(grid.mirror[i])
        if j < i:
            continue
        if j == i:
            frame[i, column] = 1.0
            column += 1
            continue
        frame[[i, j], column] = 1 / np.sqrt(2)
        frame[[i, j], column + 1] = np.array([1j, -1j]) / np.sqrt(2)
        column += 2
    return frame


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    pivot = vector[int(np.argmax(np.abs(vector)))]
    reference = pivot.real if abs(pivot.real) >= abs(pivot.imag) else pivot.imag
    return -vector if reference < 0 else vector


def j_real_eigenbasis(T: CompactOperator, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs of the range of T with eigenvectors fixed by J.

    T is written in a J-real frame, where commuting with J makes it a real
    symmetric matrix; its real eigenvectors map back to J-real vectors, so
    degenerate eigenspaces need no special treatment.

    Returns:
        (t_j descending, e_j as columns)
    """
    grid = T.grid
    frame = _real_frame(grid)
    local = frame.conj().T @ T.matrix @ frame
    scale = max(float(np.max(np.abs(local))), 1.0)
    if float(np.max(np.abs(local.imag))) > J_COMMUTATION_TOL * scale:
        raise LubError("T does not commute with J; no J-real eigenbasis exists")

    real_part = (local.real + local.real.T) / 2
    values, vectors = linalg.eigh(real_part)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    keep = values > floor
    eigenvectors = frame @ vectors[:, keep]
    for k in range(eigenvectors.shape[1]):
        eigenvectors[:, k] = _fix_sign(eigenvectors[:, k])

    if eigenvectors.size:
        defect = float(np.max(np.abs(apply_conjugation(grid, eigenvectors) - eigenvectors)))
        if defect > J_COMMUTATION_TOL:
            raise LubError(f"J-reality defect {defect:.3g} in the eigenbasis")
    return values[keep], eigenvectors


def plain_eigenbasis(T: CompactOperator, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the range of a Hermitian T, descending, with no J condition."""
    values, vectors = linalg.eigh((T.matrix + T.matrix.conj().T) / 2)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    keep = values > floor
    eigenvectors = vectors[:, keep]
    for k in range(eigenvectors.shape[1]):
        eigenvectors[:, k] = _fix_sign(eigenvectors[:, k])
    return values[keep], eigenvectors


def schatten_norm(A: Union[CompactOperator, np.ndarray], p: float) -> float:
    """(sum sigma_i^p)^(1/p); a quasi-norm for p < 1."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    matrix = A.matrix if isinstance(A, CompactOperator) else np.asarray(A)
    sigma = linalg.svdvals(matrix)
    return float(np.sum(sigma ** p) ** (1.0 / p))


def trace_power(A: Union[CompactOperator, np.ndarray], p: float) -> float:
    """||A^p||_1 = sum sigma_i^p."""
    matrix = A.matrix if isinstance(A, CompactOperator) else np.asarray(A)
    sigma = linalg.svdvals(matrix)
    return float(np.sum(sigma[sigma > EIGEN_FLOOR] ** p))


def domination_floor(T: CompactOperator, S: CompactOperator, n: int) -> float:
    """Smallest eigenvalue of T^n - |S|^n."""
    difference = np.linalg.matrix_power(T.matrix, n) - np.linalg.matrix_power(S.absolute().matrix, n)
    return float(linalg.eigvalsh((difference + difference.conj().T) / 2)[0])
