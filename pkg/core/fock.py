"""
Truncated symmetric Fock space over the retained T-eigenmodes.

Ladder operators, second quantisation, Weyl operators, translations, spectral
projections and normal functionals (dense on the Fock basis, stored as low-rank
factors).
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, sparse

from core.errors import FockError, TruncationError
from core.grid import MomentumGrid, TestFunctionFamily, translation_phase

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
LEAKAGE_TOL = 1e-6
UNITARITY_TOL = 1e-6
TRANSLATION_LEAKAGE_WARN = 0.1
ZERO_WEIGHT = 1e-14


@dataclass(frozen=True)
class ModeSet:
    """Retained single-particle modes e_j with their diagonal kinematics."""

    vectors: np.ndarray = field(repr=False)
    omega: np.ndarray
    momentum: np.ndarray
    omega_leakage: np.ndarray
    t: np.ndarray
    grid: MomentumGrid = field(repr=False)

    @property
    def K(self) -> int:
        return self.vectors.shape[1]

    def coordinates(self, f: np.ndarray) -> Tuple[np.ndarray, float]:
        """Components <e_j|f> and the relative norm of f outside the retained span."""
        c = self.vectors.conj().T @ f
        norm = float(np.linalg.norm(f))
        rest = float(np.linalg.norm(f - self.vectors @ c))
        return c, (rest / norm if norm > 0 else 0.0)

    def compress(self, grid_op: np.ndarray) -> np.ndarray:
        """K x K matrix <e_i|g e_j> of a grid operator (a 1-D array is a multiplier)."""
        grid_op = np.asarray(grid_op)
        if grid_op.ndim == 1:
            return self.vectors.conj().T @ (grid_op[:, None] * self.vectors)
        return self.vectors.conj().T @ grid_op @ self.vectors


def select_modes(vectors: np.ndarray, t: np.ndarray, grid: MomentumGrid, K: int) -> ModeSet:
    """
    Keep the first K eigenvectors and measure their diagonal kinematics.

    Args:
        vectors: J-real eigenvectors of T as columns, descending eigenvalue order
        t: matching eigenvalues
        grid: momentum grid
        K: number of modes to retain

    Returns:
        ModeSet with omega_j = <e_j|omega e_j>, p_j = <e_j|p e_j> and omega leakage
    """
    if K < 1:
        raise FockError(f"K must be at least 1, got {K}")
    if vectors.shape[1] < K:
        raise FockError(f"only {vectors.shape[1]} eigenvectors available, {K} requested")
    chosen = vectors[:, :K]
    omega_grid = grid.omega
    omega = np.real(np.einsum("ij,i,ij->j", chosen.conj(), omega_grid, chosen))
    momentum = np.stack(
        [np.real(np.einsum("ij,i,ij->j", chosen.conj(), grid.nodes[:, a], chosen)) for a in range(grid.s)],
        axis=1,
    )
    leakage = np.linalg.norm((omega_grid[:, None] - omega[None, :]) * chosen, axis=0)
    return ModeSet(vectors=chosen, omega=omega, momentum=momentum, omega_leakage=leakage,
                   t=np.asarray(t[:K], dtype=float), grid=grid)


class TruncatedFockSpace:
    """
    Occupation basis over K modes with at most N_max particles.

    States are enumerated grade by grade (particle number), each grade in
    lexicographic order of the sorted mode multiset, so spaces with larger
    N_max extend the basis of smaller ones as a prefix.
    """

    def __init__(self, modes: ModeSet, n_max: int, e_cap: Optional[float] = None, dim_limit: int = 20000):
        if n_max < 1:
            raise FockError(f"N_max must be at least 1, got {n_max}")
        self.modes = modes
        self.K = modes.K
        self.n_max = n_max
        self.e_cap = e_cap
        self.dim_limit = dim_limit

        dim = sum(comb(self.K + n - 1, n) for n in range(n_max + 1))
        if dim > dim_limit:
            raise FockError(f"Fock dimension {dim} exceeds the limit {dim_limit}")

        self._build_basis()
        self._build_annihilators()

    def _build_basis(self):
        states = []
        for n in range(self.n_max + 1):
            for multiset in itertools.combinations_with_replacement(range(self.K), n):
                occupation = [0] * self.K
                for mode in multiset:
                    occupation[mode] += 1
                states.append(tuple(occupation))
        self.basis = np.array(states, dtype=int).reshape(len(states), self.K)
        self.state_to_index = {state: i for i, state in enumerate(states)}
        self.particle_number = self.basis.sum(axis=1)
        self.energies = self.basis @ self.modes.omega
        self.momenta = self.basis @ self.modes.momentum

    def _build_annihilators(self):
        self.annihilators: List[sparse.csr_matrix] = []
        for mode in range(self.K):
            rows, cols, data = [], [], []
            for i, state in enumerate(self.basis):
                if state[mode] == 0:
                    continue
                lowered = list(state)
                lowered[mode] -= 1
                rows.append(self.state_to_index[tuple(lowered)])
                cols.append(i)
                data.append(np.sqrt(state[mode]))
            self.annihilators.append(
                sparse.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)
            )

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def vacuum(self) -> np.ndarray:
        vector = np.zeros(self.dim, dtype=complex)
        vector[0] = 1.0
        return vector

    def low_particle_bound(self) -> int:
        """Largest particle number reachable under the energy cap."""
        if self.e_cap is None:
            return max(self.n_max // 2, 0)
        lightest = float(np.min(self.modes.omega))
        return int(min(self.n_max, np.floor(self.e_cap / lightest + 1e-12)))

    def sector_size(self, n: int) -> int:
        """Number of basis states with at most n particles (a basis prefix)."""
        return int(np.count_nonzero(self.particle_number <= n))

    @cached_property
    def reference(self) -> "TruncatedFockSpace":
        """Same modes with two more particles allowed; used to measure truncation defects."""
        return TruncatedFockSpace(self.modes, self.n_max + 2, self.e_cap, max(self.dim_limit, 10 ** 6))


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the occupation basis."""

    matrix: np.ndarray = field(repr=False)
    space: TruncatedFockSpace = field(repr=False)
    hermitian: bool = False
    label: str = ""
    defects: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise FockError(f"{self.label}: non-finite entries")
        if self.hermitian:
            gap = float(np.max(np.abs(self.matrix - self.matrix.conj().T))) if self.matrix.size else 0.0
            if gap > HERMITIAN_TOL:
                raise FockError(f"{self.label}: flagged Hermitian but asymmetric by {gap:.3g}")

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.space, self.hermitian, f"{self.label}*")

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.matrix @ other.matrix, self.space, False, f"{self.label}{other.label}")

    def norm(self) -> float:
        return float(linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "hermitian": self.hermitian,
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
            "defects": dict(self.defects),
        }


def build_fock(modes: ModeSet, N_max: int, E_cap: Optional[float] = None,
               dim_limit: int = 20000) -> TruncatedFockSpace:
    """Truncated Fock space over `modes` with at most N_max particles."""
    space = TruncatedFockSpace(modes, N_max, E_cap, dim_limit)
    logger.debug("Fock space: K=%d N_max=%d dim=%d", space.K, N_max, space.dim)
    return space


def _mode_coefficients(space: TruncatedFockSpace, f: np.ndarray, in_modes: bool,
                       waive_leakage: bool) -> Tuple[np.ndarray, float]:
    f = np.asarray(f, dtype=complex)
    if in_modes:
        if f.shape != (space.K,):
            raise FockError(f"mode coordinates must have length {space.K}")
        return f, 0.0
    c, leakage = space.modes.coordinates(f)
    if leakage > LEAKAGE_TOL and not waive_leakage:
        raise FockError(f"vector leaks {leakage:.3g} of its norm outside the retained modes")
    return c, leakage


def annihilator(space: TruncatedFockSpace, c: np.ndarray) -> sparse.csr_matrix:
    # a(f) = sum_k conj(<e_k|f>) a_k
    total = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for k, ck in enumerate(c):
        if ck != 0:
            total = total + np.conj(ck) * space.annihilators[k]
    return total


def ladder(space: TruncatedFockSpace, f: np.ndarray, kind: str, in_modes: bool = False,
           waive_leakage: bool = False) -> FockOperator:
    """
    a(f) or a*(f).

    Args:
        space: truncated Fock space
        f: grid vector, or mode coordinates when in_modes is set
        kind: "annihilate" or "create"
        in_modes: f already holds the components <e_j|f>
        waive_leakage: accept grid vectors with weight outside the retained modes

    Returns:
        FockOperator with the leakage recorded under defects["leakage"]
    """
    if kind not in ("annihilate", "create"):
        raise FockError(f"kind must be 'annihilate' or 'create', got {kind}")
    c, leakage = _mode_coefficients(space, f, in_modes, waive_leakage)
    lowering = annihilator(space, c).toarray()
    if kind == "create":
        return FockOperator(lowering.conj().T, space, False, "a*", {"leakage": leakage})
    return FockOperator(lowering, space, False, "a", {"leakage": leakage})


def second_quantize(space: TruncatedFockSpace, g: np.ndarray) -> FockOperator:
    """dGamma(g) = sum_ij g_ij a_i* a_j for a Hermitian K x K mode matrix g."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (space.K, space.K):
        raise FockError(f"mode matrix must be {space.K}x{space.K}")
    total = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for i, j in zip(*np.nonzero(g)):
        total = total + g[i, j] * (space.annihilators[i].conj().T @ space.annihilators[j])
    matrix = total.toarray()
    hermitian = bool(np.allclose(g, g.conj().T, atol=HERMITIAN_TOL))
    return FockOperator(matrix, space, hermitian, "dGamma")


def compress(space: TruncatedFockSpace, grid_op: np.ndarray) -> np.ndarray:
    """Mode matrix of a grid operator, ready for second_quantize."""
    return space.modes.compress(grid_op)


def hamiltonian(space: TruncatedFockSpace) -> FockOperator:
    """H = dGamma(omega) with the diagonal mode energies."""
    return FockOperator(np.diag(space.energies).astype(complex), space, True, "H")


def number_operator(space: TruncatedFockSpace) -> FockOperator:
    return FockOperator(np.diag(space.particle_number).astype(complex), space, True, "N")


def _weyl_matrix(space: TruncatedFockSpace, c: np.ndarray) -> np.ndarray:
    lowering = annihilator(space, c)
    field_op = (lowering + lowering.conj().T).toarray()
    return linalg.expm(1j * field_op)


def weyl_defect(space: TruncatedFockSpace, c: np.ndarray, matrix: Optional[np.ndarray] = None) -> float:
    """||P_low (W_N - W_{N+2}) P_low|| for mode coordinates c."""
    if matrix is None:
        matrix = _weyl_matrix(space, c)
    size = space.sector_size(space.low_particle_bound())
    wider = _weyl_matrix(space.reference, c)
    return float(linalg.norm(matrix[:size, :size] - wider[:size, :size], 2))


def weyl(space: TruncatedFockSpace, f: np.ndarray, in_modes: bool = False, norm_cap: Optional[float] = None,
         measure_defect: bool = True, waive_leakage: bool = False) -> FockOperator:
    """
    W(f) = exp(i(a*(f) + a(f))) by scaling and squaring.

    The unitarity defect ||W*W - I|| is always recorded; the truncation defect
    against the N_max + 2 space is recorded when measure_defect is set.
    """
    c, leakage = _mode_coefficients(space, f, in_modes, waive_leakage)
    norm = float(np.linalg.norm(c))
    if norm_cap is not None and norm > norm_cap:
        raise FockError(f"||f|| = {norm:.3g} exceeds the Weyl norm cap {norm_cap}")
    matrix = _weyl_matrix(space, c)
    unitarity = float(linalg.norm(matrix.conj().T @ matrix - np.eye(space.dim), 2))
    if unitarity > UNITARITY_TOL:
        raise TruncationError(f"Weyl unitarity defect {unitarity:.3g}; N_max too small for ||f|| = {norm:.3g}")
    defects = {"unitarity": unitarity, "leakage": leakage}
    if measure_defect:
        defects["truncation"] = weyl_defect(space, c, matrix)
    return FockOperator(matrix, space, False, "W", defects)


def translate_op(space: TruncatedFockSpace, x: Sequence[float]) -> FockOperator:
    """
    U(x) = Gamma(exp(i(omega x0 - p.x))) on the retained modes.

    Each mode picks up the phase of its diagonal kinematics; the weight the
    one-particle translation moves off each e_j is recorded per mode.
    """
    x = np.asarray(x, dtype=float)
    modes = space.modes
    phases = np.exp(1j * (space.energies * x[0] - space.momenta @ x[1:]))
    u = translation_phase(modes.grid, x)[:, None] * modes.vectors
    overlap = np.einsum("ij,ij->j", modes.vectors.conj(), u)
    leakage = np.linalg.norm(u - modes.vectors * overlap[None, :], axis=0)
    worst = float(leakage.max()) if leakage.size else 0.0
    if worst > TRANSLATION_LEAKAGE_WARN:
        logger.warning("translation by %s moves %.3g of a mode off the retained span", x.tolist(), worst)
    defects = {f"leakage_{j}": float(value) for j, value in enumerate(leakage)}
    defects["leakage"] = worst
    return FockOperator(np.diag(phases), space, False, "U", defects)


@dataclass(frozen=True)
class EnergyMomentumBall:
    """Ball of radius r around (p0, p) in energy-momentum space."""

    center: Tuple[float, ...]
    radius: float

    def contains(self, energy: np.ndarray, momentum: np.ndarray) -> np.ndarray:
        center = np.asarray(self.center, dtype=float)
        offset = np.column_stack([energy - center[0], momentum - center[1:]])
        return np.linalg.norm(offset, axis=1) <= self.radius + 1e-12


Region = Union[float, EnergyMomentumBall]


def spectral_mask(space: TruncatedFockSpace, region: Region) -> np.ndarray:
    if isinstance(region, EnergyMomentumBall):
        return region.contains(space.energies, space.momenta)
    return space.energies <= float(region) + 1e-12


def spectral_project(space: TruncatedFockSpace, region: Region) -> FockOperator:
    """P_E for an energy cap, P_(p,r) for an EnergyMomentumBall."""
    mask = spectral_mask(space, region)
    if not mask.any():
        logger.warning("spectral region %s contains no occupation state", region)
    return FockOperator(np.diag(mask.astype(complex)), space, True, "P")


@dataclass(frozen=True)
class WeylSample:
    """Observable coefficient * W(vector) with a grid vector."""

    coefficient: complex
    vector: np.ndarray = field(repr=False)
    label: str = ""

    def translated(self, x: Sequence[float], grid: MomentumGrid) -> "WeylSample":
        return WeylSample(self.coefficient, translation_phase(grid, x) * self.vector, self.label)

    def vacuum_expectation(self) -> complex:
        return complex(self.coefficient * np.exp(-0.5 * np.vdot(self.vector, self.vector).real))

    @property
    def norm(self) -> float:
        return abs(self.coefficient)


def weyl_for_sample(space: TruncatedFockSpace, sample: WeylSample) -> Tuple[np.ndarray, complex]:
    """
    Matrix of W(Pg) on the retained modes and the scalar c exp(-||(1-P)g||^2/2).

    The part of g outside the retained modes acts on the vacuum of the
    complementary modes, which is exact for functionals supported on the
    retained modes.
    """
    c = space.modes.vectors.conj().T @ sample.vector
    outside = max(float(np.vdot(sample.vector, sample.vector).real - np.vdot(c, c).real), 0.0)
    return _weyl_matrix(space, c), complex(sample.coefficient * np.exp(-0.5 * outside))


class StateFunctional:
    """
    Normal functional rho = sum_k w_k |v_k><v_k| on a truncated Fock space.

    Hermitian functionals have real weights; the imaginary part of a general
    functional is carried by imaginary weights.
    """

    def __init__(self, space: TruncatedFockSpace, vectors: np.ndarray, weights: np.ndarray,
                 energy_support: Optional[Region] = None, vacuum_subtracted: bool = False):
        vectors = np.asarray(vectors, dtype=complex).reshape(space.dim, -1)
        weights = np.asarray(weights, dtype=complex).reshape(-1)
        if vectors.shape[1] != weights.shape[0]:
            raise FockError("one weight per vector is required")
        self.space = space
        self.vectors = vectors
        self.weights = weights
        self.energy_support = energy_support
        self.vacuum_subtracted = vacuum_subtracted

    @classmethod
    def pure(cls, space: TruncatedFockSpace, psi: np.ndarray, **kwargs) -> "StateFunctional":
        psi = np.asarray(psi, dtype=complex)
        return cls(space, psi[:, None] / np.linalg.norm(psi), np.ones(1), **kwargs)

    @classmethod
    def vacuum_state(cls, space: TruncatedFockSpace) -> "StateFunctional":
        return cls.pure(space, space.vacuum(), energy_support=0.0)

    @classmethod
    def zero(cls, space: TruncatedFockSpace, **kwargs) -> "StateFunctional":
        return cls(space, np.zeros((space.dim, 0)), np.zeros(0), **kwargs)

    @classmethod
    def from_rho(cls, space: TruncatedFockSpace, rho: np.ndarray, **kwargs) -> "StateFunctional":
        """Factor a dense density matrix through its Hermitian and anti-Hermitian parts."""
        rho = np.asarray(rho, dtype=complex)
        vectors, weights = [], []
        for part, unit in (((rho + rho.conj().T) / 2, 1.0), ((rho - rho.conj().T) / 2j, 1j)):
            values, basis = linalg.eigh(part)
            keep = np.abs(values) > ZERO_WEIGHT
            vectors.append(basis[:, keep])
            weights.append(unit * values[keep])
        return cls(space, np.hstack(vectors), np.concatenate(weights), **kwargs)

    @property
    def rank(self) -> int:
        return self.weights.shape[0]

    @property
    def rho(self) -> np.ndarray:
        return (self.vectors * self.weights) @ self.vectors.conj().T

    def trace(self) -> complex:
        return complex(np.sum(self.weights * np.sum(np.abs(self.vectors) ** 2, axis=0)))

    def trace_norm(self) -> float:
        if self.rank == 0:
            return 0.0
        q, r = linalg.qr(self.vectors, mode="economic")
        core = (r * self.weights) @ r.conj().T
        return float(np.sum(linalg.svdvals(core)))

    def evaluate(self, A: Union[FockOperator, np.ndarray]) -> complex:
        """phi(A) = tr(rho A)."""
        matrix = A.matrix if isinstance(A, FockOperator) else np.asarray(A)
        return complex(np.sum(self.weights * np.einsum("ij,ij->j", self.vectors.conj(), matrix @ self.vectors)))

    def evaluate_weyl(self, sample: WeylSample, prepared: Optional[Tuple[np.ndarray, complex]] = None) -> complex:
        """phi(c W(g)); `prepared` reuses the output of weyl_for_sample across many functionals."""
        if self.rank == 0:
            return 0j
        matrix, factor = prepared if prepared is not None else weyl_for_sample(self.space, sample)
        return complex(factor * self.evaluate(matrix))

    def scaled(self, factor: complex) -> "StateFunctional":
        return StateFunctional(self.space, self.vectors, self.weights * factor, self.energy_support,
                               self.vacuum_subtracted)

    def combine(self, other: "StateFunctional", factor: complex = 1.0) -> "StateFunctional":
        """self + factor * other."""
        return StateFunctional(
            self.space,
            np.hstack([self.vectors, other.vectors]),
            np.concatenate([self.weights, factor * other.weights]),
            self.energy_support,
            self.vacuum_subtracted and other.vacuum_subtracted,
        )

    def subtract_vacuum(self) -> "StateFunctional":
        """phi - phi(I) omega_0."""
        vacuum = self.space.vacuum()[:, None]
        return StateFunctional(
            self.space,
            np.hstack([self.vectors, vacuum]),
            np.concatenate([self.weights, [-self.trace()]]),
            self.energy_support,
            True,
        )

    def normalized(self) -> "StateFunctional":
        norm = self.trace_norm()
        return self.scaled(1.0 / norm) if norm > ZERO_WEIGHT else self

    def transformed(self, U: FockOperator) -> "StateFunctional":
        """rho -> U rho U*."""
        return StateFunctional(self.space, U.matrix @ self.vectors, self.weights, self.energy_support,
                               self.vacuum_subtracted)


class JordanParts(NamedTuple):
    re_plus: StateFunctional
    re_minus: StateFunctional
    im_plus: StateFunctional
    im_minus: StateFunctional

    def reassemble(self) -> StateFunctional:
        total = self.re_plus.combine(self.re_minus, -1.0)
        total = total.combine(self.im_plus, 1j)
        return total.combine(self.im_minus, -1j)


def jordan_decompose(phi: StateFunctional) -> JordanParts:
    """phi = re_plus - re_minus + i(im_plus - im_minus) with orthogonally supported positive parts."""
    rho = phi.rho
    parts = []
    for hermitian in ((rho + rho.conj().T) / 2, (rho - rho.conj().T) / 2j):
        values, basis = linalg.eigh(hermitian)
        for sign in (1.0, -1.0):
            keep = sign * values > ZERO_WEIGHT
            parts.append(StateFunctional(phi.space, basis[:, keep], sign * values[keep], phi.energy_support))
    return JordanParts(*parts)


@dataclass
class OneParticleState:
    """
    Functional rho + vacuum_weight * omega_0 with rho a one-particle density on the grid.

    Weyl expectations are exact: <h|W(g) h> = exp(-||g||^2/2)(||h||^2 - |<g|h>|^2).
    """

    vectors: np.ndarray = field(repr=False)
    weights: np.ndarray
    grid: MomentumGrid = field(repr=False)
    vacuum_weight: complex = 0.0
    energy_support: Optional[Region] = None

    @classmethod
    def packet(cls, grid: MomentumGrid, h: np.ndarray, subtract_vacuum: bool = False,
               energy_support: Optional[Region] = None) -> "OneParticleState":
        h = np.asarray(h, dtype=complex)
        h = h / np.linalg.norm(h)
        return cls(h[:, None], np.ones(1), grid, -1.0 if subtract_vacuum else 0.0, energy_support)

    @property
    def vacuum_subtracted(self) -> bool:
        return abs(self.trace()) < 1e-10

    def density_trace(self) -> complex:
        return complex(np.sum(self.weights * np.sum(np.abs(self.vectors) ** 2, axis=0)))

    def trace(self) -> complex:
        return self.density_trace() + self.vacuum_weight

    def trace_norm(self) -> float:
        if self.weights.size == 0:
            return abs(self.vacuum_weight)
        q, r = linalg.qr(self.vectors, mode="economic")
        core = (r * self.weights) @ r.conj().T
        return float(np.sum(linalg.svdvals(core)) + abs(self.vacuum_weight))

    def evaluate_weyl(self, sample: WeylSample) -> complex:
        g = sample.vector
        overlaps = g.conj() @ self.vectors
        quadratic = np.sum(self.weights * np.abs(overlaps) ** 2)
        damping = np.exp(-0.5 * np.vdot(g, g).real)
        return complex(sample.coefficient * damping * (self.density_trace() - quadratic + self.vacuum_weight))

    def subtract_vacuum(self) -> "OneParticleState":
        return OneParticleState(self.vectors, self.weights, self.grid, -self.density_trace(), self.energy_support)

    def normalized(self) -> "OneParticleState":
        norm = self.trace_norm()
        if norm <= ZERO_WEIGHT:
            return self
        return OneParticleState(self.vectors, self.weights / norm, self.grid, self.vacuum_weight / norm,
                                self.energy_support)


Functional = Union[StateFunctional, OneParticleState]


def evaluate_sample(phi: Functional, sample: WeylSample, x: Optional[Sequence[float]] = None,
                    grid: Optional[MomentumGrid] = None) -> complex:
    """(alpha*_x phi)(A) = phi(alpha_x A) for a Weyl sample A, exact on the grid."""
    if x is not None:
        grid = grid if grid is not None else (phi.grid if isinstance(phi, OneParticleState) else phi.space.modes.grid)
        sample = sample.translated(x, grid)
    return phi.evaluate_weyl(sample)


def _haar_vector(rng: np.random.Generator, mask: np.ndarray) -> np.ndarray:
    vector = np.zeros(mask.shape[0], dtype=complex)
    count = int(mask.sum())
    vector[mask] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return vector / np.linalg.norm(vector)


def functional_net(space: TruncatedFockSpace, region: Region, size: int, seed: int) -> List[StateFunctional]:
    """
    Seeded sample of the unit ball of vacuum-subtracted functionals supported in a spectral region.

    Pure Haar-random states of the region plus midpoints of consecutive pairs,
    each vacuum-subtracted and normalised to trace norm one. When the region
    holds only the vacuum, the net is the zero functional.
    """
    if size < 1:
        raise FockError("net size must be at least 1")
    mask = spectral_mask(space, region)
    if not mask.any():
        raise FockError(f"spectral region {region} is empty")
    if np.count_nonzero(mask) == 1 and mask[0]:
        logger.info("spectral region holds only the vacuum; the net is the zero functional")
        return [StateFunctional.zero(space, energy_support=region, vacuum_subtracted=True)]
    rng = np.random.default_rng(seed)
    pure_count = max(1, (size + 1) // 2)
    pures = [StateFunctional.pure(space, _haar_vector(rng, mask), energy_support=region)
             for _ in range(pure_count)]
    members: List[StateFunctional] = []
    for k, state in enumerate(pures):
        members.append(state)
        if k + 1 < len(pures) and len(members) < size:
            members.append(state.scaled(0.5).combine(pures[k + 1], 0.5))
    members = members[:size]
    return [member.subtract_vacuum().normalized() for member in members]


def local_observables(family: TestFunctionFamily, count: int, seed: int, norm: float) -> List[WeylSample]:
    """
    Weyl generators W(f_i) with f_i = sum a_k omega^(-1/2) f~_k + i sum b_k omega^(1/2) f~_k
    (real a, b) scaled to ||f_i|| = norm, plus products of consecutive pairs.
    """
    grid = family.grid
    rng = np.random.default_rng(seed)
    omega = grid.omega[:, None]
    plus = family.members / np.sqrt(omega)
    minus = family.members * np.sqrt(omega)
    generators = []
    for i in range(count):
        a = rng.standard_normal(family.count)
        b = rng.standard_normal(family.count)
        f = plus @ a + 1j * (minus @ b)
        generators.append(norm * f / np.linalg.norm(f))
    samples = [WeylSample(1.0, f, f"W(f{i})") for i, f in enumerate(generators)]
    for i in range(count - 1):
        f, g = generators[i], generators[i + 1]
        # W(f)W(g) = exp(-i Im<f|g>) W(f + g)
        phase = np.exp(-1j * np.vdot(f, g).imag)
        samples.append(WeylSample(complex(phase), f + g, f"W(f{i})W(f{i + 1})"))
    return samples
