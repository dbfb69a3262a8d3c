"""
Rank-one expansion of the energy-damped restriction map: multi-indices, the
operators B_mu, the functionals S_{mu nu} and tau_{mu nu}, p-norm sums and
sampled N-point norms.
"""
import itertools
import logging
from dataclasses import dataclass
from math import factorial, floor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse

from core.fock import (
    FockOperator,
    Functional,
    OneParticleState,
    StateFunctional,
    TruncatedFockSpace,
    WeylSample,
    annihilator,
    evaluate_sample,
    weyl_for_sample,
)
from core.grid import SubspaceBasis, translation_phase

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class MultiIndexPair:
    """mu = (mu+, mu-), one entry per retained mode in each half."""

    mu_plus: Tuple[int, ...]
    mu_minus: Tuple[int, ...]

    @property
    def order(self) -> int:
        return sum(self.mu_plus) + sum(self.mu_minus)

    @property
    def factorial(self) -> int:
        result = 1
        for n in self.mu_plus + self.mu_minus:
            result *= factorial(n)
        return result

    def __add__(self, other: "MultiIndexPair") -> "MultiIndexPair":
        return MultiIndexPair(
            tuple(a + b for a, b in zip(self.mu_plus, other.mu_plus)),
            tuple(a + b for a, b in zip(self.mu_minus, other.mu_minus)),
        )

    def power(self, t: np.ndarray) -> float:
        """t^mu = prod t_j^(mu+_j + mu-_j)."""
        exponents = np.array(self.mu_plus) + np.array(self.mu_minus)
        return float(np.prod(np.asarray(t[:len(exponents)], dtype=float) ** exponents))

    def label(self) -> str:
        return f"{''.join(map(str, self.mu_plus))}|{''.join(map(str, self.mu_minus))}"


def enumerate_multi_indices(K: int, M_E: float) -> List[MultiIndexPair]:
    """All mu with |mu| <= floor(M_E), graded, lexicographic within a grade."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    top = floor(M_E) if M_E >= 0 else -1
    indices = []
    for n in range(top + 1):
        for slots in itertools.combinations_with_replacement(range(2 * K), n):
            counts = [0] * (2 * K)
            for slot in slots:
                counts[slot] += 1
            indices.append(MultiIndexPair(tuple(counts[:K]), tuple(counts[K:])))
    return indices


def enumerate_index_pairs(K: int, M_E: float) -> List[Tuple[MultiIndexPair, MultiIndexPair]]:
    """Pairs (mu, nu) with |mu|, |nu| <= M_E; the (0,0) pair comes first."""
    indices = enumerate_multi_indices(K, M_E)
    return [(mu, nu) for mu in indices for nu in indices]


def phi_norm_bound(mu: MultiIndexPair) -> float:
    """Norm bound 4^|mu| (mu!)^(1/2) of the functional phi_mu on the local algebra."""
    return 4.0 ** mu.order * np.sqrt(mu.factorial)


def tau_norm_bound(mu: MultiIndexPair, nu: MultiIndexPair) -> float:
    """4^(|mu|+|nu|) / (mu! nu!)^(1/2) * ((mu+nu)! / (mu! nu!))^(1/2)."""
    both = mu.factorial * nu.factorial
    return 4.0 ** (mu.order + nu.order) / np.sqrt(both) * np.sqrt((mu + nu).factorial / both)


def tau_phase(mu: MultiIndexPair, nu: MultiIndexPair) -> complex:
    return 1j ** ((sum(mu.mu_plus) + sum(nu.mu_plus) + 2 * sum(mu.mu_minus)) % 4)


class NuclearExpansion:
    """
    The expansion phi(W(f)) = sum tau_{mu nu}(W(f)) S_{mu nu}(phi) on a truncated Fock space.

    B_mu is the product of a(P L+ e_j)^(mu+_j) and a(P L- e_j)^(mu-_j), P the
    projection on the retained modes, taken mode-ascending with the L+ factors first.
    """

    def __init__(self, space: TruncatedFockSpace, plus: SubspaceBasis, minus: SubspaceBasis, M_E: float):
        self.space = space
        self.modes = space.modes
        self.M_E = M_E
        E = self.modes.vectors
        # P_{L+-} e_j on the grid, and their retained-mode coordinates
        self.plus_vectors = plus.project(E)
        self.minus_vectors = minus.project(E)
        self.u_plus = np.real(E.conj().T @ self.plus_vectors)
        self.u_minus = np.real(E.conj().T @ self.minus_vectors)
        self.indices = enumerate_multi_indices(self.modes.K, M_E)
        self._factors: Optional[List[sparse.csr_matrix]] = None
        self._dense: Dict[MultiIndexPair, np.ndarray] = {}

    def _factor_coordinates(self, x: Optional[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
        if x is None:
            return self.u_plus.astype(complex), self.u_minus.astype(complex)
        phase = translation_phase(self.modes.grid, x)[:, None]
        E = self.modes.vectors
        return E.conj().T @ (phase * self.plus_vectors), E.conj().T @ (phase * self.minus_vectors)

    def factors(self, x: Optional[Sequence[float]] = None) -> List[sparse.csr_matrix]:
        """a(P u_x L+ e_j) for every j, then a(P u_x L- e_j); untranslated factors are cached."""
        if x is None and self._factors is not None:
            return self._factors
        plus, minus = self._factor_coordinates(x)
        result = [annihilator(self.space, half[:, j]) for half in (plus, minus) for j in range(self.modes.K)]
        if x is None:
            self._factors = result
        return result

    def apply_B(self, index: MultiIndexPair, vectors: np.ndarray,
                factors: Optional[List[sparse.csr_matrix]] = None) -> np.ndarray:
        """B_mu applied to the columns of `vectors`; the factors commute."""
        factors = factors if factors is not None else self.factors()
        out = np.asarray(vectors, dtype=complex)
        for slot, count in enumerate(index.mu_plus + index.mu_minus):
            for _ in range(count):
                out = factors[slot] @ out
        return out

    def B_matrix(self, index: MultiIndexPair, x: Optional[Sequence[float]] = None) -> np.ndarray:
        """Dense B_mu, or its translate with factors a(P u_x L+- e_j) when x is given."""
        if x is None and index in self._dense:
            return self._dense[index]
        matrix = self.apply_B(index, np.eye(self.space.dim, dtype=complex), self.factors(x))
        if x is None:
            self._dense[index] = matrix
        return matrix

    def coordinates(self, f: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Real x+, x- with P f = sum x+_j P L+ e_j + i sum x-_j P L- e_j.

        Returns:
            (x_plus, x_minus, residual) with the least-squares residual norm
        """
        c = self.modes.vectors.conj().T @ f
        x_plus, *_ = linalg.lstsq(self.u_plus, c.real)
        x_minus, *_ = linalg.lstsq(self.u_minus, c.imag)
        residual = float(np.hypot(np.linalg.norm(self.u_plus @ x_plus - c.real),
                                  np.linalg.norm(self.u_minus @ x_minus - c.imag)))
        return x_plus, x_minus, residual

    def phi_mu(self, mu: MultiIndexPair, f: np.ndarray) -> complex:
        """phi_mu(W(f)) = exp(-||f||^2/2) x+^mu+ x-^mu-."""
        x_plus, x_minus, _ = self.coordinates(f)
        monomial = np.prod(x_plus ** np.array(mu.mu_plus)) * np.prod(x_minus ** np.array(mu.mu_minus))
        return complex(np.exp(-0.5 * np.vdot(f, f).real) * monomial)


def build_B(expansion: NuclearExpansion, indices: MultiIndexPair,
            x: Optional[Sequence[float]] = None) -> FockOperator:
    """B_mu as a FockOperator."""
    return FockOperator(expansion.B_matrix(indices, x), expansion.space, False, f"B[{indices.label()}]")


def eval_S(expansion: NuclearExpansion, indices: Tuple[MultiIndexPair, MultiIndexPair],
           phi: StateFunctional, x: Optional[Sequence[float]] = None) -> complex:
    """S_{mu nu}(phi) = phi(B_mu* B_nu) = sum_k w_k <B_mu v_k|B_nu v_k>; translated when x is given."""
    mu, nu = indices
    if phi.rank == 0:
        return 0j
    factors = expansion.factors(x)
    left = expansion.apply_B(mu, phi.vectors, factors)
    right = expansion.apply_B(nu, phi.vectors, factors)
    return complex(np.sum(phi.weights * np.einsum("ij,ij->j", left.conj(), right)))


def S_matrix(expansion: NuclearExpansion, phi: StateFunctional, x: Optional[Sequence[float]] = None,
             factors: Optional[List[sparse.csr_matrix]] = None) -> np.ndarray:
    """All S_{mu nu}(phi) over expansion.indices at once, rows mu and columns nu."""
    n = len(expansion.indices)
    if phi.rank == 0:
        return np.zeros((n, n), dtype=complex)
    factors = factors if factors is not None else expansion.factors(x)
    images = np.stack([expansion.apply_B(mu, phi.vectors, factors) for mu in expansion.indices])
    return np.einsum("aik,bik,k->ab", images.conj(), images, phi.weights)


def eval_tau_on_weyl(expansion: NuclearExpansion, indices: Tuple[MultiIndexPair, MultiIndexPair],
                     f: np.ndarray) -> complex:
    """tau_{mu nu}(W(f)) = i^(|mu+|+|nu+|+2|mu-|) / (mu! nu!) phi_{mu+nu}(W(f))."""
    mu, nu = indices
    return complex(tau_phase(mu, nu) / (mu.factorial * nu.factorial) * expansion.phi_mu(mu + nu, f))


def tau_matrix(expansion: NuclearExpansion, f: np.ndarray) -> np.ndarray:
    """All tau_{mu nu}(W(f)) over expansion.indices, rows mu and columns nu."""
    x_plus, x_minus, _ = expansion.coordinates(f)
    damping = np.exp(-0.5 * np.vdot(f, f).real)
    values = np.empty((len(expansion.indices),) * 2, dtype=complex)
    for a, mu in enumerate(expansion.indices):
        for b, nu in enumerate(expansion.indices):
            both = mu + nu
            monomial = np.prod(x_plus ** np.array(both.mu_plus)) * np.prod(x_minus ** np.array(both.mu_minus))
            values[a, b] = tau_phase(mu, nu) / (mu.factorial * nu.factorial) * damping * monomial
    return values


def expansion_terms(expansion: NuclearExpansion, phi: StateFunctional, f: np.ndarray) -> complex:
    """sum over retained pairs of tau_{mu nu}(W(f)) S_{mu nu}(phi)."""
    x_plus, x_minus, residual = expansion.coordinates(f)
    if residual > 1e-8 * max(np.linalg.norm(f), 1.0):
        logger.warning("f is resolved in L only up to a residual %.3g", residual)
    damping = np.exp(-0.5 * np.vdot(f, f).real)
    S = S_matrix(expansion, phi)
    coefficients = np.array([
        np.prod(x_plus ** np.array(mu.mu_plus)) * np.prod(x_minus ** np.array(mu.mu_minus)) / mu.factorial
        for mu in expansion.indices
    ])
    phases = np.array([[tau_phase(mu, nu) for nu in expansion.indices] for mu in expansion.indices])
    total = np.sum(phases * np.outer(coefficients, coefficients) * S)
    return complex(damping * total)


def expansion_residual(expansion: NuclearExpansion, phi: StateFunctional, f: np.ndarray) -> float:
    """|phi(W(f)) - sum tau_{mu nu}(W(f)) S_{mu nu}(phi)|."""
    direct = phi.evaluate_weyl(WeylSample(1.0, f))
    return float(abs(direct - expansion_terms(expansion, phi, f)))


def S_norm_bound(mu: MultiIndexPair, nu: MultiIndexPair, t: np.ndarray, M_E: float) -> float:
    """M_E^((|mu|+|nu|)/2) t^mu t^nu."""
    return M_E ** ((mu.order + nu.order) / 2) * mu.power(t) * nu.power(t)


def pnorm_sum(p: float, t: Sequence[float], M_E: float) -> Tuple[float, float]:
    """
    Direct sum of (M_E^((|mu|+|nu|)/2) t^mu t^nu)^p over the retained pairs without
    (0,0), and the closed bound M_E^(p M_E) (sum_k ||T^p||_1^k)^4.

    Returns:
        (direct, bound)
    """
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    t = np.asarray(t, dtype=float)
    indices = enumerate_multi_indices(len(t), M_E) if len(t) else []
    if not indices:
        direct = 0.0
    else:
        weights = np.array([(M_E ** (mu.order / 2) * mu.power(t)) ** p for mu in indices])
        direct = float(weights.sum() ** 2 - weights[0] ** 2)
    trace = float(np.sum(t[t > 0] ** p))
    top = floor(M_E) if M_E >= 0 else -1
    geometric = sum(trace ** k for k in range(top + 1))
    bound = float(M_E ** (p * M_E) * geometric ** 4) if M_E > 0 else 0.0
    return direct, bound


def nuclear_pnorm_bound(p: float, t: Sequence[float], M_E: float) -> float:
    """Single-region bound 2^(5 M_E) (M_E^(p M_E) (sum_k ||T^p||_1^k)^4)^(1/p)."""
    _, bound = pnorm_sum(p, t, M_E)
    return float(2.0 ** (5 * M_E) * bound ** (1.0 / p))


def translated_values(net: Sequence[Functional], samples: Sequence[WeylSample],
                      translations: Sequence[Sequence[float]]) -> np.ndarray:
    """
    phi(alpha_{x_k} A_o) / ||A_o|| for every translation, functional and observable.

    Returns:
        complex array of shape (len(translations), len(net), len(samples))
    """
    if not net:
        raise ValueError("empty functional net")
    if not samples:
        raise ValueError("empty observable family")
    values = np.zeros((len(translations), len(net), len(samples)), dtype=complex)
    fock = [phi for phi in net if isinstance(phi, StateFunctional)]
    space = fock[0].space if fock else None
    for k, x in enumerate(translations):
        for o, sample in enumerate(samples):
            prepared = None
            if space is not None:
                prepared = weyl_for_sample(space, sample.translated(x, space.modes.grid))
            for i, phi in enumerate(net):
                if isinstance(phi, StateFunctional):
                    value = phi.evaluate_weyl(sample, prepared)
                else:
                    value = evaluate_sample(phi, sample, x)
                values[k, i, o] = value / sample.norm
    return values


def restricted_norms(net: Sequence[Functional], samples: Sequence[WeylSample],
                     translations: Sequence[Sequence[float]]) -> np.ndarray:
    """
    Sampled ||Pi(alpha*_x phi)||: max over the observable family of |phi(alpha_x A)| / ||A||.

    Returns:
        array of shape (len(translations), len(net))
    """
    return np.max(np.abs(translated_values(net, samples, translations)), axis=2)


def npoint_norm(net: Sequence[Functional], samples: Sequence[WeylSample],
                translations: Sequence[Sequence[float]]) -> float:
    """Sampled ||Pi||_{x_1..x_N} = sup_phi (sum_k ||Pi(alpha*_{x_k} phi)||^2)^(1/2), a lower bound."""
    norms = restricted_norms(net, samples, translations)
    return float(np.sqrt(np.max(np.sum(norms ** 2, axis=0))))


def sampled_S_norms(expansion: NuclearExpansion, net: Sequence[StateFunctional],
                    pairs: Sequence[Tuple[MultiIndexPair, MultiIndexPair]]) -> np.ndarray:
    """max over the net of |S_{mu nu}(phi)| for each pair."""
    position = {mu: a for a, mu in enumerate(expansion.indices)}
    worst = np.zeros((len(expansion.indices),) * 2)
    for phi in net:
        worst = np.maximum(worst, np.abs(S_matrix(expansion, phi)))
    return np.array([worst[position[mu], position[nu]] for mu, nu in pairs])


def expansion_table(expansion: NuclearExpansion, net: Sequence[StateFunctional],
                    t: np.ndarray) -> List[Dict[str, object]]:
    """Rows (mu, nu, sampled ||S||, ||S|| bound, tau bound) over the retained pairs."""
    pairs = enumerate_index_pairs(expansion.modes.K, expansion.M_E)
    sampled = sampled_S_norms(expansion, net, pairs)
    rows = []
    for (mu, nu), value in zip(pairs, sampled):
        rows.append({
            "mu": mu.label(),
            "nu": nu.label(),
            "S_sampled": float(value),
            "S_bound": S_norm_bound(mu, nu, t, expansion.M_E),
            "tau_bound": tau_norm_bound(mu, nu),
        })
    return rows


def translated_S_norms(expansion: NuclearExpansion, net: Sequence[StateFunctional],
                       translations: Sequence[Sequence[float]]) -> np.ndarray:
    """
    Sampled ||S_{mu nu}||^2_{x_1..x_N} = max over the net of sum_k |S_{mu nu}(alpha*_{x_k} phi)|^2.

    Returns:
        array indexed like expansion.indices on both axes
    """
    n = len(expansion.indices)
    per_point = [expansion.factors(x) for x in translations]
    worst = np.zeros((n, n))
    for phi in net:
        total = np.zeros((n, n))
        for factors in per_point:
            total += np.abs(S_matrix(expansion, phi, factors=factors)) ** 2
        worst = np.maximum(worst, total)
    return worst
