"""
Epsilon-content of finite map samples: greedy packing, the rank-one key
lemma bound, integer lattice counts and the product bound over a nuclear
decomposition.
"""
import logging
from dataclasses import dataclass, field
from functools import cache
from math import comb, isqrt
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import special

from core.expansion import translated_values
from core.fock import Functional, WeylSample
from core.reports import InequalityReport

logger = logging.getLogger(__name__)

LOG_REPRESENTABLE = 700.0
LATTICE_MAX_DIMS = 8
LATTICE_MAX_M = 6
ADDITIVITY_MAX_N = 8
ADDITIVITY_MAX_CE = 6
ROUNDING_LATTICE_BUDGET = 10 ** 6
ZETA_TERMS = 2_000_000


class LogBound(NamedTuple):
    """A bound kept as its natural log, with the raw value when it fits a float."""

    log: float
    value: Optional[float]


def _log_bound(log_value: float) -> LogBound:
    return LogBound(float(log_value), float(np.exp(log_value)) if log_value < LOG_REPRESENTABLE else None)


@dataclass
class FiniteMapSample:
    """
    Images of a functional net under a map into C^N_sup.

    outputs[i, k, o] is the k-th block of the image of input i, sampled on
    observable o; a block norm is the max over observables.
    """

    inputs: List[Functional] = field(repr=False)
    outputs: np.ndarray = field(repr=False)
    translations: List[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.outputs = np.asarray(self.outputs, dtype=complex)
        if self.outputs.ndim != 3:
            raise ValueError("outputs must have shape (inputs, blocks, observables)")
        if self.outputs.shape[0] != len(self.inputs):
            raise ValueError("one output per input is required")
        if not np.all(np.isfinite(self.outputs)):
            raise ValueError("outputs must be finite")

    @property
    def blocks(self) -> int:
        return self.outputs.shape[1]

    def block_norms(self) -> np.ndarray:
        return np.max(np.abs(self.outputs), axis=2) if self.outputs.shape[2] else np.zeros(self.outputs.shape[:2])

    def sup_norms(self) -> np.ndarray:
        """Norm of every output in C^N_sup."""
        norms = self.block_norms()
        return norms.max(axis=1) if norms.shape[1] else np.zeros(norms.shape[0])

    @property
    def norm_2(self) -> float:
        """Sampled ||Theta||_2 = max over inputs of (sum_k ||block_k||^2)^(1/2)."""
        if self.outputs.shape[0] == 0:
            return 0.0
        return float(np.sqrt(np.max(np.sum(self.block_norms() ** 2, axis=1))))


def build_theta(net: Sequence[Functional], samples: Sequence[WeylSample],
                translations: Sequence[Sequence[float]]) -> FiniteMapSample:
    """Theta(phi) = (Pi(alpha*_{x_1} phi), ..., Pi(alpha*_{x_N} phi)) on the net."""
    values = translated_values(net, samples, translations)
    return FiniteMapSample(
        inputs=list(net),
        outputs=np.transpose(values, (1, 0, 2)),
        translations=[np.asarray(x, dtype=float) for x in translations],
    )


def epsilon_content_bruteforce(sample: FiniteMapSample, epsilon: float) -> int:
    """
    Greedy first-fit packing in net order: a lower bound on the epsilon-content.

    An output joins the packing when its sup-block distance to every chosen
    output exceeds epsilon.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if sample.outputs.shape[0] == 0:
        raise ValueError("empty net")
    flat = sample.outputs.reshape(sample.outputs.shape[0], -1)
    chosen = flat[:1]
    for row in flat[1:]:
        distance = np.max(np.abs(chosen - row), axis=1) if flat.shape[1] else np.zeros(len(chosen))
        if np.all(distance > epsilon):
            chosen = np.vstack([chosen, row])
    return int(chosen.shape[0])


def key_lemma_bound(norm_2: float, epsilon: float, N: int, floor_exponent: bool = False) -> LogBound:
    """
    (4eN)^(2^7 pi ||Theta||_2^2 / eps^2), or (4eN)^(8 pi M) with M = floor(16 ||Theta||_2^2 / eps^2).
    """
    if epsilon <= 0 or N < 1 or norm_2 < 0:
        raise ValueError("epsilon and N must be positive and the norm non-negative")
    base = np.log(4 * np.e * N)
    if floor_exponent:
        M = int(np.floor(16 * norm_2 ** 2 / epsilon ** 2))
        return _log_bound(8 * np.pi * M * base)
    return _log_bound(2 ** 7 * np.pi * norm_2 ** 2 / epsilon ** 2 * base)


@cache
def lattice_count(bound: int, dims: int) -> int:
    """Number of points of Z^dims with squared norm at most bound."""
    if bound < 0:
        return 0
    if dims == 0 or bound == 0:
        return 1
    total = lattice_count(bound, dims - 1)
    for i in range(1, isqrt(bound) + 1):
        total += 2 * lattice_count(bound - i * i, dims - 1)
    return total


def ball_volume(M: int, R: float) -> float:
    """log V_M(R) = (M/2) log pi - log Gamma(M/2 + 1) + M log R."""
    if M == 0:
        return 0.0
    return float(0.5 * M * np.log(np.pi) - special.gammaln(0.5 * M + 1) + M * np.log(R))


def lattice_count_check(M: int, N: int) -> InequalityReport:
    """
    #{n in Z^(2N): |n|^2 <= M} <= C(2N, M) 2^M V_M(2 sqrt M) <= (4Ne)^(8 pi M),
    with V_M(R) <= exp(2 pi R^2) recorded as a condition.
    """
    if not 0 <= M <= 2 * N:
        raise ValueError(f"need 0 <= M <= 2N, got M={M}, N={N}")
    if 2 * N > LATTICE_MAX_DIMS or M > LATTICE_MAX_M:
        raise ValueError(f"enumeration cap exceeded: 2N <= {LATTICE_MAX_DIMS} and M <= {LATTICE_MAX_M}")
    count = lattice_count(M, 2 * N)
    radius = 2 * np.sqrt(M)
    log_volume = ball_volume(M, radius) if M else 0.0
    log_middle = float(np.log(comb(2 * N, M)) + M * np.log(2) + log_volume)
    log_outer = float(8 * np.pi * M * np.log(4 * N * np.e))
    return InequalityReport(
        name=f"lattice_count[M={M},N={N}]",
        lhs=float(count),
        rhs=float(np.exp(log_middle)),
        tolerance=1e-9 * float(np.exp(log_middle)),
        parameters={"M": M, "N": N, "count": count, "log_middle": log_middle, "log_outer": log_outer,
                    "log_volume": log_volume},
        conditions={
            "middle_below_outer": log_middle <= log_outer + 1e-12,
            "volume_below_gaussian": log_volume <= 2 * np.pi * radius ** 2 + 1e-12,
        },
    )


@cache
def _positive_tuples(slots: int, budget: int) -> int:
    # tuples of positive integers of length `slots` with sum <= budget
    if slots == 0:
        return 1 if budget >= 0 else 0
    return sum(_positive_tuples(slots - 1, budget - n) for n in range(1, budget - slots + 2))


def additivity_count(N: int, cE: int) -> int:
    """#{(n_1..n_N) in positive integers: sum n_i <= N + cE}."""
    if N < 1 or cE < 0:
        raise ValueError(f"need N >= 1 and cE >= 0, got N={N}, cE={cE}")
    return _positive_tuples(N, N + cE)


def additivity_count_check(N: int, cE: int) -> InequalityReport:
    """Additivity count against (N+1)^cE; the stars-and-bars value is recorded as a condition."""
    if N > ADDITIVITY_MAX_N or cE > ADDITIVITY_MAX_CE:
        raise ValueError(f"enumeration cap exceeded: N <= {ADDITIVITY_MAX_N} and cE <= {ADDITIVITY_MAX_CE}")
    count = additivity_count(N, cE)
    bound = (N + 1) ** cE
    return InequalityReport(
        name=f"additivity[N={N},cE={cE}]",
        lhs=float(count),
        rhs=float(bound),
        parameters={"N": N, "cE": cE, "count": count, "bound": bound},
        conditions={"stars_and_bars": count == comb(N + cE, N)},
    )


class ZetaBracket(NamedTuple):
    partial: float
    lower: float
    upper: float
    reference: float


def zeta_bracket(a: float, terms: int = ZETA_TERMS) -> ZetaBracket:
    """sum n^(-a) as a partial sum with integral-test tail bounds, and scipy's zeta for reference."""
    if a <= 1:
        raise ValueError(f"sum n^(-a) diverges for a = {a}")
    n = np.arange(1, terms + 1, dtype=float)
    partial = float(np.sum(n[::-1] ** -a))
    lower = partial + (terms + 1) ** (1 - a) / (a - 1)
    upper = partial + terms ** (1 - a) / (a - 1)
    return ZetaBracket(partial, lower, upper, float(special.zeta(a)))


class Theorem1Result(NamedTuple):
    bound: LogBound
    zeta: ZetaBracket
    epsilon_total: float


def _summability_exponent(p: float) -> float:
    if not 0 < p < 2 / 3:
        raise ValueError(f"p must lie in (0, 2/3) so that sum n^(-2/(3p)) converges, got {p}")
    return 2 / (3 * p)


def theorem1_bound(p: float, pnorm: float, epsilon: float, N: int, terms: int = ZETA_TERMS) -> Theorem1Result:
    """
    (4eN)^(2^11 pi ||Pi||_p^2 (sum n^(-2/(3p)))^3 / eps^2) with the upper tail bracket for the sum.

    epsilon_total is the sum of the constructed eps_n, at most eps/4.
    """
    a = _summability_exponent(p)
    if epsilon <= 0 or N < 1 or pnorm < 0:
        raise ValueError("epsilon and N must be positive and the norm non-negative")
    bracket = zeta_bracket(a, terms)
    log_value = 2 ** 11 * np.pi * pnorm ** 2 * bracket.upper ** 3 / epsilon ** 2 * np.log(4 * np.e * N)
    total = epsilon / 4 * bracket.reference / bracket.upper
    return Theorem1Result(_log_bound(log_value), bracket, float(total))


def epsilon_sequence(p: float, epsilon: float, n: int, terms: int = ZETA_TERMS) -> np.ndarray:
    """eps_k = (eps/4) k^(-2/(3p)) / sum_j j^(-2/(3p)) for k = 1..n."""
    a = _summability_exponent(p)
    k = np.arange(1, n + 1, dtype=float)
    return epsilon / 4 * k ** -a / zeta_bracket(a, terms).upper


def product_log_bound(p: float, pnorm: float, epsilon: float, N: int, n_terms: int = 10_000,
                      terms: int = ZETA_TERMS) -> float:
    """
    Sum over the factors of the key lemma log-bounds, with ||Theta_n||_2 <= ||Pi||_p n^(-1/p)
    and eps_n from epsilon_sequence; the terms beyond n_terms are summed through the Hurwitz zeta tail.
    """
    a = _summability_exponent(p)
    upper = zeta_bracket(a, terms).upper
    k = np.arange(1, n_terms + 1, dtype=float)
    eps_k = epsilon / 4 * k ** -a / upper
    head = np.sum(2 ** 7 * np.pi * pnorm ** 2 * k ** (-2 / p) / eps_k ** 2)
    # each factor contributes 2^11 pi ||Pi||^2 upper^2 k^(-a) / eps^2
    tail = 2 ** 11 * np.pi * pnorm ** 2 * upper ** 2 / epsilon ** 2 * special.zeta(a, n_terms + 1)
    return float((head + tail) * np.log(4 * np.e * N))


def theorem1_growth_check(p: float, pnorm: float, epsilon: float, counts: Sequence[int],
                          tol: float = 1e-12) -> InequalityReport:
    """log-bound / log(4eN) must not depend on N."""
    logs = [theorem1_bound(p, pnorm, epsilon, N).bound.log for N in counts]
    ratios = [value / np.log(4 * np.e * N) for value, N in zip(logs, counts)]
    spread = (max(ratios) - min(ratios)) / max(max(ratios), np.finfo(float).tiny)
    return InequalityReport(
        name="theorem1_growth",
        lhs=float(spread),
        rhs=tol,
        parameters={"p": p, "pnorm": pnorm, "epsilon": epsilon, "counts": list(counts), "logs": logs},
    )


def _rounded_points(sample: FiniteMapSample, epsilon: float) -> np.ndarray:
    flat = sample.outputs.reshape(sample.outputs.shape[0], -1)
    step = epsilon / 4
    return np.hstack([np.trunc(flat.real / step), np.trunc(flat.imag / step)]).astype(np.int64)


def lattice_rounding_count(sample: FiniteMapSample, epsilon: float) -> int:
    """Distinct points after rounding every output coordinate toward zero on the (eps/4)-lattice."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return int(np.unique(_rounded_points(sample, epsilon), axis=0).shape[0])


def lattice_rounding_check(sample: FiniteMapSample, epsilon: float) -> InequalityReport:
    """
    greedy count <= rounded points <= lattice count <= (4 n e)^(8 pi M), M = floor(16 max|v|_2^2 / eps^2),
    n the number of complex coordinates; the lattice count is enumerated only within budget.
    """
    greedy = epsilon_content_bruteforce(sample, epsilon)
    rounded = _rounded_points(sample, epsilon)
    distinct = lattice_rounding_count(sample, epsilon)
    complex_dims = rounded.shape[1] // 2
    largest = float(np.max(np.sum(np.abs(sample.outputs.reshape(sample.outputs.shape[0], -1)) ** 2, axis=1)))
    M = int(np.floor(16 * largest / epsilon ** 2))
    log_outer = float(8 * np.pi * M * np.log(4 * max(complex_dims, 1) * np.e))
    conditions = {
        "rounded_within_radius": bool(np.all(np.sum(rounded.astype(float) ** 2, axis=1) <= M + 1e-9)),
        "rounded_below_outer": np.log(distinct) <= log_outer + 1e-12,
    }
    params = {"epsilon": epsilon, "greedy": greedy, "distinct": distinct, "M": M, "log_outer": log_outer}
    if M * 2 * complex_dims <= ROUNDING_LATTICE_BUDGET and 2 * complex_dims <= 64:
        count = lattice_count(M, 2 * complex_dims)
        conditions["rounded_below_lattice"] = distinct <= count
        params["lattice_count"] = str(count)
    else:
        logger.info("lattice count for M=%d in %d dims skipped", M, 2 * complex_dims)
    return InequalityReport(
        name="lattice_rounding",
        lhs=float(greedy),
        rhs=float(distinct),
        parameters=params,
        conditions=conditions,
    )


def content_chain_check(sample: FiniteMapSample, epsilon: float, p: float, pnorm: float,
                        label: str = "") -> InequalityReport:
    """greedy epsilon-content <= key lemma bound <= product bound form at the same N."""
    greedy = epsilon_content_bruteforce(sample, epsilon)
    N = max(sample.blocks, 1)
    key = key_lemma_bound(sample.norm_2, epsilon, N)
    outer = theorem1_bound(p, max(pnorm, sample.norm_2), epsilon, N).bound
    return InequalityReport(
        name=f"content_chain{label}",
        lhs=float(np.log(greedy)),
        rhs=key.log,
        tolerance=1e-12,
        parameters={"greedy": greedy, "norm_2": sample.norm_2, "N": N, "epsilon": epsilon,
                    "key_log": key.log, "theorem1_log": outer.log, "p": p, "pnorm": pnorm},
        conditions={"key_below_theorem1": key.log <= outer.log + 1e-12},
    )
