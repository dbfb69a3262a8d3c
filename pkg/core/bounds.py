"""
Inequality checks for the harmonic-analysis estimates, clustering of the
one-particle correlators, the seminorm bound on S_{mu nu}, the p-norm chain
and square integrability of translated expectation values.
"""
import logging
from math import gamma
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg, special

from core.errors import PreconditionError
from core.expansion import (
    MultiIndexPair,
    NuclearExpansion,
    enumerate_index_pairs,
    tau_norm_bound,
    translated_S_norms,
)
from core.fock import (
    Functional,
    StateFunctional,
    TruncatedFockSpace,
    WeylSample,
    annihilator,
    evaluate_sample,
    second_quantize,
)
from core.grid import MomentumGrid, translation_phase
from core.reports import InequalityReport, ScanResult

logger = logging.getLogger(__name__)

ENERGY_SLACK = 1e-12
LOWERING_TOL = 1e-10
SAMPLED_NOTE = "lhs is sampled over a finite functional net and observable family; it bounds the true norm from below"


def spacelike_separation(x: Sequence[float], r: float) -> float:
    """delta(x) = |x_vec| - |x0| - 2r."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x[1:]) - abs(x[0]) - 2 * r)


def configuration_separation(points: Sequence[Sequence[float]], r: float) -> float:
    """inf over i != j of delta(x_i - x_j); infinite for a single point."""
    points = [np.asarray(x, dtype=float) for x in points]
    if len(points) < 2:
        return float("inf")
    return min(spacelike_separation(a - b, r)
               for i, a in enumerate(points) for j, b in enumerate(points) if i != j)


def separated_points(count: int, delta: float, r: float, s: int = 1) -> List[np.ndarray]:
    """Points at time zero along the first axis with pairwise delta(x_i - x_j) >= delta."""
    step = delta + 2 * r
    points = []
    for k in range(count):
        x = np.zeros(s + 1)
        x[1] = k * step
        points.append(x)
    return points


def harmonic_deltas(factors: Sequence[float], r: float) -> List[float]:
    """Separations for the harmonic sweep, in units of the support diameter 2r."""
    return [float(f) * 2 * r for f in factors]


def damping_constant(epsilon: float, beta: float, m: float, s: int = 1) -> float:
    """
    c_{eps,beta} = 1 + (2 sqrt(pi) beta)^(-s) int d^s y exp(-|y|^2/(4 beta^2) + m(1-eps)|y|/eps).

    The radial integral is taken by adaptive quadrature with the Gaussian
    peak factored out.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if beta <= 0 or m <= 0:
        raise ValueError("beta and m must be positive")
    a = m * (1 - epsilon) / epsilon
    peak = 2 * a * beta ** 2
    surface = 2 * np.pi ** (s / 2) / gamma(s / 2)

    def radial(y: float) -> float:
        return y ** (s - 1) * np.exp(-(y - peak) ** 2 / (4 * beta ** 2))

    value, _ = integrate.quad(radial, 0.0, np.inf, epsrel=1e-10, epsabs=0.0)
    return float(1 + surface * np.exp(a * a * beta ** 2) * value / (2 * np.sqrt(np.pi) * beta) ** s)


def damping_constant_closed_form(epsilon: float, beta: float, m: float) -> float:
    """c_{eps,beta} for s = 1: 1 + exp(a^2 beta^2)(1 + erf(a beta)) with a = m(1-eps)/eps."""
    a = m * (1 - epsilon) / epsilon
    return float(1 + np.exp((a * beta) ** 2) * (1 + special.erf(a * beta)))


def brace_factor(N: int, c: float, m: float, epsilon: float, delta: float) -> float:
    """1 + sqrt(c)(N-1) exp(-(m/2)(1-eps) delta)."""
    if N <= 1 or np.isinf(delta):
        return 1.0
    return float(1 + np.sqrt(c) * (N - 1) * np.exp(-0.5 * m * (1 - epsilon) * delta))


def _energy_masks(space: TruncatedFockSpace, E: float, m: float) -> Tuple[np.ndarray, np.ndarray]:
    return space.energies <= E + ENERGY_SLACK, space.energies <= E - m + ENERGY_SLACK


def _translated_lowering(space: TruncatedFockSpace, g: np.ndarray, x: Sequence[float]) -> np.ndarray:
    c = space.modes.vectors.conj().T @ (translation_phase(space.modes.grid, x) * g)
    return annihilator(space, c).toarray()


def _block_norm(matrix: np.ndarray, mask: np.ndarray) -> float:
    block = matrix[np.ix_(mask, mask)]
    return float(linalg.norm(block, 2)) if block.size else 0.0


def _check_lowering(B: np.ndarray, within: np.ndarray, lowered: np.ndarray) -> float:
    leak = B[np.ix_(~lowered, within)]
    return float(linalg.norm(leak, 2)) if leak.size else 0.0


def harmonic_bound_check(space: TruncatedFockSpace, g: np.ndarray, points: Sequence[Sequence[float]],
                         E: float, tol: float = 1e-8, label: str = "") -> InequalityReport:
    """
    ||P_E sum_k B*B(x_k) P_E|| <= (M_E+1)(||P_E[B,B*]P_E|| + (N-1) sup ||P_E[B(x_k),B*(x_l)]P_E||)
    for B = a(P g), which lowers the energy by at least m.

    Raises:
        PreconditionError: B moves P_E states outside P_{E-m} by more than 1e-10
    """
    m = space.modes.grid.m
    M_E = E / m
    within, lowered = _energy_masks(space, E, m)
    lowerings = [_translated_lowering(space, g, x) for x in points]
    for B in lowerings:
        leak = _check_lowering(B, within, lowered)
        if leak > LOWERING_TOL:
            raise PreconditionError(f"B does not lower the energy by m (leak {leak:.3g})")

    total = sum(B.conj().T @ B for B in lowerings)
    lhs = _block_norm(total, within)

    # sup over the translates of [B,B*]
    commutator = max(_block_norm(B @ B.conj().T - B.conj().T @ B, within) for B in lowerings)
    cross = 0.0
    for k, Bk in enumerate(lowerings):
        for l, Bl in enumerate(lowerings):
            if k != l:
                cross = max(cross, _block_norm(Bk @ Bl.conj().T - Bl.conj().T @ Bk, within))
    N = len(points)
    rhs = (M_E + 1) * (commutator + (N - 1) * cross)
    return InequalityReport(
        name=f"harmonic_sum{label}",
        lhs=lhs,
        rhs=rhs,
        tolerance=tol,
        parameters={"E": E, "N": N, "points": [list(map(float, x)) for x in points],
                    "commutator": commutator, "cross_commutator": cross},
    )


def harmonic_integral_check(space: TruncatedFockSpace, g: np.ndarray, E: float, points: int = 64,
                            tol: float = 1e-8, label: str = "") -> InequalityReport:
    """
    Quadrature form over a compact x-range K: h ||P_E sum_k B*B(x_k) P_E|| against
    (M_E+1) h sum over the difference set of |<u_d g|g>|, spacing h = 1/(4 P_max).
    """
    grid = space.modes.grid
    m = grid.m
    M_E = E / m
    h = 1.0 / (4 * grid.p_max)
    offsets = (np.arange(points) - (points - 1) / 2) * h
    xs = [np.concatenate([[0.0], [d], np.zeros(grid.s - 1)]) for d in offsets]

    within, lowered = _energy_masks(space, E, m)
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for x in xs:
        B = _translated_lowering(space, g, x)
        leak = _check_lowering(B, within, lowered)
        if leak > LOWERING_TOL:
            raise PreconditionError(f"B does not lower the energy by m (leak {leak:.3g})")
        total += B.conj().T @ B
    lhs = h * _block_norm(total, within)

    differences = np.arange(-(points - 1), points) * h
    density = np.abs(g) ** 2
    overlaps = np.abs(np.exp(1j * np.outer(differences, grid.nodes[:, 0])) @ density)
    rhs = (M_E + 1) * h * float(overlaps.sum())
    return InequalityReport(
        name=f"harmonic_integral{label}",
        lhs=lhs,
        rhs=rhs,
        tolerance=tol,
        parameters={"E": E, "points": points, "spacing": h, "extent": float(offsets[-1] - offsets[0])},
    )


def _correlator(grid: MomentumGrid, g: np.ndarray, x: Sequence[float], beta: Optional[float]) -> float:
    density = np.abs(g) ** 2
    if beta is not None:
        density = density * np.exp(-beta ** 2 * np.sum(grid.nodes ** 2, axis=1))
    return float(abs(np.sum(density * translation_phase(grid, x))))


def clustering_correlator(grid: MomentumGrid, g: np.ndarray, x: Sequence[float], beta: float, epsilon: float,
                          r: float, c: Optional[float] = None,
                          tol: float = 1e-8, label: str = "") -> Tuple[InequalityReport, InequalityReport]:
    """
    Undamped |<g|U(x) g>| <= exp(-m delta(x)) and damped
    |<g|exp(-(beta|p|)^2) U(x) g>| <= c_{eps,beta} exp(-m(1-eps) delta(x)) for g = L+- e_j.

    Returns:
        (undamped report, damped report); the undamped check is vacuous and
        skipped when delta(x) <= 0
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    m = grid.m
    delta = spacelike_separation(x, r)
    c = c if c is not None else damping_constant(epsilon, beta, m, grid.s)
    params = {"x": list(map(float, x)), "delta": delta, "beta": beta, "epsilon": epsilon, "r": r}

    undamped = _correlator(grid, g, x, None)
    if delta > 0:
        plain = InequalityReport(name=f"clustering{label}", lhs=undamped, rhs=float(np.exp(-m * delta)),
                                 tolerance=tol, parameters=params)
    else:
        plain = InequalityReport(name=f"clustering{label}", lhs=undamped, rhs=undamped, tolerance=tol,
                                 parameters=params, note="delta(x) <= 0; bound vacuous, check skipped")

    damped = _correlator(grid, g, x, beta)
    bound = c * float(np.exp(-m * (1 - epsilon) * max(delta, 0.0)))
    damped_report = InequalityReport(name=f"clustering_damped{label}", lhs=damped, rhs=bound, tolerance=tol,
                                     parameters={**params, "c": c})
    return plain, damped_report


def clustering_decay_scan(grid: MomentumGrid, g: np.ndarray, deltas: Sequence[float], epsilon: float,
                          r: float, slack: float = 0.1, name: str = "clustering_decay") -> ScanResult:
    """Undamped correlator along delta with the observed decay rate between neighbouring points."""
    m = grid.m
    values = []
    for delta in deltas:
        x = np.zeros(grid.s + 1)
        x[1] = delta + 2 * r
        values.append(_correlator(grid, g, x, None))
    values = np.asarray(values)
    positive = np.maximum(values, np.finfo(float).tiny)
    rates = -np.diff(np.log(positive)) / np.diff(np.asarray(deltas, dtype=float))
    required = (1 - slack) * m * (1 - epsilon)
    worst = float(rates.min()) if rates.size else float("inf")
    return ScanResult(
        name=name,
        parameter_name="delta",
        grid=[float(d) for d in deltas],
        values=values.tolist(),
        decay={"min_rate": worst, "required_rate": required},
        description=f"minimum observed decay rate {worst:.3g} against m(1-eps) = {m * (1 - epsilon):.3g}",
        passed=bool(worst >= required),
    )


def semibound_rhs(mu: MultiIndexPair, nu: MultiIndexPair, t: np.ndarray, M_E: float, beta: float, E: float,
                  brace: float) -> float:
    """32 t^mu t^nu M_E^(2 M_E) exp((beta E)^2) * brace."""
    return float(32 * mu.power(t) * nu.power(t) * M_E ** (2 * M_E) * np.exp((beta * E) ** 2) * brace)


def semibound_check(expansion: NuclearExpansion, indices: Tuple[MultiIndexPair, MultiIndexPair],
                    points: Sequence[Sequence[float]], E: float, beta: float, epsilon: float, t: np.ndarray,
                    net: Sequence[StateFunctional], r: float, tol: float = 1e-8,
                    sampled: Optional[np.ndarray] = None) -> InequalityReport:
    """
    Sampled ||S_{mu nu}||^2_{x_1..x_N} against
    32 t^mu t^nu M_E^(2M_E) exp((beta E)^2){1 + sqrt(c)(N-1) exp(-(m/2)(1-eps) delta(x))}.

    `sampled` may carry the output of translated_S_norms for the same points and net.
    """
    mu, nu = indices
    grid = expansion.modes.grid
    m = grid.m
    if sampled is None:
        sampled = translated_S_norms(expansion, net, points)
    position = {index: a for a, index in enumerate(expansion.indices)}
    lhs = float(sampled[position[mu], position[nu]])
    delta = configuration_separation(points, r)
    c = damping_constant(epsilon, beta, m, grid.s)
    brace = brace_factor(len(points), c, m, epsilon, delta)
    rhs = semibound_rhs(mu, nu, t, expansion.M_E, beta, E, brace)
    return InequalityReport(
        name=f"semibound[{mu.label()},{nu.label()}]",
        lhs=lhs,
        rhs=rhs,
        tolerance=tol,
        parameters={"N": len(points), "delta": delta, "E": E, "beta": beta, "epsilon": epsilon,
                    "c": c, "brace": brace},
        note=SAMPLED_NOTE,
    )


def semibound_sweep(expansion: NuclearExpansion, points: Sequence[Sequence[float]], E: float, beta: float,
                    epsilon: float, t: np.ndarray, net: Sequence[StateFunctional], r: float, tol: float = 1e-8,
                    sampled: Optional[np.ndarray] = None, label: str = "") -> InequalityReport:
    """
    semibound_check over every retained pair at once; lhs is the largest sampled-to-bound
    ratio and the report also requires S_{0,0} to vanish on the net.
    """
    grid = expansion.modes.grid
    m = grid.m
    if sampled is None:
        sampled = translated_S_norms(expansion, net, points)
    delta = configuration_separation(points, r)
    c = damping_constant(epsilon, beta, m, grid.s)
    brace = brace_factor(len(points), c, m, epsilon, delta)
    worst, worst_pair = 0.0, ""
    for a, mu in enumerate(expansion.indices):
        for b, nu in enumerate(expansion.indices):
            ratio = sampled[a, b] / semibound_rhs(mu, nu, t, expansion.M_E, beta, E, brace)
            if ratio > worst:
                worst, worst_pair = float(ratio), f"{mu.label()},{nu.label()}"
    return InequalityReport(
        name=f"semibound{label}",
        lhs=worst,
        rhs=1.0,
        tolerance=tol,
        parameters={"N": len(points), "delta": delta, "E": E, "beta": beta, "epsilon": epsilon, "c": c,
                    "brace": brace, "worst_pair": worst_pair, "pairs": len(expansion.indices) ** 2},
        conditions={"vacuum_term_vanishes": bool(sampled[0, 0] <= tol)},
        note=SAMPLED_NOTE,
    )


def chain_final_bound(p: float, M_E: float, beta: float, E: float, t_all: np.ndarray, brace: float) -> float:
    """4 sqrt2 (2^5 M_E)^M_E exp((beta E)^2/2) (sum_k ||T^(p/2)||_1^k)^(4/p) brace^(1/2)."""
    trace = float(np.sum(np.asarray(t_all)[np.asarray(t_all) > 0] ** (p / 2)))
    geometric = sum(trace ** k for k in range(int(np.floor(M_E)) + 1))
    return float(4 * np.sqrt(2) * (32 * M_E) ** M_E * np.exp(0.5 * (beta * E) ** 2)
                 * geometric ** (4 / p) * np.sqrt(brace))


def pnorm_bound_chain(expansion: NuclearExpansion, p: float, E: float, beta: float, epsilon: float,
                      t_all: np.ndarray, points: Sequence[Sequence[float]], net: Sequence[StateFunctional],
                      r: float, tol: float = 1e-8, sampled: Optional[np.ndarray] = None) -> List[InequalityReport]:
    """
    The three links from the term-wise p-norm proxy to the N-uniform final bound.

    Returns:
        [proxy <= 2^(5M_E)(sum ||S||^p)^(1/p), that <= (sum of semibound roots) form, that <= final bound]
    """
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    grid = expansion.modes.grid
    m = grid.m
    M_E = expansion.M_E
    t = expansion.modes.t
    if sampled is None:
        sampled = translated_S_norms(expansion, net, points)
    position = {index: a for a, index in enumerate(expansion.indices)}
    delta = configuration_separation(points, r)
    c = damping_constant(epsilon, beta, m, grid.s)
    brace = brace_factor(len(points), c, m, epsilon, delta)

    pairs = enumerate_index_pairs(expansion.modes.K, M_E)
    s_norms = np.array([np.sqrt(sampled[position[mu], position[nu]]) for mu, nu in pairs])
    tau = np.array([tau_norm_bound(mu, nu) for mu, nu in pairs])
    roots = np.array([np.sqrt(semibound_rhs(mu, nu, t, M_E, beta, E, brace)) for mu, nu in pairs])

    proxy = float(np.sum((tau * s_norms) ** p) ** (1 / p))
    middle = float(2.0 ** (5 * M_E) * np.sum(s_norms ** p) ** (1 / p))
    through_semibound = float(2.0 ** (5 * M_E) * np.sum(roots ** p) ** (1 / p))
    final = chain_final_bound(p, M_E, beta, E, t_all, brace)

    params = {"p": p, "N": len(points), "delta": delta, "E": E, "beta": beta, "epsilon": epsilon,
              "brace": brace, "pairs": len(pairs)}
    return [
        InequalityReport(name=f"pnorm_chain_tau[p={p}]", lhs=proxy, rhs=middle, tolerance=tol,
                         parameters=params, note=SAMPLED_NOTE),
        InequalityReport(name=f"pnorm_chain_semibound[p={p}]", lhs=middle, rhs=through_semibound,
                         tolerance=tol, parameters=params, note=SAMPLED_NOTE),
        InequalityReport(name=f"pnorm_chain_final[p={p}]", lhs=through_semibound, rhs=final,
                         tolerance=tol * max(final, 1.0), parameters=params),
    ]


def chain_uniformity_check(p: float, M_E: float, beta: float, E: float, t_all: np.ndarray, m: float,
                           epsilon: float, delta: float, counts: Sequence[int], c: float,
                           limit: float = 0.01) -> InequalityReport:
    """Relative spread of the final chain bound across point counts at separation delta."""
    values = [chain_final_bound(p, M_E, beta, E, t_all, brace_factor(N, c, m, epsilon, delta)) for N in counts]
    spread = (max(values) - min(values)) / max(values)
    return InequalityReport(
        name=f"pnorm_chain_uniformity[p={p}]",
        lhs=spread,
        rhs=limit,
        parameters={"counts": list(counts), "delta": delta, "values": values},
    )


def _translation_lattice(box: float, step: float, s: int) -> Tuple[np.ndarray, int]:
    axis = np.arange(-box, box, step)
    mesh = np.meshgrid(*([axis] * s), indexing="ij")
    return np.stack([component.ravel() for component in mesh], axis=1), axis.size


def plancherel_check(phi: Functional, sample: WeylSample, grid: MomentumGrid, boxes: Sequence[float],
                     step: float, increment_tol: float = 1e-4, agreement_tol: float = 1e-6,
                     label: str = "") -> InequalityReport:
    """
    int d^s x |phi(A(x) - omega_0(A))|^2 over growing boxes, with the discrete Fourier dual.

    The lhs is the last box-doubling increment; the report fails when the
    Fourier-side and x-side values of the largest box disagree beyond agreement_tol.
    """
    vacuum_value = sample.vacuum_expectation()
    identity = phi.trace()
    integrals, increments = [], []
    fourier_side = x_side = 0.0
    for box in boxes:
        offsets, per_axis = _translation_lattice(box, step, grid.s)
        values = np.empty(offsets.shape[0], dtype=complex)
        for k, offset in enumerate(offsets):
            x = np.concatenate([[0.0], offset])
            values[k] = evaluate_sample(phi, sample, x, grid) - vacuum_value * identity
        cell = step ** grid.s
        x_side = float(cell * np.sum(np.abs(values) ** 2))
        spectrum = np.fft.fftn(values.reshape((per_axis,) * grid.s))
        fourier_side = float(cell * np.sum(np.abs(spectrum) ** 2) / values.size)
        if integrals:
            increments.append(abs(x_side - integrals[-1]))
        integrals.append(x_side)

    last = increments[-1] if increments else 0.0
    agreement = abs(fourier_side - x_side) / max(abs(x_side), np.finfo(float).tiny)
    if last > increment_tol:
        logger.warning("box doubling still moves the integral by %.3g: %s", last, increments)
    return InequalityReport(
        name=f"plancherel{label}",
        lhs=last,
        rhs=increment_tol,
        parameters={"boxes": list(boxes), "step": step, "integrals": integrals, "increments": increments,
                    "fourier_side": fourier_side, "x_side": x_side, "agreement": agreement},
        conditions={"plancherel_agreement": bool(agreement <= agreement_tol or x_side == 0.0)},
    )


def energy_damping_check(space: TruncatedFockSpace, beta: float, E: float, tol: float = 1e-8) -> InequalityReport:
    """||exp(G) P_E|| <= exp((beta E)^2/2) with G = dGamma(beta^2 (omega^2 - m^2)/2)."""
    m = space.modes.grid.m
    g = np.diag(0.5 * beta ** 2 * (space.modes.omega ** 2 - m ** 2))
    G = second_quantize(space, g)
    within, _ = _energy_masks(space, E, m)
    lhs = _block_norm(linalg.expm(G.matrix), within) if within.any() else 0.0
    return InequalityReport(name="energy_damping", lhs=lhs, rhs=float(np.exp(0.5 * (beta * E) ** 2)),
                            tolerance=tol, parameters={"beta": beta, "E": E})


def energy_bound_check(space: TruncatedFockSpace, E: float, trials: int, seed: int, max_order: int = 3,
                       tol: float = 1e-8) -> List[InequalityReport]:
    """
    ||a(f_1)...a(f_n) P_E|| / prod ||f_i|| <= (E/m)^(n/2) over seeded random mode vectors.

    Returns:
        one report per order n, lhs the worst normalised ratio
    """
    m = space.modes.grid.m
    within, _ = _energy_masks(space, E, m)
    rng = np.random.default_rng(seed)
    reports = []
    for n in range(1, max_order + 1):
        worst = 0.0
        for _ in range(trials):
            product = np.eye(space.dim, dtype=complex)[:, within]
            scale = 1.0
            for _ in range(n):
                c = rng.standard_normal(space.K) + 1j * rng.standard_normal(space.K)
                product = annihilator(space, c) @ product
                scale *= float(np.linalg.norm(c))
            norm = float(linalg.norm(product, 2)) if product.size else 0.0
            worst = max(worst, norm / scale)
        reports.append(InequalityReport(
            name=f"energy_bound[n={n}]",
            lhs=worst,
            rhs=float((E / m) ** (n / 2)),
            tolerance=tol,
            parameters={"n": n, "trials": trials, "seed": seed, "E": E},
        ))
    return reports


def b_norm_check(expansion: NuclearExpansion, E: float, tol: float = 1e-8) -> InequalityReport:
    """max over retained mu of ||B_mu P_E|| - M_E^(|mu|/2) t^mu, with B_mu mapping P_E into P_(E-|mu|m)."""
    space = expansion.space
    m = space.modes.grid.m
    within = space.energies <= E + ENERGY_SLACK
    columns = np.eye(space.dim, dtype=complex)[:, within]
    worst, worst_label, leak = -np.inf, "", 0.0
    for mu in expansion.indices:
        image = expansion.apply_B(mu, columns)
        norm = float(linalg.norm(image, 2)) if image.size else 0.0
        excess = norm - expansion.M_E ** (mu.order / 2) * mu.power(expansion.modes.t)
        if excess > worst:
            worst, worst_label = excess, mu.label()
        lowered = space.energies <= E - mu.order * m + ENERGY_SLACK
        if image.size:
            leak = max(leak, float(np.max(np.abs(image[~lowered]), initial=0.0)))
    return InequalityReport(
        name="B_norm_bound",
        lhs=float(worst),
        rhs=0.0,
        tolerance=tol,
        parameters={"E": E, "indices": len(expansion.indices), "worst_index": worst_label, "lowering_leak": leak},
        conditions={"energy_lowering": leak <= LOWERING_TOL},
    )
