"""
Relaxation of translated states toward the vacuum: timelike scans, the
translation-deviation bound for narrow spectral windows and the decay of the
restricted norm as the window shrinks.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from core.bounds import separated_points
from core.content import build_theta, epsilon_content_bruteforce
from core.expansion import npoint_norm, translated_values
from core.fock import (
    Functional,
    OneParticleState,
    TruncatedFockSpace,
    WeylSample,
    evaluate_sample,
    functional_net,
)
from core.grid import MomentumGrid
from core.reports import InequalityReport, ScanResult

logger = logging.getLogger(__name__)

VALIDITY_FRACTION = 0.9
FAMILY_NOTE = "checked on a finite observable family, not the whole local algebra"


def window_center(grid: MomentumGrid, momentum: float) -> np.ndarray:
    """On-shell energy-momentum point (omega(p), p e_1)."""
    p = np.zeros(grid.s)
    p[0] = momentum
    return np.concatenate([[np.sqrt(momentum ** 2 + grid.m ** 2)], p])


def window_mask(grid: MomentumGrid, center: Sequence[float], r: float) -> np.ndarray:
    """Grid nodes whose on-shell point (omega(p_i), p_i) lies within r of center."""
    center = np.asarray(center, dtype=float)
    points = np.column_stack([grid.omega, grid.nodes])
    return np.linalg.norm(points - center, axis=1) <= r


def window_state(grid: MomentumGrid, center: Sequence[float], r: float, seed: int,
                 subtract_vacuum: bool = True) -> OneParticleState:
    """
    Seeded one-particle state with spectral support in the ball of radius r around center.

    An empty window gives the zero functional.
    """
    mask = window_mask(grid, center, r)
    if not mask.any():
        return OneParticleState(np.zeros((grid.dim, 0), dtype=complex), np.zeros(0), grid,
                                energy_support=float(r))
    rng = np.random.default_rng(seed)
    h = np.zeros(grid.dim, dtype=complex)
    count = int(mask.sum())
    h[mask] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    state = OneParticleState.packet(grid, h, energy_support=float(r))
    return state.subtract_vacuum().normalized() if subtract_vacuum else state


def window_net(grid: MomentumGrid, center: Sequence[float], r_grid: Sequence[float], size: int,
               seed: int) -> List[List[OneParticleState]]:
    """
    Nested nets for a decreasing r_grid: the net at each r contains every net at a smaller r.
    """
    nets: List[List[OneParticleState]] = []
    members: List[OneParticleState] = []
    for k, r in enumerate(reversed(list(r_grid))):
        fresh = [window_state(grid, center, r, seed + 1000 * k + i) for i in range(size)]
        members = members + [state for state in fresh if state.weights.size]
        nets.append(list(members))
    return list(reversed(nets))


def packet(grid: MomentumGrid, momentum: float = 0.0, width: float = 1.0) -> OneParticleState:
    """Gaussian one-particle wave packet around momentum along the first axis."""
    profile = np.exp(-0.5 * ((grid.nodes[:, 0] - momentum) / width) ** 2
                     - 0.5 * np.sum(grid.nodes[:, 1:] ** 2, axis=1) / width ** 2)
    return OneParticleState.packet(grid, grid.to_weighted(profile.astype(complex)))


def _deviation(phi: Functional, sample: WeylSample, x: Sequence[float], grid: MomentumGrid) -> complex:
    return evaluate_sample(phi, sample, x, grid) - sample.vacuum_expectation() * phi.trace()


def timelike_scan(phi: Functional, sample: WeylSample, grid: MomentumGrid, t_grid: Sequence[float],
                  e_hat: Optional[Sequence[float]] = None, ratio: Optional[float] = None,
                  name: str = "timelike") -> ScanResult:
    """
    phi(A(t e)) along t with the deviation from omega_0(A) phi(I).

    Times beyond the grid validity range 0.9 pi / dp are trimmed. The scan
    passes when the last quarter stays below the first quarter and, when
    ratio is given, the deviation at t = 20/m is below ratio times its value at t = 2/m.
    """
    e_hat = np.asarray(e_hat if e_hat is not None else np.eye(grid.s + 1)[0], dtype=float)
    if e_hat[0] <= 0 or abs(e_hat[0] ** 2 - np.sum(e_hat[1:] ** 2) - 1) > 1e-9:
        raise ValueError(f"e_hat must be a future-directed timelike unit vector, got {e_hat.tolist()}")
    limit = VALIDITY_FRACTION * np.pi / grid.spacing
    times = np.asarray(t_grid, dtype=float)
    if np.any(times > limit):
        logger.warning("t grid trimmed at %.3g: the momentum grid cannot resolve later times", limit)
        times = times[times <= limit]

    values, deviations = [], []
    for t in times:
        x = t * e_hat
        value = evaluate_sample(phi, sample, x, grid)
        values.append(float(value.real))
        deviations.append(float(abs(_deviation(phi, sample, x, grid))))
    deviations_arr = np.asarray(deviations)

    quarter = max(len(times) // 4, 1)
    early, late = float(deviations_arr[:quarter].max()), float(deviations_arr[-quarter:].max())
    trend = late < early or early == 0.0
    decay = {"first_quarter_max": early, "last_quarter_max": late}
    passed = trend
    m = grid.m
    if ratio is not None and len(times) > 1:
        near = float(np.interp(2 / m, times, deviations_arr))
        far = float(np.interp(20 / m, times, deviations_arr))
        decay.update({"deviation_t2": near, "deviation_t20": far})
        passed = passed and (far < ratio * near or near == 0.0)
    return ScanResult(
        name=name,
        parameter_name="t",
        grid=times.tolist(),
        values=values,
        reference=float(sample.vacuum_expectation().real),
        deviations=deviations,
        decay=decay,
        description=f"deviation falls from {early:.3g} to {late:.3g}",
        passed=bool(passed),
        note=FAMILY_NOTE,
    )


def translation_deviation_check(phi: OneParticleState, sample: WeylSample, x: Sequence[float], r: float,
                                grid: MomentumGrid, tol: float = 1e-10, label: str = "") -> InequalityReport:
    """|phi(A) - alpha*_x phi(A)| <= 2 ||phi|| ||A|| |x| r for phi supported in a window of radius r."""
    x = np.asarray(x, dtype=float)
    lhs = abs(evaluate_sample(phi, sample, None, grid) - evaluate_sample(phi, sample, x, grid))
    rhs = 2 * phi.trace_norm() * sample.norm * float(np.linalg.norm(x)) * r
    return InequalityReport(
        name=f"translation_deviation{label}",
        lhs=float(lhs),
        rhs=float(rhs),
        tolerance=tol,
        parameters={"x": x.tolist(), "r": r, "phi_norm": phi.trace_norm(), "A_norm": sample.norm},
    )


def deviation_sweep(grid: MomentumGrid, samples: Sequence[WeylSample], center: Sequence[float], r: float,
                    trials: int, seed: int, tol: float = 1e-10) -> InequalityReport:
    """
    Seeded (phi, A, x) triples with |x| <= 1/m; the report carries the worst ratio lhs / rhs.
    """
    rng = np.random.default_rng(seed)
    worst_ratio, worst = 0.0, None
    failures = 0
    for trial in range(trials):
        phi = window_state(grid, center, r, seed + trial)
        sample = samples[int(rng.integers(len(samples)))]
        direction = rng.standard_normal(grid.s + 1)
        x = direction / np.linalg.norm(direction) * rng.uniform(0, 1 / grid.m)
        report = translation_deviation_check(phi, sample, x, r, grid, tol)
        failures += not report.passed
        ratio = report.lhs / report.rhs if report.rhs > 0 else 0.0
        if worst is None or ratio > worst_ratio:
            worst_ratio, worst = ratio, report
    return InequalityReport(
        name="translation_deviation_sweep",
        lhs=worst.lhs if worst else 0.0,
        rhs=worst.rhs if worst else 0.0,
        tolerance=tol,
        parameters={"trials": trials, "seed": seed, "r": r, "worst_ratio": worst_ratio,
                    "worst_x": worst.parameters["x"] if worst else []},
        conditions={"all_trials": failures == 0},
    )


def shrinking_norm_scan(grid: MomentumGrid, samples: Sequence[WeylSample], center: Sequence[float],
                        r_grid: Sequence[float], net_size: int, seed: int, point_count: int,
                        spread: float, tol: float = 1e-8) -> ScanResult:
    """
    Sampled ||Pi|_{window(r)}|| along a decreasing r_grid, against the bound
    (1/sqrt N) ||Pi||_{x_1..x_N} + 2r sup|x_k| at N = point_count points spaced by spread.
    """
    r_grid = [float(r) for r in r_grid]
    if any(b >= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be strictly decreasing")
    nets = window_net(grid, center, r_grid, net_size, seed)
    points = separated_points(point_count, spread, 0.0, grid.s)
    reach = max(float(np.linalg.norm(x)) for x in points)

    norms, bounds = [], []
    for r, net in zip(r_grid, nets):
        if not net:
            norms.append(0.0)
            bounds.append(2 * r * reach)
            continue
        values = translated_values(net, samples, [np.zeros(grid.s + 1)])
        norms.append(float(np.max(np.abs(values))))
        npoint = npoint_norm(net, samples, points)
        bounds.append(npoint / np.sqrt(point_count) + 2 * r * reach)

    # scan grids run upward in r
    order = np.argsort(r_grid)
    ascending = [r_grid[i] for i in order]
    values = [norms[i] for i in order]
    bound_values = [bounds[i] for i in order]
    monotone = all(b >= a - tol for a, b in zip(values, values[1:]))
    dominated = all(n <= b + tol for n, b in zip(values, bound_values))
    return ScanResult(
        name="shrinking_norm",
        parameter_name="r",
        grid=ascending,
        values=values,
        deviations=[max(b - n, 0.0) for n, b in zip(values, bound_values)],
        decay={"smallest_r_norm": values[0], "largest_r_norm": values[-1], "reach": reach},
        description="sampled restricted norm with the proof-side bound margin as deviation",
        passed=bool(monotone and dominated),
        note=FAMILY_NOTE,
    )


def content_limit_check(space: TruncatedFockSpace, E: float, samples: Sequence[WeylSample], epsilon: float,
                        net_size: int, seed: int) -> InequalityReport:
    """Below the mass gap the sampled epsilon-content of Pi_E is one."""
    net = functional_net(space, E, net_size, seed)
    theta = build_theta(net, samples, [np.zeros(space.modes.grid.s + 1)])
    count = epsilon_content_bruteforce(theta, epsilon)
    return InequalityReport(
        name="content_limit",
        lhs=float(count),
        rhs=1.0,
        parameters={"E": E, "epsilon": epsilon, "net": len(net), "m": space.modes.grid.m},
        conditions={"below_gap": E < space.modes.grid.m},
    )
