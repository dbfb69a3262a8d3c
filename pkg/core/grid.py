"""
Discretised single-particle space: momentum grids, test-function families,
the local subspaces L+ and L-, and the conjugation J.

Vectors are stored in weighted coordinates v_i = sqrt(w_i) f~(p_i), so the grid
inner product is the Euclidean one.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from core.errors import GridError

logger = logging.getLogger(__name__)

GRAM_CONDITION_LIMIT = 1e12
RANK_THRESHOLD = 1e-10
SUPPORT_SLACK = 0.05
# transform band used by the support check, in units of 1/radius
EXTENDED_BAND = 400.0
BAND_STEP = 0.25
KERNEL_CHUNK = 256


@dataclass(frozen=True)
class MomentumGrid:
    """Symmetric tensor trapezoid grid on [-P_max, P_max]^s."""

    s: int
    m: float
    p_max: float
    n_nodes: int
    axis: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    mirror: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def omega(self) -> np.ndarray:
        """Dispersion sqrt(|p|^2 + m^2) at every node."""
        return np.sqrt(np.sum(self.nodes ** 2, axis=1) + self.m ** 2)

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def to_weighted(self, values: np.ndarray) -> np.ndarray:
        """Sampled function values to weighted coordinates."""
        return self.sqrt_weights.reshape((-1,) + (1,) * (values.ndim - 1)) * values

    def from_weighted(self, vector: np.ndarray) -> np.ndarray:
        return vector / self.sqrt_weights.reshape((-1,) + (1,) * (vector.ndim - 1))

    def describe(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "m": self.m,
            "p_max": self.p_max,
            "n_nodes": self.n_nodes,
            "dim": self.dim,
            "weight_sum": float(self.weights.sum()),
        }


@dataclass(frozen=True)
class TestFunctionFamily:
    """Momentum-space samples of bump-times-trigonometric test functions."""

    __test__ = False

    r: float
    members: np.ndarray = field(repr=False)
    labels: List[str]
    leakage: np.ndarray = field(repr=False)
    gram_condition: float
    grid: MomentumGrid = field(repr=False)
    band_loss: np.ndarray = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return self.members.shape[1]


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning L+ or L-."""

    columns: np.ndarray = field(repr=False)
    kind: str
    parent: MomentumGrid = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    discarded: np.ndarray = field(repr=False)
    j_defect: float = 0.0

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T

    def project(self, vector: np.ndarray) -> np.ndarray:
        return self.columns @ (self.columns.conj().T @ vector)


def make_grid(s: int, P_max: float, n_nodes: int, m: float) -> MomentumGrid:
    """
    Build the symmetric momentum grid.

    Args:
        s: spatial dimension
        P_max: momentum cutoff, at least 4m
        n_nodes: nodes per axis, even and at least 8
        m: mass

    Returns:
        MomentumGrid with trapezoid weights summing to (2 P_max)^s
    """
    if m <= 0:
        raise GridError(f"mass must be positive, got {m}")
    if s < 1:
        raise GridError(f"dimension must be positive, got {s}")
    if n_nodes < 8 or n_nodes % 2:
        raise GridError(f"n_nodes must be even and at least 8, got {n_nodes}")
    if P_max < 4 * m:
        raise GridError(f"P_max must be at least 4m, got {P_max}")

    axis = np.linspace(-P_max, P_max, n_nodes)
    h = axis[1] - axis[0]
    axis_weights = np.full(n_nodes, h)
    axis_weights[[0, -1]] = h / 2

    mesh = np.meshgrid(*([axis] * s), indexing="ij")
    nodes = np.stack([component.ravel() for component in mesh], axis=1)
    weights = axis_weights
    for _ in range(s - 1):
        weights = np.multiply.outer(weights, axis_weights)
    weights = weights.ravel()

    index = np.arange(n_nodes ** s).reshape((n_nodes,) * s)
    mirror = np.flip(index).ravel()

    grid = MomentumGrid(
        s=s, m=m, p_max=P_max, n_nodes=n_nodes,
        axis=axis, nodes=nodes, weights=weights, mirror=mirror,
    )
    logger.debug("Grid built: %s", grid.describe())
    return grid


def bump(x: np.ndarray, r: float) -> np.ndarray:
    """exp(-r^2/(r^2 - x^2)) on (-r, r), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < r
    out[inside] = np.exp(-r ** 2 / (r ** 2 - x[inside] ** 2))
    return out


def family_labels(count: int) -> List[str]:
    """Generator order cos0, sin1, cos1, sin2, cos2, ..."""
    labels = ["cos0"]
    k = 1
    while len(labels) < count:
        labels.append(f"sin{k}")
        if len(labels) < count:
            labels.append(f"cos{k}")
        k += 1
    return labels[:count]


def _profile(label: str, x: np.ndarray, r: float) -> np.ndarray:
    k = int(label[3:])
    phase = k * np.pi * x / (2 * r)
    trig = np.cos(phase) if label.startswith("cos") else np.sin(phase)
    return bump(x, r) * trig


def _trapezoid_weights(points: np.ndarray) -> np.ndarray:
    step = points[1] - points[0]
    quad = np.full(points.shape, step)
    quad[[0, -1]] = step / 2
    return quad


def _transform_1d(values: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    # unitary transform (2 pi)^(-1/2) int f(x) exp(-ipx) dx by trapezoid
    weighted = _trapezoid_weights(x) * values / np.sqrt(2 * np.pi)
    out = np.empty(p.shape, dtype=complex)
    for start in range(0, p.size, KERNEL_CHUNK):
        block = p[start:start + KERNEL_CHUNK]
        out[start:start + KERNEL_CHUNK] = np.exp(-1j * np.outer(block, x)) @ weighted
    return out


def _support_leakage(values: np.ndarray, x: np.ndarray, radius: float, p_max: float) -> Tuple[float, float]:
    """
    Inverse-transform check of a profile supported in [-radius, radius].

    The transform is taken on a band far wider than the grid, then inverted on
    [-3 radius, 3 radius].

    Returns:
        (mass outside (1 + SUPPORT_SLACK) radius, share of |f~|^2 beyond p_max)
    """
    step = BAND_STEP / radius
    band = np.arange(-EXTENDED_BAND / radius, EXTENDED_BAND / radius + step / 2, step)
    ft = _transform_1d(values, x, band)
    density_p = np.abs(ft) ** 2
    band_loss = float(integrate.trapezoid(np.where(np.abs(band) > p_max, density_p, 0.0), band)
                      / integrate.trapezoid(density_p, band))

    window = np.linspace(-3 * radius, 3 * radius, 1201)
    weighted = _trapezoid_weights(band) * ft / np.sqrt(2 * np.pi)
    rebuilt = np.empty(window.shape, dtype=complex)
    for start in range(0, window.size, KERNEL_CHUNK):
        block = window[start:start + KERNEL_CHUNK]
        rebuilt[start:start + KERNEL_CHUNK] = np.exp(1j * np.outer(block, band)) @ weighted
    density = np.abs(rebuilt) ** 2
    total = integrate.trapezoid(density, window)
    if total <= 0:
        return 0.0, band_loss
    outside = np.abs(window) > (1 + SUPPORT_SLACK) * radius
    return float(integrate.trapezoid(np.where(outside, density, 0.0), window) / total), band_loss


def build_test_family(grid: MomentumGrid, r: float, count: int,
                      fine_points: int = 2049, leakage_tol: float = 1e-8) -> TestFunctionFamily:
    """
    Sample the transforms of `count` smooth functions supported in the ball of radius r.

    For s > 1 each member is a product of one-dimensional profiles of radius r/sqrt(s),
    the first axis carrying the trigonometric factor. Support is checked by inverting
    each transform over a band much wider than the grid; the share of |f~|^2 the grid
    box cuts off is kept separately as band_loss.

    Args:
        grid: momentum grid
        r: localisation radius
        count: number of members
        fine_points: configuration-space quadrature points per axis
        leakage_tol: largest allowed relative mass outside the support

    Returns:
        TestFunctionFamily in weighted coordinates

    Raises:
        GridError: on a singular Gram matrix or leakage above leakage_tol
    """
    if r <= 0:
        raise GridError(f"radius must be positive, got {r}")
    if count < 1:
        raise GridError(f"count must be at least 1, got {count}")
    if r * grid.p_max < 2 * np.pi:
        logger.warning("r*P_max = %.3g is small; transforms are poorly resolved", r * grid.p_max)

    radius = r / np.sqrt(grid.s)
    x = np.linspace(-radius, radius, fine_points)

    labels = family_labels(count)
    base_profile = _profile("cos0", x, radius)
    base = _transform_1d(base_profile, x, grid.axis)
    base_leak, base_loss = _support_leakage(base_profile, x, radius, grid.p_max)

    members = np.empty((grid.dim, count), dtype=complex)
    leakage = np.empty(count)
    band_loss = np.empty(count)
    for k, label in enumerate(labels):
        profile = _profile(label, x, radius)
        values = _transform_1d(profile, x, grid.axis)
        for _ in range(grid.s - 1):
            values = np.multiply.outer(values, base)
        members[:, k] = grid.to_weighted(values.ravel())
        leak, loss = _support_leakage(profile, x, radius, grid.p_max)
        leakage[k] = max(leak, base_leak if grid.s > 1 else 0.0)
        band_loss[k] = max(loss, base_loss if grid.s > 1 else 0.0)

    gram = members.conj().T @ members
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > GRAM_CONDITION_LIMIT:
        raise GridError(f"test family Gram matrix is numerically singular (cond={condition:.3g})")

    worst = float(leakage.max())
    if worst > leakage_tol:
        raise GridError(f"mass outside the support is {worst:.3g} (> {leakage_tol:.1g}); "
                        f"raise fine_points")
    logger.info("Test family: %d members, leakage %.2g, grid band loss up to %.2g",
                count, worst, float(band_loss.max()))

    return TestFunctionFamily(
        r=r, members=members, labels=labels, leakage=leakage,
        gram_condition=condition, grid=grid, band_loss=band_loss,
    )


def _orthonormalize(vectors: np.ndarray, kind: str, grid: MomentumGrid) -> SubspaceBasis:
    u, sigma, _ = linalg.svd(vectors, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0:
        raise GridError(f"{kind} generators are all zero")
    keep = sigma > RANK_THRESHOLD * sigma[0]
    discarded = sigma[~keep]
    if discarded.size:
        logger.warning("%s is rank deficient; discarded singular values %s", kind, discarded.tolist())
    columns = u[:, keep]

    mirrored = apply_conjugation(grid, columns)
    residual = mirrored - columns @ (columns.conj().T @ mirrored)
    j_defect = float(np.max(np.linalg.norm(residual, axis=0))) if columns.size else 0.0
    if j_defect > 1e-8:
        raise GridError(f"{kind} is not invariant under J (defect {j_defect:.3g})")

    return SubspaceBasis(
        columns=columns, kind=kind, parent=grid,
        singular_values=sigma[keep], discarded=discarded, j_defect=j_defect,
    )


def build_local_subspaces(family: TestFunctionFamily) -> Tuple[SubspaceBasis, SubspaceBasis]:
    """Orthonormal bases of L+ = [omega^(-1/2) D~] and L- = [omega^(1/2) D~]."""
    grid = family.grid
    omega = grid.omega[:, None]
    plus = _orthonormalize(family.members / np.sqrt(omega), "L+", grid)
    minus = _orthonormalize(family.members * np.sqrt(omega), "L-", grid)
    return plus, minus


def apply_conjugation(grid: MomentumGrid, v: np.ndarray) -> np.ndarray:
    """(Jv)(p) = conj(v(-p)), acting on the first axis."""
    v = np.asarray(v)
    if v.shape[0] != grid.dim:
        raise GridError(f"vector has {v.shape[0]} rows, grid has {grid.dim} nodes")
    return np.conj(v[grid.mirror])


def translation_phase(grid: MomentumGrid, x: Sequence[float]) -> np.ndarray:
    """Multiplier exp(i(omega x0 - p.x)) of the one-particle translation u_x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.s + 1,):
        raise GridError(f"spacetime point must have {grid.s + 1} components")
    return np.exp(1j * (grid.omega * x[0] - grid.nodes @ x[1:]))


def energy_indicator(grid: MomentumGrid, energy: float) -> np.ndarray:
    """Q_E as a 0/1 vector over nodes."""
    return (grid.omega <= energy).astype(float)
