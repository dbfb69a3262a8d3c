"""
Shared fixtures: a reduced configuration and the numerical objects built from it.
"""
import os
from unittest.mock import patch

import numpy as np
import pytest

from core.config import RunConfig
from core.expansion import NuclearExpansion
from core.fock import build_fock, functional_net, local_observables, select_modes
from core.grid import build_local_subspaces, build_test_family, make_grid
from core.lub import build_damped_restrictions, lub_iterate

SMALL = {
    "n_nodes": 64,
    "p_max": 10.0,
    "family_count": 4,
    "fine_points": 513,
    "modes": 3,
    "n_max": 3,
    "net_size": 6,
    "observable_count": 2,
    "random_trials": 3,
    "deviation_trials": 5,
    "harmonic_modes": 1,
    "integral_points": 8,
    "separations": [2.0],
    "point_counts": [1, 2],
    "delta_values": [5.0],
    "semibound_counts": [2],
    "cluster_points": 3,
    "plancherel_boxes": [2.0, 4.0],
    "plancherel_step": 0.5,
    "content_counts": [2],
    "lattice_max_n": 2,
    "lattice_max_m": 2,
    "additivity_max_n": 3,
    "additivity_max_ce": 2,
    "r_grid": [0.8, 0.4],
    "t_count": 8,
    "shrinking_points": 2,
}


@pytest.fixture
def clean_env():
    """Environment without NUCLAB_ variables."""
    kept = {key: value for key, value in os.environ.items() if not key.upper().startswith("NUCLAB_")}
    with patch.dict(os.environ, kept, clear=True):
        yield


@pytest.fixture(scope="session")
def small_config():
    return RunConfig(**SMALL)


@pytest.fixture(scope="session")
def grid(small_config):
    cfg = small_config
    return make_grid(cfg.s, cfg.p_max, cfg.n_nodes, cfg.m)


@pytest.fixture(scope="session")
def family(small_config, grid):
    return build_test_family(grid, small_config.r, small_config.family_count, small_config.fine_points)


@pytest.fixture(scope="session")
def subspaces(family):
    return build_local_subspaces(family)


@pytest.fixture(scope="session")
def restrictions(small_config, subspaces):
    plus, minus = subspaces
    return build_damped_restrictions(plus, minus, small_config.energy, small_config.beta)


@pytest.fixture(scope="session")
def lub(restrictions):
    return lub_iterate(restrictions["S_E+"], restrictions["S_E-"], restrictions["S_beta+"],
                       restrictions["S_beta-"])


@pytest.fixture(scope="session")
def modes(small_config, lub, grid):
    return select_modes(lub.eigenvectors, lub.eigenvalues, grid, small_config.modes)


@pytest.fixture(scope="session")
def space(small_config, modes):
    return build_fock(modes, small_config.n_max, E_cap=small_config.energy)


@pytest.fixture(scope="session")
def expansion(small_config, space, subspaces):
    plus, minus = subspaces
    return NuclearExpansion(space, plus, minus, small_config.mass_ratio)


@pytest.fixture(scope="session")
def net(small_config, space):
    return functional_net(space, small_config.energy, small_config.net_size, small_config.seed)


@pytest.fixture(scope="session")
def samples(small_config, family):
    return local_observables(family, small_config.observable_count, small_config.seed, small_config.weyl_norm)


@pytest.fixture
def span_vector(expansion):
    """A grid vector inside the retained modes, resolvable in L+ and L-, of norm 0.3."""
    rng = np.random.default_rng(3)
    K = expansion.modes.K
    c = expansion.u_plus @ rng.standard_normal(K) + 1j * (expansion.u_minus @ rng.standard_normal(K))
    return expansion.modes.vectors @ (0.3 * c / np.linalg.norm(c))
