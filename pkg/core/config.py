"""
Run configuration for the nuclearity lab.
Defaults, KEY=value file loading, environment overrides and lossless rendering.
"""
import logging
import os
from typing import Any, Dict, List, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "NUCLAB_"

# Base tolerances; every lookup goes through RunConfig.tol so tol_scale applies.
TOLERANCES: Dict[str, float] = {
    "inequality": 1e-8,
    "psd_floor": 1e-8,
    "orthonormal": 1e-10,
    "j_invariance": 1e-8,
    "lub_norm": 1e-10,
    "expansion": 1e-6,
    "unitarity": 1e-6,
    "ladder_leakage": 1e-6,
    "energy_lowering": 1e-10,
    "deviation": 1e-10,
    "plancherel": 1e-6,
    "box_increment": 1e-4,
    "monotone": 1e-8,
    "decay_slack": 0.1,
    "uniformity": 0.01,
}

ALIASES = {
    "e": "energy",
    "k": "modes",
}


class RunConfig(BaseModel):
    """All inputs of a run. Physical quantities are in units of the mass m."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # grid
    s: int = Field(default=1, ge=1)
    m: float = Field(default=1.0, gt=0)
    p_max: float = Field(default=10.0, gt=0)
    n_nodes: int = Field(default=256, ge=8)
    r: float = Field(default=1.0, gt=0)
    family_count: int = Field(default=8, ge=1)
    fine_points: int = Field(default=2049, ge=65)
    leakage_tol: float = Field(default=1e-8, gt=0)

    # lub
    energy: float = Field(default=2.5, gt=0)
    beta: float = Field(default=0.2, gt=0)
    lub_tol: float = Field(default=1e-10, gt=0)
    lub_n_max: int = Field(default=30, ge=1)

    # fock
    modes: int = Field(default=6, ge=1)
    n_max: int = Field(default=4, ge=1)
    dim_limit: int = Field(default=20000, ge=1)
    weyl_norm: float = Field(default=0.3, gt=0)

    # expansion / bounds
    epsilon: float = Field(default=0.5, gt=0, lt=1)
    p_list: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    # multiples of the support diameter 2r
    separations: List[float] = Field(default_factory=lambda: [2.0, 5.0, 10.0])
    point_counts: List[int] = Field(default_factory=lambda: [1, 2, 3])
    delta_values: List[float] = Field(default_factory=lambda: [5.0, 20.0])
    semibound_counts: List[int] = Field(default_factory=lambda: [2, 4])
    cluster_delta_min: float = Field(default=0.5, gt=0)
    cluster_delta_max: float = Field(default=5.0, gt=0)
    cluster_points: int = Field(default=10, ge=2)
    harmonic_modes: int = Field(default=3, ge=1)
    integral_points: int = Field(default=64, ge=2)
    plancherel_boxes: List[float] = Field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0])
    plancherel_step: float = Field(default=0.1, gt=0)

    # nets and trials
    net_size: int = Field(default=200, ge=1)
    observable_count: int = Field(default=6, ge=1)
    random_trials: int = Field(default=50, ge=1)
    deviation_trials: int = Field(default=100, ge=1)

    # content
    content_epsilon: float = Field(default=0.25, gt=0)
    lattice_max_m: int = Field(default=4, ge=0)
    lattice_max_n: int = Field(default=3, ge=1)
    additivity_max_n: int = Field(default=6, ge=1)
    additivity_max_ce: int = Field(default=4, ge=0)
    theorem_p: float = Field(default=0.5, gt=0)
    content_counts: List[int] = Field(default_factory=lambda: [2, 4, 8])

    # relaxation
    r_grid: List[float] = Field(default_factory=lambda: [0.8, 0.4, 0.2, 0.1])
    window_momentum: float = Field(default=1.0)
    t_max: float = Field(default=20.0, gt=0)
    t_count: int = Field(default=40, ge=4)
    timelike_ratio: float = Field(default=0.5, gt=0)
    shrinking_points: int = Field(default=16, ge=1)

    # run
    seed: int = 20240611
    output_dir: str = "nuclab_report"
    tol_scale: float = Field(default=1.0, gt=0)
    tolerance_overrides: Dict[str, float] = Field(default_factory=dict)

    @field_validator(
        "p_list", "separations", "point_counts", "delta_values", "semibound_counts",
        "plancherel_boxes", "content_counts", "r_grid",
        mode="before",
    )
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("tolerance_overrides", mode="before")
    @classmethod
    def _split_mapping(cls, value: Any) -> Any:
        if isinstance(value, str):
            parsed = {}
            for item in value.split(","):
                if not item.strip():
                    continue
                name, _, number = item.partition(":")
                parsed[name.strip()] = number.strip()
            return parsed
        return value

    @field_validator("p_list")
    @classmethod
    def _check_p_list(cls, value: List[float]) -> List[float]:
        if not value or any(not 0 < p <= 1 for p in value):
            raise ValueError("every p must lie in (0, 1]")
        return value

    @field_validator("r_grid")
    @classmethod
    def _check_r_grid(cls, value: List[float]) -> List[float]:
        if any(r <= 0 for r in value):
            raise ValueError("radii must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("radii must be strictly decreasing")
        return value

    @field_validator("separations", "delta_values", "plancherel_boxes")
    @classmethod
    def _check_positive(cls, value: List[float]) -> List[float]:
        if not value or any(v <= 0 for v in value):
            raise ValueError("values must be positive")
        return value

    @field_validator("point_counts", "semibound_counts", "content_counts")
    @classmethod
    def _check_counts(cls, value: List[int]) -> List[int]:
        if not value or any(v < 1 for v in value):
            raise ValueError("counts must be at least 1")
        return value

    @field_validator("tolerance_overrides")
    @classmethod
    def _check_overrides(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(value) - set(TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerance names: {', '.join(unknown)}")
        if any(v <= 0 for v in value.values()):
            raise ValueError("tolerances must be positive")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.n_nodes % 2:
            raise ValueError("n_nodes: must be even")
        if self.p_max < 4 * self.m:
            raise ValueError("p_max: must be at least 4m")
        if self.cluster_delta_max <= self.cluster_delta_min:
            raise ValueError("cluster_delta_max: must exceed cluster_delta_min")
        return self

    @property
    def mass_ratio(self) -> float:
        """M_E = E/m."""
        return self.energy / self.m

    def tol(self, name: str) -> float:
        """Named tolerance after overrides and tol_scale."""
        if name not in TOLERANCES:
            raise KeyError(f"unknown tolerance: {name}")
        base = self.tolerance_overrides.get(name, TOLERANCES[name])
        return base * self.tol_scale

    def to_env_text(self) -> str:
        """Render the config in the KEY=value file format."""
        lines = []
        for name in type(self).model_fields:
            lines.append(f"{name}={_render(getattr(self, name))}")
        return "\n".join(lines) + "\n"


def _render(value: Any) -> str:
    if isinstance(value, dict):
        return ",".join(f"{k}:{_render(v)}" for k, v in sorted(value.items()))
    if isinstance(value, list):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _normalize(raw: Mapping[str, Optional[str]], source: str) -> Dict[str, str]:
    fields = RunConfig.model_fields
    normalized: Dict[str, str] = {}
    for key, value in raw.items():
        name = key.strip().lower()
        name = ALIASES.get(name, name)
        if name not in fields:
            raise ConfigError(key, f"unknown key in {source}")
        if value is None:
            raise ConfigError(key, f"missing value in {source}")
        normalized[name] = value
    return normalized


def _environment_values(environ: Mapping[str, str]) -> Dict[str, str]:
    values = {}
    for key, value in environ.items():
        if key.upper().startswith(ENV_PREFIX) and key.upper() != f"{ENV_PREFIX}LOG_LEVEL":
            values[key[len(ENV_PREFIX):]] = value
    return _normalize(values, "environment")


def build_config(values: Mapping[str, Any]) -> RunConfig:
    """Validate a mapping of field values, mapping failures to ConfigError."""
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        message = error.get("msg", "invalid value").removeprefix("Value error, ")
        loc = error.get("loc") or ()
        if loc:
            field = str(loc[0])
        else:
            # model-level checks prefix their message with the field name
            field, _, message = message.partition(": ")
        raise ConfigError(field, message) from exc


def parse_config_text(path: str) -> Dict[str, str]:
    """Read a KEY=value config file into normalized field names."""
    if not os.path.exists(path):
        raise ConfigError("config", f"file not found: {path}")
    return _normalize(dotenv_values(path), path)


def load_config(
    path: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Assemble a RunConfig from defaults, a config file, the environment and flags.

    Args:
        path: optional KEY=value file
        environ: environment mapping (defaults to os.environ)
        overrides: command-line values, applied last; None entries are ignored

    Returns:
        Validated RunConfig
    """
    values: Dict[str, Any] = {}
    if path:
        values.update(parse_config_text(path))
        logger.info("Loaded config file %s", path)
    values.update(_environment_values(os.environ if environ is None else environ))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_config(values)
