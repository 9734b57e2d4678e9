"""Configuration loading, validation and unit conversion.

Config files are YAML with nested sections. Quantities carry their unit in
the key suffix: ``*_dbm`` (decibel-milliwatts), ``*_db`` (decibels),
``*_deg`` (degrees) and ``*_rad``/``*_m`` for radians/meters. Everything is
converted at ingestion: powers to linear milliwatts, angles to radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from .optimizer import SolverOptions


class ConfigError(ValueError):
    """Invalid or missing configuration content."""


def dbm_to_mw(value_dbm: float) -> float:
    return 10.0 ** (value_dbm / 10.0)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Scenario constants: array sizes, budgets, pattern exponents.

    The default reference gain is the 1 m free-space loss at a mid-band
    carrier (~13 GHz), which puts the scenario at moderate SNR where
    deployment geometry visibly shapes the rates.
    """

    bs_antennas: int = 8
    surface_elements: int = 20
    users: int = 4
    p_max: float = dbm_to_mw(20.0)        # linear mW
    noise_power: float = dbm_to_mw(-70.0)  # linear mW
    ref_gain: float = db_to_linear(-55.0)  # linear
    q_bs: float = 20.0
    q_user: float = 20.0
    q_surface: float = 3.0
    rician_bs_surface: float = 10.0        # linear
    rician_surface_user: float = 10.0      # linear

    def __post_init__(self):
        if min(self.bs_antennas, self.surface_elements, self.users) < 1:
            raise ConfigError("antenna/element/user counts must be >= 1")
        if self.p_max <= 0 or self.noise_power <= 0 or self.ref_gain <= 0:
            raise ConfigError("powers and reference gain must be positive")
        if min(self.q_bs, self.q_user, self.q_surface) < 0:
            raise ConfigError("directivity exponents must be >= 0")
        if min(self.rician_bs_surface, self.rician_surface_user) < 0:
            raise ConfigError("Rician factors must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment family needs, units already canonical."""

    system: SystemConfig = field(default_factory=SystemConfig)
    region_x: tuple = (0.0, 100.0)
    region_y: tuple = (0.0, 100.0)
    bs_position: tuple = (0.0, 0.0, 0.0)
    placements: tuple = ((50.0, 50.0),)
    grid_nx: int = 5
    grid_ny: int = 5
    altitudes: tuple = (40.0,)
    etas: tuple = (0.0,)                    # radians
    architectures: tuple = ("ris", "star")
    trials: int = 1
    master_seed: int = 0
    freeze_users: bool = False
    workers: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.region_x[1] <= self.region_x[0] or self.region_y[1] <= self.region_y[0]:
            raise ConfigError("region must be nondegenerate")
        if self.grid_nx < 1 or self.grid_ny < 1:
            raise ConfigError("grid dimensions must be >= 1")
        if not self.altitudes or min(self.altitudes) <= 0:
            raise ConfigError("altitudes must be positive")
        for a in self.architectures:
            if a not in ("ris", "star"):
                raise ConfigError(f"unknown architecture {a!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def grid_points(self):
        """Cell-center placements of the position grid over the region."""
        x0, x1 = self.region_x
        y0, y1 = self.region_y
        xs = x0 + (np.arange(self.grid_nx) + 0.5) * (x1 - x0) / self.grid_nx
        ys = y0 + (np.arange(self.grid_ny) + 0.5) * (y1 - y0) / self.grid_ny
        return [(float(x), float(y)) for x in xs for y in ys]

    def resolved_dict(self) -> dict:
        """Plain-type view of the canonical configuration (for manifests)."""
        d = asdict(self)
        d["system"] = asdict(self.system)
        d["solver"] = asdict(self.solver)
        return d


_SCALAR_UNITS = (
    # (canonical field, key base, converter for each accepted suffix)
    ("p_max", "p_max", {"dbm": dbm_to_mw, "mw": float}),
    ("noise_power", "noise", {"dbm": dbm_to_mw, "mw": float}),
    ("ref_gain", "ref_gain", {"db": db_to_linear, "linear": float}),
    ("rician_bs_surface", "rician_bs_surface", {"db": db_to_linear, "linear": float}),
    ("rician_surface_user", "rician_surface_user", {"db": db_to_linear, "linear": float}),
)


def _system_from_dict(raw: dict) -> SystemConfig:
    kwargs = {}
    for name in ("bs_antennas", "surface_elements", "users",
                 "q_bs", "q_user", "q_surface"):
        if name in raw:
            kwargs[name] = raw[name]
    for target, base, suffixes in _SCALAR_UNITS:
        hits = [(s, raw[f"{base}_{s}"]) for s in suffixes if f"{base}_{s}" in raw]
        if len(hits) > 1:
            raise ConfigError(f"multiple units given for {base}: "
                              + ", ".join(s for s, _ in hits))
        if hits:
            suffix, value = hits[0]
            kwargs[target] = suffixes[suffix](float(value))
    known = set(kwargs) | {f"{base}_{s}" for _, base, sfx in _SCALAR_UNITS for s in sfx}
    known |= {"bs_antennas", "surface_elements", "users", "q_bs", "q_user", "q_surface"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown system keys: {sorted(unknown)}")
    try:
        return SystemConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _angles_from(raw: dict, base: str, default):
    deg = raw.get(f"{base}_deg")
    rad = raw.get(f"{base}_rad")
    if deg is not None and rad is not None:
        raise ConfigError(f"give {base} in degrees or radians, not both")
    if deg is not None:
        values = np.atleast_1d(np.asarray(deg, dtype=float))
        return tuple(np.deg2rad(values).tolist())
    if rad is not None:
        return tuple(float(v) for v in np.atleast_1d(np.asarray(rad, dtype=float)))
    return default


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    return experiment_config_from_dict(raw)


def experiment_config_from_dict(raw: dict) -> ExperimentConfig:
    system = _system_from_dict(raw.get("system", {}) or {})

    region = raw.get("region", {}) or {}
    region_x = tuple(float(v) for v in region.get("x", (0.0, 100.0)))
    region_y = tuple(float(v) for v in region.get("y", (0.0, 100.0)))
    if len(region_x) != 2 or len(region_y) != 2:
        raise ConfigError("region.x and region.y must be [low, high] pairs")

    surface = raw.get("surface", {}) or {}
    placements = surface.get("positions", [[50.0, 50.0]])
    placements = tuple((float(p[0]), float(p[1])) for p in placements)
    grid = surface.get("grid", {}) or {}
    altitudes = tuple(float(h) for h in np.atleast_1d(
        surface.get("altitudes_m", [40.0])))
    etas = _angles_from(surface, "eta", (0.0,))

    solver_raw = dict(raw.get("solver", {}) or {})
    try:
        solver = SolverOptions(**solver_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver options: {exc}") from exc

    arch = raw.get("architectures", ["ris", "star"])
    if isinstance(arch, str):
        arch = [arch]

    try:
        return ExperimentConfig(
            system=system,
            region_x=region_x,
            region_y=region_y,
            bs_position=tuple(float(v) for v in raw.get("bs_position", (0.0, 0.0, 0.0))),
            placements=placements,
            grid_nx=int(grid.get("nx", 5)),
            grid_ny=int(grid.get("ny", 5)),
            altitudes=altitudes,
            etas=etas,
            architectures=tuple(str(a).lower() for a in arch),
            trials=int(raw.get("trials", 1)),
            master_seed=int(raw.get("master_seed", 0)),
            freeze_users=bool(raw.get("freeze_users", False)),
            workers=int(raw.get("workers", 1)),
            solver=solver,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
