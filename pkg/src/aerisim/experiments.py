"""Config-driven Monte Carlo trials and parameter sweeps.

Three experiment families: a fixed-placement convergence run (per-iteration
traces), a position grid over the deployment region at each altitude, and
an altitude/orientation sweep at fixed horizontal positions. Records are
fully determined by (config, master_seed): user positions and fading draws
are paired across architectures and orientations at the same trial, while
the solver initialization gets its own per-record stream.
"""

from __future__ import annotations

import json
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .channel import build_channel_set
from .config import ExperimentConfig
from .geometry import SurfaceKind, SurfaceOrientation, build_scenario
from .optimizer import SolverDiagnosticError, solve

TAG_USERS = 0x55AA01
TAG_FADING = 0x55AA02
TAG_SOLVER = 0x55AA03

ARCH_CODE = {"ris": 0, "star": 1}

SEED_RULE = (
    "uint64 seeds fold numpy SeedSequence entropy words: "
    "user positions <- [master_seed, trial (0 when freeze_users), 0x55AA01]; "
    "fading <- [master_seed, trial, 0x55AA02], then per-link substreams "
    "inside the channel builder; solver init <- [master_seed, bits(x), "
    "bits(y), bits(altitude), arch_code, bits(eta; 0 for ris), trial, "
    "0x55AA03]. bits() is the IEEE-754 binary64 bit pattern; arch_code: "
    "ris=0, star=1."
)

TABLE_COLUMNS = (
    "architecture", "x_m", "y_m", "altitude_m", "eta_rad", "trial",
    "channel_seed", "solver_seed", "sum_rate", "per_user_rates",
    "outer_iterations", "status", "power_slack", "pdd_residual",
    "energy_residual", "coupling_residual",
)

TRACE_COLUMNS = (
    "architecture", "eta_rad", "trial", "outer_iteration",
    "objective", "sum_rate", "pdd_violation", "rho",
)


@dataclass
class SweepRecord:
    """One solved (placement, architecture, orientation, trial) cell."""

    architecture: str
    x: float
    y: float
    altitude: float
    eta: float
    trial: int
    channel_seed: int
    solver_seed: int
    sum_rate: float
    per_user_rates: tuple
    outer_iterations: int
    status: str
    power_slack: float
    pdd_residual: float
    energy_residual: float
    coupling_residual: float
    wall_time_s: float = 0.0  # measured, never persisted


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def _fold_seed(words) -> int:
    ss = np.random.SeedSequence([int(w) for w in words])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_seeds(config: ExperimentConfig, x: float, y: float, altitude: float,
                 architecture: str, eta: float, trial: int):
    """(channel_seed, solver_seed, users_seed_words) for one record."""
    pos_trial = 0 if config.freeze_users else trial
    users_words = [config.master_seed, pos_trial, TAG_USERS]
    channel_seed = _fold_seed([config.master_seed, trial, TAG_FADING])
    eta_bits = 0 if architecture == "ris" else _float_bits(eta)
    solver_seed = _fold_seed([
        config.master_seed, _float_bits(x), _float_bits(y),
        _float_bits(altitude), ARCH_CODE[architecture], eta_bits,
        trial, TAG_SOLVER])
    return channel_seed, solver_seed, users_words


def _draw_users(config: ExperimentConfig, users_words) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(users_words))
    k = config.system.users
    xs = rng.uniform(config.region_x[0], config.region_x[1], k)
    ys = rng.uniform(config.region_y[0], config.region_y[1], k)
    return np.column_stack([xs, ys, np.zeros(k)])


def _execute(config: ExperimentConfig, x: float, y: float, altitude: float,
             architecture: str, eta: float, trial: int):
    """Build geometry and channels, run the solver, return (record, result)."""
    channel_seed, solver_seed, users_words = derive_seeds(
        config, x, y, altitude, architecture, eta, trial)
    users = _draw_users(config, users_words)

    if architecture == "star":
        orientation = SurfaceOrientation(SurfaceKind.VERTICAL_STAR, eta)
    else:
        orientation = SurfaceOrientation(SurfaceKind.HORIZONTAL_RIS)
    opts = replace(config.solver, mode=architecture)
    record_eta = eta if architecture == "star" else float("nan")
    start = time.perf_counter()
    try:
        scenario = build_scenario(config.bs_position, (x, y, altitude),
                                  users, orientation)
        channels = build_channel_set(config.system, scenario, channel_seed)
        result = solve(channels, config.system.p_max,
                       config.system.noise_power, opts, solver_seed)
    except (SolverDiagnosticError, ValueError):
        # degenerate geometry, non-finite channels or a diverged solve:
        # flag the record and let the sweep continue
        wall = time.perf_counter() - start
        k = config.system.users
        record = SweepRecord(
            architecture=architecture, x=x, y=y, altitude=altitude,
            eta=record_eta, trial=trial, channel_seed=channel_seed,
            solver_seed=solver_seed, sum_rate=float("nan"),
            per_user_rates=tuple([float("nan")] * k), outer_iterations=0,
            status="failed", power_slack=float("nan"),
            pdd_residual=float("nan"), energy_residual=float("nan"),
            coupling_residual=float("nan"), wall_time_s=wall)
        return record, None
    wall = time.perf_counter() - start

    record = SweepRecord(
        architecture=architecture, x=x, y=y, altitude=altitude,
        eta=record_eta, trial=trial, channel_seed=channel_seed,
        solver_seed=solver_seed, sum_rate=result.sum_rate,
        per_user_rates=tuple(float(r) for r in result.per_user_rates),
        outer_iterations=result.outer_iterations, status=result.status,
        power_slack=result.residuals["power_slack"],
        pdd_residual=result.residuals["pdd_violation"],
        energy_residual=result.residuals["energy_split"],
        coupling_residual=result.residuals["coupling"],
        wall_time_s=wall)
    return record, result


def run_single(config: ExperimentConfig, placement, architecture: str,
               eta: float, trial: int, altitude: float | None = None) -> SweepRecord:
    """One record; deterministic given (config, placement, indices)."""
    x, y = placement
    h = config.altitudes[0] if altitude is None else altitude
    record, _ = _execute(config, float(x), float(y), float(h),
                         architecture, float(eta), int(trial))
    return record


def _run_task(args):
    config, task = args
    record, _ = _execute(config, *task)
    return record


def _record_sort_key(r: SweepRecord):
    eta_key = -1.0 if np.isnan(r.eta) else r.eta
    return (r.architecture, r.x, r.y, r.altitude, eta_key, r.trial)


def _execute_all(config: ExperimentConfig, tasks) -> list:
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_task, [(config, t) for t in tasks],
                                    chunksize=max(1, len(tasks) // (4 * config.workers))))
    else:
        records = [_run_task((config, t)) for t in tasks]
    records.sort(key=_record_sort_key)
    return records


def run_position_grid(config: ExperimentConfig) -> list:
    """Both architectures at every grid point and altitude, orientation 0."""
    tasks = []
    for architecture in config.architectures:
        for (x, y) in config.grid_points():
            for altitude in config.altitudes:
                for trial in range(config.trials):
                    tasks.append((x, y, altitude, architecture, 0.0, trial))
    return _execute_all(config, tasks)


def run_altitude_orientation_sweep(config: ExperimentConfig) -> list:
    """Altitude sweep per placement; the vertical surface also sweeps eta."""
    tasks = []
    for architecture in config.architectures:
        etas = config.etas if architecture == "star" else (0.0,)
        for (x, y) in config.placements:
            for altitude in config.altitudes:
                for eta in etas:
                    for trial in range(config.trials):
                        tasks.append((x, y, altitude, architecture, eta, trial))
    return _execute_all(config, tasks)


def run_convergence(config: ExperimentConfig):
    """Per-iteration traces at the first placement and altitude.

    Returns (records, trace_rows); each trace row is one outer iteration of
    one (architecture, eta, trial) run.
    """
    x, y = config.placements[0]
    altitude = config.altitudes[0]
    records, rows = [], []
    for architecture in config.architectures:
        etas = config.etas if architecture == "star" else (0.0,)
        for eta in etas:
            for trial in range(config.trials):
                record, result = _execute(config, x, y, altitude,
                                          architecture, eta, trial)
                records.append(record)
                if result is None:
                    continue
                tr = result.trace
                for i in range(len(tr["objective"])):
                    rows.append((architecture, record.eta, trial, i,
                                 tr["objective"][i], tr["sum_rate"][i],
                                 tr["violation"][i], tr["rho"][i]))
    records.sort(key=_record_sort_key)
    return records, rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _record_row(r: SweepRecord) -> str:
    rates = ";".join(format(v, ".17g") for v in r.per_user_rates)
    fields = (r.architecture, _fmt(r.x), _fmt(r.y), _fmt(r.altitude),
              _fmt(r.eta), str(r.trial), str(r.channel_seed),
              str(r.solver_seed), _fmt(r.sum_rate), rates,
              str(r.outer_iterations), r.status, _fmt(r.power_slack),
              _fmt(r.pdd_residual), _fmt(r.energy_residual),
              _fmt(r.coupling_residual))
    return ",".join(fields)


def persist_results(records, out_dir, name: str, config: ExperimentConfig,
                    extra: dict | None = None):
    """Write the record table and the run manifest; returns their paths.

    Output is byte-stable: records are pre-sorted by a deterministic key,
    floats are printed with 17 significant digits, and the manifest holds
    the fully resolved configuration plus the seed derivation rule. Wall
    times are deliberately not persisted.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / f"{name}_records.csv"
    manifest_path = out_dir / f"{name}_manifest.json"

    lines = [",".join(TABLE_COLUMNS)]
    lines.extend(_record_row(r) for r in records)
    table_path.write_text("\n".join(lines) + "\n")

    manifest = {
        "artifact": "aerisim",
        "version": __version__,
        "command": name,
        "master_seed": config.master_seed,
        "config": config.resolved_dict(),
        "seed_rule": SEED_RULE,
        "columns": list(TABLE_COLUMNS),
        "record_count": len(records),
        "solver_backend": kernels.BACKEND,
    }
    if extra:
        manifest.update(extra)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return table_path, manifest_path


def persist_trace(rows, out_dir, name: str):
    """Write per-iteration trace rows as a delimited table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}_trace.csv"
    lines = [",".join(TRACE_COLUMNS)]
    for arch, eta, trial, it, obj, sr, viol, rho in rows:
        lines.append(",".join((arch, _fmt(float(eta)), str(trial), str(it),
                               _fmt(float(obj)), _fmt(float(sr)),
                               _fmt(float(viol)), _fmt(float(rho)))))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_records(path) -> list:
    """Parse a record table back into SweepRecord objects."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != ",".join(TABLE_COLUMNS):
        raise ValueError(f"unrecognized record table header in {path}")
    records = []
    for line in text[1:]:
        f = line.split(",")
        rates = tuple(float(v) for v in f[9].split(";")) if f[9] else ()
        records.append(SweepRecord(
            architecture=f[0], x=float(f[1]), y=float(f[2]),
            altitude=float(f[3]), eta=float(f[4]), trial=int(f[5]),
            channel_seed=int(f[6]), solver_seed=int(f[7]),
            sum_rate=float(f[8]), per_user_rates=rates,
            outer_iterations=int(f[10]), status=f[11],
            power_slack=float(f[12]), pdd_residual=float(f[13]),
            energy_residual=float(f[14]), coupling_residual=float(f[15])))
    return records
