"""Batch execution of an experiment grid and the CSV outputs built from run logs.

Output layout::

    <output_dir>/
        report.csv                  one row per (course, backend, seed)
        <run_id>/
            run.meta                JSON: resolved config, status, file hashes
            truth.csv sensors.csv commands.csv est_<backend>.csv
            traj_overlay.csv accel_compare.csv   (when plot data is requested)

The report is always rebuilt from the run directories on disk, so ``report``
on an existing output directory reproduces the bytes written by ``run``.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import VehicleParams, accel_reduced
from .evaluation import BUILTIN_COURSES, builtin_course, error_report, load_course
from .simcore import (
    COMMAND_COLUMNS,
    ESTIMATE_COLUMNS,
    SENSOR_COLUMNS,
    TRUTH_COLUMNS,
    DivergenceError,
    RunConfig,
    RunTimeout,
    csv_bytes,
    run_episode,
)
from .thrusters import ThrusterLayout, ThrustLookup, wrench_from_thrusts

REPORT_COLUMNS = ["run_id", "course", "backend", "seed", "status", "total", "x_kalman", "y_kalman",
                  "total_estimate"]
TRAJ_COLUMNS = ["t", "ref_x", "ref_y", "truth_x", "truth_y", "dyn_x", "dyn_y", "kin_x", "kin_y"]
ACCEL_COLUMNS = ["t", "model_du", "imu_ax", "truth_du"]


class IncompleteLogError(RuntimeError):
    """A run directory lacks a file or rows needed for the requested output."""


@dataclass(frozen=True)
class RunOutcome:
    run_id: str
    status: str
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "done"


def execute_run(cfg: RunConfig, output_dir: Union[str, Path], plot_data: bool = False) -> RunOutcome:
    """Run one configuration and write its directory; failures keep the partial log."""
    run_dir = Path(output_dir) / cfg.run_id
    message = ""
    try:
        log = run_episode(cfg)
    except (RunTimeout, DivergenceError) as exc:
        log, message = exc.log, str(exc)
    if log is None:
        return RunOutcome(cfg.run_id, "diverged", message)
    log.write(run_dir)
    if plot_data and log.status == "done":
        emit_plot_data(run_dir)
    return RunOutcome(cfg.run_id, log.status, message)


def _execute(args) -> RunOutcome:
    return execute_run(*args)


def run_experiments(spec, jobs: Optional[int] = None, dry_run: bool = False, out=None) -> List[RunOutcome]:
    """Execute every run of an ExperimentSpec, then write ``report.csv``.

    Runs go to a process pool bounded by ``jobs`` (the spec's value when None).
    With ``dry_run`` the resolved grid is printed to ``out`` and nothing is
    written. Outcomes are returned in grid order.
    """
    if dry_run:
        if out is not None:
            print("run_id,course,backend,seed", file=out)
            for run_id, course, backend, seed in spec.grid():
                print(f"{run_id},{course},{backend},{seed}", file=out)
        return []
    jobs = spec.jobs if jobs is None else jobs
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, spec.output_dir, spec.plot_data) for cfg in spec.runs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_execute, tasks))
    else:
        outcomes = [_execute(t) for t in tasks]
    write_report(spec.output_dir, [cfg.run_id for cfg in spec.runs])
    return outcomes


def _read_csv(path: Path, columns: Sequence[str]) -> np.ndarray:
    if not path.is_file():
        raise IncompleteLogError(f"missing {path.name} in {path.parent}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split(",") != list(columns):
        raise IncompleteLogError(f"{path} has an unexpected header")
    if len(lines) < 2:
        raise IncompleteLogError(f"{path} has no rows")
    # empty cells (absent GPS/depth samples) read as NaN
    return np.genfromtxt(lines[1:], delimiter=",", dtype=float, ndmin=2).reshape(-1, len(columns))


def read_meta(run_dir: Union[str, Path]) -> dict:
    path = Path(run_dir) / "run.meta"
    if not path.is_file():
        raise IncompleteLogError(f"missing run.meta in {run_dir}")
    return json.loads(path.read_text())


def _course_for(config: dict):
    c = config["course"]
    return builtin_course(c) if c in BUILTIN_COURSES else load_course(c)


def _course_label(config: dict) -> str:
    c = config["course"]
    return c if c in BUILTIN_COURSES else Path(c).stem


def run_metrics(run_dir: Union[str, Path]) -> List[list]:
    """Report rows (one per estimator backend) for one run directory."""
    run_dir = Path(run_dir)
    meta = read_meta(run_dir)
    config = meta["config"]
    backends = ("dynamic", "kinematic") if config["backend"] == "both" else (config["backend"],)
    course = _course_for(config)
    rows = []
    try:
        truth = _read_csv(run_dir / "truth.csv", TRUTH_COLUMNS)
    except IncompleteLogError:
        truth = None
    for b in backends:
        row = [meta["run_id"], _course_label(config), b, meta["seed"], meta["status"]]
        try:
            if truth is None:
                raise IncompleteLogError("no truth rows")
            est = _read_csv(run_dir / f"est_{b}.csv", ESTIMATE_COLUMNS)
            rep = error_report(truth[:, 1:3], est[:, 5:7], course.reference)
            row += [rep.total, rep.x_kalman, rep.y_kalman, rep.total_estimate]
        except IncompleteLogError:
            row += [None] * 4
        rows.append(row)
    return rows


def write_report(output_dir: Union[str, Path], run_ids: Optional[Sequence[str]] = None) -> Path:
    """Aggregate run directories into ``report.csv``.

    Without ``run_ids`` every subdirectory holding a ``run.meta`` is included,
    in sorted order.
    """
    output_dir = Path(output_dir)
    if run_ids is None:
        run_ids = sorted(p.parent.name for p in output_dir.glob("*/run.meta"))
    if not run_ids:
        raise IncompleteLogError(f"no run directories under {output_dir}")
    rows = []
    for rid in run_ids:
        rows += run_metrics(output_dir / rid)
    path = output_dir / "report.csv"
    path.write_bytes(_report_bytes(rows))
    return path


def _report_bytes(rows) -> bytes:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(REPORT_COLUMNS)] + [",".join(cell(v) for v in r) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def model_surge_acceleration(run_dir: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, model du, IMU ax) recomputed from the sensor and command logs.

    The model is the reduced four-axis equation evaluated with the DVL
    velocity, gyro yaw rate and the thrust in effect at each sample (the
    command issued on the previous tick; zero on the first).
    """
    run_dir = Path(run_dir)
    config = read_meta(run_dir)["config"]
    params = VehicleParams(**config["params"])
    layout = ThrusterLayout(printed_heave=config["printed_heave"])
    table = config["thrust_table"]
    lookup = ThrustLookup.default() if table is None else ThrustLookup.from_csv(table)
    sensors = _read_csv(run_dir / "sensors.csv", SENSOR_COLUMNS)
    commands = _read_csv(run_dir / "commands.csv", COMMAND_COLUMNS)
    cmd = commands[:, 10:18]
    du = np.empty(len(sensors))
    for k, row in enumerate(sensors):
        held = cmd[k - 1] if 0 < k <= len(cmd) else np.zeros(8)
        tau = wrench_from_thrusts(lookup.thrust(held), layout)
        vel = (row[8], row[9], row[10], row[6])
        du[k] = accel_reduced(vel, tau, params)[0]
    return sensors[:, 0], du, sensors[:, 1]


def emit_plot_data(run_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write ``traj_overlay.csv`` and ``accel_compare.csv`` into a run directory.

    Estimator columns of a backend that did not run are left empty.
    """
    run_dir = Path(run_dir)
    config = read_meta(run_dir)["config"]
    truth = _read_csv(run_dir / "truth.csv", TRUTH_COLUMNS)
    backends = ("dynamic", "kinematic") if config["backend"] == "both" else (config["backend"],)
    est = {b: _read_csv(run_dir / f"est_{b}.csv", ESTIMATE_COLUMNS) for b in backends}
    n = len(truth)
    for b, e in est.items():
        if len(e) != n:
            raise IncompleteLogError(f"est_{b}.csv has {len(e)} rows, truth.csv has {n}")

    # reference point nearest each truth sample, for the overlay
    ref = _course_for(config).reference
    idx = cKDTree(ref).query(truth[:, 1:3])[1]
    traj = []
    for k in range(n):
        row = [truth[k, 0], ref[idx[k], 0], ref[idx[k], 1], truth[k, 1], truth[k, 2]]
        for b in ("dynamic", "kinematic"):
            row += [est[b][k, 5], est[b][k, 6]] if b in est else [None, None]
        traj.append(row)

    t, model_du, imu_ax = model_surge_acceleration(run_dir)
    if len(t) != n:
        raise IncompleteLogError(f"sensors.csv has {len(t)} rows, truth.csv has {n}")
    accel = [[t[k], model_du[k], imu_ax[k], truth[k, 13]] for k in range(n)]

    paths = {"traj_overlay": run_dir / "traj_overlay.csv", "accel_compare": run_dir / "accel_compare.csv"}
    paths["traj_overlay"].write_bytes(csv_bytes(TRAJ_COLUMNS, traj))
    paths["accel_compare"].write_bytes(csv_bytes(ACCEL_COLUMNS, accel))
    return paths
