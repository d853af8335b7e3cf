"""Experiment configuration files (TOML).

A config may be as small as ``course = "BE1"``. Every other value falls back
to the documented defaults, and the fully resolved form is what gets echoed
into each run's ``run.meta``.

Layout::

    course = "BE1"              # or: courses = ["BE1", "BE2"]
    backend = "dynamic"         # or: backends = [...]; "both" runs both filters
    seed = 0                    # or: seeds = [0, 1, 2] / seed_count = 10

    [experiment]  output_dir, jobs, plot_data
    [run]         dt_physics, filter_rate, timeout, integrator, control_source,
                  thrust_table, thrust_clamp, printed_heave
    [vehicle]     any VehicleParams field (m, B, Xdu, Xuu, ...)
    [sensors]     any SensorConfig field
    [controller]  any ControllerConfig field
    [filter]      q, p0, joseph, velocity_guard
"""

import itertools
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import ControllerConfig
from .dynamics import VehicleParams
from .estimation import FilterConfig
from .evaluation import BUILTIN_COURSES
from .sensors import SensorConfig
from .simcore import RunConfig

DEFAULT_BACKENDS = ("dynamic", "kinematic")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every violation found."""

    def __init__(self, problems: Sequence[str], path: Optional[Path] = None):
        self.problems = list(problems)
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(self.problems))


@dataclass(frozen=True)
class ExperimentSpec:
    """A resolved grid of runs plus output options."""

    runs: Tuple[RunConfig, ...]
    output_dir: Path
    jobs: int = 1
    plot_data: bool = False

    def grid(self) -> List[Tuple[str, str, str, int]]:
        return [(r.run_id, r.course, r.backend, r.seed) for r in self.runs]


_RUN_KEYS = {"dt_physics", "filter_rate", "timeout", "integrator", "control_source",
             "thrust_table", "thrust_clamp", "printed_heave"}
_TOP_KEYS = {"course", "courses", "backend", "backends", "seed", "seeds", "seed_count",
             "experiment", "run", "vehicle", "sensors", "controller", "filter"}
_EXPERIMENT_KEYS = {"output_dir", "jobs", "plot_data"}


def _section(cls, data: Dict[str, Any], name: str, problems: List[str]):
    allowed = {f.name: f for f in fields(cls)}
    kw = {}
    for key, val in data.items():
        f = allowed.get(key)
        if f is None:
            problems.append(f"[{name}] unknown field {key!r}")
            continue
        if f.type is bool:
            if not isinstance(val, bool):
                problems.append(f"[{name}] {key} must be a boolean")
                continue
        elif isinstance(val, bool) or not isinstance(val, (int, float)):
            problems.append(f"[{name}] {key} must be a number")
            continue
        else:
            val = float(val)
        kw[key] = val
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        problems.append(f"[{name}] {exc}")
        return cls()


def _as_list(data, single: str, plural: str, default, problems) -> list:
    if single in data and plural in data:
        problems.append(f"give either {single!r} or {plural!r}, not both")
    if plural in data:
        val = data[plural]
        if not isinstance(val, list) or not val:
            problems.append(f"{plural} must be a nonempty list")
            return list(default)
        return val
    if single in data:
        return [data[single]]
    return list(default)


def _resolve_path(value: Optional[str], base: Path) -> Optional[str]:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else (base / p))


def load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"], path) from exc
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"], path) from exc


def parse_config(
    path, seed: Optional[int] = None, backend: Optional[str] = None, output_dir: Optional[str] = None
) -> ExperimentSpec:
    """Read a TOML experiment file into a fully resolved ExperimentSpec.

    ``seed`` and ``backend`` override the file's grid (CLI ``--seed`` and
    ``--backend``). Raises ConfigError listing every problem found.
    """
    path = Path(path)
    data = load_toml(path)
    return build_spec(data, base=path.parent, seed=seed, backend=backend, output_dir=output_dir, path=path)


def build_spec(data: dict, base: Path = Path("."), seed=None, backend=None, output_dir=None, path=None) -> ExperimentSpec:
    problems: List[str] = []
    for key in data:
        if key not in _TOP_KEYS:
            problems.append(f"unknown top-level key {key!r}")

    courses = _as_list(data, "course", "courses", ["BE1"], problems)
    backends = [backend] if backend else _as_list(data, "backend", "backends", DEFAULT_BACKENDS, problems)
    if seed is not None:
        seeds = [seed]
    elif "seed_count" in data:
        n = data["seed_count"]
        first = data.get("seed", 0)
        if not isinstance(n, int) or n < 1:
            problems.append("seed_count must be a positive integer")
            n = 1
        seeds = list(range(first, first + n))
    else:
        seeds = _as_list(data, "seed", "seeds", [0], problems)
    for s in seeds:
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            problems.append(f"seed {s!r} must be a non-negative integer")
    for b in backends:
        if b not in ("dynamic", "kinematic", "both"):
            problems.append(f"backend {b!r} must be dynamic, kinematic or both")
    resolved_courses = []
    for c in courses:
        if not isinstance(c, str):
            problems.append(f"course {c!r} must be a string")
            continue
        resolved_courses.append(c if c in BUILTIN_COURSES else _resolve_path(c, base))

    exp = data.get("experiment", {})
    for key in exp:
        if key not in _EXPERIMENT_KEYS:
            problems.append(f"[experiment] unknown field {key!r}")
    jobs = exp.get("jobs", 1)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        problems.append("[experiment] jobs must be a positive integer")
        jobs = 1
    plot_data = exp.get("plot_data", False)
    if not isinstance(plot_data, bool):
        problems.append("[experiment] plot_data must be a boolean")
        plot_data = False
    out = Path(output_dir) if output_dir else Path(_resolve_path(exp.get("output_dir", "runs"), base))

    params = _section(VehicleParams, data.get("vehicle", {}), "vehicle", problems)
    sensors = _section(SensorConfig, data.get("sensors", {}), "sensors", problems)
    controller = _section(ControllerConfig, data.get("controller", {}), "controller", problems)
    filt = _section(FilterConfig, data.get("filter", {}), "filter", problems)

    run_kw = {}
    for key, val in data.get("run", {}).items():
        if key not in _RUN_KEYS:
            problems.append(f"[run] unknown field {key!r}")
        elif key in ("integrator", "control_source"):
            run_kw[key] = str(val)
        elif key == "thrust_table":
            run_kw[key] = _resolve_path(str(val), base)
        elif key == "printed_heave":
            if not isinstance(val, bool):
                problems.append("[run] printed_heave must be a boolean")
            else:
                run_kw[key] = val
        elif isinstance(val, bool) or not isinstance(val, (int, float)):
            problems.append(f"[run] {key} must be a number")
        else:
            run_kw[key] = float(val)

    template = RunConfig(params=params, sensors=sensors, controller=controller, filter=filt, **run_kw)
    runs = tuple(
        replace(template, course=c, backend=b, seed=int(s))
        for c, b, s in itertools.product(resolved_courses, backends, seeds)
        if isinstance(s, int)
    )
    if not runs:
        problems.append("the experiment grid is empty")
    seen = set()
    for r in runs:
        if r.run_id in seen:
            problems.append(f"duplicate run id {r.run_id!r}")
        seen.add(r.run_id)
    # validate one representative per course; the rest only differ by backend/seed
    checked = set()
    for r in runs:
        if r.course in checked:
            continue
        checked.add(r.course)
        for p in r.violations():
            if p not in problems:
                problems.append(p)
    if problems:
        raise ConfigError(problems, path)
    return ExperimentSpec(runs, out, jobs, plot_data)
