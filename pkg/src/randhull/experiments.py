"""Experiment configs, result records and their persistence.

A config is a TOML document::

    experiment_id = "ball-d2-area"
    j = 2
    n_grid = [32, 64, 128]
    reps = 2000
    y_samples = 200            # optional, projection route only
    routes = ["Direct", "Projection"]
    master_seed = 7

    [body]
    kind = "ball"
    d = 2
    radius = 1.0

    [density]                  # optional, defaults to uniform
    kind = "uniform"

    [tolerance]                # optional
    route_sigma = 3.0
    rate_band = [-2.2, -1.8]
    predict_rel = 0.1

Unknown keys anywhere are errors; every error names the offending field.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import json
import math
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .bodies import BODY_KINDS, Body, body_from_params
from .errors import CalibrationMissing, ConfigError, HypothesisViolation, RouteError
from .estimators import PROJECTION, ROUTES, Calibration, deficit, direct_route
from .functionals import limit_integral, schuett_werner_constant
from .linalg import SeedSpec
from .results import Estimate
from .sampling import Density, density_from_params

# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class Tolerances:
    route_sigma: float = 3.0
    rate_band: tuple[float, float] | None = None
    predict_rel: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    body: dict
    j: int
    n_grid: tuple[int, ...]
    reps: int
    master_seed: int
    density: dict = field(default_factory=lambda: {"kind": "uniform"})
    routes: tuple[str, ...] = ()
    y_samples: int = 200
    tolerance: Tolerances = Tolerances()

    def make_body(self) -> Body:
        return body_from_params(self.body)

    def make_density(self) -> Density:
        return density_from_params(self.density)


_TOP_KEYS = {"experiment_id", "body", "density", "j", "n_grid", "reps", "y_samples", "routes",
             "master_seed", "tolerance"}
_REQUIRED = ("experiment_id", "body", "j", "n_grid", "reps", "master_seed")
_TOL_KEYS = {f.name for f in dataclasses.fields(Tolerances)}


def _int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path)
    return value


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed config mapping and build an ExperimentConfig."""
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError("unknown key", key)
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError("missing required key", key)

    exp_id = raw["experiment_id"]
    if not isinstance(exp_id, str) or not exp_id or "," in exp_id or "\n" in exp_id:
        raise ConfigError("must be a nonempty string without commas or newlines", "experiment_id")

    if not isinstance(raw["body"], dict):
        raise ConfigError("expected a table", "body")
    kind = raw["body"].get("kind")
    if kind not in BODY_KINDS:
        raise ConfigError(f"unknown body kind {kind!r}; expected one of {sorted(BODY_KINDS)}", "body.kind")
    allowed = {f.name for f in dataclasses.fields(BODY_KINDS[kind])} | {"kind", "d"}
    for key in raw["body"]:
        if key not in allowed:
            raise ConfigError("unknown key", f"body.{key}")
    try:
        body = body_from_params(raw["body"])
    except TypeError as exc:
        raise ConfigError(str(exc), "body") from exc
    except ValueError as exc:
        raise ConfigError(str(exc), "body") from exc

    density_raw = raw.get("density", {"kind": "uniform"})
    if not isinstance(density_raw, dict):
        raise ConfigError("expected a table", "density")
    try:
        density = density_from_params(density_raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "density") from exc
    try:
        density.validate(body)
    except HypothesisViolation as exc:
        raise ConfigError(str(exc), "density") from exc

    j = _int(raw["j"], "j", 1)
    if j > body.d:
        raise ConfigError(f"order must be at most d={body.d}", "j")

    grid = raw["n_grid"]
    if not isinstance(grid, list) or not grid:
        raise ConfigError("expected a nonempty list of integers", "n_grid")
    grid = tuple(_int(v, f"n_grid[{i}]", 1) for i, v in enumerate(grid))
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("must be strictly increasing", "n_grid")

    reps = _int(raw["reps"], "reps", 2)
    y_samples = _int(raw.get("y_samples", 200), "y_samples", 1)
    seed = _int(raw["master_seed"], "master_seed", 0)
    if seed >= 2**64:
        raise ConfigError("must fit in an unsigned 64-bit integer", "master_seed")

    routes = raw.get("routes")
    if routes is None:
        try:
            routes = [direct_route(j, body.d)]
        except RouteError:
            routes = [PROJECTION]
    if not isinstance(routes, list) or not routes:
        raise ConfigError("expected a nonempty list", "routes")
    for i, r in enumerate(routes):
        if r not in ROUTES:
            raise ConfigError(f"unknown route {r!r}; expected one of {list(ROUTES)}", f"routes[{i}]")
        if r != PROJECTION:
            try:
                applicable = direct_route(j, body.d)
            except RouteError:
                applicable = None
            if applicable != r:
                raise ConfigError(f"route {r} does not apply to j={j}, d={body.d}", f"routes[{i}]")
    if len(set(routes)) != len(routes):
        raise ConfigError("duplicate route", "routes")

    tol_raw = raw.get("tolerance", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError("expected a table", "tolerance")
    unknown = set(tol_raw) - _TOL_KEYS
    if unknown:
        raise ConfigError("unknown key", f"tolerance.{sorted(unknown)[0]}")
    band = tol_raw.get("rate_band")
    if band is not None:
        if not isinstance(band, list) or len(band) != 2:
            raise ConfigError("expected [low, high]", "tolerance.rate_band")
        band = (_num(band[0], "tolerance.rate_band[0]"), _num(band[1], "tolerance.rate_band[1]"))
        if band[0] >= band[1]:
            raise ConfigError("low must be below high", "tolerance.rate_band")
    tol = Tolerances(
        route_sigma=_num(tol_raw.get("route_sigma", 3.0), "tolerance.route_sigma"),
        rate_band=band,
        predict_rel=_num(tol_raw.get("predict_rel", 0.1), "tolerance.predict_rel"),
    )
    return ExperimentConfig(exp_id, dict(raw["body"]), j, grid, reps, seed, dict(density_raw),
                            tuple(routes), y_samples, tol)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}", str(path)) from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class ResultRecord:
    experiment_id: str
    body_kind: str
    d: int
    j: int
    density_kind: str
    n: int
    route: str
    reps: int
    deficit_mean: float
    deficit_stderr: float
    predicted: float | None
    wall_time_s: float
    master_seed: int
    git_or_build_id: str


CSV_COLUMNS = tuple(f.name for f in dataclasses.fields(ResultRecord))
_INT_COLUMNS = {"d", "j", "n", "reps", "master_seed"}
_FLOAT_COLUMNS = {"deficit_mean", "deficit_stderr", "wall_time_s"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def parse_csv(text: str) -> list[ResultRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValueError(f"CSV header must be {','.join(CSV_COLUMNS)}")
    out = []
    for row in reader:
        if not row:
            continue
        vals = {}
        for name, raw in zip(CSV_COLUMNS, row):
            if name in _INT_COLUMNS:
                vals[name] = int(raw)
            elif name in _FLOAT_COLUMNS:
                vals[name] = float(raw)
            elif name == "predicted":
                vals[name] = float(raw) if raw else None
            else:
                vals[name] = raw
        out.append(ResultRecord(**vals))
    return out


def read_records(path) -> list[ResultRecord]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def atomic_write_text(path, text: str):
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def append_records(path, records):
    """Append rows to a CSV (creating it with a header) without ever exposing a partial row."""
    path = Path(path)
    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    if existing:
        parse_csv(existing)  # refuse to extend a file with a foreign layout
        text = existing + emit_csv(records, header=False)
    else:
        text = emit_csv(records)
    atomic_write_text(path, text)


def partial_marker(path) -> Path:
    return Path(str(path) + ".partial")


def build_id() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from importlib import metadata

    try:
        return "build-" + metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "build-unknown"


# ---------------------------------------------------------------------------
# calibration store


def _store_key(j: int, d: int) -> str:
    return f"j={j},d={d}"


def load_store(path) -> dict:
    path = Path(path)
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def save_calibration(path, cal: Calibration, reps: int, master_seed: int):
    store = load_store(path)
    store[_store_key(cal.j, cal.d)] = {
        "j": cal.j,
        "d": cal.d,
        "c": cal.c_jd,
        "stderr": cal.stderr,
        "n_grid": list(cal.n_grid),
        "kappa": cal.kappa,
        "radius": cal.radius,
        "reps": reps,
        "master_seed": master_seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "build": build_id(),
    }
    atomic_write_text(path, json.dumps(store, indent=2, sort_keys=True) + "\n")
    return store[_store_key(cal.j, cal.d)]


def lookup_constant(j: int, d: int, store_path=None) -> tuple[float, float, str]:
    """(c, stderr, source) for order j in dimension d."""
    if j == d:
        return schuett_werner_constant(d), 0.0, "closed form"
    if store_path is not None:
        entry = load_store(store_path).get(_store_key(j, d))
        if entry is not None:
            return float(entry["c"]), float(entry["stderr"]), f"calibrated {entry['timestamp']}"
    raise CalibrationMissing(f"no calibrated constant for (j={j}, d={d}); run the calibrate subcommand")


def predicted_coefficient(body: Body, density: Density, j: int, store_path=None):
    """c * I_j, or None when the asymptotic law does not apply or no constant is known."""
    if body.rolling_radius is None:
        return None
    try:
        c, _, _ = lookup_constant(j, body.d, store_path)
    except CalibrationMissing:
        return None
    return c * limit_integral(body, density, j).value


# ---------------------------------------------------------------------------
# simulate


@dataclass
class SimulationOutcome:
    records: list
    disagreements: list  # (n, route_a, route_b, z)

    @property
    def consistent(self) -> bool:
        return not self.disagreements


def cell_seed(config: ExperimentConfig, n_index: int, route: str) -> SeedSpec:
    return SeedSpec(config.master_seed, n_index * len(ROUTES) + ROUTES.index(route))


def run_simulation(config: ExperimentConfig, threads: int = 1, store_path=None, out=None,
                   log=print) -> SimulationOutcome:
    """Run every (n, route) cell; rows are appended to ``out`` as each cell finishes."""
    body, density = config.make_body(), config.make_density()
    coeff = predicted_coefficient(body, density, config.j, store_path)
    expo = 2.0 / (body.d - 1)
    bid = build_id()
    marker = partial_marker(out) if out is not None else None
    records = []
    disagreements = []
    if marker is not None:
        atomic_write_text(marker, f"experiment_id={config.experiment_id}\nstatus=running\n")
    try:
        for i, n in enumerate(config.n_grid):
            row_ests = {}
            for route in config.routes:
                t0 = time.perf_counter()
                est = deficit(body, density, config.j, n, config.reps, cell_seed(config, i, route),
                              route=route, y_samples=config.y_samples, threads=threads)
                wall = time.perf_counter() - t0
                row_ests[route] = est
                rec = ResultRecord(
                    experiment_id=config.experiment_id, body_kind=body.kind, d=body.d, j=config.j,
                    density_kind=density.kind, n=n, route=route, reps=config.reps,
                    deficit_mean=est.mean, deficit_stderr=est.stderr,
                    predicted=None if coeff is None else coeff * n**-expo,
                    wall_time_s=round(wall, 4), master_seed=config.master_seed, git_or_build_id=bid,
                )
                records.append(rec)
                if out is not None:
                    append_records(out, [rec])
            routes = list(row_ests)
            for a in range(len(routes)):
                for b in range(a + 1, len(routes)):
                    z = row_ests[routes[a]].z_against(row_ests[routes[b]])
                    if z > config.tolerance.route_sigma:
                        disagreements.append((n, routes[a], routes[b], z))
    except BaseException as exc:
        if marker is not None:
            atomic_write_text(marker, f"experiment_id={config.experiment_id}\nstatus=partial\n"
                                      f"rows_written={len(records)}\nerror={type(exc).__name__}: {exc}\n")
        raise
    if marker is not None and marker.exists():
        marker.unlink()
    log(format_table(records))
    return SimulationOutcome(records, disagreements)


def format_table(records) -> str:
    lines = [f"{'n':>7} {'route':>10} {'deficit':>13} {'stderr':>10} {'predicted':>13} {'ratio':>7} {'time':>8}"]
    for r in records:
        pred = "-" if r.predicted is None else f"{r.predicted:.6g}"
        ratio = "-" if r.predicted is None else f"{r.deficit_mean / r.predicted:.4f}"
        lines.append(f"{r.n:>7} {r.route:>10} {r.deficit_mean:>13.6g} {r.deficit_stderr:>10.3g} "
                     f"{pred:>13} {ratio:>7} {r.wall_time_s:>7.2f}s")
    return "\n".join(lines)


def records_to_pairs(records, route: str | None = None):
    """(n, Estimate) pairs for rate fitting; one route only."""
    routes = sorted({r.route for r in records})
    if route is None:
        if len(routes) != 1:
            raise ValueError(f"records hold several routes {routes}; pick one")
        route = routes[0]
    return [(r.n, Estimate(r.deficit_mean, r.deficit_stderr, r.reps, r.n, r.route))
            for r in records if r.route == route]


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else math.inf
