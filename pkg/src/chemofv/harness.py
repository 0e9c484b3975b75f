"""Experiment harness: TOML configs, initial data, runs, parameter sweeps.

A run config is a TOML file with tables

    [grid]        cells (required), lengths
    [params]      chi, mu, m (required), c_d, lambda0
    [initial]     kind plus per-kind settings
    [solver]      t_end (required), dt_init, dt_max, cfl_safety,
                  snapshot_every, max_linear_iters, linear_tol, positivity_tol
    [diagnostics] p_list, beta_list, tau, entropy_floor, plateau_window,
                  plateau_tol, growth_factor, slope_limit
    [output]      dir, label

Unknown keys anywhere are errors, so typos cannot silently fall back to
defaults.  A sweep spec replaces [grid]/[params] with a [sweep] table of
value lists (m, mu, chi, sup_v0, lambda0, resolution, seed) whose Cartesian
product defines the runs.

Outputs land under the directory named by the CHEMOFV_OUTPUT_ROOT
environment variable (default: the working directory).  A run writes
series.csv, snapshot_NNNN.bin files, and manifest.json; a sweep writes
sweep.csv and manifest.json.  All files are deterministic, so repeating a
run must reproduce them byte for byte.
"""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .diagnostics import DiagConfig, Recorder, classify_run
from .grid import Field, GridSpec
from .io import write_manifest, write_series_csv, write_snapshot
from .model import ModelParams, State, threshold_m
from .stepper import SolverConfig, run

__all__ = [
    "ConfigError",
    "InitialSpec",
    "make_initial",
    "RunConfig",
    "load_config",
    "output_root",
    "run_experiment",
    "SweepSpec",
    "SweepPoint",
    "load_sweep_spec",
    "run_sweep",
    "monotonicity_findings",
    "SWEEP_COLUMNS",
]

ENV_OUTPUT_ROOT = "CHEMOFV_OUTPUT_ROOT"

_GENERATORS = ("uniform", "gaussian-bump", "random-perturbation")


class ConfigError(ValueError):
    """A config file is malformed; the message names the offending key."""


class _MissingType:
    def __repr__(self) -> str:
        return "<required>"


_MISSING = _MissingType()


def _as_float(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {val!r}")
    return float(val)


def _as_int(val, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"'{path}' must be an integer, got {val!r}")
    return val


def _as_str(val, path: str) -> str:
    if not isinstance(val, str):
        raise ConfigError(f"'{path}' must be a string, got {val!r}")
    return val


def _as_bool(val, path: str) -> bool:
    if not isinstance(val, bool):
        raise ConfigError(f"'{path}' must be a boolean, got {val!r}")
    return val


def _as_float_list(val, path: str) -> tuple[float, ...]:
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"'{path}' must be a nonempty list of numbers, got {val!r}")
    return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(val))


def _as_int_list(val, path: str) -> tuple[int, ...]:
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"'{path}' must be a nonempty list of integers, got {val!r}")
    return tuple(_as_int(v, f"{path}[{i}]") for i, v in enumerate(val))


_CONVERT = {
    float: _as_float,
    int: _as_int,
    str: _as_str,
    bool: _as_bool,
    "float_list": _as_float_list,
    "int_list": _as_int_list,
}


class _Section:
    """Strict view of one config table: every key must be consumed."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"'{path}' must be a table")
        self._data = data
        self._path = path
        self._seen: set[str] = set()

    def _full(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def has(self, key: str) -> bool:
        return key in self._data

    def get(self, key: str, kind, default=_MISSING):
        self._seen.add(key)
        if key not in self._data:
            if default is _MISSING:
                raise ConfigError(f"missing required key '{self._full(key)}'")
            return default
        return _CONVERT[kind](self._data[key], self._full(key))

    def finish(self) -> None:
        unknown = sorted(set(self._data) - self._seen)
        if unknown:
            names = ", ".join(f"'{self._full(k)}'" for k in unknown)
            raise ConfigError(f"unknown key(s): {names}")


class _Document:
    """Strict view of a whole parsed TOML file."""

    def __init__(self, data: dict):
        self._root = _Section(data, "")
        self._sections: list[_Section] = [self._root]

    def section(self, name: str) -> _Section:
        self._root._seen.add(name)
        sec = _Section(self._root._data.get(name, {}), name)
        self._sections.append(sec)
        return sec

    def finish(self) -> None:
        for sec in self._sections:
            sec.finish()


def _load_toml(path) -> _Document:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _Document(data)


# ---------------------------------------------------------------------------
# initial data

@dataclass(frozen=True)
class InitialSpec:
    """Recipe for the t = 0 fields; v always starts uniform at v0."""

    kind: str = "uniform"
    u0: float = 1.0
    v0: float = 1.0
    amplitude: float = 0.5
    width: float = 0.1
    center: Optional[tuple[float, ...]] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _GENERATORS:
            known = ", ".join(_GENERATORS)
            raise ConfigError(f"unknown initial kind '{self.kind}'; known kinds: {known}")
        if self.u0 < 0 or self.v0 < 0:
            raise ConfigError(f"u0 and v0 must be >= 0, got u0={self.u0}, v0={self.v0}")
        if self.amplitude < 0:
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.width > 0:
            raise ConfigError(f"width must be positive, got {self.width}")
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def make_initial(spec: GridSpec, init: InitialSpec) -> State:
    """Build the t = 0 state on a grid.

    uniform:             u = u0 everywhere.
    gaussian-bump:       u = amplitude exp(-|x - center|^2 / (2 width^2)) on a
                         zero baseline; center defaults to the box center.
    random-perturbation: u = max(0, u0 + amplitude Uniform(-1, 1)) drawn per
                         cell from a seeded generator, so reruns agree bitwise.
    """
    if init.kind == "uniform":
        u = np.full(spec.cells, init.u0)
    elif init.kind == "gaussian-bump":
        center = init.center
        if center is None:
            center = tuple(length / 2.0 for length in spec.lengths)
        if len(center) != spec.dim:
            raise ConfigError(
                f"center has {len(center)} coordinates for a {spec.dim}D grid"
            )
        r2 = np.zeros(spec.cells)
        for ax, x in enumerate(spec.centers_mesh()):
            r2 += (x - center[ax]) ** 2
        u = init.amplitude * np.exp(-r2 / (2.0 * init.width**2))
    else:
        rng = np.random.default_rng(init.seed)
        noise = rng.uniform(-1.0, 1.0, size=spec.cells)
        u = np.maximum(init.u0 + init.amplitude * noise, 0.0)
    v = np.full(spec.cells, init.v0)
    return State(Field(spec, u), Field(spec, v), 0.0)


# ---------------------------------------------------------------------------
# run config

@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: ModelParams
    solver: SolverConfig
    diag: DiagConfig
    initial: InitialSpec
    outdir: str = "run"
    label: str = ""


def _grid_from(sec: _Section) -> GridSpec:
    cells = sec.get("cells", "int_list")
    lengths = sec.get("lengths", "float_list", default=tuple(1.0 for _ in cells))
    try:
        return GridSpec(cells=cells, lengths=lengths)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None


def _params_from(sec: _Section) -> ModelParams:
    try:
        return ModelParams(
            chi=sec.get("chi", float),
            mu=sec.get("mu", float),
            m=sec.get("m", float),
            c_d=sec.get("c_d", float, default=1.0),
            lambda0=sec.get("lambda0", float, default=1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None


def _solver_from(sec: _Section) -> SolverConfig:
    try:
        return SolverConfig(
            t_end=sec.get("t_end", float),
            dt_init=sec.get("dt_init", float, default=1e-3),
            dt_max=sec.get("dt_max", float, default=0.1),
            cfl_safety=sec.get("cfl_safety", float, default=0.8),
            snapshot_every=sec.get("snapshot_every", float, default=None),
            max_linear_iters=sec.get("max_linear_iters", int, default=500),
            linear_tol=sec.get("linear_tol", float, default=1e-12),
            positivity_tol=sec.get("positivity_tol", float, default=1e-12),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None


def _diag_from(sec: _Section) -> DiagConfig:
    try:
        return DiagConfig(
            p_list=sec.get("p_list", "float_list", default=(2.0, 3.0)),
            beta_list=sec.get("beta_list", "float_list", default=(2.0,)),
            tau=sec.get("tau", float, default=None),
            entropy_floor=sec.get("entropy_floor", float, default=1e-12),
            plateau_window=sec.get("plateau_window", float, default=0.2),
            plateau_tol=sec.get("plateau_tol", float, default=0.01),
            growth_factor=sec.get("growth_factor", float, default=1e3),
            slope_limit=sec.get("slope_limit", float, default=0.05),
        )
    except ValueError as exc:
        raise ConfigError(f"diagnostics: {exc}") from None


def _initial_from(sec: _Section, forbid_v0: bool = False) -> InitialSpec:
    if forbid_v0 and sec.has("v0"):
        raise ConfigError("initial.v0 is set by the sup_v0 axis in sweeps")
    kwargs = dict(
        kind=sec.get("kind", str, default="uniform"),
        u0=sec.get("u0", float, default=1.0),
        amplitude=sec.get("amplitude", float, default=0.5),
        width=sec.get("width", float, default=0.1),
        seed=sec.get("seed", int, default=0),
    )
    if not forbid_v0:
        kwargs["v0"] = sec.get("v0", float, default=1.0)
    if sec.has("center"):
        kwargs["center"] = sec.get("center", "float_list")
    else:
        sec.get("center", "float_list", default=None)
    return InitialSpec(**kwargs)


def load_config(path) -> RunConfig:
    """Parse and validate a run config file."""
    doc = _load_toml(path)
    grid = _grid_from(doc.section("grid"))
    params = _params_from(doc.section("params"))
    solver = _solver_from(doc.section("solver"))
    diag = _diag_from(doc.section("diagnostics"))
    initial = _initial_from(doc.section("initial"))
    out = doc.section("output")
    outdir = out.get("dir", str, default="run")
    label = out.get("label", str, default="")
    doc.finish()
    return RunConfig(
        grid=grid,
        params=params,
        solver=solver,
        diag=diag,
        initial=initial,
        outdir=outdir,
        label=label,
    )


# ---------------------------------------------------------------------------
# single experiment

def output_root() -> Path:
    """Directory all outputs are placed under; overridable by environment."""
    return Path(os.environ.get(ENV_OUTPUT_ROOT, "."))


def _resolve_outdir(name) -> Path:
    path = Path(name)
    return path if path.is_absolute() else output_root() / path


def _outcome_payload(outcome) -> dict:
    return {
        "verdict": outcome.verdict,
        "peak_sup_u": outcome.peak_sup_u,
        "plateau_ratio": outcome.plateau_ratio,
        "log_slope": outcome.log_slope,
        "v_max_principle_ok": outcome.v_max_principle_ok,
        "entropy_peak": outcome.entropy_peak,
    }


def run_experiment(cfg: RunConfig, out_dir=None) -> dict:
    """Run one configured experiment and write its artifacts.

    Writes series.csv, snapshot_NNNN.bin, and manifest.json into the output
    directory (cfg.outdir under the output root unless out_dir overrides it)
    and returns the manifest payload.
    """
    out = _resolve_outdir(cfg.outdir if out_dir is None else out_dir)
    out.mkdir(parents=True, exist_ok=True)

    initial = make_initial(cfg.grid, cfg.initial)
    recorder = Recorder(cfg.params, cfg.diag, horizon=cfg.solver.t_end)
    traj = run(initial, cfg.params, cfg.solver, on_step=recorder)
    series = recorder.series
    series.status = traj.status
    outcome = classify_run(series, cfg.diag)

    write_series_csv(out / "series.csv", series)
    snap_names = []
    for i, snap in enumerate(traj.snapshots):
        name = f"snapshot_{i:04d}.bin"
        write_snapshot(out / name, snap)
        snap_names.append({"file": name, "t": snap.t})

    sup_v0 = float(initial.v.max())
    try:
        thr = threshold_m(cfg.params, sup_v0, cfg.grid.dim)
        margin = cfg.params.m - thr
    except ValueError:
        thr = margin = float("nan")

    payload = {
        "label": cfg.label,
        "grid": {"cells": list(cfg.grid.cells), "lengths": list(cfg.grid.lengths)},
        "params": {
            "chi": cfg.params.chi,
            "mu": cfg.params.mu,
            "m": cfg.params.m,
            "c_d": cfg.params.c_d,
            "lambda0": cfg.params.lambda0,
        },
        "initial": {
            "kind": cfg.initial.kind,
            "u0": cfg.initial.u0,
            "v0": cfg.initial.v0,
            "amplitude": cfg.initial.amplitude,
            "width": cfg.initial.width,
            "center": list(cfg.initial.center) if cfg.initial.center else None,
            "seed": cfg.initial.seed,
        },
        "solver": {
            "t_end": cfg.solver.t_end,
            "dt_init": cfg.solver.dt_init,
            "dt_max": cfg.solver.dt_max,
            "cfl_safety": cfg.solver.cfl_safety,
            "snapshot_every": cfg.solver.snapshot_every,
            "max_linear_iters": cfg.solver.max_linear_iters,
            "linear_tol": cfg.solver.linear_tol,
            "positivity_tol": cfg.solver.positivity_tol,
        },
        "diagnostics": {
            "p_list": list(cfg.diag.p_list),
            "beta_list": list(cfg.diag.beta_list),
            "tau": series.tau,
        },
        "threshold_m": thr,
        "margin": margin,
        "status": traj.status,
        "steps": len(series) - 1,
        "final_t": series.times[-1] if len(series) else 0.0,
        "outcome": _outcome_payload(outcome),
        "snapshots": snap_names,
    }
    write_manifest(out / "manifest.json", payload)
    return payload


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = (
    "m",
    "mu",
    "chi",
    "sup_v0",
    "lambda0",
    "resolution",
    "seed",
    "threshold_m",
    "margin",
    "verdict",
    "peak_sup_u",
    "entropy_peak",
    "status",
)


@dataclass(frozen=True, order=True)
class SweepPoint:
    m: float
    mu: float
    chi: float
    seed: int
    sup_v0: float
    lambda0: float
    resolution: int


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian family of runs over the threshold-relevant knobs."""

    m_values: tuple[float, ...]
    mu_values: tuple[float, ...]
    chi_values: tuple[float, ...]
    sup_v0_values: tuple[float, ...] = (1.0,)
    lambda0_values: tuple[float, ...] = (1.0,)
    resolutions: tuple[int, ...] = (64,)
    seeds: tuple[int, ...] = (0,)
    dim: int = 2
    lengths: Optional[tuple[float, ...]] = None
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(t_end=50.0))
    diag: DiagConfig = field(default_factory=DiagConfig)
    initial: InitialSpec = field(default_factory=lambda: InitialSpec(kind="random-perturbation"))
    save_series: bool = False

    def __post_init__(self) -> None:
        for name in ("m_values", "mu_values", "chi_values", "sup_v0_values", "lambda0_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ConfigError(f"sweep axis {name} must be nonempty")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "resolutions", tuple(int(r) for r in self.resolutions))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not (isinstance(self.dim, int) and 1 <= self.dim <= 3):
            raise ConfigError(f"sweep dim must be 1, 2, or 3, got {self.dim}")
        if self.lengths is not None and len(self.lengths) != self.dim:
            raise ConfigError("sweep lengths must have one entry per dimension")

    def points(self) -> list[SweepPoint]:
        pts = [
            SweepPoint(m=m, mu=mu, chi=chi, seed=seed, sup_v0=sv, lambda0=lam, resolution=res)
            for m, mu, chi, seed, sv, lam, res in itertools.product(
                self.m_values,
                self.mu_values,
                self.chi_values,
                self.seeds,
                self.sup_v0_values,
                self.lambda0_values,
                self.resolutions,
            )
        ]
        return sorted(pts)


def load_sweep_spec(path) -> SweepSpec:
    """Parse and validate a sweep spec file."""
    doc = _load_toml(path)
    sweep = doc.section("sweep")
    m_values = sweep.get("m", "float_list")
    mu_values = sweep.get("mu", "float_list")
    chi_values = sweep.get("chi", "float_list")
    sup_v0_values = sweep.get("sup_v0", "float_list", default=(1.0,))
    lambda0_values = sweep.get("lambda0", "float_list", default=(1.0,))
    resolutions = sweep.get("resolution", "int_list", default=(64,))
    seeds = sweep.get("seed", "int_list", default=(0,))
    dim = sweep.get("dim", int, default=2)
    lengths = None
    if sweep.has("lengths"):
        lengths = sweep.get("lengths", "float_list")
    else:
        sweep.get("lengths", "float_list", default=None)
    save_series = sweep.get("save_series", bool, default=False)
    solver = _solver_from(doc.section("solver"))
    diag = _diag_from(doc.section("diagnostics"))
    initial = _initial_from(doc.section("initial"), forbid_v0=True)
    doc.finish()
    return SweepSpec(
        m_values=m_values,
        mu_values=mu_values,
        chi_values=chi_values,
        sup_v0_values=sup_v0_values,
        lambda0_values=lambda0_values,
        resolutions=resolutions,
        seeds=seeds,
        dim=dim,
        lengths=lengths,
        solver=solver,
        diag=diag,
        initial=initial,
        save_series=save_series,
    )


def _point_config(spec: SweepSpec, pt: SweepPoint) -> RunConfig:
    lengths = spec.lengths if spec.lengths is not None else tuple(1.0 for _ in range(spec.dim))
    grid = GridSpec(cells=tuple(pt.resolution for _ in range(spec.dim)), lengths=lengths)
    params = ModelParams(chi=pt.chi, mu=pt.mu, m=pt.m, lambda0=pt.lambda0)
    initial = replace(spec.initial, v0=pt.sup_v0, seed=pt.seed)
    return RunConfig(
        grid=grid,
        params=params,
        solver=spec.solver,
        diag=spec.diag,
        initial=initial,
    )


def _run_point(task: tuple[SweepSpec, SweepPoint]) -> dict:
    """One sweep row; exceptions become data instead of killing the sweep."""
    spec, pt = task
    row = {
        "m": pt.m,
        "mu": pt.mu,
        "chi": pt.chi,
        "sup_v0": pt.sup_v0,
        "lambda0": pt.lambda0,
        "resolution": pt.resolution,
        "seed": pt.seed,
        "threshold_m": float("nan"),
        "margin": float("nan"),
        "verdict": "Error",
        "peak_sup_u": float("nan"),
        "entropy_peak": float("nan"),
        "status": "error:unknown",
    }
    try:
        cfg = _point_config(spec, pt)
        try:
            thr = threshold_m(cfg.params, pt.sup_v0, spec.dim)
            row["threshold_m"] = thr
            row["margin"] = pt.m - thr
        except ValueError:
            pass
        initial = make_initial(cfg.grid, cfg.initial)
        recorder = Recorder(cfg.params, cfg.diag, horizon=cfg.solver.t_end)
        traj = run(initial, cfg.params, cfg.solver, on_step=recorder)
        recorder.series.status = traj.status
        outcome = classify_run(recorder.series, cfg.diag)
        row["verdict"] = outcome.verdict
        row["peak_sup_u"] = outcome.peak_sup_u
        row["entropy_peak"] = outcome.entropy_peak
        row["status"] = traj.status
        row["_series"] = recorder.series if spec.save_series else None
    except Exception as exc:  # captured per row by design
        row["status"] = f"error:{type(exc).__name__}"
        row["_series"] = None
    return row


_SORT_KEY = ("m", "mu", "chi", "seed", "sup_v0", "lambda0", "resolution")


def monotonicity_findings(rows: list[dict]) -> list[str]:
    """Check that Bounded verdicts are upward-closed in m per parameter group.

    The theory predicts boundedness for every m at or above the threshold, so
    within a fixed (mu, chi, sup_v0, lambda0, resolution, seed) group a
    Growing verdict above a Bounded one is a red flag worth reporting.  The
    findings are informational; near-threshold runs legitimately straddle.
    """
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["verdict"] == "Error":
            continue
        key = tuple(row[k] for k in ("mu", "chi", "sup_v0", "lambda0", "resolution", "seed"))
        groups.setdefault(key, []).append(row)
    findings = []
    for key in sorted(groups):
        rs = sorted(groups[key], key=lambda r: r["m"])
        bounded_at = None
        for row in rs:
            if row["verdict"] == "Bounded" and bounded_at is None:
                bounded_at = row["m"]
            elif row["verdict"] == "Growing" and bounded_at is not None:
                label = ", ".join(
                    f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in zip(("mu", "chi", "sup_v0", "lambda0", "resolution", "seed"), key)
                )
                findings.append(
                    f"non-monotone verdicts at {label}: "
                    f"m={bounded_at:g} Bounded but m={row['m']:g} Growing"
                )
    return findings


def _write_sweep_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            cells = []
            for name in SWEEP_COLUMNS:
                val = row[name]
                if isinstance(val, str):
                    cells.append(val)
                elif isinstance(val, int):
                    cells.append(str(val))
                else:
                    cells.append(repr(float(val)))
            writer.writerow(cells)


def run_sweep(spec: SweepSpec, out_dir="sweep", jobs: int = 1) -> dict:
    """Run every point of a sweep and write sweep.csv plus a manifest.

    The planned run count is printed before anything executes.  Points run
    in separate processes when jobs > 1; a failing point becomes a row with
    verdict Error and status error:<ExceptionName>.  Rows are sorted by
    (m, mu, chi, seed, sup_v0, lambda0, resolution) regardless of completion
    order, and verdict monotonicity findings are collected, not asserted.
    """
    if not (isinstance(jobs, int) and jobs >= 1):
        raise ConfigError(f"jobs must be a positive integer, got {jobs}")
    points = spec.points()
    out = _resolve_outdir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(f"sweep: {len(points)} runs planned, {jobs} worker(s)", flush=True)

    tasks = [(spec, pt) for pt in points]
    if jobs == 1:
        rows = [_run_point(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, tasks))

    rows.sort(key=lambda r: tuple(r[k] for k in _SORT_KEY))
    if spec.save_series:
        for i, row in enumerate(rows):
            series = row.get("_series")
            if series is not None:
                write_series_csv(out / f"series_{i:04d}.csv", series)
    for row in rows:
        row.pop("_series", None)

    findings = monotonicity_findings(rows)
    _write_sweep_csv(out / "sweep.csv", rows)
    payload = {
        "runs": len(rows),
        "errors": sum(1 for r in rows if r["verdict"] == "Error"),
        "verdicts": {
            v: sum(1 for r in rows if r["verdict"] == v)
            for v in ("Bounded", "Growing", "Inconclusive", "Error")
        },
        "findings": findings,
        "axes": {
            "m": list(spec.m_values),
            "mu": list(spec.mu_values),
            "chi": list(spec.chi_values),
            "sup_v0": list(spec.sup_v0_values),
            "lambda0": list(spec.lambda0_values),
            "resolution": list(spec.resolutions),
            "seed": list(spec.seeds),
            "dim": spec.dim,
        },
    }
    write_manifest(out / "manifest.json", payload)
    for finding in findings:
        print(f"finding: {finding}", flush=True)
    return {"rows": rows, "findings": findings, "out_dir": str(out), "manifest": payload}
