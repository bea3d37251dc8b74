"""Recovery tables, phase transitions and population-dynamics runs.

Every trial is a pure function of its grid cell and a derived seed, so a run
can be replayed from its manifest.  Results are written as tidy tables
(CSV with 17 significant digits, and JSON); plotting is left to other tools.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidParamError, LpDictError
from .expectation import ExpectationEngine
from .metrics import align, tau_min
from .solvers import SolverConfig, population_gpm, solve
from .stiefel import as_rng
from .synth import BernoulliGaussianSpec, NoiseSpec, gen_instance

THREADS_ENV = "LPDICT_THREADS"
AXES = ("n", "theta", "p", "samples", "noise_kind", "noise_sigma", "vartheta", "method")
AXIS_DEFAULTS = {
    "n": 32,
    "theta": 0.3,
    "p": 3,
    "samples": 10_000,
    "noise_kind": "none",
    "noise_sigma": 0.0,
    "vartheta": 0.1,
    "method": "gpm",
}
_AXIS_TYPES = {"n": int, "theta": float, "p": int, "samples": int, "noise_kind": str,
               "noise_sigma": float, "vartheta": float, "method": str}


def default_threads() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


@dataclass
class ExperimentGrid:
    """Cartesian sweep over the axes in ``AXES``.

    Axes missing from ``axes`` take their ``AXIS_DEFAULTS`` value.  A trial
    counts as a success when its ``l4_error`` is below ``success_threshold``.
    """

    axes: dict
    trials: int = 10
    base_seed: int = 0
    success_threshold: float = 0.01
    dict_kind: str = "random-orthogonal"
    max_iters: int = 10_000
    tol_obj: float = 1e-12
    tol_iterate: float = 1e-10

    def __post_init__(self):
        if not self.axes:
            raise InvalidParamError("grid needs at least one axis")
        unknown = set(self.axes) - set(AXES)
        if unknown:
            raise InvalidParamError(f"unknown axes {sorted(unknown)}; valid axes are {AXES}")
        axes = {}
        for name, values in self.axes.items():
            if isinstance(values, (str, int, float)):
                values = [values]
            if len(values) == 0:
                raise InvalidParamError(f"axis {name!r} is empty")
            axes[name] = [_AXIS_TYPES[name](v) for v in values]
        self.axes = axes
        if self.trials < 1:
            raise InvalidParamError("trials must be >= 1")

    def cells(self) -> list[dict]:
        values = [self.axes.get(name, [AXIS_DEFAULTS[name]]) for name in AXES]
        return [dict(zip(AXES, combo)) for combo in itertools.product(*values)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentGrid":
        return cls(**d)


@dataclass
class ResultRow:
    n: int
    theta: float
    p: int
    samples: int
    noise_kind: str
    noise_sigma: float
    vartheta: float
    method: str
    trial: int
    seed: int
    l4_error: float = math.nan
    frob_error: float = math.nan
    wall_time: float = math.nan
    iterations: int = 0
    stop_reason: str = ""
    success: bool = False
    failed: bool = False
    error: str = ""

    def cell(self) -> dict:
        return {name: getattr(self, name) for name in AXES}


ROW_FIELDS = [f.name for f in fields(ResultRow)]


def trial_seed(base_seed: int, cell: dict, trial: int) -> int:
    """Stable 63-bit seed from the base seed, cell coordinates and trial index."""
    key = json.dumps([int(base_seed), [cell[a] for a in AXES], int(trial)])
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "big") >> 1


def solver_seed(seed: int) -> int:
    """Seed for the initial iterate, derived from (but independent of) the data seed."""
    return int(np.random.SeedSequence([seed, 1]).generate_state(1, np.uint64)[0] >> 1)


def build_instance(cell: dict, seed: int, dict_kind: str = "random-orthogonal"):
    noise = NoiseSpec(cell["noise_kind"], cell["noise_sigma"], cell["vartheta"])
    return gen_instance(cell["n"], cell["samples"], BernoulliGaussianSpec(cell["theta"]),
                        dict_kind, noise, seed)


def run_trial(cell: dict, trial: int, seed: int, grid: ExperimentGrid) -> ResultRow:
    """Generate, solve and align one instance; solver errors mark the row failed."""
    row = ResultRow(trial=trial, seed=seed, **cell)
    try:
        inst = build_instance(cell, seed, grid.dict_kind)
        cfg = SolverConfig(p=cell["p"], max_iters=grid.max_iters, tol_obj=grid.tol_obj,
                           tol_iterate=grid.tol_iterate, seed=solver_seed(seed),
                           method=cell["method"])
        t0 = time.perf_counter()
        A, trace = solve(inst.Y_obs, cell["n"], cfg)
        row.wall_time = time.perf_counter() - t0
        res = align(A, inst.D0)
    except (LpDictError, np.linalg.LinAlgError) as exc:
        row.failed = True
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    row.l4_error = res.l4_error
    row.frob_error = res.frob_error
    row.iterations = trace.iterations_run
    row.stop_reason = trace.stop_reason
    row.success = bool(res.l4_error < grid.success_threshold)
    return row


def _tasks(grids):
    for grid in grids:
        for cell in grid.cells():
            for trial in range(grid.trials):
                yield cell, trial, trial_seed(grid.base_seed, cell, trial), grid


def run_rows(grids, threads: int | None = None) -> list[ResultRow]:
    """All trials of one or more grids, in deterministic (grid, cell, trial) order."""
    grids = [grids] if isinstance(grids, ExperimentGrid) else list(grids)
    tasks = list(_tasks(grids))
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        return [run_trial(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: run_trial(*t), tasks))


def _mean(vals) -> float:
    return float(np.mean(vals)) if vals else math.nan


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Per-cell aggregates over successful (non-failed) trials."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(tuple(row.cell().values()), []).append(row)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if not r.failed]
        out.append({
            **dict(zip(AXES, key)),
            "trials": len(members),
            "failed": len(members) - len(ok),
            "mean_l4_error": _mean([r.l4_error for r in ok]),
            "mean_frob_error": _mean([r.frob_error for r in ok]),
            "mean_wall_time": _mean([r.wall_time for r in ok]),
            "mean_iterations": _mean([r.iterations for r in ok]),
            "successes": sum(r.success for r in members),
            "success_prob": sum(r.success for r in members) / len(members),
        })
    return out


# --- output --------------------------------------------------------------------


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def write_csv(path, records: list[dict], columns: list[str] | None = None) -> Path:
    path = Path(path)
    columns = columns or (list(records[0]) if records else [])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([format_value(rec.get(c, "")) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_json_safe(payload), indent=1))
    return path


def make_manifest(kind: str, config: dict, seeds: list | None = None) -> dict:
    return {
        "kind": kind,
        "config": config,
        "seeds": seeds or [],
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


@dataclass
class RecoveryTable:
    rows: list
    summary: list
    manifest: dict = field(default_factory=dict)


def _grid_list(grids):
    return [grids] if isinstance(grids, ExperimentGrid) else list(grids)


def run_recovery_table(grids, out=None, threads: int | None = None, kind: str = "table") -> RecoveryTable:
    """Run every trial of the grid(s) and write results, summary and manifest.

    Files written into the directory ``out`` (if given): ``results.csv`` (one
    row per trial), ``summary.csv`` (per-cell means), ``results.json``
    (manifest, rows and summary together) and ``manifest.json``.
    """
    grids = _grid_list(grids)
    rows = run_rows(grids, threads)
    summary = summarize(rows)
    seeds = [{"cell": r.cell(), "trial": r.trial, "seed": r.seed} for r in rows]
    manifest = make_manifest(kind, {"grids": [g.to_dict() for g in grids]}, seeds)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        records = [asdict(r) for r in rows]
        write_csv(out / "results.csv", records, ROW_FIELDS)
        write_csv(out / "summary.csv", summary)
        write_json(out / "results.json", {"manifest": manifest, "rows": records, "summary": summary})
        write_json(out / "manifest.json", manifest)
    return RecoveryTable(rows, summary, manifest)


PHASE_FIELDS = list(AXES) + ["trials", "successes", "success_prob", "mean_l4_error"]


def run_phase_transition(grids, out=None, threads: int | None = None) -> list[dict]:
    """Success probability per cell as a long-format table (``phase.csv`` / ``phase.json``)."""
    table = run_recovery_table(grids, out, threads, kind="phase")
    phase = [{k: s[k] for k in PHASE_FIELDS} for s in table.summary]
    if out is not None:
        write_csv(Path(out) / "phase.csv", phase, PHASE_FIELDS)
        write_json(Path(out) / "phase.json", {"manifest": table.manifest, "cells": phase})
    return phase


def min_samples_for_success(phase: list[dict], level: float = 0.9, by: str = "p") -> dict:
    """Smallest swept sample count reaching ``level`` success, per value of ``by``.

    Cells that never reach the level map to ``math.inf``.
    """
    out: dict = {}
    for key in sorted({c[by] for c in phase}):
        hits = [c["samples"] for c in phase if c[by] == key and c["success_prob"] >= level]
        out[key] = min(hits) if hits else math.inf
    return out


def replay(manifest_path, out=None, threads: int | None = None) -> RecoveryTable:
    """Re-run a table or phase manifest; returns the freshly computed rows."""
    manifest = json.loads(Path(manifest_path).read_text())
    if manifest.get("kind") not in ("table", "phase"):
        raise InvalidParamError(f"cannot replay a {manifest.get('kind')!r} manifest")
    grids = [ExperimentGrid.from_dict(g) for g in manifest["config"]["grids"]]
    if manifest["kind"] == "phase":
        run_phase_transition(grids, out, threads)
        return run_recovery_table(grids, None, threads, kind="phase")
    return run_recovery_table(grids, out, threads)


# --- population dynamics ----------------------------------------------------------


def tail_error_ratio(errors, floor: float = 1e-13, window: int = 3) -> float:
    """Median of the last ``window`` error ratios whose errors stay above ``floor``."""
    ratios = [b / a for a, b in zip(errors[:-1], errors[1:]) if a > floor and b > floor]
    if not ratios:
        return math.nan
    return float(np.median(ratios[-window:]))


def t_tau_bound(tau0: float, n: int) -> float:
    """``log_{1 + tau0} sqrt(n)``: bound on the steps needed to make SOR exceed 1."""
    if tau0 <= 0:
        return math.inf
    return 0.5 * math.log(n) / math.log1p(tau0)


def random_sphere_point(n: int, seed) -> np.ndarray:
    g = as_rng(seed).standard_normal(n)
    return g / np.linalg.norm(g)


@dataclass
class DynamicsRun:
    rows: list
    tail_ratio: float
    tau0: float
    t_tau_bound: float
    iterations_to_sor_gt_1: int | None
    target: int
    final_error: float


DYNAMICS_FIELDS = ["iteration", "sphere_error", "sor", "error_ratio", "t_tau_bound"]


def population_dynamics(n: int, theta: float, p: int, engine: ExpectationEngine,
                        a0=None, seed: int = 0, max_iters: int = 200, tol: float = 1e-15) -> DynamicsRun:
    """Run population GPM from ``a0`` (uniform on the sphere by default) and collect diagnostics."""
    a0 = random_sphere_point(n, seed) if a0 is None else np.asarray(a0, dtype=float)
    target = int(np.argmax(np.abs(a0)))
    signed = a0 if a0[target] >= 0 else -a0
    if np.count_nonzero(a0) == 1:
        tau0 = math.inf
    else:
        tau0 = tau_min(signed, target, theta, p, engine)
    bound = 0.0 if math.isinf(tau0) else t_tau_bound(tau0, n)
    _, trace = population_gpm(a0, p, theta, engine, max_iters=max_iters, tol=tol, target=target)
    errs = trace.sphere_error_series
    ratios = [math.nan] + trace.error_ratio_series
    rows = [
        {"iteration": t, "sphere_error": errs[t], "sor": trace.sor_series[t],
         "error_ratio": ratios[t], "t_tau_bound": bound}
        for t in range(len(errs))
    ]
    first = next((t for t, s in enumerate(trace.sor_series) if s > 1), None)
    return DynamicsRun(rows, tail_error_ratio(errs), tau0, bound, first, target, errs[-1])


def run_population_dynamics(n: int, theta: float, p: int, engine: ExpectationEngine, out=None,
                            a0=None, seed: int = 0, max_iters: int = 200) -> DynamicsRun:
    """:func:`population_dynamics` plus ``dynamics.csv`` / ``dynamics.json`` / manifest output."""
    run = population_dynamics(n, theta, p, engine, a0, seed, max_iters)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        config = {"n": n, "theta": theta, "p": p, "engine": asdict(engine), "seed": seed,
                  "max_iters": max_iters, "a0": None if a0 is None else np.asarray(a0).tolist()}
        manifest = make_manifest("dynamics", config, [seed])
        summary = {k: getattr(run, k) for k in
                   ("tail_ratio", "tau0", "t_tau_bound", "iterations_to_sor_gt_1", "target", "final_error")}
        write_csv(out / "dynamics.csv", run.rows, DYNAMICS_FIELDS)
        write_json(out / "dynamics.json", {"manifest": manifest, "summary": summary, "rows": run.rows})
        write_json(out / "manifest.json", manifest)
    return run


# --- presets ------------------------------------------------------------------------


def preset(name: str, large: bool = False, trials: int | None = None, base_seed: int = 0) -> list[ExperimentGrid]:
    """Desk-scale grids for the recovery tables and the p-sweep phase transition.

    ``large`` adds the multi-minute rows (n = 200, 400 for ``table1``;
    n = 100 for ``table2`` and ``table3``).  Trials default to 10 for the
    tables and 20 for the phase sweep.
    """
    if trials is None:
        trials = 20 if name == "phase" else 10
    kw = {"trials": trials, "base_seed": base_seed}
    if name == "table1":
        grids = [ExperimentGrid({"n": 100, "theta": [0.1, 0.3], "samples": 40_000, "p": [3, 4, 5]}, **kw)]
        if large:
            grids += [
                ExperimentGrid({"n": 200, "theta": [0.1, 0.3], "samples": 80_000, "p": [3, 4, 5]}, **kw),
                ExperimentGrid({"n": 400, "theta": [0.1, 0.3], "samples": 160_000, "p": [3, 4, 5]}, **kw),
            ]
        return grids
    if name == "table2":
        axes = {"theta": 0.3, "p": 3, "noise_kind": "gaussian", "noise_sigma": [0.0, 0.2, 0.4, 0.6]}
        grids = [ExperimentGrid({"n": 32, "samples": 10_000, **axes}, **kw)]
        if large:
            grids.append(ExperimentGrid({"n": 100, "samples": 40_000, **axes}, **kw))
        return grids
    if name == "table3":
        axes = {"theta": 0.3, "p": 3, "noise_kind": "sparse", "noise_sigma": [0.5, 1.0, 1.5],
                "vartheta": 0.1}
        grids = [ExperimentGrid({"n": 32, "samples": 10_000, **axes}, **kw)]
        if large:
            grids.append(ExperimentGrid({"n": 100, "samples": 40_000, **axes}, **kw))
        return grids
    if name == "phase":
        return [ExperimentGrid({"n": 30, "theta": 0.3, "p": [3, 4, 5, 6],
                                "samples": [500, 1000, 2000, 4000, 8000, 16000, 32000]},
                               **kw)]
    raise InvalidParamError(f"unknown preset {name!r}; choose table1, table2, table3 or phase")


PRESETS = ("table1", "table2", "table3", "phase")


def bench(n: int, samples: int, p_values, theta: float = 0.1, trials: int = 3, seed: int = 0,
          method: str = "gpm") -> list[dict]:
    """Wall-clock timings of full solves, one record per ``p``."""
    out = []
    for p in p_values:
        times, iters = [], []
        for trial in range(trials):
            cell = {**AXIS_DEFAULTS, "n": n, "samples": samples, "theta": theta, "p": p, "method": method}
            s = trial_seed(seed, cell, trial)
            inst = build_instance(cell, s)
            cfg = SolverConfig(p=p, seed=solver_seed(s), method=method)
            t0 = time.perf_counter()
            _, trace = solve(inst.Y_obs, n, cfg)
            times.append(time.perf_counter() - t0)
            iters.append(trace.iterations_run)
        out.append({"n": n, "samples": samples, "theta": theta, "p": p, "method": method,
                    "trials": trials, "mean_time": float(np.mean(times)),
                    "mean_iterations": float(np.mean(iters)),
                    "time_per_iteration": float(np.sum(times) / max(np.sum(iters), 1))})
    return out
