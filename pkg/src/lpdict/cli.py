"""Command-line entry point: ``lpdict {gen,solve,table,phase,dynamics,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .errors import LpDictError
from .expectation import ENGINE_MODES, ExpectationEngine
from .experiments import (
    PRESETS,
    ExperimentGrid,
    bench,
    format_value,
    default_threads,
    make_manifest,
    preset,
    run_phase_transition,
    run_population_dynamics,
    run_recovery_table,
    solver_seed,
    write_json,
)
from .metrics import align
from .solvers import SolverConfig, solve
from .synth import BernoulliGaussianSpec, NoiseSpec, gen_instance, load_instance, save_instance


def _int_list(text: str) -> list[int]:
    """``"3,4,5"`` or an inclusive range ``"1000:20000"`` (doubling steps)."""
    if ":" in text:
        lo, hi = (int(float(x)) for x in text.split(":"))
        out = []
        v = lo
        while v < hi:
            out.append(v)
            v *= 2
        return out + [hi]
    return [int(float(x)) for x in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--out", type=Path, default=None, help="output file or directory")
    common.add_argument("--format", choices=("csv", "json"), default="json",
                        help="format of the summary printed to stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for trials (default: $LPDICT_THREADS or 1)")
    return common


def _instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--dict-kind", choices=("identity", "random-orthogonal"), default="random-orthogonal")
    p.add_argument("--noise", choices=("none", "gaussian", "sparse"), default="none")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--vartheta", type=float, default=0.1)


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--large", action="store_true", help="include multi-minute preset rows")
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--theta", type=_float_list, default=None)
    p.add_argument("--p", type=_int_list, default=None)
    p.add_argument("--samples", type=_int_list, default=None, help="list or lo:hi doubling range")
    p.add_argument("--noise", type=lambda x: x.split(","), default=None, dest="noise_kind")
    p.add_argument("--noise-sigma", type=_float_list, default=None)
    p.add_argument("--vartheta", type=_float_list, default=None)
    p.add_argument("--method", type=lambda x: x.split(","), default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--success-threshold", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lpdict", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lpdict {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance file (.json or .npz)")
    _instance_args(g)

    s = sub.add_parser("solve", parents=[common], help="recover one dictionary and report errors")
    _instance_args(s)
    s.add_argument("--instance", type=Path, default=None, help="load the instance instead of generating")
    s.add_argument("--p", type=int, default=3)
    s.add_argument("--method", choices=("gpm", "rgd"), default="gpm")
    s.add_argument("--max-iters", type=int, default=10_000)

    t = sub.add_parser("table", parents=[common], help="recovery-error table over a grid or preset")
    _grid_args(t)
    ph = sub.add_parser("phase", parents=[common], help="success-probability sweep (long table)")
    _grid_args(ph)

    d = sub.add_parser("dynamics", parents=[common], help="population GPM trajectory on the sphere")
    d.add_argument("--n", type=int, default=50)
    d.add_argument("--theta", type=float, default=0.1)
    d.add_argument("--p", type=int, default=4)
    d.add_argument("--engine", choices=ENGINE_MODES, default="closed-form-p4")
    d.add_argument("--mc-samples", type=int, default=100_000)
    d.add_argument("--max-iters", type=int, default=200)

    b = sub.add_parser("bench", parents=[common], help="time full solves")
    b.add_argument("--n", type=int, default=100)
    b.add_argument("--theta", type=float, default=0.1)
    b.add_argument("--samples", type=int, default=40_000)
    b.add_argument("--p", type=_int_list, default=[3, 4, 5])
    b.add_argument("--method", choices=("gpm", "rgd"), default="gpm")
    b.add_argument("--trials", type=int, default=3)
    return parser


def _emit(records, fmt: str) -> None:
    records = records if isinstance(records, list) else [records]
    if fmt == "json":
        print(json.dumps(records if len(records) > 1 else records[0], indent=1, default=str))
    else:
        writer = csv.writer(sys.stdout)
        columns = list(records[0]) if records else []
        writer.writerow(columns)
        for rec in records:
            writer.writerow([format_value(rec.get(c, "")) for c in columns])


def _instance_from_args(args):
    noise = NoiseSpec(args.noise, args.noise_sigma, args.vartheta)
    return gen_instance(args.n, args.samples, BernoulliGaussianSpec(args.theta), args.dict_kind,
                        noise, args.seed)


def cmd_gen(args) -> int:
    inst = _instance_from_args(args)
    path = args.out or Path(f"instance_n{args.n}_r{args.samples}_seed{args.seed}.json")
    save_instance(inst, path)
    manifest = path.with_name(path.stem + ".manifest.json")
    write_json(manifest, make_manifest("gen", vars_json(args), [inst.seed]))
    _emit({"path": str(path), "manifest": str(manifest), "n": inst.n, "r": inst.r, "seed": inst.seed},
          args.format)
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance) if args.instance else _instance_from_args(args)
    cfg = SolverConfig(p=args.p, max_iters=args.max_iters, seed=solver_seed(inst.seed), method=args.method)
    t0 = time.perf_counter()
    A, trace = solve(inst.Y_obs, inst.n, cfg)
    elapsed = time.perf_counter() - t0
    res = align(A, inst.D0)
    report = {"n": inst.n, "samples": inst.r, "theta": inst.bg.theta, "p": args.p, "method": args.method,
              "noise": asdict(inst.noise), "seed": inst.seed, "l4_error": res.l4_error,
              "frob_error": res.frob_error, "iterations": trace.iterations_run,
              "stop_reason": trace.stop_reason, "time": elapsed}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / "solve.json", report)
        write_json(args.out / "manifest.json", make_manifest("solve", {**asdict(cfg), "n": inst.n,
                                                                   "samples": inst.r}, [inst.seed]))
    _emit(report, args.format)
    return 0


def _grids_from_args(args, default_trials: int) -> list[ExperimentGrid]:
    if args.preset:
        grids = preset(args.preset, large=args.large, base_seed=args.seed,
                       trials=args.trials)
        for g in grids:
            g.success_threshold = args.success_threshold
        return grids
    axes = {name: getattr(args, name) for name in
            ("n", "theta", "p", "samples", "noise_kind", "noise_sigma", "vartheta", "method")
            if getattr(args, name) is not None}
    if not axes:
        raise LpDictError("give --preset or at least one axis (e.g. --n 32 --p 3,4)")
    return [ExperimentGrid(axes, trials=args.trials or default_trials, base_seed=args.seed,
                           success_threshold=args.success_threshold)]


def cmd_table(args) -> int:
    out = args.out or Path("lpdict-table")
    table = run_recovery_table(_grids_from_args(args, 10), out, args.threads)
    _emit(table.summary, args.format)
    return 0


def cmd_phase(args) -> int:
    out = args.out or Path("lpdict-phase")
    _emit(run_phase_transition(_grids_from_args(args, 20), out, args.threads), args.format)
    return 0


def cmd_dynamics(args) -> int:
    engine = ExpectationEngine(args.engine, args.mc_samples, args.seed)
    out = args.out or Path("lpdict-dynamics")
    run = run_population_dynamics(args.n, args.theta, args.p, engine, out, seed=args.seed,
                                  max_iters=args.max_iters)
    _emit(run.rows, args.format)
    return 0


def cmd_bench(args) -> int:
    records = bench(args.n, args.samples, args.p, args.theta, args.trials, args.seed, args.method)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        manifest = make_manifest("bench", vars_json(args), [args.seed])
        write_json(args.out / "bench.json", {"manifest": manifest, "rows": records})
        write_json(args.out / "manifest.json", manifest)
    _emit(records, args.format)
    return 0


def vars_json(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "table": cmd_table, "phase": cmd_phase,
            "dynamics": cmd_dynamics, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = default_threads()
    try:
        return COMMANDS[args.command](args)
    except (LpDictError, OSError) as exc:
        print(f"lpdict {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
