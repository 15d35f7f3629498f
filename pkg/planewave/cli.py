# cli.py
"""
Command-line entry points.

Every command prints exactly one JSON line on stdout and logs to stderr.
Exit codes: 0 success, 2 configuration or precondition, 3 I/O or field
format, 4 numerical invariant failure.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import RunConfig, WaveConfig, load_json
from .errors import ConfigError, PlanewaveError, exit_code_for
from .fieldio import export_csv, read_field, write_field

logger = logging.getLogger(__name__)


def _emit(payload):
    print(json.dumps(payload, sort_keys=True, default=_jsonable))


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.ndarray, tuple)):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def cmd_gen_wave(args):
    from .spectral import TorusGrid
    from .wave_builder import build_localized_wave
    doc = load_json(args.config)
    if args.lam is not None:
        doc["lam"] = args.lam
    if args.output is not None:
        doc["output_dir"] = args.output
    cfg = WaveConfig.from_dict(doc)
    grid = TorusGrid(cfg.d, tuple(cfg.n))
    spec = cfg.build_spec()
    wave = build_localized_wave(spec, grid, cfg.min_ramp_cells, cfg.table_size, cfg.eps,
                                ramp_oscillations=cfg.ramp_oscillations)
    summary = {"command": "gen-wave", "status": "ok", "lambda": spec.lam,
               "xi": spec.xi.tolist(), "q_bar": spec.q_bar}
    summary.update({k: v for k, v in wave.diagnostics.items() if k != "lambda"})
    summary["sup_dist"] = summary.pop("sup_segment_dist")
    if cfg.output_dir:
        for name, values in (("v", wave.v), ("U", wave.U), ("q", wave.q)):
            write_field(os.path.join(cfg.output_dir, f"{name}.pwfg"), values, cfg.d)
        summary["output_dir"] = cfg.output_dir
    _emit(summary)
    return 0


def _run_config(args):
    doc = load_json(args.config)
    if getattr(args, "seed", None) is not None:
        doc["rng_seed"] = args.seed
    if getattr(args, "output", None) is not None:
        doc["output_dir"] = args.output
    return RunConfig.from_dict(doc)


def cmd_run(args):
    from .driver import run
    cfg = _run_config(args)
    state = run(cfg)
    final = state.history[-1] if state.history else state.initial
    deficits = [state.initial.total_deficit] + [r.total_deficit for r in state.history]
    _emit({
        "command": "run",
        "status": "ok",
        "seed": cfg.rng_seed,
        "sweeps": len(state.history),
        "initial_deficit": state.initial.total_deficit,
        "final_deficit": final.total_deficit,
        "monotone": bool(all(b <= a + 1e-9 for a, b in zip(deficits, deficits[1:]))),
        "weak_residual": final.weak_residual,
        "hminus1_to_v0": final.hminus1_to_v0,
        "sigma_met": final.sigma_met,
        "relaxed_violations": final.relaxed_violations,
        "output_dir": cfg.output_dir,
    })
    return 0


def _read_kind(path, kind, shape):
    values, found = read_field(path)
    if found != kind or values.shape != shape:
        raise ConfigError(f"{path}: expected a {kind} field of shape {shape}, got {found} {values.shape}")
    return values


def cmd_check(args):
    from . import driver
    from .spectral import TorusGrid
    cfg = _run_config(args)
    grid = TorusGrid(cfg.d, tuple(cfg.n))
    B = cfg.source_matrix()
    v = _read_kind(args.v, "vector", grid.shape + (grid.d,))
    report = {"command": "check", "status": "ok",
              "weak_residual": driver.weak_residual(grid, v, B, cfg.weak_tests, cfg.rng_seed)}
    if args.U is not None and args.q is not None:
        U = _read_kind(args.U, "matrix", grid.shape + (grid.d, grid.d))
        q = _read_kind(args.q, "scalar", grid.shape)
        e = cfg.energy_profile().sample(grid)
        state = driver.IterationState(grid, v, U, q, e, B, np.zeros_like(v), omega=cfg.omega_box())
        record = driver.record_diagnostics(state, driver.DriverSettings.from_config(cfg), 0)
        report.update({k: getattr(record, k) for k in (
            "residual_div_v", "residual_relaxed", "total_deficit", "min_hull_margin",
            "linf_ok", "relaxed_violations", "constraint_violation_l1")})
    _emit(report)
    return 0


def cmd_export_csv(args):
    frame = export_csv(args.field, args.csv)
    _emit({"command": "export-csv", "status": "ok", "rows": len(frame),
           "columns": list(frame.columns), "csv": args.csv})
    return 0


def cmd_ensemble(args):
    from .ensemble import RunEnsemble, generate_config_list
    doc = load_json(args.config)
    doc["output_dir"] = None
    ensemble = RunEnsemble(generate_config_list({"rng_seed": args.seeds}, base=doc))
    summary, distances = ensemble.run()
    pairs = {f"{a}|{b}": float(distances.loc[a, b])
             for i, a in enumerate(distances.index) for b in distances.index[i + 1:]}
    _emit({"command": "ensemble", "status": "ok", "members": list(summary.index),
           "final_deficit": summary["total_deficit"].to_dict(), "pairwise_l2": pairs})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="planewave", description="Convex-integration subsolutions on the torus.")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-wave", help="build one localized wave and write v, U, q")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_gen_wave)

    p = sub.add_parser("run", help="run the sweep schedule of a configuration")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="weak residual and subsolution checks of stored fields")
    p.add_argument("config")
    p.add_argument("--v", required=True)
    p.add_argument("--U", default=None)
    p.add_argument("--q", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("export-csv", help="convert a field file to CSV")
    p.add_argument("field")
    p.add_argument("csv")
    p.set_defaults(func=cmd_export_csv)

    p = sub.add_parser("ensemble", help="run one configuration under several seeds")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except PlanewaveError as exc:
        error, code = exc, exit_code_for(exc)
    except OSError as exc:
        error, code = exc, 3
    logger.error("%s: %s", type(error).__name__, error)
    _emit({"command": args.command, "status": "error", "error": type(error).__name__,
           "message": str(error), "exit_code": code})
    return code


if __name__ == "__main__":
    sys.exit(main())
