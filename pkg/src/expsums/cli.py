"""Command line interface.

Commands
--------
run --config <path> [--out <dir>]
    Run the experiment described by a TOML config.
preset <name> [--noise-sigma <v>] [--seed <n>] [--out <dir>]
    Run a bundled reference experiment (ex-gauss, ex-sine, ex-table3).
refine --config <path> [--out <dir>]
    Shift-invariance estimate followed by damped least-squares refinement
    (the config's solver must be "varpro").

Exit codes: 0 success, 1 solver failure, 2 invalid config.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ConfigError, load_config
from .experiment import PRESET_NAMES, preset_variants, run_experiment

EXIT_OK = 0
EXIT_SOLVER_FAILURE = 1
EXIT_INVALID_CONFIG = 2


def _summarize(record) -> str:
    parts = [f"{record.name}: {record.status}"]
    if record.report is not None:
        parts.append(f"M={record.report.detected_M}")
    if record.err_alpha is not None:
        parts.append(f"err_alpha={record.err_alpha:.3e}")
    if record.err_c is not None:
        parts.append(f"err_c={record.err_c:.3e}")
    if record.dense_error is not None:
        parts.append(f"dense_error={record.dense_error:.3e}")
    if record.error_message:
        parts.append(record.error_message)
    if "report" in record.files:
        parts.append(f"-> {record.files['report']}")
    return "  ".join(parts)


def _run_records(configs, out_dir) -> int:
    status = EXIT_OK
    for cfg in configs:
        record = run_experiment(cfg, out_dir=out_dir)
        print(_summarize(record))
        if record.status != "ok":
            status = EXIT_SOLVER_FAILURE
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="expsums",
        description="Recovery and sparse approximation of generalized "
                    "exponential sums.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)

    p_preset = sub.add_parser("preset", help="run a bundled reference experiment")
    p_preset.add_argument("name", help=f"one of: {', '.join(PRESET_NAMES)}")
    p_preset.add_argument("--noise-sigma", type=float, default=None)
    p_preset.add_argument("--seed", type=int, default=None)
    p_preset.add_argument("--out", default=None)

    p_refine = sub.add_parser(
        "refine", help="estimate then refine by damped least squares"
    )
    p_refine.add_argument("--config", required=True)
    p_refine.add_argument("--out", default=None)

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = load_config(args.config)
            return _run_records([cfg], args.out)

        if args.command == "preset":
            configs = preset_variants(args.name)
            if args.noise_sigma is not None or args.seed is not None:
                patched = []
                for cfg in configs:
                    noise = cfg.noise
                    noise = dataclasses.replace(
                        noise,
                        sigma=args.noise_sigma if args.noise_sigma is not None
                        else noise.sigma,
                        seed=args.seed if args.seed is not None else noise.seed,
                    )
                    patched.append(dataclasses.replace(cfg, noise=noise))
                configs = patched
            return _run_records(configs, args.out)

        if args.command == "refine":
            cfg = load_config(args.config)
            if cfg.solver.kind != "varpro":
                raise ConfigError(
                    "the refine command needs a config with solver kind 'varpro'"
                )
            return _run_records([cfg], args.out)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
