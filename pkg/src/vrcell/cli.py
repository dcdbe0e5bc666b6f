"""Command-line entry point: ``vrcell run|qos-table|validate``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .engine import ConfigError
from .experiment import ExperimentSpec, detail_path, emit_qos_table, parse_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vrcell", description="VR-over-cellular scheduling simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep described by an INI file")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int, help="run this single seed instead of the configured list")
    run.add_argument("--duration", type=float, help="simulated seconds per run")
    run.add_argument("--out", help="results CSV path (relative paths honour VRCELL_OUTPUT_DIR)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--trace", type=Path, metavar="DIR",
                     help="write a per-TTI CSV for every run into DIR")

    qos = sub.add_parser("qos-table", help="print the QoS requirement table as CSV")
    qos.add_argument("--numeric", action="store_true", help="raw bit/s instead of formatted rates")
    qos.add_argument("--out", type=Path)

    val = sub.add_parser("validate", help="check a configuration without running it")
    val.add_argument("config", type=Path)
    return p


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    if args.seed is not None:
        spec = replace(spec, seeds=(args.seed,))
    if args.duration is not None:
        try:
            spec = replace(spec, base=replace(spec.base, duration_s=args.duration))
        except ConfigError as exc:
            raise ConfigError(f"--duration: {exc}", "duration_s") from None
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1", "jobs")
    return spec


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "qos-table":
            text = emit_qos_table(numeric=args.numeric)
            if args.out:
                args.out.write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK

        spec = parse_config(args.config)
        if args.command == "validate":
            print(f"ok: {spec.planned_runs} runs planned "
                  f"({len(spec.curves)} curves x {len(spec.n_users)} user counts x "
                  f"{len(spec.seeds)} seeds)")
            print(f"fingerprint: {spec.fingerprint()}")
            return EXIT_OK

        spec = _apply_overrides(spec, args)
        out = run_experiment(spec, jobs=args.jobs, output=args.out, trace_dir=args.trace)
        print(f"wrote {out}")
        if spec.per_run_output:
            print(f"wrote {detail_path(out)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"vrcell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("vrcell: interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"vrcell: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
