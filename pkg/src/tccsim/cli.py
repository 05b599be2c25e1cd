"""Command line: ``tccsim run | check | sweep``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checker import DEFAULT_BOUND, MalformedHistory, check_brute_force, check_certificate
from .config import SWEEP_AXES, ConfigError, load_config
from .core import History
from .metrics import metrics_csv
from .runner import run_workload, sweep, write_outputs
from .simnet import SimulationStall
from .trace import load_trace
from .workload import PAPER_CASES

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INPUT = 2
EXIT_UNDECIDED = 3
EXIT_STALL = 4

# flag name -> (config key, argparse kwargs)
_OVERRIDES = {
    "--seed": ("seed", {"type": int}),
    "--dcs": ("dcs", {"type": int}),
    "--partitions": ("partitions", {"type": int}),
    "--sessions-per-dc": ("sessionsPerDc", {"type": int}),
    "--sessions-per-partition": ("sessionsPerPartition", {"type": int}),
    "--ops-per-session": ("opsPerSession", {"type": int}),
    "--read-ratio": ("readRatio", {"type": float}),
    "--remote-fraction": ("remoteFraction", {"type": float}),
    "--key-count": ("keyCount", {"type": int}),
    "--key-distribution": ("keyDistribution", {}),
    "--level-case": ("levelCase", {}),
    "--intra-dc-delay": ("intraDcDelay", {"type": int, "nargs": 2, "metavar": ("MIN", "MAX")}),
    "--inter-dc-delay": ("interDcDelay", {"type": int, "nargs": 2, "metavar": ("MIN", "MAX")}),
    "--clock-skew": ("clockSkew", {"type": int}),
    "--propagate-period": ("propagatePeriod", {"type": int}),
    "--bcast-period": ("bcastPeriod", {"type": int}),
    "--heartbeats": ("heartbeats", {"action": argparse.BooleanOptionalAction}),
    "--stall-bound": ("stallBound", {"type": int}),
    "--settle": ("settle", {"type": int}),
    "--think-time": ("thinkTime", {"type": int}),
    "--get-wait": ("getWait", {"action": argparse.BooleanOptionalAction}),
    "--put-wait": ("putWait", {"action": argparse.BooleanOptionalAction}),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config; flags override its keys")
    g = p.add_argument_group("config overrides")
    for flag, (key, kwargs) in _OVERRIDES.items():
        if "action" not in kwargs:
            kwargs = {"metavar": key, **kwargs}
        g.add_argument(flag, dest=f"cfg_{key}", default=None, help=f"overrides {key}", **kwargs)


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for _, (key, _) in _OVERRIDES.items():
        value = getattr(args, f"cfg_{key}")
        if value is not None:
            out[key] = list(value) if isinstance(value, list) else value
    return out


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    try:
        result, metrics = run_workload(cfg)
    except SimulationStall as exc:
        print(f"tccsim: simulation stalled at t={exc.now}", file=sys.stderr)
        for line in exc.report:
            print(f"  {line}", file=sys.stderr)
        return EXIT_STALL
    paths = write_outputs(result, metrics, args.out)
    _emit(
        {
            "digest": result.digest(),
            "events": len(result.history),
            "files": {k: str(v) for k, v in paths.items()},
            "metrics": metrics.to_json(),
        }
    )
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    try:
        history = History.from_jsonl(Path(args.history).read_text())
        trace = load_trace(args.trace) if args.trace else None
    except OSError as exc:
        print(f"tccsim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"tccsim: parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    verdicts = []
    if args.mode in ("brute", "both"):
        verdicts.append(check_brute_force(history, bound=args.bound))
    if args.mode in ("certificate", "both"):
        try:
            verdicts.append(check_certificate(history, trace))
        except MalformedHistory as exc:
            print(f"tccsim: malformed input: {exc}", file=sys.stderr)
            return EXIT_INPUT

    # in both mode a decided certificate verdict stands in for an undecided brute force
    decided = [v for v in verdicts if v.status != "undecided"] if args.mode == "both" else verdicts
    statuses = {v.status for v in decided or verdicts}
    if "violated" in statuses:
        status, code = "violated", EXIT_VIOLATED
    elif "undecided" in statuses:
        status, code = "undecided", EXIT_UNDECIDED
    else:
        status, code = "satisfied", EXIT_OK
    out = {"status": status, "events": len(history), "verdicts": [v.to_json() for v in verdicts]}
    violated = [v for v in verdicts if v.violation is not None]
    if violated:
        out["predicate"] = violated[0].violation.predicate
    _emit(out)
    return code


def _parse_values(axis: str, text: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if axis == "readRatio":
        return [float(p) for p in parts]
    if axis in ("sessions", "partitions"):
        return [int(p) for p in parts]
    return parts


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    try:
        values = _parse_values(args.axis, args.values) if args.values else cfg.sweep.get(args.axis)
    except ValueError as exc:
        raise ConfigError([f"values: {exc}"]) from exc
    if values is None and args.axis == "levelCase":
        values = list(PAPER_CASES)
    if not values:
        raise ConfigError([f"sweep.{args.axis}: no values given (use --values or the config's sweep map)"])
    try:
        rows = sweep(cfg, args.axis, values)
    except SimulationStall as exc:
        print(f"tccsim: simulation stalled at t={exc.now}", file=sys.stderr)
        for line in exc.report:
            print(f"  {line}", file=sys.stderr)
        return EXIT_STALL
    text = metrics_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tccsim", description="Tunable causal consistency simulator and checker")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one workload and write history, trace and metrics")
    _add_config_flags(p)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="check a history for TCC")
    p.add_argument("history", help="history JSON-lines file")
    p.add_argument("--trace", help="trace JSON-lines file; certificates are then read from it")
    p.add_argument("--mode", choices=("brute", "certificate", "both"), default="both")
    p.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="brute-force event bound")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="one run per axis value; CSV of metrics")
    _add_config_flags(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", help="comma-separated axis values; default from the config's sweep map")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"tccsim: config: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
