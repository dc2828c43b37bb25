"""Batch experiment runner: simulate missions, replay logs, score results.

Exit codes are scriptable: 0 success, 2 configuration error, 3 data error
(unreadable or inconsistent files), 4 filter divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    CovarianceNotPSD,
    InnovationCovarianceSingular,
    MukfError,
)
from .filter import NavigationFilter
from .logio import (
    ExperimentConfig,
    read_log,
    read_results,
    read_truth,
    write_log,
    write_results,
    write_truth,
    write_updates,
)
from .metrics import RunMetrics, comparison_table, evaluate
from .presets import PRESETS
from .sim import TRUTH_COLUMNS, simulate, truth_arrays

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

_SENSOR_KINDS = ("accel", "dvl", "adcp", "gps", "pressure", "model")


def _parse_deny(spec: str) -> dict:
    """``dvl,gps:200-1200`` -> a denial-window dict."""
    head, sep, span = spec.rpartition(":")
    if not sep or "-" not in span:
        raise ConfigError(f"--deny wants '<sensor,...>:<t0>-<t1>', got {spec!r}")
    kinds = [k.strip() for k in head.split(",") if k.strip()]
    if not kinds:
        raise ConfigError(f"--deny {spec!r}: no sensor kinds given")
    for k in kinds:
        if k not in _SENSOR_KINDS:
            raise ConfigError(
                f"--deny {spec!r}: unknown sensor {k!r} (one of {', '.join(_SENSOR_KINDS)})"
            )
    t0_s, _, t1_s = span.partition("-")
    try:
        t0, t1 = float(t0_s), float(t1_s)
    except ValueError as e:
        raise ConfigError(f"--deny {spec!r}: bad time range") from e
    if t1 <= t0:
        raise ConfigError(f"--deny {spec!r}: window must have t1 > t0")
    return {"t0": t0, "t1": t1, "kinds": kinds}


def _resolve_config(args) -> ExperimentConfig:
    if args.preset and args.config:
        raise ConfigError("--preset and --config are mutually exclusive")
    if args.preset:
        try:
            cfg = PRESETS[args.preset]()
        except KeyError:
            raise ConfigError(
                f"unknown preset {args.preset!r} (one of {', '.join(sorted(PRESETS))})"
            ) from None
    elif args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig.from_dict({})

    override: dict = {}
    if args.seed is not None:
        override["seed"] = args.seed
    enabled = {}
    for k in args.enable or []:
        if k not in _SENSOR_KINDS:
            raise ConfigError(f"--enable: unknown sensor {k!r}")
        enabled[k] = True
    for k in args.disable or []:
        if k not in _SENSOR_KINDS:
            raise ConfigError(f"--disable: unknown sensor {k!r}")
        enabled[k] = False
    if enabled:
        override["enabled"] = enabled
    if args.deny:
        override["denial"] = cfg.get("denial", []) + [_parse_deny(d) for d in args.deny]
    return cfg.override(override) if override else cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args)
    res = simulate(cfg)
    write_log(out / "log.txt", res.log)
    write_truth(out / "truth.csv", truth_arrays(res), TRUTH_COLUMNS, meta=res.meta)
    cfg.save(out / "config.yaml")
    print(
        f"records={len(res.log.records)} duration_s={float(res.log.duration)!r} "
        f"log={out / 'log.txt'} truth={out / 'truth.csv'}"
    )
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args)
    log = read_log(args.log)
    nav = NavigationFilter(cfg)
    run = nav.run(log)
    write_results(out / "results.csv", run.columns())
    write_updates(out / "updates.csv", run.updates)
    print(
        f"n_predicts={run.n_predicts} wall_s={run.wall_time:.3f} "
        f"throughput={run.throughput:.1f} results={out / 'results.csv'}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    truth, meta = read_truth(args.truth)
    rate = meta.get("imu_rate")
    if rate:
        period = 1.0 / float(rate)
    else:
        import numpy as np

        period = float(np.median(np.diff(truth["t"])))
    scored: dict[str, RunMetrics] = {}
    for path in args.results:
        res = read_results(path)
        scored[Path(path).stem if len(args.results) > 1 else str(path)] = evaluate(
            res, truth, period
        )
    sys.stdout.write(comparison_table(scored))
    if args.out is not None:
        out = _out_dir(args)
        (out / "metrics.csv").write_text(comparison_table(scored))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mukf",
        description="Simulate missions, replay sensor logs through the filter, score runs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_out=True):
        sp.add_argument("--config", help="experiment config (YAML)")
        sp.add_argument("--preset", help="named scenario: " + ", ".join(sorted(PRESETS)))
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument(
            "--deny",
            action="append",
            metavar="SENSORS:T0-T1",
            help="deny sensors over a window, e.g. dvl,gps:200-1200 (repeatable)",
        )
        sp.add_argument("--enable", action="append", metavar="SENSOR")
        sp.add_argument("--disable", action="append", metavar="SENSOR")
        if with_out:
            sp.add_argument("--out", default=".", help="output directory (default: .)")

    sp = sub.add_parser("simulate", help="generate a sensor log and ground truth")
    common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("run", help="replay a sensor log through the filter")
    sp.add_argument("log", help="sensor log file")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser(
        "evaluate", help="score results against truth (several results compare side by side)"
    )
    sp.add_argument("truth", help="truth CSV from simulate")
    sp.add_argument("results", nargs="+", help="results CSV file(s) from run")
    sp.add_argument("--out", default=None, help="also write metrics.csv here")
    sp.set_defaults(fn=cmd_evaluate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (CovarianceNotPSD, InnovationCovarianceSingular) as e:
        print(f"filter diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (MukfError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
