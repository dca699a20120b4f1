"""Command-line scenario runner.

    neckflow run --scenario round_sphere --n 2 --m 400 --out runs/rs
    neckflow run --config my_run.cfg --out runs/custom
    neckflow validate --scenario dumbbell --m 200
    neckflow sweep --config base.cfg --vary interval_length=0.2,0.3,0.4 --out runs/sweep

Exit codes: 0 success, 2 malformed configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NeckflowError, NumericalFailure
from .pipeline import emit_artifacts, run_scenario
from .scenarios import Scenario, load_config, scenario_from_mapping, validate_scenario

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--scenario", help="round_sphere | dumbbell | interval_pinch | point_pinch | custom")
    parser.add_argument("--n", type=int, help="fiber sphere dimension")
    parser.add_argument("--m", type=int, help="grid intervals over [-1, 1]")
    parser.add_argument("--dt", dest="dt_init", type=float, help="maximum time step")
    parser.add_argument("--t-max", dest="t_max", type=float, help="flow time horizon")
    parser.add_argument("--cost", help="cost spec: linear | power:<p> | table:<path>")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="recorded for reproducibility")
    parser.add_argument("--profile-file", dest="profile_file", help="profile for --scenario custom")
    parser.add_argument("--t-post", dest="t_post", type=float, help="post-surgery flow window")
    parser.add_argument("--l-mode", dest="l_mode", choices=("constant", "prescribed"),
                        help="neck interval length schedule")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _scenario_from_args(args) -> Scenario:
    pairs: dict = {}
    if args.config:
        pairs.update(load_config(args.config))
    for key in ("scenario", "n", "m", "dt_init", "t_max", "cost", "out", "seed",
                "profile_file", "t_post", "l_mode"):
        val = getattr(args, key, None)
        if val is not None:
            pairs[key] = val
    sc = scenario_from_mapping(pairs)
    if getattr(args, "no_figures", False):
        sc.figures = False
    return sc


def cmd_run(args) -> int:
    sc = _scenario_from_args(args)
    if sc.out is None:
        raise ConfigError("run requires an output directory (--out or out= in config)")
    result = run_scenario(sc)
    emit_artifacts(result, sc.out)
    rep = result.flow_report
    if rep.singular_time is not None:
        print(f"singular_time = {rep.singular_time:.6g}")
    else:
        print("singular_time = none")
    print(f"verdict = {result.verdict}")
    if result.monitor is not None:
        print(f"violations = {len(result.monitor.violations)}")
    print(f"artifacts -> {sc.out}")
    return 0


def cmd_validate(args) -> int:
    sc = _scenario_from_args(args)
    problems = validate_scenario(sc)
    if not problems:
        print(f"OK: scenario {sc.name!r} (n={sc.n}, m={sc.m}) passes all checks")
        return 0
    for issue in problems:
        print(f"warning: {issue}")
    return 0


def cmd_sweep(args) -> int:
    base: dict = {}
    if args.config:
        base.update(load_config(args.config))
    key, _, values = args.vary.partition("=")
    if not values:
        raise ConfigError("--vary expects key=v1,v2,...")
    rc = 0
    for value in values.split(","):
        pairs = dict(base)
        pairs[key.strip()] = value.strip()
        sc = scenario_from_mapping(pairs)
        sc.out = f"{args.out}/{key.strip()}_{value.strip()}"
        print(f"[sweep] {key} = {value}")
        result = run_scenario(sc)
        emit_artifacts(result, sc.out)
        print(f"[sweep]   verdict = {result.verdict}")
    return rc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neckflow",
        description="rotationally symmetric Ricci flow through neckpinches, "
                    "with diffusion transport monitoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one scenario and emit artifacts")
    _add_scenario_flags(run_p)
    run_p.set_defaults(func=cmd_run)
    val_p = sub.add_parser("validate", help="check a configuration without running")
    _add_scenario_flags(val_p)
    val_p.set_defaults(func=cmd_validate)
    sweep_p = sub.add_parser("sweep", help="fan out runs over one varying key")
    _add_scenario_flags(sweep_p)
    sweep_p.add_argument("--vary", required=True, help="key=v1,v2,... to sweep")
    sweep_p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, NeckflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
