"""Command-line interface.

    qhydro run <scenario.yaml> [--out DIR]
    qhydro sweep <scenario.yaml> --param initial_state.p0 --values 4,6,8,10 [--out DIR]
    qhydro validate <scenario.yaml>
    qhydro presets list
    qhydro presets emit <name> [--p0 X] [-o FILE]

The output root defaults to ./runs, overridable with QHYDRO_OUTPUT_ROOT.
Exit code 0 only on complete success.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .runner import run, sweep, output_root
from .scenario import PRESETS, ScenarioError, dump_scenario, load_scenario, validate


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qhydro",
                                 description="2D quantum dynamics scenarios")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="output directory")

    p_sweep = sub.add_parser("sweep", help="run a scenario over parameter values")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--param", required=True,
                         help="dotted path of a scalar field, e.g. initial_state.p0")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated numbers")
    p_sweep.add_argument("--out", default=None)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario")

    p_pre = sub.add_parser("presets", help="list or emit built-in scenarios")
    pre_sub = p_pre.add_subparsers(dest="preset_command", required=True)
    pre_sub.add_parser("list")
    p_emit = pre_sub.add_parser("emit")
    p_emit.add_argument("name", choices=sorted(PRESETS))
    p_emit.add_argument("--p0", type=float, default=None,
                        help="momentum parameter (mueller-brown)")
    p_emit.add_argument("--n", type=int, default=None, help="ensemble size")
    p_emit.add_argument("-o", "--output", default=None, help="write to file")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = run(args.scenario, out_dir=args.out)
            print(f"run complete: {manifest['name']}  "
                  f"wall={manifest['wall_time_s']}s  outputs_hash={manifest['outputs_hash'][:16]}")
            return 0
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            results = sweep(args.scenario, args.param, values, out_root=args.out)
            failed = [v for v, r in results.items() if "error" in r]
            for v in sorted(results):
                status = "failed" if "error" in results[v] else "ok"
                print(f"{args.param}={v:g}: {status}")
            return 1 if failed else 0
        if args.command == "validate":
            problems = validate(load_scenario(args.scenario))
            if problems:
                for p in problems:
                    print(f"invalid: {p}", file=sys.stderr)
                return 1
            print("scenario valid")
            return 0
        if args.command == "presets":
            if args.preset_command == "list":
                for name in sorted(PRESETS):
                    print(name)
                return 0
            kwargs = {}
            if args.p0 is not None:
                kwargs["p0"] = args.p0
            if args.n is not None:
                kwargs["n"] = args.n
            scenario = PRESETS[args.name](**kwargs)
            if args.output:
                dump_scenario(scenario, args.output)
                print(f"wrote {args.output}")
            else:
                print(yaml.safe_dump(scenario.raw, sort_keys=False), end="")
            return 0
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
