"""Command-line front end.

Three subcommands: estimate (full pipeline on a file or generated instance),
validate (Monte Carlo suites), gen (write a synthetic instance to a file).
Exit codes: 0 success, 2 configuration or input error, 3 a requested
validation check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import SubsketchError
from .generators import GeneratorSpec, make_instance, parse_generator_spec
from .model import Params, load_instance, save_instance
from .pipeline import MODES, run_estimate
from .validation import run_validation_suite

_SEED_ENV = "SUBSKETCH_SEED"


def _env_seed() -> int:
    raw = os.environ.get(_SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"subsketch: {_SEED_ENV} must be a decimal integer, got {raw!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subsketch",
        description="Sublinear makespan estimation by weighted sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run the estimation pipeline")
    source = est.add_mutually_exclusive_group(required=True)
    source.add_argument("--instance", help="instance file (text lines or JSON array)")
    source.add_argument(
        "--generate",
        metavar="SPEC",
        help="generator spec family:n[:key=value,...], e.g. uniform:10000",
    )
    est.add_argument("--mode", choices=MODES, required=True)
    est.add_argument("--m", type=int, required=True, help="number of machines")
    est.add_argument("--epsilon", type=float, required=True)
    est.add_argument("--gamma0", type=float, default=1.0 / 12.0)
    est.add_argument("--seed", type=int, default=None)
    est.add_argument(
        "--sketch-delta",
        type=float,
        default=None,
        help="sampling resolution override (default epsilon/3)",
    )
    est.add_argument("--max-draws", type=int, default=None)
    est.add_argument("--trials", type=int, default=1, help="JSONL line per trial")
    est.add_argument("--validate", action="store_true")
    est.add_argument("--emit-schedule", action="store_true")
    est.add_argument("--out", help="output file (default stdout)")

    val = sub.add_parser("validate", help="run a Monte Carlo validation suite")
    val.add_argument("--suite", required=True)
    val.add_argument("--trials", type=int, default=None)
    val.add_argument("--seed", type=int, default=None)
    val.add_argument("--out", help="write detail JSON here as well")

    gen = sub.add_parser("gen", help="write a synthetic instance file")
    gen.add_argument("--family", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True)
    gen.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="family parameter, repeatable",
    )
    return parser


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out_path, "w", encoding="ascii") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _cmd_estimate(args) -> int:
    seed = _env_seed() if args.seed is None else args.seed
    if args.instance is not None:
        instance = load_instance(args.instance)
    else:
        instance = make_instance(parse_generator_spec(args.generate, seed=seed))
    params = Params(m=args.m, epsilon=args.epsilon, gamma0=args.gamma0)
    if args.trials < 1:
        raise SubsketchError("--trials must be >= 1")
    lines = []
    all_ok = True
    for trial in range(args.trials):
        report = run_estimate(
            instance,
            args.mode,
            params,
            seed=seed + trial,
            sketch_delta=args.sketch_delta,
            max_draws=args.max_draws,
            validate=args.validate,
            emit_schedule=args.emit_schedule,
        )
        lines.append(report.to_json())
        if report.validation is not None and not report.validation.envelope_ok:
            all_ok = False
    _emit("\n".join(lines), args.out)
    return 0 if all_ok else 3


def _cmd_validate(args) -> int:
    seed = _env_seed() if args.seed is None else args.seed
    result = run_validation_suite(args.suite, trials=args.trials, seed=seed)
    print(result.summary())
    if args.out is not None:
        payload = {
            "suite": result.suite,
            "passed": result.passed,
            "details": result.details,
        }
        _emit(json.dumps(payload, sort_keys=True, default=float), args.out)
    return 0 if result.passed else 3


def _cmd_gen(args) -> int:
    seed = _env_seed() if args.seed is None else args.seed
    params = {}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SubsketchError(f"bad --param {item!r}, expected KEY=VALUE")
        try:
            params[key] = float(value)
        except ValueError:
            raise SubsketchError(f"bad --param {item!r}, value must be numeric")
    spec = GeneratorSpec(family=args.family, n=args.n, seed=seed, params=params)
    save_instance(make_instance(spec), args.out)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "estimate": _cmd_estimate,
        "validate": _cmd_validate,
        "gen": _cmd_gen,
    }
    try:
        return handlers[args.command](args)
    except SubsketchError as exc:
        print(f"subsketch: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"subsketch: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
