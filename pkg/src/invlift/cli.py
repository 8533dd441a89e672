"""Command-line front end.

Every subcommand accepts either ``--job FILE`` (a JSON job specification) or
direct arguments; both paths build a :class:`~invlift.jobs.JobSpec` and go
through :func:`~invlift.jobs.run_job`.  Exit codes: 0 success, 1 corpus
mismatch, 2 input error, 3 precision or truncation exhausted, 4 budget
exceeded, 5 verification failed, 6 other computation errors.

The environment variable INVLIFT_MAX_PRECISION caps precision doubling
(default 2048 bits).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InputError
from .jobs import JobSpec, dumps, format_table, rows_to_csv, run_job


def _add_common(p):
    p.add_argument("--job", help="JSON job specification (overrides the direct arguments)")
    p.add_argument("--precision", type=int, help="working precision in bits (16..INVLIFT_MAX_PRECISION)")
    p.add_argument("--trunc", type=int, help="series truncation order used for lifting (2..64)")
    p.add_argument("--budget", type=int, help="maximum number of charts or resolution leaves")
    p.add_argument("--depth", type=int, help="maximum blow-up depth")
    p.add_argument("--grid-levels", type=int, nargs=2, metavar=("LO", "HI"),
                   help="dyadic grid levels for verification (2^level cells per axis)")
    p.add_argument("--grid", type=int, help="samples per axis for section checks")
    p.add_argument("--tol", type=float, help="relative tolerance of the gradient-integral Cauchy test")
    p.add_argument("--box", nargs="+", help="half-widths of the base box (rationals)")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format")


def _add_system(p):
    p.add_argument("--family", choices=("symmetric_complex", "signed_perm_real",
                                        "symmetric_real_trace_zero"))
    p.add_argument("--n", type=int, help="number of coordinates of the representation")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="invlift", description="Lift maps over invariants of finite reflection groups.",
        epilog="Environment: INVLIFT_MAX_PRECISION caps the working precision in bits "
               "(default 2048); precision doubling stops there with exit code 3. "
               "Exit codes: 0 ok, 1 corpus mismatch, 2 input error, 3 precision or "
               "truncation exhausted, 4 budget exceeded, 5 verification failed, 6 other.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("describe", help="generators and degrees of an invariant system")
    _add_system(p)
    _add_common(p)

    for name, what in (("lift-curve", "one-parameter"), ("lift-surface", "two-parameter")):
        p = sub.add_parser(name, help=f"lift {what} data through charts")
        _add_system(p)
        p.add_argument("--f", action="append", help="component series literal (repeat per generator)")
        p.add_argument("--series-trunc", help="truncation order of the input series (default: polynomial)")
        _add_common(p)

    p = sub.add_parser("resolve", help="resolve two-variable polynomials to normal crossings")
    p.add_argument("--f", action="append", help="polynomial literal in x, y (repeat for a tracked set)")
    _add_common(p)

    p = sub.add_parser("check-membership", help="decide whether z lies in the image of the orbit map")
    _add_system(p)
    p.add_argument("--z", nargs="+", help="invariant values (rational literals)")
    _add_common(p)

    p = sub.add_parser("section", help="section of the orbit map over a box of invariant values")
    _add_system(p)
    p.add_argument("--center", nargs="+", help="center of the sampled box")
    _add_common(p)

    p = sub.add_parser("verify-lift", help="assemble and verify a weak lift on grids")
    _add_system(p)
    p.add_argument("--f", action="append", help="component series literal (repeat per generator)")
    p.add_argument("--nvars", type=int, default=1, help="number of base variables of --f data")
    p.add_argument("--weak-lift", help="weak lift JSON file (output of section or verify-lift)")
    _add_common(p)

    p = sub.add_parser("run-corpus", help="run a directory of job files against their expectations")
    p.add_argument("dir", nargs="?", help="corpus directory")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    _add_common(p)
    return parser


def spec_from_args(args) -> JobSpec:
    if args.job:
        try:
            obj = json.loads(Path(args.job).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read job file: {exc}") from exc
        if obj.get("subcommand") != args.subcommand:
            raise InputError(f"job file is for {obj.get('subcommand')!r}, not {args.subcommand!r}")
        spec = JobSpec.from_json(obj)
    else:
        spec = JobSpec(args.subcommand)
        if getattr(args, "family", None):
            if args.n is None:
                raise InputError("--family needs --n")
            spec.system = {"family": args.family, "n": args.n}
        payload = spec.payload
        if getattr(args, "f", None):
            payload["f"] = list(args.f)
        if getattr(args, "series_trunc", None):
            payload["trunc"] = args.series_trunc
        if getattr(args, "z", None):
            payload["z"] = list(args.z)
        if getattr(args, "center", None):
            payload["center"] = list(args.center)
        if args.subcommand == "verify-lift":
            payload["nvars"] = args.nvars
            if args.weak_lift:
                payload["weak_lift_path"] = args.weak_lift
        if args.subcommand == "run-corpus":
            if not args.dir:
                raise InputError("run-corpus needs a directory")
            payload["dir"] = args.dir
        if args.subcommand == "section" and args.box:
            payload["box"] = list(args.box)
    opts = spec.options
    for flag, attr in (("precision", "precision"), ("trunc", "truncation"), ("budget", "budget"),
                       ("depth", "depth"), ("grid_levels", "grid_levels"), ("grid", "grid"),
                       ("tol", "tol"), ("box", "box"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(opts, attr, list(value) if isinstance(value, list) else value)
    opts.validate()
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
    except InputError as exc:
        print(f"invlift: error: {exc}", file=sys.stderr)
        return exc.exit_code
    res = run_job(spec)
    if args.subcommand == "run-corpus" and res.exit_code in (0, 1) and args.format != "csv":
        text = format_table(res.result["table"]) if not args.out else dumps(res.document())
    elif args.format == "csv" and res.csv_rows:
        text = rows_to_csv(res.csv_rows)
    else:
        text = dumps(res.document())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if res.exit_code not in (0, 1) and "error" in res.result:
        print(f"invlift: {res.result['error']}: {res.result['message']}", file=sys.stderr)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
