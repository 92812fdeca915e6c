"""Command-line entry point: ``revmono gen | check | search``.

Exit status is 0 when every counted check passes, 1 when one fails and 2
for usage, parse or validation errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import __version__
from .caps import Caps
from .errors import CapExceeded, RevmonoError
from .lab import (CSV_FIELDS, SUITES, Instance, SearchConfig, random_instance, run_suite,
                  search_hart_reny)
from .serialize import dumps, rat, write_atomic

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _positive(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if val <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap-joint", type=_positive, default=Caps.joint)
    common.add_argument("--cap-subset", type=_positive, default=Caps.subset)
    common.add_argument("--cap-lp", type=_positive, default=Caps.lp)

    p = argparse.ArgumentParser(prog="revmono", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"revmono {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write seeded random instances")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--support", type=int, default=2, help="atoms per coordinate")
    g.add_argument("--valuation", choices=("additive", "unit-demand", "xos"), default="additive")
    g.add_argument("--strength", type=_fraction, default=Fraction(1, 2))
    g.add_argument("--dominance", choices=("coordinatewise", "v"), default="coordinatewise")
    g.add_argument("--env-vertices", type=int, default=0,
                   help="attach a random explicit environment with this many vectors")
    g.add_argument("--aspe", action="store_true", help="attach a random ASPE configuration")
    g.add_argument("--b", type=_fraction, default=None)
    g.add_argument("--q", type=_fraction, default=None)

    c = sub.add_parser("check", parents=[common], help="run check suites on instance files")
    c.add_argument("--instances", nargs="+", required=True, help="instance files or directories")
    c.add_argument("--suite", choices=SUITES, default="all")
    c.add_argument("--out", default="report")
    c.add_argument("--b", type=_fraction, default=None)
    c.add_argument("--q", type=_fraction, default=None)
    c.add_argument("--jobs", type=_positive, default=1)
    c.add_argument("--timing", action="store_true", help="record wall-clock milliseconds per check")

    s = sub.add_parser("search", parents=[common], help="search for a revenue-decreasing dominating pair")
    s.add_argument("--out", required=True)
    s.add_argument("--budget", type=int, default=SearchConfig.budget, help="maximum exact LP solves")
    s.add_argument("--m", type=int, default=2, choices=(1, 2))
    return p


def _caps(args) -> Caps:
    return Caps(args.cap_joint, args.cap_subset, args.cap_lp)


def _check_bq(b, q) -> None:
    if b is not None and not 0 < b < 1:
        raise UsageError("--b must lie in (0, 1)")
    if q is not None and not 0 <= q < 1:
        raise UsageError("--q must lie in [0, 1)")


def _meta(args, **extra) -> dict:
    return {"seed": args.seed, "version": __version__, **extra}


def cmd_gen(args) -> int:
    _check_bq(args.b, args.q)
    if args.count < 0 or args.n < 1 or args.m < 1 or not 1 <= args.support <= 7:
        raise UsageError("need count >= 0, n >= 1, m >= 1 and 1 <= support <= 7")
    if not 0 <= args.strength <= 1:
        raise UsageError("--strength must lie in [0, 1]")
    if not 0 <= args.env_vertices <= min(3 ** (args.n * args.m), 64):
        raise UsageError("--env-vertices must lie in [0, min(3^(n*m), 64)]")
    caps = _caps(args)
    out = Path(args.out)
    for k in range(args.count):
        seed = args.seed * 1_000_003 + k
        inst = random_instance(seed, args.n, args.m, args.support, args.valuation, args.strength,
                               args.dominance, args.env_vertices, args.aspe, caps)
        if args.b is not None or args.q is not None:
            inst = replace(inst, b=inst.b if args.b is None else args.b,
                           q=inst.q if args.q is None else args.q)
        write_atomic(out / f"instance-{k:04d}.json", dumps(inst.to_json()))
    print(f"wrote {args.count} instances to {out}")
    return EXIT_OK


def _instance_paths(specs: list[str]) -> list[Path]:
    paths = []
    for arg in specs:
        p = Path(arg)
        if p.is_dir():
            paths += sorted(p.glob("*.json"))
        elif p.is_file():
            paths.append(p)
        else:
            raise UsageError(f"no such file or directory: {arg}")
    return paths


def load_instances(specs: list[str], caps: Caps) -> list[tuple[Path, Instance]]:
    paths = _instance_paths(specs)
    if not paths:
        raise UsageError("no instances")
    out = []
    for p in paths:
        try:
            obj = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"{p}: cannot parse: {exc}")
        try:
            out.append((p, Instance.from_json(obj, caps)))
        except (RevmonoError, ValueError) as exc:
            raise UsageError(f"{p}: {exc}")
    return out


def _csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def cmd_check(args) -> int:
    _check_bq(args.b, args.q)
    caps = _caps(args)
    loaded = load_instances(args.instances, caps)
    records = run_suite([inst for _, inst in loaded], args.suite, caps, b=args.b, q=args.q,
                        timing=args.timing, jobs=args.jobs)
    meta = _meta(args, suite=args.suite, instances=[p.name for p, _ in loaded],
                 caps={"joint": caps.joint, "subset": caps.subset, "lp": caps.lp},
                 b=None if args.b is None else rat(args.b), q=None if args.q is None else rat(args.q))
    out = Path(args.out)
    write_atomic(out / "report.json", dumps({"meta": meta, "records": [r.to_json() for r in records]}))
    write_atomic(out / "report.csv", _csv_text(records))

    tally = {"pass": 0, "fail": 0, "inconclusive": 0}
    failed = []
    diag_fail = 0
    for r in records:
        tally[r.verdict] += 1
        if r.verdict == "fail":
            if r.counts:
                failed.append(r)
            else:
                diag_fail += 1
    for r in failed:
        print(f"FAIL {loaded[r.instance][0].name} {r.name}: {r.anchor} ({r.lhs} vs {r.rhs})",
              file=sys.stderr)
    print(f"{len(records)} records from {len(loaded)} instances: {tally['pass']} pass, "
          f"{tally['fail']} fail ({diag_fail} diagnostic), {tally['inconclusive']} inconclusive; "
          f"report in {out}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_search(args) -> int:
    if args.budget < 0:
        raise UsageError("--budget must be non-negative")
    cfg = SearchConfig(budget=args.budget, m=args.m)
    found = search_hart_reny(cfg, args.seed, _caps(args))
    out = Path(args.out)
    names = []
    for k, ce in enumerate(found):
        name = f"counterexample-{k:03d}.json"
        write_atomic(out / name, dumps(ce.to_instance(args.seed).to_json()))
        names.append(name)
    summary = {"meta": _meta(args, budget=args.budget, m=args.m), "found": names}
    write_atomic(out / "search.json", dumps(summary))
    print(f"{len(found)} certified counterexamples written to {out}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "search": cmd_search}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"revmono: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"revmono: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
