"""Command-line front end.

Subcommands ``run``, ``verify`` and ``list-scenarios``. Exit codes: 0
success, 1 failed verification, 2 parse error, 3 numerical failure,
4 invalid physics.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import experiments, scenario
from .scenario import ScenarioError
from .units import UnitError

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NUMERIC, EXIT_PHYSICS = 0, 1, 2, 3, 4
OUTPUT_ENV = "GRAVCOLLAPSE_OUTPUT_DIR"

log = logging.getLogger("gravcollapse")


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float) or hasattr(x, "dtype"):
        try:
            return format(float(x), ".17g")
        except TypeError:
            pass
    return str(x)


def render(table: experiments.Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def output_path(sc: scenario.Scenario, out: str | None, source: Path) -> Path:
    if out:
        return Path(out)
    if sc.output:
        p = Path(sc.output)
        return p if p.is_absolute() else source.parent / p
    base = Path(os.environ.get(OUTPUT_ENV, "."))
    return base / f"{sc.name}.csv"


def run_one(ref: str, out: str | None = None, seed: int | None = None) -> tuple[int, str]:
    """Run a scenario and write its CSV. Returns ``(exit code, message)``."""
    try:
        src = scenario.resolve(ref)
        sc = scenario.load(src)
    except (ScenarioError, UnitError) as exc:
        return EXIT_PARSE, f"parse error: {exc}"
    if seed is not None:
        sc = sc.with_seed(seed)
    try:
        res = experiments.run(sc)
    except ArithmeticError as exc:
        return EXIT_NUMERIC, f"{sc.name}: numerical failure: {exc}"
    except ValueError as exc:
        return EXIT_PHYSICS, f"{sc.name}: invalid physics: {exc}"
    path = output_path(sc, out, src)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(res.table), newline="")
    for suffix, table in res.extra.items():
        path.with_name(f"{path.stem}_{suffix}{path.suffix}").write_text(render(table), newline="")
    return EXIT_OK, str(path)


def cmd_run(args) -> int:
    if args.out and len(args.scenarios) > 1:
        print("--out needs a single scenario", file=sys.stderr)
        return EXIT_PARSE
    jobs = max(1, args.jobs)
    if jobs > 1 and len(args.scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, args.scenarios, [args.out] * len(args.scenarios),
                                    [args.seed] * len(args.scenarios)))
    else:
        results = [run_one(s, args.out, args.seed) for s in args.scenarios]
    worst = EXIT_OK
    for code, msg in results:
        if code:
            print(msg, file=sys.stderr)
            worst = max(worst, code)
        else:
            print(msg)
    return worst


def cmd_list(args) -> int:
    for name, path in scenario.bundled().items():
        sc = scenario.load(path)
        print(f"{name}\t{sc.kind}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    if args.suite not in verify.SUITES:
        print(f"unknown suite {args.suite!r} (known: {', '.join(verify.SUITES)})", file=sys.stderr)
        return EXIT_PARSE
    results = verify.run_suite(args.suite, perturb=args.perturb)
    print(verify.format_table(results))
    return EXIT_OK if all(r.passed or r.expected_failure for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gravcollapse", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more scenarios")
    r.add_argument("scenarios", nargs="+", help="scenario file or bundled scenario name")
    r.add_argument("--out", help="output CSV path (single scenario only)")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--jobs", type=int, default=1, help="run scenarios in N processes")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite", help="residual, born, gravity, sn or all")
    v.add_argument("--perturb", default=None, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
