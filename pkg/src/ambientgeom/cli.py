"""``verify``: run verification suites on a scenario file and write a report.

Exit status is 0 when every check passes, 1 when any check fails and 2 on
input errors (unreadable or malformed scenario, bad arguments).
"""

import argparse
import sys
from pathlib import Path

from .errors import ExpressionError, GeometryError, ScenarioError
from .report import FORMATS, emit_report
from .scenario import SUITES, bundled_scenarios, load_bundled, load_scenario
from .suites import CHECKS, run_suites

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _tolerance(text):
    check, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected CHECK=VALUE, got {text!r}")
    if check not in CHECKS:
        raise argparse.ArgumentTypeError(f"unknown check id {check!r}")
    try:
        tol = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance must be a number, got {value!r}") from None
    if not tol >= 0:
        raise argparse.ArgumentTypeError("tolerance must be non-negative")
    return check, tol


def _positive(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def _seed(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return n


def build_parser():
    p = _Parser(prog="verify", description=__doc__.splitlines()[0].split(": ", 1)[1])
    p.add_argument("scenario", nargs="?", help="scenario file, or the name of a bundled scenario")
    p.add_argument("--suite", action="append", choices=SUITES, metavar="NAME",
                   help=f"run only this suite (repeatable); one of {', '.join(SUITES)}")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--samples", type=_positive, help="points per check (per scale function for immersion checks)")
    p.add_argument("--tolerance", type=_tolerance, action="append", default=[], metavar="CHECK=VALUE")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", type=Path, metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--list", action="store_true", help="list bundled scenarios and exit")
    return p


def _load(name):
    path = Path(name)
    if path.exists() or path.suffix:
        return load_scenario(path)
    if name in bundled_scenarios():
        return load_bundled(name)
    raise ScenarioError(f"no such file or bundled scenario: {name!r}")


def _describe(exc):
    where = getattr(exc, "key_path", None)
    return f"{where}: {exc}" if where else str(exc)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        print("\n".join(bundled_scenarios()))
        return EXIT_PASS
    if args.scenario is None:
        parser.error("a scenario is required")
    try:
        spec = _load(args.scenario)
    except (ScenarioError, ExpressionError) as exc:
        print(f"verify: {_describe(exc)}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = run_suites(spec, args.suite, seed=args.seed, points=args.samples,
                            tolerances=dict(args.tolerance))
    except (KeyError, ValueError, GeometryError) as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_INPUT
    data = emit_report(report, args.format)
    if args.out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        try:
            args.out.write_bytes(data)
        except OSError as exc:
            print(f"verify: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
