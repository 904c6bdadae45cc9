"""Command line interface.

    abspin validate FILE
    abspin run FILE [--out DIR] [--format csv|json]
    abspin sweep FILE --param KEY --values LIST [--out DIR] [--format csv|json] [--jobs N]
    abspin selftest

Exit codes: 0 success, 1 validation failure, 2 runtime or physics error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import kernels
from .errors import AbspinError, ValidationError
from .scenario import (
    ScenarioError,
    _parse_toml,
    emit,
    from_document,
    results_document,
    run_scenario,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _fail(exc: AbspinError) -> int:
    payload = exc.as_dict() if isinstance(exc, ScenarioError) else {"code": exc.code, "message": str(exc)}
    print(json.dumps({"error": payload}), file=sys.stderr)
    return EXIT_INVALID if isinstance(exc, ValidationError) else EXIT_RUNTIME


def _load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return _parse_toml(text)


def cmd_validate(args) -> int:
    s = from_document(_load(args.file))
    print(f"ok {s.experiment} {s.digest}")
    return EXIT_OK


def cmd_run(args) -> int:
    s = from_document(_load(args.file))
    rs = run_scenario(s)
    if args.out:
        for path in emit(rs, args.format, args.out):
            print(path)
    else:
        print(json.dumps(results_document(rs, include_series=True), indent=2, sort_keys=True))
    return EXIT_RUNTIME if rs.errors else EXIT_OK


def set_param(doc: dict, key: str, value):
    """Set a dotted key such as ``arms.arm1.0.tau`` inside a parsed document."""
    parts = key.split(".")
    node = doc
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = node[int(part)]
        else:
            node = node.setdefault(part, {})
        if not isinstance(node, (dict, list)):
            raise ScenarioError("cannot descend into a value", ".".join(parts[: i + 1]))
    last = parts[-1]
    try:
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    except (ValueError, IndexError):
        raise ScenarioError("no such list entry", key) from None


def _parse_values(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(json.loads(item))
        except json.JSONDecodeError:
            out.append(item)
    return out


def cmd_sweep(args) -> int:
    base = _load(args.file)
    scenarios = []
    for v in _parse_values(args.values):
        doc = copy.deepcopy(base)
        try:
            set_param(doc, args.param, v)
        except (ValueError, IndexError, KeyError):
            raise ScenarioError("cannot set sweep parameter", args.param) from None
        scenarios.append((v, from_document(doc)))

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda item: run_scenario(item[1]), scenarios))

    keys = []
    for rs in results:
        for r in rs.scalar_results:
            k = f"{r.analysis}.{r.key}"
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([args.param, "scenario_digest", *keys])
    for (v, _), rs in zip(scenarios, results):
        vals = {f"{r.analysis}.{r.key}": r.value for r in rs.scalar_results}
        w.writerow([v, rs.scenario_digest, *(_fmt(vals.get(k, "")) for k in keys)])

    if args.out:
        out = Path(args.out)
        for i, rs in enumerate(results):
            emit(rs, args.format, out / f"run_{i:03d}")
        (out / "sweep.csv").write_text(buf.getvalue())
        print(out / "sweep.csv")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_RUNTIME if any(rs.errors for rs in results) else EXIT_OK


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def cmd_selftest(args) -> int:
    from .selftest import run_all

    print(f"kernel backend: {kernels.BACKEND}")
    return EXIT_OK if run_all() else EXIT_RUNTIME


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures, not runtime errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": {"code": "usage", "message": message}}), file=sys.stderr)
        sys.exit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abspin", description="Spin-1/2 Aharonov-Bohm interferometry scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a scenario")
    p.add_argument("file")
    p.add_argument("--out", help="output directory (default: JSON on stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a one-parameter family of scenarios")
    p.add_argument("file")
    p.add_argument("--param", required=True, help="dotted key, e.g. arms.arm1.0.tau")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AbspinError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
