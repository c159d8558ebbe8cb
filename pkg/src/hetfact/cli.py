"""Command-line interface: ``validate``, ``query``, ``stats`` and ``oracle-check``.

Exit codes are stable:

====  =====================================================
0     success
1     oracle-check found a difference above tolerance
2     bad command-line usage
3     document could not be parsed (missing file, bad JSON)
4     network, target or evidence failed validation
5     invalid elimination ordering
6     evidence has probability zero
7     oracle state space exceeds the cap
====  =====================================================

``--format machine`` prints one JSON record per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Sequence

import numpy as np

from .elimination import (
    InconsistentEvidenceError,
    OrderingError,
    QueryResult,
    homogeneous_query,
    query,
)
from .factor import Factor, FactorError
from .fileformat import DocumentError, check_document
from .network import BayesianNetwork, NetworkError
from .oracle import DEFAULT_CAP, StateSpaceError, brute_marginal, compare, latent_marginal

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_ORDERING = 5
EXIT_INCONSISTENT = 6
EXIT_CAP = 7

CAP_ENV = "HETFACT_ORACLE_CAP"


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _load(path: str) -> BayesianNetwork:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"{path}: {exc.strerror}") from exc
    net, findings, syntax = check_document(text)
    if findings:
        code = EXIT_PARSE if syntax else EXIT_VALIDATION
        raise CommandError(code, "\n".join(f"{path}: {f}" for f in findings))
    return net


def _value(net: BayesianNetwork, name: str, raw: str) -> int:
    var = net.variable(name)
    labels = net.labels.get(name)
    if labels and raw in labels:
        return labels.index(raw)
    try:
        value = int(raw)
    except ValueError:
        raise NetworkError(f"{raw!r} is not a value of {name!r}") from None
    if not 0 <= value < var.frame_size:
        raise NetworkError(f"value {value} out of range for {name!r}")
    return value


def parse_evidence(net: BayesianNetwork, pairs: Sequence[str]) -> dict[str, int]:
    evidence = {}
    for pair in pairs or ():
        name, sep, raw = pair.partition("=")
        if not sep:
            raise NetworkError(f"evidence {pair!r} must look like var=value")
        evidence[name.strip()] = _value(net, name.strip(), raw.strip())
    return evidence


def _ordering(arg: str | None) -> list[str] | None:
    if arg is None:
        return None
    return [tok.strip() for tok in arg.split(",") if tok.strip()]


def _label(net: BayesianNetwork, name: str, value: int) -> str:
    labels = net.labels.get(name)
    return labels[value] if labels else str(value)


def _rows(net: BayesianNetwork, f: Factor):
    for index in np.ndindex(*f.table.shape):
        assignment = {v.name: _label(net, v.name, int(i)) for v, i in zip(f.scope, index)}
        yield assignment, float(f.table[index])


def query_record(net: BayesianNetwork, result: QueryResult) -> dict:
    return {
        "command": "query",
        "targets": result.targets,
        "evidence": {k: _label(net, k, v) for k, v in result.evidence.items()},
        "posterior": [{"assignment": a, "p": p} for a, p in _rows(net, result.posterior)],
        "normalizer": result.normalizer,
        "ordering": result.ordering,
        "stats": result.stats.to_dict(),
    }


def _print_stats_table(stats, out, title):
    print(title, file=out)
    print(f"  {'var':<8}{'k':>3}{'m':>3}  {'kind':<14}{'scope':>6}{'ops':>10}  members", file=out)
    for s in stats.steps:
        print(f"  {s.variable:<8}{s.k:>3}{s.m:>3}  {s.kind:<14}{s.scope_size:>6}{s.ops:>10}  "
              f"{{{', '.join(s.scope)}}}", file=out)
    print(f"  max scope {stats.max_scope_size}, total ops {stats.total_ops}", file=out)


def cmd_query(args, out) -> int:
    net = _load(args.network)
    result = query(net, args.target, parse_evidence(net, args.evidence), _ordering(args.order))
    if args.format == "machine":
        print(json.dumps(query_record(net, result)), file=out)
        return EXIT_OK
    given = ", ".join(f"{k}={_label(net, k, v)}" for k, v in result.evidence.items())
    print(f"P({', '.join(result.targets)}{' | ' + given if given else ''})", file=out)
    for assignment, p in _rows(net, result.posterior):
        cells = "  ".join(f"{k}={v}" for k, v in assignment.items())
        print(f"  {cells:<30} {p:.9g}", file=out)
    print(f"normalizer {result.normalizer:.9g}", file=out)
    print(f"ordering {','.join(result.ordering)}", file=out)
    _print_stats_table(result.stats, out, "elimination steps")
    return EXIT_OK


def stats_comparison(net: BayesianNetwork, targets, evidence, ordering=None) -> dict:
    het = query(net, targets, evidence, ordering)
    hom = homogeneous_query(net, targets, evidence, ordering)
    diff = float(np.max(np.abs(het.posterior.table - hom.posterior.table)))
    return {"heterogeneous": het, "homogeneous": hom, "max_diff": diff}


def cmd_stats(args, out) -> int:
    net = _load(args.network)
    evidence = parse_evidence(net, args.evidence)
    cmp = stats_comparison(net, args.target, evidence, _ordering(args.order))
    het, hom = cmp["heterogeneous"], cmp["homogeneous"]
    agree = cmp["max_diff"] <= args.tolerance
    if args.format == "machine":
        record = {
            "command": "stats",
            "targets": het.targets,
            "heterogeneous": {"ordering": het.ordering, **het.stats.to_dict()},
            "homogeneous": {"ordering": hom.ordering, **hom.stats.to_dict()},
            "max_diff": cmp["max_diff"],
            "agree": agree,
        }
        print(json.dumps(record), file=out)
    else:
        _print_stats_table(het.stats, out, "heterogeneous (causal independence used)")
        _print_stats_table(hom.stats, out, "homogeneous (full CPTs)")
        print(f"marginals {'agree' if agree else 'DISAGREE'} "
              f"(max diff {cmp['max_diff']:.3g})", file=out)
    return EXIT_OK if agree else EXIT_MISMATCH


def oracle_check(net: BayesianNetwork, targets, evidence, tolerance: float,
                 cap: int = DEFAULT_CAP, engine: Callable = query) -> dict:
    """Compare the engine's posterior with both brute-force oracles."""
    result = engine(net, targets, evidence)
    names = result.targets

    def conditioned(f):
        total = float(f.table.sum())
        if total <= 0:
            raise InconsistentEvidenceError("evidence has probability zero under the oracle")
        return Factor(f.scope, f.table / total)

    brute = conditioned(brute_marginal(net, names, evidence, cap))
    latent = conditioned(latent_marginal(net, names, evidence, cap, strict=False))
    checks = {"brute": compare(result.posterior, brute, tolerance),
              "latent": compare(result.posterior, latent, tolerance)}
    return {"result": result, "checks": checks,
            "passed": all(c.passed for c in checks.values())}


def cmd_oracle_check(args, out, engine: Callable = query) -> int:
    net = _load(args.network)
    evidence = parse_evidence(net, args.evidence)
    report = oracle_check(net, args.target, evidence, args.tolerance, args.oracle_cap, engine)
    if args.format == "machine":
        record = {"command": "oracle-check", "passed": report["passed"],
                  "tolerance": args.tolerance}
        for name, c in report["checks"].items():
            record[name] = {"max_diff": c.max_diff, "location": c.location, "passed": c.passed}
        print(json.dumps(record), file=out)
    else:
        for name, c in report["checks"].items():
            where = ", ".join(f"{k}={v}" for k, v in c.location.items())
            status = "pass" if c.passed else "FAIL"
            print(f"{name:<7} {status}  max diff {c.max_diff:.3g} at {{{where}}}", file=out)
    return EXIT_OK if report["passed"] else EXIT_MISMATCH


def cmd_validate(args, out) -> int:
    try:
        with open(args.network, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"{args.network}: {exc.strerror}") from exc
    net, findings, syntax = check_document(text)
    if args.format == "machine":
        print(json.dumps({"command": "validate", "clean": not findings,
                          "findings": [{"location": f.location, "message": f.message}
                                       for f in findings]}), file=out)
    elif findings:
        for f in findings:
            print(f"{args.network}: {f}", file=out)
    else:
        print(f"{args.network}: clean ({len(net.nodes)} nodes)", file=out)
    if not findings:
        return EXIT_OK
    return EXIT_PARSE if syntax else EXIT_VALIDATION


def _default_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    return int(raw) if raw else DEFAULT_CAP


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetfact", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, targets=True):
        p.add_argument("network", help="network document (.net)")
        p.add_argument("--format", choices=("human", "machine"), default="human")
        if targets:
            p.add_argument("--target", action="append", required=True,
                           help="query variable (repeatable)")
            p.add_argument("--evidence", action="append", default=[], metavar="VAR=VALUE",
                           help="observation (repeatable)")

    p = sub.add_parser("validate", help="check a network document")
    common(p, targets=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("query", help="posterior over targets given evidence")
    common(p)
    p.add_argument("--order", help="comma-separated elimination ordering; write e1p for e1's deputy")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="compare heterogeneous and homogeneous elimination")
    common(p)
    p.add_argument("--order", help="comma-separated elimination ordering")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("oracle-check", help="compare a query with brute-force oracles")
    common(p)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--oracle-cap", type=int, default=None,
                   help=f"max joint entries (default {DEFAULT_CAP}, env {CAP_ENV})")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if getattr(args, "oracle_cap", 0) is None:
        args.oracle_cap = _default_cap()
    try:
        return args.func(args, out)
    except CommandError as exc:
        code, message = exc.code, str(exc)
    except OrderingError as exc:
        code, message = EXIT_ORDERING, str(exc)
    except InconsistentEvidenceError as exc:
        code, message = EXIT_INCONSISTENT, str(exc)
    except StateSpaceError as exc:
        code, message = EXIT_CAP, str(exc)
    except (NetworkError, FactorError, DocumentError) as exc:
        code, message = EXIT_VALIDATION, str(exc)
    if args.format == "machine":
        print(json.dumps({"command": args.command, "error": message, "exit_code": code}), file=out)
    print(f"hetfact: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
