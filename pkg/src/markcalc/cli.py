"""Command-line front end.

Exit codes: 0 success/equivalent/holds, 1 usage, syntax or other error,
2 inequivalent, 3 inconclusive or truncated, 4 term outside a translation's class.
"""
from __future__ import annotations

import argparse
import json
import sys
import threading
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import bisim, mlts
from .encode import ClassViolation, Variant, encode
from .parser import ParseError, parse_with_spans, print_term
from .semantics_it import COMPOSERS
from .terms import IllFormedTerm, check_well_formed, classify_it, classify_ot

EXIT_OK, EXIT_ERROR, EXIT_INEQUIVALENT, EXIT_INCONCLUSIVE, EXIT_CLASS = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_ERROR):
        self.code = code
        super().__init__(message)


def _err(msg: str):
    print(msg, file=sys.stderr)


def _location(text: str, byte_offset: int) -> str:
    prefix = text.encode()[:byte_offset].decode(errors="ignore")
    line = prefix.count("\n") + 1
    col = len(prefix) - (prefix.rfind("\n") + 1) + 1
    return f"{line}:{col}"


def _parse_rates(pairs) -> dict:
    rates = {}
    for item in pairs or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--rate expects NAME=VALUE, got {item!r}")
        rates[name.strip()] = value.strip()
    return rates


def load(path: str, calculus: str, rates=None, well_formed: bool = True):
    """Read and parse one term file; returns (term, text, spans)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}")
    try:
        term, spans = parse_with_spans(text, calculus, rates)
    except ParseError as exc:
        expected = f" (expected one of: {', '.join(sorted(exc.expected))})" if exc.expected else ""
        raise CliError(f"{path}:{_location(text, exc.span.start)}: {exc.message}{expected}")
    except ValueError as exc:
        raise CliError(f"{path}: {exc}")
    if well_formed:
        report = check_well_formed(term)
        if not report.ok:
            raise CliError("\n".join(f"{path}: {v}" for v in report.violations))
    return term, text, spans


def _max_states(args) -> Optional[int]:
    return args.max_states if args.max_states is not None else mlts.default_max_states()


def _otimes_header(args) -> str:
    return f"# otimes={args.otimes}"


# -- commands ------------------------------------------------------------------------------


def cmd_parse(args) -> int:
    term, _, _ = load(args.file, args.calculus, args.rates, well_formed=False)
    report = check_well_formed(term)
    print(print_term(term))
    for v in report.violations:
        _err(f"{args.file}: warning: {v}")
    return EXIT_OK


def cmd_lts(args) -> int:
    term, _, _ = load(args.file, args.calculus, args.rates)
    if args.calculus == "it":
        m = mlts.build_it(term, COMPOSERS[args.otimes], _max_states(args))
    else:
        m = mlts.build_ot(term, _max_states(args))
    print(mlts.export_dot(m) if args.format == "dot" else mlts.export_json(m), end="" if args.format == "dot" else "\n")
    if m.truncated:
        _err(f"state space truncated at {len(m.states)} states")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _verdict_code(v: bisim.Verdict) -> int:
    return {"equivalent": EXIT_OK, "inequivalent": EXIT_INEQUIVALENT, "inconclusive": EXIT_INCONCLUSIVE}[v.status]


def _verdict_line(v: bisim.Verdict) -> str:
    return v.status if v.evidence is None else f"{v.status}: {v.evidence}"


def _bisim_pair(args, f1: str, f2: str) -> tuple[int, str]:
    t1, _, _ = load(f1, args.calculus, args.rates)
    t2, _, _ = load(f2, args.calculus, args.rates)
    v = bisim.equivalent(t1, t2, args.calculus, args.variant, COMPOSERS[args.otimes], _max_states(args))
    return _verdict_code(v), _verdict_line(v)


def _preservation_pair(args, f1: str, f2: str) -> tuple[int, str]:
    p1, text1, spans1 = load(f1, "it", args.rates)
    p2, text2, spans2 = load(f2, "it", args.rates)
    variant = Variant(args.variant)
    try:
        q1 = encode(p1, variant)
        q2 = encode(p2, variant)
    except ClassViolation as exc:
        which, text, spans = (f1, text1, spans1) if id(exc.subterm) in spans1 else (f2, text2, spans2)
        raise CliError(_class_message(which, text, spans, exc), EXIT_CLASS)
    bound = _max_states(args)
    v_it = bisim.equivalent(p1, p2, "it", otimes=COMPOSERS[args.otimes], max_states=bound)
    v_ot = bisim.equivalent(q1, q2, "ot", variant.value, max_states=bound)
    line = f"IT: {v_it.status}; OT({variant.value}): {v_ot.status}; "
    if "inconclusive" in (v_it.status, v_ot.status):
        return EXIT_INCONCLUSIVE, line + "theorem instance INCONCLUSIVE"
    if v_it.equivalent == v_ot.equivalent:
        return EXIT_OK, line + "theorem instance HOLDS"
    return EXIT_ERROR, line + "theorem instance FAILS"


def _run_pair(job):
    kind, args, f1, f2 = job
    fn = _bisim_pair if kind == "bisim" else _preservation_pair
    try:
        return fn(args, f1, f2)
    except CliError as exc:
        return exc.code, f"error: {exc}"


def _pairs_from(listfile: str) -> list[tuple[str, str]]:
    base = Path(listfile).parent
    pairs = []
    for lineno, line in enumerate(Path(listfile).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CliError(f"{listfile}:{lineno}: expected two file names")
        pairs.append(tuple(str(base / p) for p in parts))
    return pairs


def _run_pairs(kind: str, args) -> int:
    if args.pairs:
        pairs = _pairs_from(args.pairs)
    elif len(args.files) == 2:
        pairs = [tuple(args.files)]
    else:
        raise CliError("give exactly two files or --pairs LISTFILE")
    if kind == "bisim" or args.calculus == "it":
        print(_otimes_header(args))
    jobs = [(kind, args, f1, f2) for f1, f2 in pairs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_pair, jobs))
    else:
        results = [_run_pair(j) for j in jobs]
    if len(jobs) == 1:
        code, line = results[0]
        if line.startswith("error: "):
            raise CliError(line[len("error: "):], code)
        print(line)
        return code
    for (f1, f2), (code, line) in zip(pairs, results):
        print(f"{f1} {f2}: {line}")
    codes = {c for c, _ in results}
    for code in (EXIT_ERROR, EXIT_CLASS, EXIT_INCONCLUSIVE, EXIT_INEQUIVALENT):
        if code in codes:
            return code
    return EXIT_OK


def cmd_bisim(args) -> int:
    if args.calculus == "ot" and args.variant is None:
        raise CliError("--calculus ot needs --variant eager|lazy|mp")
    if args.calculus == "it":
        args.variant = None
    return _run_pairs("bisim", args)


def cmd_check_preservation(args) -> int:
    args.calculus = "it"
    return _run_pairs("preservation", args)


def _class_message(path, text, spans, exc) -> str:
    span = spans.get(id(exc.subterm))
    where = f"{path}:{_location(text, span.start)}" if span else path
    snippet = f" in `{print_term(exc.subterm)}`"
    return f"{where}: {type(exc).__name__}: {exc}{snippet}"


def cmd_encode(args) -> int:
    term, text, spans = load(args.file, "it", args.rates)
    try:
        out = encode(term, args.variant)
    except ClassViolation as exc:
        raise CliError(_class_message(args.file, text, spans, exc), EXIT_CLASS)
    print(print_term(out))
    return EXIT_OK


def cmd_classify(args) -> int:
    term, _, _ = load(args.file, args.calculus, args.rates)
    cls = classify_it(term) if args.calculus == "it" else classify_ot(term)
    print(json.dumps(cls.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_ctmc(args) -> int:
    term, _, _ = load(args.file, args.calculus, args.rates)
    if args.calculus == "it":
        m = mlts.build_it(term, COMPOSERS[args.otimes], _max_states(args))
    else:
        m = mlts.build_ot(term, _max_states(args))
    if m.truncated:
        raise CliError(f"state space truncated at {len(m.states)} states", EXIT_INCONCLUSIVE)
    try:
        matrix = mlts.extract_ctmc(m)
    except mlts.NotMarkovian as exc:
        raise CliError(str(exc))
    print(mlts.ctmc_json(matrix))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "inequivalent"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="markcalc", description="Markovian process calculi workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _ArgumentParser(add_help=False)
    common.add_argument("--rate", dest="rates", action="append", metavar="NAME=VALUE",
                        help="bind a rate parameter used in the term files")
    common.add_argument("--max-states", type=int, default=None)
    common.add_argument("--otimes", choices=sorted(COMPOSERS), default="product",
                        help="rate composer for IT synchronizations (default: product)")

    p = sub.add_parser("parse", parents=[common], help="echo the canonical form of a term")
    p.add_argument("--calculus", choices=("it", "ot"), required=True)
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("lts", parents=[common], help="print the multitransition system")
    p.add_argument("--calculus", choices=("it", "ot"), required=True)
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("file")
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("bisim", parents=[common], help="check two terms for bisimilarity")
    p.add_argument("--calculus", choices=("it", "ot"), required=True)
    p.add_argument("--variant", choices=("eager", "lazy", "mp"))
    p.add_argument("--pairs", metavar="LISTFILE")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("encode", parents=[common], help="translate an IT term into OT")
    p.add_argument("--variant", choices=("eager", "lazy", "mp"), required=True)
    p.add_argument("file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("classify", parents=[common], help="syntactic class flags as JSON")
    p.add_argument("--calculus", choices=("it", "ot"), required=True)
    p.add_argument("file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("check-preservation", parents=[common],
                       help="check one instance of the equivalence-preservation theorem")
    p.add_argument("--variant", choices=("eager", "lazy", "mp"), required=True)
    p.add_argument("--pairs", metavar="LISTFILE")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_check_preservation)

    p = sub.add_parser("ctmc", parents=[common], help="rate matrix of the underlying CTMC as JSON")
    p.add_argument("--calculus", choices=("it", "ot"), default="it")
    p.add_argument("file")
    p.set_defaults(func=cmd_ctmc)
    return parser


# term algorithms recurse over the syntax tree; deep terms need a deep stack
RECURSION_LIMIT = 100_000
STACK_BYTES = 512 * 1024 * 1024


def main(argv=None) -> int:
    """Run the CLI on a worker thread with a large stack so deeply nested terms work."""
    outcome: list = []

    def target():
        try:
            outcome.append((True, _main(argv)))
        except BaseException as exc:  # re-raised on the calling thread
            outcome.append((False, exc))

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, RECURSION_LIMIT))
    old_stack = threading.stack_size(STACK_BYTES)
    try:
        worker = threading.Thread(target=target, name="markcalc-main")
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_stack)
        sys.setrecursionlimit(old_limit)
    ok, value = outcome[0]
    if not ok:
        raise value
    return value


def _main(argv) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.rates = _parse_rates(args.rates)
        return args.func(args)
    except CliError as exc:
        _err(str(exc))
        return exc.code
    except IllFormedTerm as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
