"""The ``chorec`` command line.

Exit codes: 0 success, 1 parse or validation error, 2 fuel exhausted,
3 not projectable, 4 a check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .choreography import ProcState, parse_choreography, print_choreography
from .corpus import KINDS, gen_corpus
from .correspondence import check_correspondence
from .errors import ChorecError, InvariantViolation, ProjectabilityError
from .network import net_run, parse_network, print_network
from .projection import amend, epp, unmergeable_points
from .recfun import (
    FUEL_EXHAUSTED,
    MODES,
    arity,
    encode,
    encode_parallel,
    implement_function,
    oracle_eval,
    parse_recfun,
)
from .semantics import decide_termination_condfree, run
from .trace import Exhaustive, Outcome, parse_scheduler

EXIT_OK, EXIT_INVALID, EXIT_FUEL, EXIT_UNPROJECTABLE, EXIT_CHECK = 0, 1, 2, 3, 4


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _scheduler(args):
    # also accept the compact forms random:SEED and exhaustive:DEPTH
    name, _, arg = args.scheduler.partition(":")
    seed = int(arg) if name == "random" and arg else args.seed
    depth = int(arg) if name == "exhaustive" and arg else args.depth
    return parse_scheduler(name, seed, depth)


def _state(args):
    return ProcState.parse(args.state) if args.state else ProcState()


def _load_mc(args):
    c = parse_choreography(_read(args.file))
    return amend(c) if getattr(args, "amend", False) else c


def _diagnostics(points):
    for point in points:
        _emit(point.to_json())


def cmd_run(args):
    text = _read(args.file)
    sched = _scheduler(args)
    if args.file.endswith(".sp"):
        start = parse_network(text)
        traces = net_run(start, fuel=args.fuel, scheduler=sched)
        render = print_network
    else:
        start = parse_choreography(text)
        traces = run(start, _state(args), fuel=args.fuel, scheduler=sched)
        render = print_choreography
    if not isinstance(sched, Exhaustive):
        traces = [traces]
    for trace in traces:
        if args.emit == "json":
            for line in trace.records(render):
                print(line)
        else:
            for conf, state in trace.steps:
                print(f"{render(conf)}    {state}")
            print(f"{trace.outcome.value} after {trace.length} steps; final state {trace.final_state}")
    outcomes = {t.outcome for t in traces}
    if Outcome.STUCK in outcomes:
        return EXIT_CHECK
    if Outcome.FUEL_EXHAUSTED in outcomes:
        return EXIT_FUEL
    return EXIT_OK


def cmd_project(args):
    c = _load_mc(args)
    try:
        net = epp(c, _state(args))
    except ProjectabilityError as exc:
        _diagnostics(exc.points)
        return EXIT_UNPROJECTABLE
    if args.emit == "json":
        _emit({"network": print_network(net)})
    else:
        print(print_network(net))
    return EXIT_OK


def cmd_amend(args):
    c = parse_choreography(_read(args.file))
    if args.explain:
        _diagnostics(unmergeable_points(c))
    out = print_choreography(amend(c))
    if args.emit == "json":
        _emit({"choreography": out})
    else:
        print(out)
    return EXIT_OK


def cmd_compile_fn(args):
    f = parse_recfun(_read(args.file))
    inputs = args.inputs.split(",") if args.inputs else [f"p{i + 1}" for i in range(arity(f))]
    enc = encode_parallel if args.parallel else encode
    c = enc(f, inputs, args.output)
    if args.emit == "sp":
        try:
            out = print_network(epp(amend(c), _state(args)))
        except ProjectabilityError as exc:
            _diagnostics(exc.points)
            return EXIT_UNPROJECTABLE
    else:
        out = print_choreography(c)
    if args.emit == "json":
        _emit({"function": str(f), "choreography": out})
    else:
        print(out)
    return EXIT_OK


def cmd_eval_fn(args):
    f = parse_recfun(_read(args.file))
    values = [int(x) for x in args.args]
    # the oracle spends at most two units per choreography step, so 2*fuel is a safe bound
    expected = oracle_eval(f, values, 2 * args.fuel)
    got = implement_function(f, values, args.fuel, args.mode)
    show = lambda v: v.value if v is FUEL_EXHAUSTED else v  # noqa: E731
    record = {"function": str(f), "args": values, "mode": args.mode,
              "oracle": show(expected), "result": show(got)}
    if got is FUEL_EXHAUSTED:
        record["verdict"] = "inconclusive"
        _emit(record)
        return EXIT_FUEL
    record["verdict"] = "agree" if got == expected else "mismatch"
    _emit(record)
    return EXIT_OK if got == expected else EXIT_CHECK


def cmd_check_correspondence(args):
    c = _load_mc(args)
    try:
        report = check_correspondence(c, _state(args), depth=min(args.depth, args.fuel))
    except ProjectabilityError as exc:
        _diagnostics(exc.points)
        return EXIT_UNPROJECTABLE
    _emit(report.to_json())
    return EXIT_OK if report.verdict else EXIT_CHECK


def cmd_decide_termination(args):
    c = parse_choreography(_read(args.file))
    _emit({"verdict": decide_termination_condfree(c).value})
    return EXIT_OK


def cmd_gen(args):
    for i, item in enumerate(gen_corpus(args.seed, args.size, args.kind)):
        if args.kind == "recfun":
            f, n = item
            _emit({"index": i, "function": str(f), "arity": n})
        else:
            _emit({"index": i, "choreography": print_choreography(item)})
    return EXIT_OK


def _default_fuel():
    raw = os.environ.get("CHOREC_FUEL")
    return int(raw) if raw else 10_000


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=int, default=_default_fuel(),
                        help="step budget (default: $CHOREC_FUEL or 10000)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--scheduler", default="leftmost",
                        help="leftmost | random[:SEED] | exhaustive[:DEPTH]")
    common.add_argument("--depth", type=int, default=50)
    common.add_argument("--state", default="", help="initial cells, e.g. p=3,q=1")
    common.add_argument("--emit", choices=("text", "json", "sp"), default="text")

    parser = argparse.ArgumentParser(prog="chorec", description="Minimal Choreographies toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.set_defaults(func=func)
        return p

    add("run", cmd_run, "run a .mc choreography or .sp network").add_argument("file")
    p = add("project", cmd_project, "project a choreography to a network")
    p.add_argument("file")
    p.add_argument("--amend", action="store_true")
    p = add("amend", cmd_amend, "insert the selections needed for projectability")
    p.add_argument("file")
    p.add_argument("--explain", action="store_true", help="report the unmergeable points first")
    p = add("compile-fn", cmd_compile_fn, "compile a .rf function term")
    p.add_argument("file")
    p.add_argument("-i", "--inputs", default="")
    p.add_argument("-o", "--output", default="q")
    p.add_argument("--parallel", action="store_true")
    p = add("eval-fn", cmd_eval_fn, "run a compiled function and cross-check it")
    p.add_argument("file")
    p.add_argument("args", nargs="*")
    p.add_argument("--mode", choices=MODES, default="choreography")
    p = add("check-correspondence", cmd_check_correspondence, "lockstep check against the projection")
    p.add_argument("file")
    p.add_argument("--amend", action="store_true")
    add("decide-termination", cmd_decide_termination,
        "decide termination of a conditional-free choreography").add_argument("file")
    p = add("gen", cmd_gen, "print a seeded corpus")
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--kind", choices=KINDS, default="closed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ProjectabilityError as exc:
        _diagnostics(exc.points)
        return EXIT_UNPROJECTABLE
    except (ChorecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
