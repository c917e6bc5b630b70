"""Command line entry point: ``costrealloc {run,generate,defrag,sweep}``.

Exit codes: 0 ok, 1 usage or invalid argument, 2 oracle violation, 3 trace parse error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .core import InvalidArgument, InvariantFailure, as_fraction
from .costmodel import InvalidModel, parse_model
from .defrag import DefragInput, defragment
from .harness.generate import KINDS, generate
from .harness.run import ALL_MODES, DEFAULT_MODELS, RunConfig, _fmt, run, sweep
from .harness.trace import ParseError, read_trace, serialize_trace
from .oracle import Oracle

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_PARSE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError, InvalidArgument):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected key=value")
    try:
        return key.replace("-", "_"), int(value)
    except ValueError:
        try:
            return key.replace("-", "_"), float(value)
        except ValueError:
            return key.replace("-", "_"), value


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p, multi: bool = False) -> None:
    if multi:
        p.add_argument("--mode", action="append", choices=ALL_MODES, help="repeatable; default all three reallocators")
        p.add_argument("--epsilon", action="append", type=_fraction, help="repeatable; default 1/16 1/8 1/4 1/2")
    else:
        p.add_argument("--mode", default="amortized", choices=ALL_MODES)
        p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--epsilon-prime-divisor", type=int, default=8, help="eps' = eps / divisor")
    p.add_argument("--cost", action="append", metavar="MODEL",
                   help="constant:a | linear:b | sqrt:b | seek:a,b | table:path (repeatable)")
    p.add_argument("--validate", action="store_true", help="attach the invariant oracle")
    p.add_argument("--checkpoint-policy", choices=("auto", "trace"), default="auto")
    p.add_argument("--work-factor", type=int, default=4)
    p.add_argument("--report", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="costrealloc", description="Cost-oblivious storage reallocation simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="replay a trace through one allocator")
    p.add_argument("--trace", required=True)
    p.add_argument("--seed", type=int, default=0, help="unused by the allocators; recorded for bookkeeping")
    p.add_argument("--fault-op", type=int, help="inject a write into freed cells after this op (oracle self-test)")
    _add_common(p)

    p = sub.add_parser("generate", help="write a synthetic trace")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("defrag", help="sort an initial layout given as I/P lines")
    p.add_argument("--trace", required=True)
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--epsilon-prime-divisor", type=int, default=8)
    p.add_argument("--cost", action="append", metavar="MODEL")
    p.add_argument("--validate", action="store_true")
    p.add_argument("--report")

    p = sub.add_parser("sweep", help="run a grid of traces x modes x epsilons")
    p.add_argument("--trace", action="append", default=[], help="repeatable")
    p.add_argument("--generate", dest="kind", choices=KINDS, help="generate traces of this kind instead")
    p.add_argument("--seeds", type=int, default=1, help="number of generated traces")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p, multi=True)
    return parser


def _models(args):
    return [parse_model(m) for m in (args.cost or DEFAULT_MODELS)]


def cmd_run(args) -> int:
    trace = read_trace(args.trace)
    cfg = RunConfig(args.mode, args.epsilon, args.epsilon_prime_divisor, validate=args.validate,
                    checkpoint_policy=args.checkpoint_policy, work_factor=args.work_factor,
                    fault_op=args.fault_op)
    rep = run(trace, cfg, _models(args))
    _emit(rep.to_text(), args.report)
    if rep.violations:
        print(f"oracle violation: {rep.violations[0].line()}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_generate(args) -> int:
    trace = generate(args.kind, dict(args.param), seed=args.seed)
    _emit(serialize_trace(trace), args.out)
    return EXIT_OK


def cmd_defrag(args) -> int:
    trace = read_trace(args.trace)
    lengths, starts = {}, {}
    for op in trace.ops:
        if op[0] == "I":
            lengths[op[1]] = op[2]
        elif op[0] == "P":
            starts[op[1]] = op[2]
        elif op[0] == "D":
            lengths.pop(op[1], None)
            starts.pop(op[1], None)
    missing = sorted(set(lengths) - set(starts))
    if missing:
        raise InvalidArgument(f"no placement for {', '.join(missing[:5])}")
    objs = [(n, lengths[n], starts[n]) for n in lengths]
    res = defragment(DefragInput(objs, args.epsilon, divisor=args.epsilon_prime_divisor))
    lines = [
        f"epsilon={_fmt(as_fraction(args.epsilon))}",
        f"objects={len(objs)}",
        f"volume={res.volume}",
        f"delta={res.delta}",
        f"peak={res.peak}",
        f"peak_bound={res.Z + res.delta}",
        f"moves={res.moves}",
    ]
    for m in _models(args):
        alloc = sum(m.price(e.length) for e in res.events if e.source is None)
        realloc = sum(m.price(e.length) for e in res.events if e.source is not None)
        lines.append(f"cost.{m.label}.allocation={_fmt(Fraction(alloc))}")
        lines.append(f"cost.{m.label}.reallocation={_fmt(Fraction(realloc))}")
    violations = []
    if args.validate:
        oracle = Oracle("defrag", as_fraction(args.epsilon) / args.epsilon_prime_divisor)
        for ev in res.events:
            oracle.on_event(ev)
        violations = oracle.verdicts
        lines.append(f"violations={len(violations)}")
    for name in res.order:
        lines.append(f"P {name} {res.layout[name][0]}")
    _emit("\n".join(lines) + "\n", args.report)
    if violations:
        print(f"oracle violation: {violations[0].line()}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_sweep(args) -> int:
    traces = {}
    for path in args.trace:
        traces[path] = read_trace(path)
    if args.kind:
        for s in range(args.seed, args.seed + args.seeds):
            traces[f"{args.kind}:{s}"] = generate(args.kind, dict(args.param), seed=s)
    if not traces:
        raise InvalidArgument("give --trace or --generate")
    modes = args.mode or ["amortized", "checkpointed", "deamortized"]
    epsilons = args.epsilon or [Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)]
    models = tuple(args.cost or DEFAULT_MODELS)
    configs = [
        RunConfig(m, e, args.epsilon_prime_divisor, models=models, validate=args.validate,
                  checkpoint_policy=args.checkpoint_policy, work_factor=args.work_factor)
        for m in modes for e in epsilons
    ]
    results = sweep(traces, configs, jobs=args.jobs)
    out = []
    bad = 0
    for (tk, mode, eps), rep in results.items():
        out.append(f"[{tk} {mode} {eps}]")
        out.append(rep.to_text(wall_time=False))
        bad += len(rep.violations)
    _emit("\n".join(out), args.report)
    return EXIT_VIOLATION if bad else EXIT_OK


COMMANDS = {"run": cmd_run, "generate": cmd_generate, "defrag": cmd_defrag, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidArgument, InvalidModel, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
