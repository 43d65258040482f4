"""Command-line front end.

Exit codes: 0 success / check passed, 1 check failed, 2 check
inconclusive (node budget exceeded), 3 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import run
from .untimed import u_output_reading, u_run
from .compiler import CompileError, eliminate_timers, embed_infinite
from .explore import (
    DEFAULT_NODE_CAP,
    BudgetExceeded,
    check_embedding,
    check_timer_elimination,
    check_translation,
    explore_ambients,
    explore_membranes,
    explore_untimed,
)
from .ambient import AmbientSyntaxError, parse_ambient
from .translate import TranslateError, generate_rules, translate
from .sysfile import ParseError, SystemFile, parse_system, render_system
from . import corpus
from .core import output_reading


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err}")


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_system(path: str) -> SystemFile:
    return parse_system(_read(path))


def _cmd_sim(args) -> int:
    sf = _load_system(args.file)
    if sf.timed:
        trace = run(sf.config, sf.rules, args.steps, args.selector, args.seed)
    else:
        trace = u_run(sf.config, sf.rules, args.steps, args.selector, args.seed)
    if args.trace:
        Path(args.trace).write_text(trace.to_jsonl(), encoding="utf-8")
    _emit({
        "steps": len(trace.records),
        "halted": trace.halted,
        "final": trace.records[-1].key if trace.records else trace.initial_key,
    })
    return 0


def _cmd_compile(args) -> int:
    sf = _load_system(args.file)
    if not sf.timed:
        raise UsageError("compile expects a timed system")
    uconfig, urules = eliminate_timers(sf.config, sf.rules)
    out = SystemFile(False, uconfig.output_label, uconfig, urules, 1, compiled=True)
    _write_out(render_system(out), args.output)
    return 0


def _cmd_embed(args) -> int:
    sf = _load_system(args.file)
    if sf.timed:
        raise UsageError("embed expects an untimed system")
    config, rules = embed_infinite(sf.config, sf.rules)
    out = SystemFile(True, config.output_label, config, rules)
    _write_out(render_system(out), args.output)
    return 0


def _cmd_translate(args) -> int:
    process = parse_ambient(_read(args.file))
    config = translate(process)
    rules = generate_rules(process, strict=args.strict_def4)
    out = SystemFile(True, config.output_label, config, rules, 1, strict=args.strict_def4)
    _write_out(render_system(out), args.output)
    return 0


def _cmd_explore(args) -> int:
    if args.file.endswith(".amb"):
        graph = explore_ambients(parse_ambient(_read(args.file)), args.depth, args.max_nodes)
    else:
        sf = _load_system(args.file)
        if sf.timed:
            graph = explore_membranes(sf.config, sf.rules, args.depth, args.max_nodes)
        else:
            graph = explore_untimed(sf.config, sf.rules, args.depth, args.max_nodes)
    if args.graph:
        Path(args.graph).write_text(
            json.dumps(graph.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )
    _emit({"nodes": len(graph.nodes), "edges": len(graph.edges), "truncated": graph.truncated})
    return 0


def _corpus_arg(text: str) -> tuple[int, int]:
    try:
        seed, count = text.split(",")
        return int(seed), int(count)
    except ValueError:
        raise UsageError("--corpus expects 'seed,count'")


def _cmd_check(args) -> int:
    verdicts = []
    if args.corpus:
        seed, count = _corpus_arg(args.corpus)
        for i in range(count):
            if args.prop == "prop1":
                config, rules = corpus.random_untimed_system(seed + i)
                verdicts.append(check_embedding(config, rules, args.depth, args.max_nodes))
            elif args.prop == "prop2":
                config, rules = corpus.random_timed_system(seed + i)
                verdicts.append(check_timer_elimination(config, rules, args.depth, args.max_nodes))
            else:
                process = corpus.random_reducible_process(seed + i)
                verdicts.append(check_translation(process, args.depth, args.max_nodes))
    elif args.file:
        if args.prop == "prop45":
            process = parse_ambient(_read(args.file))
            verdicts.append(check_translation(process, args.depth, args.max_nodes))
        else:
            sf = _load_system(args.file)
            if args.prop == "prop1":
                if sf.timed:
                    raise UsageError("check prop1 expects an untimed system")
                verdicts.append(check_embedding(sf.config, sf.rules, args.depth, args.max_nodes))
            else:
                if not sf.timed:
                    raise UsageError("check prop2 expects a timed system")
                verdicts.append(check_timer_elimination(sf.config, sf.rules, args.depth, args.max_nodes))
    else:
        raise UsageError("check needs a file or --corpus seed,count")
    _emit([v.to_json() for v in verdicts] if len(verdicts) > 1 else verdicts[0].to_json())
    if any(v.ok is False for v in verdicts):
        return 1
    if any(v.ok is None for v in verdicts):
        return 2
    return 0


def _cmd_output(args) -> int:
    sf = _load_system(args.file)
    if sf.timed:
        trace = run(sf.config, sf.rules, args.steps, "random", args.seed)
        reading = output_reading(trace.configs[-1])
    else:
        trace = u_run(sf.config, sf.rules, args.steps, "random", args.seed)
        reading = u_output_reading(trace.configs[-1])
    _emit({
        "halted": trace.halted,
        "steps": len(trace.records),
        "reading": {str(sym): n for sym, n in reading.items()},
    })
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mobilemem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="simulate a membrane system")
    p.add_argument("file")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--selector", choices=["first", "random"], default="random")
    p.add_argument("--trace", help="write a JSON-lines trace here")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("compile", help="eliminate timers from a timed system")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("embed", help="embed an untimed system with inf timers")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("translate", help="translate a mobile ambient process")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--strict-def4", action="store_true",
                   help="literal rule mode: movement keeps the mover's timer")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("explore", help="bounded exhaustive exploration")
    p.add_argument("file")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--graph", help="write the reach graph as JSON here")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_NODE_CAP)
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("check", help="equivalence and correspondence checks")
    p.add_argument("prop", choices=["prop1", "prop2", "prop45"])
    p.add_argument("file", nargs="?")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--corpus", help="seed,count of random systems instead of a file")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_NODE_CAP)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("output", help="run to halt (or budget) and read the output membrane")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_output)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ParseError, AmbientSyntaxError, TranslateError, CompileError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except BudgetExceeded as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
