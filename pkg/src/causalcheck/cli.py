"""Command-line front end.

Subcommands: check a history against a model, generate/execute/mutate
workloads, benchmark check times across history sizes, and dump the Datalog
program the encoder would hand to the fixpoint engine.

Exit codes: 0 the history conforms, 1 a violation was found, 2 usage or input
error, 3 the two engines disagreed (cross mode only).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import kernels
from .checker import Engine, check, parse_engine
from .encode import emit_text, encode, parse_model
from .errors import CannotInject, EngineDisagreement, MalformedInput, NotExecuted
from .generate import GenConfig, execute_simulated, generate, mutate_violation
from .history import History, Verdict, parse_history, serialize_history

EXIT_CONFORMING = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_DISAGREEMENT = 3


def _read_history(path: Optional[str]) -> History:
    if path is None or path == "-":
        return parse_history(sys.stdin.read())
    with open(path, "r", encoding="utf-8") as f:
        return parse_history(f.read())


def _write_output(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _format_verdict(v: Verdict) -> str:
    name = v.model if v.variant is None else f"{v.model}[{v.variant}]"
    out = f"{name}: {v.outcome}"
    if v.pattern:
        out += f" {v.pattern}"
    if v.witness:
        out += " (witness: " + ", ".join(v.witness) + ")"
    return out + f" [{v.elapsed_ms:.2f} ms]"


def cmd_check(args: argparse.Namespace) -> int:
    h = _read_history(args.input)
    v = check(h, args.model, args.engine)
    if args.json:
        print(v.to_json())
    else:
        print(_format_verdict(v))
    return EXIT_CONFORMING if v.conforming else EXIT_VIOLATION


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = GenConfig(
        n_clients=args.clients,
        n_transactions=args.transactions,
        n_variables=args.variables,
        seed=args.seed,
        n_events=args.events,
    )
    _write_output(serialize_history(generate(cfg)), args.out)
    return EXIT_CONFORMING


def cmd_execute(args: argparse.Namespace) -> int:
    h = _read_history(args.input)
    _write_output(serialize_history(execute_simulated(h, args.seed)), args.out)
    return EXIT_CONFORMING


def cmd_mutate(args: argparse.Namespace) -> int:
    h = _read_history(args.input)
    _write_output(serialize_history(mutate_violation(h, args.pattern, args.seed)), args.out)
    return EXIT_CONFORMING


def cmd_bench(args: argparse.Namespace) -> int:
    kernels.warmup()
    models = ("cc", "ccv", "cm1", "cm2")
    print("ops,cc_ms,ccv_ms,cm1_ms,cm2_ms")
    for size in range(args.ops_min, args.ops_max + 1, args.step):
        txns = max(1, size // args.processes)
        actual = txns * args.processes
        sums = dict.fromkeys(models, 0.0)
        for run in range(args.runs):
            seed = args.seed + 7919 * (size + run)
            h = execute_simulated(
                generate(GenConfig(args.processes, txns, args.variables, seed=seed)),
                seed=seed + 1,
            )
            for m in models:
                sums[m] += check(h, m, Engine.NATIVE).elapsed_ms
        means = [sums[m] / max(1, args.runs) for m in models]
        print(f"{actual}," + ",".join(f"{t:.3f}" for t in means))
    return EXIT_CONFORMING


def cmd_dump_datalog(args: argparse.Namespace) -> int:
    h = _read_history(args.input)
    sys.stdout.write(emit_text(encode(h, args.model, verbatim_hb=args.verbatim_hb)))
    return EXIT_CONFORMING


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="causalcheck",
        description="Check recorded read/write histories against causal consistency models.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    model_kw = dict(choices=["cc", "ccv", "cm", "cm1", "cm2"], default="cc")

    p = sub.add_parser("check", help="verdict for a JSONL history")
    p.add_argument("--model", **model_kw)
    p.add_argument("--engine", choices=["native", "datalog", "cross"], default="native")
    p.add_argument("--input", default=None, help="history file (default: stdin)")
    p.add_argument("--json", action="store_true", help="machine-readable verdict")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("generate", help="random non-executed history")
    p.add_argument("--clients", type=int, required=True)
    p.add_argument("--transactions", type=int, required=True)
    p.add_argument("--variables", type=int, required=True)
    p.add_argument("--events", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("execute", help="fill read values via a simulated store")
    p.add_argument("--input", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_execute)

    p = sub.add_parser("mutate", help="rewrite read values to plant a bad pattern")
    p.add_argument(
        "--pattern",
        required=True,
        choices=[
            "ThinAirRead",
            "CyclicCO",
            "WriteCOInitRead",
            "WriteCORead",
            "CyclicCF",
            "WriteHBInitRead",
            "CyclicHB",
        ],
    )
    p.add_argument("--input", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_mutate)

    p = sub.add_parser("bench", help="mean native check times by history size, CSV")
    p.add_argument("--ops-min", type=int, default=100)
    p.add_argument("--ops-max", type=int, default=600)
    p.add_argument("--step", type=int, default=100)
    p.add_argument("--processes", type=int, default=4)
    p.add_argument("--variables", type=int, default=5)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("dump-datalog", help="print the encoded Datalog program")
    p.add_argument("--model", **model_kw)
    p.add_argument("--input", default=None)
    p.add_argument(
        "--verbatim-hb",
        action="store_true",
        help="use the unguarded hb saturation rule (can over-approximate)",
    )
    p.set_defaults(fn=cmd_dump_datalog)

    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        # normalize early so bad names fail before any file work
        if hasattr(args, "model"):
            args.model = parse_model(args.model)
        if hasattr(args, "engine"):
            args.engine = parse_engine(args.engine)
        return args.fn(args)
    except EngineDisagreement as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DISAGREEMENT
    except BrokenPipeError:
        # downstream closed the pipe (e.g. piped into head); not our error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_CONFORMING
    except (MalformedInput, NotExecuted, CannotInject, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
