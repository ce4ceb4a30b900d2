"""Command-line front end: run a script, or read commands interactively.

Exit status is 0 when every command succeeded and every CheckEq found its
terms equal, 1 otherwise, and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import TextIO

from .prover import Output, ProverState, Report, Settings, load_library, run_text
from .syntax import ParseError, split_commands


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="diracprove",
        description="Decide equalities of plain and labelled Dirac notation terms.",
    )
    p.add_argument("--script", metavar="FILE", help="run the commands in FILE (default: read stdin)")
    p.add_argument("--lib", action="store_true", help="load the standard library before the script")
    p.add_argument("--trace", action="store_true", help="print the rewrite trace of every comparison")
    p.add_argument("--step-limit", type=int, default=100_000, metavar="N",
                   help="rewrite steps allowed per normalisation (default: %(default)s)")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check every CheckEq verdict numerically on small dimensions")
    p.add_argument("--seed", type=int, default=0, metavar="N", help="seed for the numeric cross-check")
    p.add_argument("--json", action="store_true", help="print a machine-readable report")
    return p


def _show(out: Output, stream: TextIO) -> None:
    print(out.text, file=stream)
    for line in out.trace:
        print(f"  {line}", file=stream)


def _oracle_failed(out: Output) -> bool:
    return out.oracle == "DISAGREES"


def _repl(state: ProverState, stdin: TextIO, stdout: TextIO) -> tuple[list[Output], ProverState]:
    """Read commands line by line; a command runs once its final ``.`` arrives."""
    outputs: list[Output] = []
    buffer = ""
    prompt = stdin.isatty()
    while True:
        if prompt:
            print("... " if buffer.strip() else ">>> ", end="", file=stdout, flush=True)
        line = stdin.readline()
        if not line:
            break
        buffer += line
        try:
            split_commands(buffer)
        except ParseError:
            continue
        report = run_text(buffer, state)
        state = report.state
        for out in report.outputs:
            _show(out, stdout)
        outputs.extend(report.outputs)
        buffer = ""
    if buffer.strip():
        report = run_text(buffer, state)
        for out in report.outputs:
            _show(out, stdout)
        outputs.extend(report.outputs)
    return outputs, state


def main(argv: list[str] | None = None, stdin: TextIO | None = None,
         stdout: TextIO | None = None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if args.step_limit <= 0:
        print("diracprove: --step-limit must be positive", file=sys.stderr)
        return 2
    settings = Settings(trace=args.trace, step_limit=args.step_limit, oracle=args.oracle, seed=args.seed)
    state = ProverState(settings=settings)
    if args.lib:
        state = load_library(state)

    if args.script is not None:
        try:
            with open(args.script, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            print(f"diracprove: cannot read {args.script}: {err.strerror}", file=sys.stderr)
            return 2
        report = run_text(text, state)
        outputs = report.outputs
        if not args.json:
            for out in outputs:
                _show(out, stdout)
    elif args.json:
        report = run_text(stdin.read(), state)
        outputs = report.outputs
    else:
        outputs, state = _repl(state, stdin, stdout)
        report = Report(outputs, state)

    if args.json:
        json.dump(report.as_json(), stdout, indent=2)
        stdout.write("\n")
    failed = any(o.failed or _oracle_failed(o) for o in outputs)
    return 1 if failed else 0


__all__ = ["build_parser", "main"]

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
