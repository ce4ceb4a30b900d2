"""The command processor: a context plus Def/Var/Check/Normalize/CheckEq.

Every command runs against an immutable :class:`ProverState`; a failing
command returns an error output and leaves the state untouched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .normalize import check_eq, normalize
from .rewrite import StepLimitExceeded
from .syntax import Command, ParseError, parse_command, print_term, split_commands
from .typecheck import Context, Typer, TypingError

EQUAL_TEXT = "The two terms are equal."
NOT_EQUAL_TEXT = "The two terms are not equal."


@dataclass(frozen=True)
class Settings:
    trace: bool = False
    step_limit: int = 100_000
    oracle: bool = False
    oracle_dims: tuple[int, ...] = (2, 3)
    seed: int = 0


@dataclass(frozen=True)
class ProverState:
    context: Context = field(default_factory=Context)
    settings: Settings = field(default_factory=Settings)
    history: tuple[Command, ...] = ()


@dataclass
class Output:
    """What one command produced.

    ``verdict`` is ``ok`` for Def/Var/Check/Normalize, ``equal`` or
    ``not-equal`` for CheckEq, and ``error`` when the command failed.
    """

    command: str
    verdict: str
    text: str
    normal_form: str | None = None
    millis: float = 0.0
    trace_len: int | None = None
    trace: list[str] = field(default_factory=list)
    oracle: str | None = None

    @property
    def failed(self) -> bool:
        return self.verdict in ("error", "not-equal")

    def as_json(self) -> dict:
        out: dict = {"command": self.command, "verdict": self.verdict}
        if self.normal_form is not None:
            out["normal_form"] = self.normal_form
        out["millis"] = round(self.millis, 3)
        if self.trace_len is not None:
            out["trace_len"] = self.trace_len
        return out


def _locate(err: Exception, cmd: Command | None) -> str:
    span = getattr(err, "span", None) or (cmd.span if cmd else None)
    text = err.message if isinstance(err, ParseError) else str(err)
    if span is None:
        return text
    return f"line {span.line}, column {span.column}: {text}"


def execute(state: ProverState, cmd: Command) -> tuple[ProverState, Output]:
    """Run one command; on failure the returned state is ``state`` itself."""
    start = time.perf_counter()
    try:
        new_ctx, out = _run(state, cmd)
    except (ParseError, TypingError, StepLimitExceeded, ValueError, RecursionError) as err:
        msg = _locate(err, cmd)
        out = Output(cmd.text, "error", f"Error: {msg}")
        if isinstance(err, StepLimitExceeded):
            out.trace_len = len(err.trace)
        out.millis = (time.perf_counter() - start) * 1000
        return state, out
    out.millis = (time.perf_counter() - start) * 1000
    new_state = replace(state, context=new_ctx, history=state.history + (cmd,))
    return new_state, out


def _run(state: ProverState, cmd: Command) -> tuple[Context, Output]:
    ctx = state.context
    s = state.settings
    if cmd.kind == "Var":
        ctx = ctx.declare(cmd.name, cmd.terms[0])
        return ctx, Output(cmd.text, "ok", f"{cmd.name} : {print_term(cmd.terms[0])}")
    if cmd.kind == "Def":
        ctx = ctx.define(cmd.name, cmd.terms[0])
        ty = ctx.get(cmd.name).type
        return ctx, Output(cmd.text, "ok", f"{cmd.name} : {print_term(ty)}")
    if cmd.kind == "Check":
        _, ty = Typer(ctx).elaborate(cmd.terms[0])
        return ctx, Output(cmd.text, "ok", print_term(ty))
    if cmd.kind == "Normalize":
        want = cmd.trace or s.trace
        nf = normalize(ctx, cmd.terms[0], trace=want, step_limit=s.step_limit)
        shown = print_term(nf.term)
        out = Output(cmd.text, "ok", shown, normal_form=shown)
        if want:
            out.trace = [r.render() for r in nf.trace]
            out.trace_len = len(nf.trace)
        return ctx, out
    if cmd.kind == "CheckEq":
        t1, t2 = cmd.terms
        res = check_eq(ctx, t1, t2, trace=s.trace, step_limit=s.step_limit)
        if res.equal:
            shown = print_term(res.left.term)
            out = Output(cmd.text, "equal", f"{EQUAL_TEXT}\n{shown}", normal_form=shown)
        else:
            shown = print_term(res.left.term)
            text = (f"{NOT_EQUAL_TEXT} ({res.reason})\n"
                    f"left:  {shown}\nright: {print_term(res.right.term)}")
            out = Output(cmd.text, "not-equal", text, normal_form=shown)
        if s.trace:
            out.trace = [r.render() for r in res.left.trace + res.right.trace]
            out.trace_len = len(out.trace)
        if s.oracle:
            out.oracle = _oracle_check(ctx, t1, t2, res.equal, s)
            out.text += f"\noracle: {out.oracle}"
        return ctx, out
    raise ValueError(f"unknown command {cmd.kind}")


def _oracle_check(ctx: Context, t1, t2, equal: bool, s: Settings) -> str:
    from .oracle import OracleError, semantic_equal

    try:
        agree = semantic_equal(ctx, t1, t2, trials=3, seed=s.seed, dims=s.oracle_dims)
    except OracleError as err:
        return f"skipped ({err})"
    if agree == equal:
        return "agrees"
    return "DISAGREES"


# ---------------------------------------------------------------------------
# scripts


@dataclass
class Report:
    outputs: list[Output]
    state: ProverState

    @property
    def ok(self) -> bool:
        return not any(o.failed for o in self.outputs)

    def as_json(self) -> list[dict]:
        return [o.as_json() for o in self.outputs]


def run_text(text: str, state: ProverState | None = None) -> Report:
    """Execute every command in ``text``.  A parse error in the command
    structure (e.g. a missing final ``.``) is reported as one error entry."""
    state = state or ProverState()
    outputs: list[Output] = []
    try:
        chunks = split_commands(text)
    except ParseError as err:
        return Report([Output("", "error", f"Error: {_locate(err, None)}")], state)
    for chunk, span in chunks:
        try:
            cmd = parse_command(chunk, span)
        except ParseError as err:
            outputs.append(Output(chunk, "error", f"Error: {_locate(err, None)}"))
            continue
        state, out = execute(state, cmd)
        outputs.append(out)
    return Report(outputs, state)


def run_script(path: str | Path, state: ProverState | None = None) -> Report:
    return run_text(Path(path).read_text(encoding="utf-8"), state)


def library_text() -> str:
    """Source of the bundled standard library."""
    return resources.files("diracprove.library").joinpath("stdlib.dirac").read_text("utf-8")


def load_library(state: ProverState | None = None) -> ProverState:
    """``state`` extended with the standard library definitions."""
    report = run_text(library_text(), state)
    bad = [o for o in report.outputs if o.failed]
    if bad:
        raise RuntimeError(f"standard library failed to load: {bad[0].text}")
    return report.state
