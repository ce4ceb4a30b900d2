"""Rule representation, AC matching and the innermost rewriting engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .terms import (
    AC_HEADS,
    COMMUTATIVE_HEADS,
    Path,
    Term,
    is_named_binder,
    mk,
    rename_binders,
    replace_at,
    struct_key,
    subterm_at,
)
from .typecheck import Context, Typer, TypingError

LEAF_KEY = "$leaf"
SEQ = "SEQ"

Subst = dict[str, Term]


@dataclass(frozen=True)
class TraceRecord:
    """One rewrite step: ``pre`` at ``path`` became ``post`` via ``rule``."""

    rule: str
    path: Path
    pre: Term
    post: Term

    def render(self) -> str:
        where = ".".join(map(str, self.path)) or "root"
        return f"{self.rule} @ {where} : {self.pre} ==> {self.post}"


class StepLimitExceeded(Exception):
    """Rewriting did not reach a fixpoint within the step budget."""

    def __init__(self, limit: int, trace: list[TraceRecord]) -> None:
        super().__init__(f"step limit {limit} exceeded (possible nontermination)")
        self.limit = limit
        self.trace = trace


@dataclass
class Rule:
    """A named root rewrite.  ``fire`` returns the contractum or ``None``."""

    name: str
    heads: tuple[str, ...]
    fire: Callable[["Engine", Term], Term | None]

    @property
    def fired_as(self) -> str:
        """Name to record for the latest firing; grouped rules report the member that matched."""
        return self.name


# ---------------------------------------------------------------------------
# matching


def match_ac(
    pattern: Term,
    subject: Term,
    variables: Iterable[str] = (),
    seq_vars: Iterable[str] = (),
    subst: Mapping[str, Term] | None = None,
) -> Subst | None:
    """First match of ``pattern`` against ``subject`` modulo AC, or ``None``.

    Leaves named in ``variables`` match any term (consistently);
    leaves named in ``seq_vars`` may appear once per AC argument list and
    bind the unmatched remainder as a ``SEQ[...]`` node.
    """
    it = matches(pattern, subject, frozenset(variables), frozenset(seq_vars), dict(subst or {}))
    return next(it, None)


def matches(p: Term, s: Term, vs: frozenset, seqs: frozenset, sub: Subst) -> Iterator[Subst]:
    if not p.args and p.head in vs:
        bound = sub.get(p.head)
        if bound is None:
            yield {**sub, p.head: s}
        elif bound == s:
            yield sub
        return
    if p.head != s.head:
        return
    if not p.args:
        if not s.args:
            yield sub
        return
    if p.head in AC_HEADS:
        yield from _match_multiset(list(p.args), list(s.args), vs, seqs, sub)
    elif p.head in COMMUTATIVE_HEADS and len(p.args) == 2 == len(s.args):
        yield from _match_list(p.args, s.args, vs, seqs, sub)
        if s.args[0] != s.args[1]:
            yield from _match_list(p.args, (s.args[1], s.args[0]), vs, seqs, sub)
    elif len(p.args) == len(s.args):
        yield from _match_list(p.args, s.args, vs, seqs, sub)


def _match_list(ps: Sequence[Term], ss: Sequence[Term], vs, seqs, sub) -> Iterator[Subst]:
    if not ps:
        yield sub
        return
    for s1 in matches(ps[0], ss[0], vs, seqs, sub):
        yield from _match_list(ps[1:], ss[1:], vs, seqs, s1)


def _match_multiset(ps: list[Term], ss: list[Term], vs, seqs, sub) -> Iterator[Subst]:
    seq_names = [p.head for p in ps if not p.args and p.head in seqs]
    fixed = [p for p in ps if p.args or p.head not in seqs]
    if len(seq_names) > 1:
        raise ValueError("at most one sequence variable per AC argument list")

    def go(k: int, used: frozenset[int], cur: Subst) -> Iterator[Subst]:
        if k == len(fixed):
            rest = [s for j, s in enumerate(ss) if j not in used]
            if seq_names:
                yield {**cur, seq_names[0]: Term(SEQ, rest)}
            elif not rest:
                yield cur
            return
        for j, s in enumerate(ss):
            if j in used:
                continue
            for nxt in matches(fixed[k], s, vs, seqs, cur):
                yield from go(k + 1, used | {j}, nxt)

    yield from go(0, frozenset(), sub)


def instantiate(t: Term, sub: Mapping[str, Term]) -> Term:
    """Build a contractum; ``SEQ`` bindings are spliced into AC lists."""
    if not t.args:
        return sub.get(t.head, t)
    args: list[Term] = []
    for a in t.args:
        v = instantiate(a, sub)
        if v.head == SEQ:
            args.extend(v.args)
        else:
            args.append(v)
    if t.head in AC_HEADS and len(args) == 1:
        return args[0]
    return mk(t.head, *args)


class RewriteRule(Rule):
    """A rule given by a pattern, optional guard and a template or builder.

    ``guard(engine, subst)`` may return ``False``/``None`` to reject the
    match, ``True`` to accept it, or a dict of extra bindings.
    """

    def __init__(
        self,
        name: str,
        lhs: Term | str,
        rhs: Term | str | Callable[["Engine", Subst], Term | None],
        variables: Iterable[str],
        seq_vars: Iterable[str] = (),
        guard: Callable[["Engine", Subst], bool | dict | None] | None = None,
    ) -> None:
        from .syntax import parse

        self.lhs = parse(lhs) if isinstance(lhs, str) else lhs
        self.rhs = parse(rhs) if isinstance(rhs, str) else rhs
        self.variables = frozenset(variables)
        self.seq_vars = frozenset(seq_vars)
        self.guard = guard
        head = self.lhs.head if self.lhs.args else LEAF_KEY
        super().__init__(name, (head,), self._fire)

    def _fire(self, engine: "Engine", t: Term) -> Term | None:
        for sub in matches(self.lhs, t, self.variables, self.seq_vars, {}):
            if self.guard is not None:
                ok = self.guard(engine, sub)
                if not ok:
                    continue
                if isinstance(ok, dict):
                    sub = {**sub, **ok}
            if callable(self.rhs):
                out = self.rhs(engine, sub)
                if out is None:
                    continue
                return out
            return instantiate(self.rhs, sub)
        return None


# ---------------------------------------------------------------------------
# the engine


@dataclass
class Engine:
    """Innermost-first rewriting to a fixpoint, with optional tracing.

    Children are normalised left to right, AC argument lists are spliced
    and kept sorted, then root rules are tried in order; the first one
    that changes the term fires and the result is normalised again.
    """

    ctx: Context
    rules: Sequence[Rule]
    trace: bool = False
    step_limit: int = 100_000
    typer: Typer | None = None
    records: list[TraceRecord] = field(default_factory=list)
    steps: int = 0

    def __post_init__(self) -> None:
        if self.typer is None:
            self.typer = Typer(self.ctx)
        self._by_head: dict[str, list[Rule]] = {}
        for r in self.rules:
            for h in r.heads:
                self._by_head.setdefault(h, []).append(r)
        self._memo: dict[Term, Term] = {}
        self._normal: set[Term] = set()

    # helpers used by rules ---------------------------------------------------
    def type_of(self, t: Term) -> Term:
        assert self.typer is not None
        return self.typer.infer(t)

    def freshen(self, t: Term) -> Term:
        """Rename every binder in ``t`` and register the new names' types."""
        assert self.typer is not None
        return rename_binders(t, self.typer.declare_bound)

    def declare(self, name: str, ann: Term | None) -> None:
        assert self.typer is not None
        self.typer.declare_bound(name, ann)

    # main loop ---------------------------------------------------------------
    def normalize(self, t: Term) -> Term:
        return self._norm(t, ())

    def _record(self, rule: str, path: Path, pre: Term, post: Term) -> None:
        self.steps += 1
        if self.trace:
            self.records.append(TraceRecord(rule, path, pre, post))
        if self.steps > self.step_limit:
            raise StepLimitExceeded(self.step_limit, list(self.records))

    def _norm(self, t: Term, path: Path) -> Term:
        if t in self._normal:
            return t
        if not self.trace:
            hit = self._memo.get(t)
            if hit is not None:
                return hit
        orig = t
        cur = t
        while True:
            cur = self._norm_children(cur, path)
            key = cur.head if cur.args else LEAF_KEY
            for rule in self._by_head.get(key, ()):
                try:
                    new = rule.fire(self, cur)
                except TypingError:
                    new = None
                if new is not None and new != cur:
                    self._record(rule.fired_as, path, cur, new)
                    cur = new
                    break
            else:
                break
        self._normal.add(cur)
        if not self.trace:
            self._memo[orig] = cur
        return cur

    def _norm_children(self, t: Term, path: Path) -> Term:
        if not t.args or t in self._normal:
            return t
        if is_named_binder(t):
            self.declare(t.args[0].head, t.args[1] if t.head == "FUN" else None)
        args = list(t.args)
        changed = False
        for k, a in enumerate(args):
            na = self._norm(a, path + (k,))
            if na is not a:
                changed = changed or na != a
                args[k] = na
        cur = Term(t.head, args) if changed else t
        h = cur.head
        if h in AC_HEADS:
            if any(a.head == h and a.args for a in args):
                spliced: list[Term] = []
                for a in args:
                    spliced.extend(a.args if a.head == h and a.args else (a,))
                new = Term(h, spliced)
                self._record("R-FLATTEN", path, cur, new)
                cur, args = new, spliced
            ordered = sorted(args, key=ac_key(h))
            if ordered != args:
                new = Term(h, ordered)
                self._record("AC-SORT", path, cur, new)
                cur = new
        elif h in COMMUTATIVE_HEADS and len(args) == 2:
            if struct_key(args[1]) < struct_key(args[0]):
                new = Term(h, (args[1], args[0]))
                self._record("AC-SORT", path, cur, new)
                cur = new
        return cur


def _ltsr_key(t: Term) -> tuple:
    if t.head in ("LKET", "LBRA") and len(t.args) == 2:
        return (0 if t.head == "LKET" else 1, t.args[1].head, struct_key(t.args[0]))
    return (2, "", struct_key(t))


def ac_key(head: str) -> Callable[[Term], tuple]:
    """Argument order for an AC head (labelled tensors sort kets first, then register)."""
    return _ltsr_key if head == "LTSR" else struct_key


def rewrite_to_fixpoint(
    rules: Sequence[Rule],
    ctx: Context,
    t: Term,
    step_limit: int = 100_000,
    trace: bool = True,
    typer: Typer | None = None,
) -> tuple[Term, list[TraceRecord]]:
    """Normalise ``t`` with ``rules``; returns the result and its trace."""
    eng = Engine(ctx, rules, trace=trace, step_limit=step_limit, typer=typer)
    out = eng.normalize(t)
    return out, eng.records


def apply_once(rules: Sequence[Rule], ctx: Context, t: Term, typer: Typer | None = None):
    """One innermost-leftmost step, or ``None`` if ``t`` is a fixpoint.

    Unlike the engine, this does not normalise children first: it scans
    positions bottom-up, left to right, and fires the first applicable rule.
    """
    eng = Engine(ctx, rules, typer=typer)
    by_head = eng._by_head

    def visit(u: Term, path: Path):
        if u.args and is_named_binder(u):
            eng.declare(u.args[0].head, u.args[1] if u.head == "FUN" else None)
        for k, a in enumerate(u.args):
            hit = visit(a, path + (k,))
            if hit is not None:
                return hit
        for rule in by_head.get(u.head if u.args else LEAF_KEY, ()):
            try:
                new = rule.fire(eng, u)
            except TypingError:
                new = None
            if new is not None and new != u:
                return path, u, new, rule.fired_as
        return None

    hit = visit(t, ())
    if hit is None:
        return None
    path, pre, post, name = hit
    out = replace_at(t, path, post)
    return out, TraceRecord(name, path, pre, post)


def replay(t: Term, records: Iterable[TraceRecord]) -> Term:
    """Re-apply recorded steps; raises ``ValueError`` on a mismatch."""
    cur = t
    for r in records:
        here = subterm_at(cur, r.path)
        if here != r.pre:
            raise ValueError(f"trace mismatch at {r.render()}")
        cur = replace_at(cur, r.path, r.post)
    return cur
