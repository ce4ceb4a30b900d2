"""Normal forms and the equality check.

The pipeline, for a well-typed term:

1. rewrite to a fixpoint (definitions unfold, beta reduces, labels expand);
2. expand every opaque Dirac variable into its element-wise sum;
3. rewrite to a fixpoint again;
4. sort the arguments of AC symbols, ignoring bound names;
5. reorder each block of sums by first appearance of its binders;
6. convert to de Bruijn form.

Steps 4 and 5 are iterated with bound names ranked by their sum position
until the result is stable, which breaks the ties that a sort blind to
bound names leaves open.  Sums whose bodies differ only in a rational
factor are merged on the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .labels import eliminate_labels, label_rules, reject_labelled_variables, register_signature
from .rewrite import Engine, TraceRecord
from .rules import ZERO_HEADS, build_block, is_sum, plain_rules, sum_block, zero_of
from .scalars import numeric_split, with_numeric
from .terms import (
    AC_HEADS,
    COMMUTATIVE_HEADS,
    ONE,
    ZERO,
    Term,
    bound_names,
    from_de_bruijn,
    is_nameless_binder,
    is_named_binder,
    mk,
    num,
    numeral_value,
    order_key,
    rename_binders,
    struct_key,
    to_de_bruijn,
)
from .typecheck import STYPE, Context, Typer, TypingError, basis, is_labelled

_RULES = None


def all_rules():
    """Plain and labelled rules, built once."""
    global _RULES
    if _RULES is None:
        _RULES = plain_rules() + label_rules()
    return _RULES


_FAMILIES = {
    "R-ADD": [f"R-ADD{k}" for k in range(4)],
    "R-SUM-ELIM": [f"R-SUM-ELIM{k}" for k in range(9)],
    "R-L-SORT": [f"R-L-SORT{k}" for k in range(5)],
}


def rule_catalogue() -> list[str]:
    """Every rule name a trace can mention, families expanded, in rule order."""
    out: list[str] = []
    for r in all_rules():
        for name in _FAMILIES.get(r.name, [r.name]):
            if name not in out:
                out.append(name)
    return out


@dataclass
class NormalForm:
    """A canonical de Bruijn term with its type.

    ``plain`` is the label-free form used for comparison when ``type`` is
    labelled; otherwise it is ``None`` and ``term`` is compared.
    ``source`` is the elaborated input and ``rewritten`` the rewriting
    fixpoint before canonicalisation; replaying ``trace`` on ``source``
    gives ``rewritten``.
    """

    term: Term
    type: Term
    trace: list[TraceRecord] = field(default_factory=list)
    steps: int = 0
    plain: Term | None = None
    signature: tuple | None = None
    source: Term | None = None
    rewritten: Term | None = None

    @property
    def key(self) -> Term:
        return self.plain if self.plain is not None else self.term


# ---------------------------------------------------------------------------
# step 2: variable expansion


def _is_opaque(typer: Typer, ctx: Context, u: Term) -> bool:
    head = u
    while head.head == "APPLY":
        head = head.args[0]
    if head.args:
        return False
    entry = ctx.get(head.head)
    if head.head not in typer.bound and (entry is None or entry.kind != "assum"):
        return False
    try:
        ty = typer.infer(u)
    except TypingError:
        return False
    return ty.head in ("KTYPE", "BTYPE", "OTYPE")


def _element_wise(u: Term, ty: Term, typer: Typer) -> Term:
    def binder(s: Term, name_hint: str = "i"):
        from .terms import fresh

        n = fresh(name_hint)
        typer.declare_bound(n, basis(s))
        return n

    def ket(n):
        return Term("KET", (Term(n),))

    def bra(n):
        return Term("BRA", (Term(n),))

    if ty.head == "KTYPE":
        s = ty.args[0]
        i = binder(s)
        core = Term("SCR", (Term("DOT", (bra(i), u)), ket(i)))
        return build_block([(Term("USET", (s,)), i, basis(s))], core)
    if ty.head == "BTYPE":
        s = ty.args[0]
        i = binder(s)
        core = Term("SCR", (Term("DOT", (u, ket(i))), bra(i)))
        return build_block([(Term("USET", (s,)), i, basis(s))], core)
    s, t = ty.args
    i, j = binder(s), binder(t)
    coef = Term("DOT", (bra(i), Term("MULK", (u, ket(j)))))
    core = Term("SCR", (coef, Term("OUTER", (ket(i), bra(j)))))
    return build_block(
        [(Term("USET", (s,)), i, basis(s)), (Term("USET", (t,)), j, basis(t))], core
    )


def expand_variables(ctx: Context, t: Term, typer: Typer | None = None) -> Term:
    """Replace each occurrence of an opaque ket, bra or operator by its
    element-wise sum; scalars and basis terms are left alone."""
    typer = typer or Typer(ctx)

    def go(u: Term) -> Term:
        if not u.args:
            if _is_opaque(typer, ctx, u):
                return _element_wise(u, typer.infer(u), typer)
            return u
        if is_named_binder(u):
            typer.declare_bound(u.args[0].head, u.args[1] if u.head == "FUN" else None)
        if u.head == "APPLY" and _is_opaque(typer, ctx, u):
            return _element_wise(u, typer.infer(u), typer)
        if u.head == "APPLY":
            return u
        return Term(u.head, [go(a) for a in u.args])

    return go(t)


# ---------------------------------------------------------------------------
# steps 4 and 5: sorting and sum swapping


def sort_transform(t: Term, bound: Mapping[str, int] | frozenset[str] | set[str] | None = None) -> Term:
    """Sort every AC argument list, comparing bound names as equal.

    With a rank map, bound names compare by rank instead (names missing
    from the map rank as unknown).
    """
    if bound is None:
        bound = frozenset(bound_names(t))
    elif isinstance(bound, Mapping):
        full = {n: -1 for n in bound_names(t)}
        full.update(bound)
        bound = full
    return _sort(t, bound)


def _sort(t: Term, bound) -> Term:
    if not t.args:
        return t
    args = [_sort(a, bound) for a in t.args]
    if t.head == "LTSR":
        args.sort(key=lambda a: (*_label_key(a), order_key(a, bound)))
    elif t.head in AC_HEADS:
        args.sort(key=lambda a: order_key(a, bound))
    elif t.head in COMMUTATIVE_HEADS and len(args) == 2:
        if order_key(args[1], bound) < order_key(args[0], bound):
            args.reverse()
    return Term(t.head, args)


def _label_key(a: Term) -> tuple[int, str]:
    if a.head in ("LKET", "LBRA") and len(a.args) == 2:
        return (0 if a.head == "LKET" else 1, a.args[1].head)
    return (2, "")


def _first_appearance(t: Term, names: set[str], out: list[str], top: bool = True) -> None:
    if not t.args:
        if t.head in names and t.head not in out:
            out.append(t.head)
        return
    if t.head == "FUN" and not top:
        return
    if is_sum(t):
        _first_appearance(t.args[0], names, out, False)
        _first_appearance(t.args[1].args[2], names, out, False)
        return
    if t.head == "SCR":
        # the Dirac part is ordered by registers and shapes, which do not
        # depend on binder names, so it anchors the binder order
        _first_appearance(t.args[1], names, out, False)
        _first_appearance(t.args[0], names, out, False)
        return
    for a in t.args:
        _first_appearance(a, names, out, False)


def swap_transform(t: Term) -> Term:
    """Reorder each block of consecutive sums by first appearance of the
    binders in the block body; unused binders go innermost, ordered by
    their set."""
    if not t.args:
        return t
    if is_sum(t):
        binders, core = sum_block(t)
        core = swap_transform(core)
        names = {n for _, n, _ in binders}
        seen: list[str] = []
        _first_appearance(core, names, seen)
        pos = {n: k for k, n in enumerate(seen)}
        used = sorted((b for b in binders if b[1] in pos), key=lambda b: pos[b[1]])
        unused = sorted((b for b in binders if b[1] not in pos), key=lambda b: str(b[0]))
        return build_block(used + unused, core)
    return Term(t.head, [swap_transform(a) for a in t.args])


def _binder_ranks(t: Term) -> dict[str, int]:
    ranks: dict[str, int] = {}

    def go(u: Term) -> None:
        if is_sum(u):
            ranks[u.args[1].args[0].head] = len(ranks)
        for a in u.args:
            go(a)

    go(t)
    return ranks


# ---------------------------------------------------------------------------
# tidying in de Bruijn form


def _db_block(t: Term) -> tuple[list[tuple[Term, Term]], Term]:
    prefix = []
    while t.head == "SUM" and len(t.args) == 2 and t.args[1].head == "FUN" and len(t.args[1].args) == 2:
        prefix.append((t.args[0], t.args[1].args[0]))
        t = t.args[1].args[1]
    return prefix, t


def _db_build(prefix, core: Term) -> Term:
    for s, ann in reversed(prefix):
        core = Term("SUM", (s, Term("FUN", (ann, core))))
    return core


SCALAR_ATOM_HEADS = frozenset({"MULS", "DELTA", "DOT", "CONJ", "ADDS"})


def _split(x: Term) -> tuple[Fraction, Term]:
    prefix, core = _db_block(x)
    if core.head == "SCR":
        c, rest = numeric_split(core.args[0])
        stripped = Term("SCR", (rest, core.args[1])) if rest is not None else core.args[1]
    elif numeral_value(core) is not None or core.head in SCALAR_ATOM_HEADS or core.head in ("IMAG", "SQRT2"):
        c, rest = numeric_split(core)
        stripped = rest if rest is not None else ONE
    else:
        c, stripped = Fraction(1), core
    return c, _db_build(prefix, stripped)


def _rebuild(c: Fraction, stripped: Term, scalar: bool) -> Term:
    prefix, core = _db_block(stripped)
    if core.head == "SCR":
        coef = with_numeric(c, core.args[0])
        core = Term("SCR", (coef, core.args[1]))
    elif scalar:
        core = with_numeric(c, None if core == ONE else core)
    elif c != 1:
        core = Term("SCR", (num(c), core))
    return _db_build(prefix, core)


def _merge(head: str, args: list[Term]) -> list[Term]:
    groups: dict[Term, Fraction] = {}
    order: list[Term] = []
    for a in args:
        c, s = _split(a)
        if s not in groups:
            groups[s] = Fraction(0)
            order.append(s)
        groups[s] += c
    return [_rebuild(groups[s], s, head == "ADDS") for s in order if groups[s] != 0]


def tidy(t: Term) -> Term:
    """Sort AC lists structurally, merge like summands and drop zeros."""
    if not t.args:
        return t
    args = [tidy(a) for a in t.args]
    h = t.head
    if h in ("ADD", "ADDS"):
        spliced: list[Term] = []
        for a in args:
            spliced.extend(a.args if a.head == h else (a,))
        args = [a for a in _merge(h, spliced) if not _is_zero_summand(a)]
        if not args:
            return ZERO
        args.sort(key=struct_key)
        return args[0] if len(args) == 1 else Term(h, args)
    if h == "LTSR":
        args.sort(key=lambda a: (*_label_key(a), struct_key(a)))
    elif h in AC_HEADS:
        args.sort(key=struct_key)
    elif h in COMMUTATIVE_HEADS and len(args) == 2 and struct_key(args[1]) < struct_key(args[0]):
        args.reverse()
    if h == "SCR":
        if args[0] == ONE:
            return args[1]
        if args[0] == ZERO or args[1] == ZERO:
            return ZERO
    if h == "SUM" and len(args) == 2 and args[1].head == "FUN" and args[1].args[-1] == ZERO:
        return ZERO
    return Term(h, args)


def _is_zero_summand(a: Term) -> bool:
    _, core = _db_block(a)
    if core == ZERO or core.head in ZERO_HEADS:
        return True
    return core.head == "SCR" and (core.args[0] == ZERO or core.args[1].head in ZERO_HEADS)


def canonicalize(t: Term, ty: Term | None = None, rounds: int = 8) -> Term:
    """Steps 4 to 6 on a rewritten term; returns a de Bruijn term."""
    cur = sort_transform(rename_binders(t))
    cur = swap_transform(cur)
    for _ in range(rounds):
        nxt = swap_transform(sort_transform(cur, _binder_ranks(cur)))
        if nxt == cur:
            break
        cur = nxt
    out = tidy(to_de_bruijn(cur))
    if out == ZERO and ty is not None:
        z = zero_of(ty)
        if z is not None:
            return z
    return out


# ---------------------------------------------------------------------------
# the pipeline


def _prepare(ctx: Context, t: Term, typer: Typer) -> tuple[Term, Term]:
    if _has_nameless(t):
        t = from_de_bruijn(t, typer.declare_bound)
    return typer.elaborate(t)


def _has_nameless(t: Term) -> bool:
    stack = [t]
    while stack:
        u = stack.pop()
        if u.args and is_nameless_binder(u):
            return True
        stack.extend(u.args)
    return False


def normalize(
    ctx: Context,
    t: Term,
    trace: bool = False,
    step_limit: int = 100_000,
) -> NormalForm:
    """Run the full pipeline on a surface or elaborated term."""
    typer = Typer(ctx)
    e, ty = _prepare(ctx, t, typer)
    reject_labelled_variables(ctx, e)
    eng = Engine(ctx, all_rules(), trace=trace, step_limit=step_limit, typer=typer)
    r1 = eng.normalize(e)
    x = expand_variables(ctx, r1, typer)
    if x != r1:
        if trace:
            eng.records.append(TraceRecord("EXPAND", (), r1, x))
        r2 = eng.normalize(x)
    else:
        r2 = r1
    term = canonicalize(r2, ty)
    plain = None
    sig = None
    if is_labelled(ty):
        sig = register_signature(r2)
        stripped, _ = eliminate_labels(ctx, r2, r2)
        plain = canonicalize(stripped)
    return NormalForm(term, ty, list(eng.records), eng.steps, plain, sig, e, r2)


def normalize_term(ctx: Context | None, t: Term) -> Term:
    """Just the canonical term (used by scalar comparison helpers)."""
    return normalize(ctx or Context(), t).term


@dataclass
class EqResult:
    equal: bool
    left: NormalForm
    right: NormalForm
    reason: str = ""


def check_eq(
    ctx: Context,
    t1: Term,
    t2: Term,
    trace: bool = False,
    step_limit: int = 100_000,
) -> EqResult:
    """Decide ``t1 = t2`` by comparing normal forms.

    A type mismatch raises :class:`TypingError` before any rewriting.
    """
    ty1 = Typer(ctx).elaborate(t1)[1]
    ty2 = Typer(ctx).elaborate(t2)[1]
    if ty1 != ty2:
        raise TypingError("CheckEq", f"the two sides have different types: {ty1} vs {ty2}")
    n1 = normalize(ctx, t1, trace, step_limit)
    n2 = normalize(ctx, t2, trace, step_limit)
    if n1.signature is not None and n2.signature is not None and n1.signature != n2.signature:
        return EqResult(False, n1, n2, f"register layouts differ: {n1.signature} vs {n2.signature}")
    eq = n1.key == n2.key
    return EqResult(eq, n1, n2, "" if eq else "normal forms differ")


__all__ = [
    "EqResult",
    "rule_catalogue",
    "NormalForm",
    "canonicalize",
    "check_eq",
    "expand_variables",
    "normalize",
    "normalize_term",
    "sort_transform",
    "swap_transform",
    "tidy",
]
