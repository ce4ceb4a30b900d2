"""Registers, labelled rewrite rules and label elimination.

A labelled term first has every lifting ``K_R``, ``B_R`` and ``O_{R;R'}``
expanded into sums of labelled basis factors with plain scalar
coefficients.  The labelled rules then push scalars, sums and additions
outwards and contract matching bra/ket pairs, so each summand ends up as
a scalar times a labelled tensor of basis factors.  Finally the labels
are stripped: kets first, each group in register order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .rewrite import Engine, Rule
from .rules import (
    F,
    P,
    dist_rule,
    pull_rule,
    push_ac_rule,
    push_rule,
    sum_block,
    build_block,
    zero_of,
)
from .terms import ONE, ZERO, Term, fresh, mk
from .typecheck import (
    STYPE,
    Typer,
    TypingError,
    basis,
    is_labelled,
    register_leaves,
)

KET_FIRST = {"LKET": 0, "LBRA": 1}


# ---------------------------------------------------------------------------
# registers


def basis_of_register(r: Term, names: dict[str, str]) -> tuple[Term, Term]:
    """``(|i_R>, <i_R|)`` for register ``r``; ``names`` maps leaves to indices."""
    idx = index_of_register(r, names)
    return Term("KET", (idx,)), Term("BRA", (idx,))


def index_of_register(r: Term, names: dict[str, str]) -> Term:
    if not r.args:
        return Term(names[r.head])
    return Term("PAIR", (index_of_register(r.args[0], names), index_of_register(r.args[1], names)))


@dataclass(frozen=True)
class SwapSpec:
    """A register arrangement and its default (sorted) rearrangement."""

    source: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.source)) != len(self.source):
            raise ValueError(f"register repeated in {self.source}")

    @classmethod
    def of(cls, r: Term) -> SwapSpec:
        return cls(tuple(register_leaves(r)))

    @property
    def target(self) -> tuple[str, ...]:
        return tuple(sorted(self.source))

    def permutation(self) -> tuple[int, ...]:
        """``perm[k]`` is the source position of the ``k``-th target register."""
        return tuple(self.source.index(r) for r in self.target)


def _register_sums(e: Engine, r: Term):
    """Sum binders, one per leaf of ``r``, and the leaf-to-index map."""
    leaves = register_leaves(r)
    names = {}
    binders = []
    for leaf in leaves:
        s = e.typer.register_index(Term(leaf))
        name = fresh("i")
        e.declare(name, basis(s))
        names[leaf] = name
        binders.append((Term("USET", (s,)), name, basis(s)))
    return binders, names


def _factors(polarity: str, r: Term, names: dict[str, str]) -> list[Term]:
    return [Term(polarity, (Term(names[leaf]), Term(leaf))) for leaf in register_leaves(r)]


def _ltsr(factors: Sequence[Term]) -> Term:
    if not factors:
        return ONE
    return factors[0] if len(factors) == 1 else mk("LTSR", *factors)


def _expand_lift(e: Engine, t: Term) -> Term | None:
    if t.head == "LIFTK":
        k, r = t.args
        binders, names = _register_sums(e, r)
        coef = Term("DOT", (basis_of_register(r, names)[1], k))
        core = Term("SCR", (coef, _ltsr(_factors("LKET", r, names))))
    elif t.head == "LIFTB":
        b, r = t.args
        binders, names = _register_sums(e, r)
        coef = Term("DOT", (b, basis_of_register(r, names)[0]))
        core = Term("SCR", (coef, _ltsr(_factors("LBRA", r, names))))
    else:
        o, r1, r2 = t.args
        b1, n1 = _register_sums(e, r1)
        b2, n2 = _register_sums(e, r2)
        binders = b1 + b2
        coef = Term("DOT", (basis_of_register(r1, n1)[1],
                            Term("MULK", (o, basis_of_register(r2, n2)[0]))))
        core = Term("SCR", (coef, _ltsr(_factors("LKET", r1, n1) + _factors("LBRA", r2, n2))))
    return build_block(binders, core)


def expand_labelled(ctx, t: Term, typer: Typer | None = None) -> Term:
    """Expand every lifting node of an elaborated term (no other rewriting)."""
    reject_labelled_variables(ctx, t)
    eng = Engine(ctx, [], typer=typer)

    def go(u: Term) -> Term:
        if not u.args:
            return u
        u = Term(u.head, [go(a) for a in u.args])
        if u.head in ("LIFTK", "LIFTB", "LIFTO"):
            return _expand_lift(eng, u)
        return u

    return go(t)


def reject_labelled_variables(ctx, t: Term) -> None:
    """Raise if ``t`` mentions a context variable of labelled type."""
    stack = [t]
    while stack:
        u = stack.pop()
        if not u.args:
            entry = ctx.get(u.head)
            if entry is not None and entry.type is not None and is_labelled(entry.type):
                raise TypingError(
                    "L-Var", f"variables of labelled type are not supported ({u.head})", u
                )
        stack.extend(u.args)


# ---------------------------------------------------------------------------
# labelled tensor and composition rules


def _basic_factors(x: Term) -> list[Term] | None:
    if x.head in KET_FIRST:
        return [x]
    if x.head == "LTSR" and all(a.head in KET_FIRST for a in x.args):
        return list(x.args)
    return None


def _l_sort(e: Engine, t: Term) -> Term | None:
    left, right = t.args
    fa, fb = _basic_factors(left), _basic_factors(right)
    if fa is None or fb is None:
        return None
    kets = {a.args[1]: k for k, a in enumerate(fb) if a.head == "LKET"}
    for k, a in enumerate(fa):
        if a.head == "LBRA" and a.args[1] in kets:
            j = kets[a.args[1]]
            delta = Term("DELTA", (a.args[0], fb[j].args[0]))
            rest_a = fa[:k] + fa[k + 1:]
            rest_b = fb[:j] + fb[j + 1:]
            shape = {(True, True): "R-L-SORT1", (True, False): "R-L-SORT2",
                     (False, True): "R-L-SORT3", (False, False): "R-L-SORT4"}
            _SORT_NAME[0] = shape[(not rest_a, not rest_b)]
            if not rest_a and not rest_b:
                return delta
            if not rest_a:
                return mk("SCR", delta, _ltsr(rest_b))
            if not rest_b:
                return mk("SCR", delta, _ltsr(rest_a))
            return mk("SCR", delta, Term("LDOT", (_ltsr(rest_a), _ltsr(rest_b))))
    _SORT_NAME[0] = "R-L-SORT0"
    return mk("LTSR", *fa, *fb)


_SORT_NAME = ["R-L-SORT0"]


class _SortRule(Rule):
    def __init__(self) -> None:
        super().__init__("R-L-SORT", ("LDOT",), self._fire)

    def _fire(self, e: Engine, t: Term) -> Term | None:
        out = _l_sort(e, t)
        if out is not None:
            self._member = _SORT_NAME[0]
        return out

    @property
    def fired_as(self) -> str:
        return getattr(self, "_member", self.name)


def _ltsr_scalar(e: Engine, t: Term) -> Term | None:
    for k, a in enumerate(t.args):
        if e.type_of(a) == STYPE:
            rest = t.args[:k] + t.args[k + 1:]
            return mk("SCR", a, _ltsr(rest))
    return None


def _ldot_scalar(e: Engine, t: Term) -> Term | None:
    a, b = t.args
    if e.type_of(a) == STYPE:
        return mk("SCR", a, b)
    if e.type_of(b) == STYPE:
        return mk("SCR", b, a)
    return None


def _ltsr_pull(e: Engine, t: Term) -> Term | None:
    for k, a in enumerate(t.args):
        if a.head == "SCR":
            rest = t.args[:k] + t.args[k + 1:]
            return mk("SCR", a.args[0], mk("LTSR", *rest, a.args[1]))
    return None


def _ltsr_dist(e: Engine, t: Term) -> Term | None:
    for k, a in enumerate(t.args):
        if a.head == "ADD":
            rest = t.args[:k] + t.args[k + 1:]
            return mk("ADD", *[mk("LTSR", *rest, x) for x in a.args])
    return None


def _absorb_zero(e: Engine, t: Term) -> Term | None:
    if any(a.head == "ZEROD" for a in t.args):
        return zero_of(e.type_of(t))
    return None


def _scale_zero(e: Engine, t: Term) -> Term | None:
    if t.args[0] == ZERO and t.args[1].head != "ZEROD":
        ty = e.type_of(t.args[1])
        if ty.head == "DTYPE":
            return zero_of(ty)
    return None


def _sum_zero(e: Engine, t: Term) -> Term | None:
    if t.args[1].head == "FUN" and len(t.args[1].args) == 3 and t.args[1].args[2].head == "ZEROD":
        return t.args[1].args[2]
    return None


ZERO_RULES: list[Rule] = [
    F("R-SCRD-Z0", "SCR", _scale_zero),
    P("R-SCRD-Z1", "SCR[a, ZEROD[c, d]]", "ZEROD[c, d]"),
    P("R-ADJD-Z", "ADJ[ZEROD[c, d]]", "ZEROD[d, c]"),
    F("R-LDOT-Z", "LDOT", _absorb_zero),
    F("R-LTSR-Z", "LTSR", _absorb_zero),
    F("R-SUM-ZD", "SUM", _sum_zero),
]


LABEL_RULES: list[Rule] = ZERO_RULES + [
    F("R-L-EXPAND", "LIFTK", _expand_lift),
    F("R-L-EXPAND", "LIFTB", _expand_lift),
    F("R-L-EXPAND", "LIFTO", _expand_lift),
    P("R-ADJDK", "ADJ[LBRA[i, r]]", "LKET[i, r]"),
    P("R-ADJDB", "ADJ[LKET[i, r]]", "LBRA[i, r]"),
    F("R-ADJD0", "ADJ", lambda e, t: mk("LTSR", *[mk("ADJ", x) for x in t.args[0].args])
      if t.args[0].head == "LTSR" else None),
    P("R-ADJD1", "ADJ[LDOT[X, Y]]", "LDOT[ADJ[Y], ADJ[X]]"),
    P("R-LTSR-ID", "LTSR[X]", "X"),
    F("R-SCRD0", "LTSR", _ltsr_pull),
    F("R-TSRD0", "LTSR", _ltsr_dist),
    push_ac_rule("R-SUM-PUSHD0", "LTSR"),
    F("R-LTSR-S", "LTSR", _ltsr_scalar),
    pull_rule("R-SCRD1", "LDOT", 0),
    pull_rule("R-SCRD2", "LDOT", 1),
    dist_rule("R-DOTD0", "LDOT", 0, "ADD"),
    dist_rule("R-DOTD1", "LDOT", 1, "ADD"),
    push_rule("R-SUM-PUSHD1", "LDOT", 0),
    push_rule("R-SUM-PUSHD2", "LDOT", 1),
    F("R-LDOT-S", "LDOT", _ldot_scalar),
    _SortRule(),
]


def label_rules() -> list[Rule]:
    return list(LABEL_RULES)


def labelled_rewrite(ctx, t: Term, step_limit: int = 100_000, typer: Typer | None = None) -> Term:
    """Rewrite an expanded labelled term with the full rule set."""
    from .rules import plain_rules

    eng = Engine(ctx, plain_rules() + label_rules(), step_limit=step_limit, typer=typer)
    return eng.normalize(t)


# ---------------------------------------------------------------------------
# partial trace


def trace_out(typer: Typer, regs: Sequence[Term], d: Term) -> Term:
    """``sum_i <i|_r . D . |i>_r`` nested over every register leaf in ``regs``."""
    out = d
    for r in regs:
        for leaf in register_leaves(r):
            s = typer.register_index(Term(leaf))
            i = fresh("i")
            typer.declare_bound(i, basis(s))
            body = Term("LDOT", (Term("LDOT", (Term("LBRA", (Term(i), Term(leaf))), out)),
                                 Term("LKET", (Term(i), Term(leaf)))))
            out = Term("SUM", (Term("USET", (s,)), Term("FUN", (Term(i), basis(s), body))))
    return out


# ---------------------------------------------------------------------------
# elimination


def register_signature(t: Term) -> tuple[tuple[str, ...], tuple[str, ...]] | None:
    """Sorted ket and bra registers of the first labelled summand, if any."""
    for summand in (t.args if t.head == "ADD" else (t,)):
        _, core = sum_block(summand)
        x = core.args[1] if core.head == "SCR" else core
        fs = _basic_factors(x)
        if fs is not None:
            kets = tuple(sorted(f.args[1].head for f in fs if f.head == "LKET"))
            bras = tuple(sorted(f.args[1].head for f in fs if f.head == "LBRA"))
            return kets, bras
    return None


def _pair_up(items: list[Term]) -> Term:
    out = items[0]
    for x in items[1:]:
        out = Term("PAIR", (out, x))
    return out


def strip_labels(t: Term) -> Term:
    """Drop labels from a rewritten labelled term, kets first, by register."""

    def strip_core(x: Term) -> Term:
        if x.head == "ZEROD":
            return ZERO
        fs = _basic_factors(x)
        if fs is None:
            return x
        fs = sorted(fs, key=lambda f: (KET_FIRST[f.head], f.args[1].head))
        kets = [f.args[0] for f in fs if f.head == "LKET"]
        bras = [f.args[0] for f in fs if f.head == "LBRA"]
        if kets and bras:
            return Term("OUTER", (Term("KET", (_pair_up(kets),)), Term("BRA", (_pair_up(bras),))))
        if kets:
            return Term("KET", (_pair_up(kets),))
        return Term("BRA", (_pair_up(bras),))

    def strip(summand: Term) -> Term:
        binders, core = sum_block(summand)
        if core.head == "SCR":
            core = Term("SCR", (core.args[0], strip_core(core.args[1])))
        else:
            core = strip_core(core)
        return build_block(binders, core)

    if t.head == "ADD":
        return mk("ADD", *[strip(s) for s in t.args])
    return strip(t)


def eliminate_labels(ctx, t1: Term, t2: Term) -> tuple[Term, Term]:
    """Plain counterparts of two rewritten labelled terms of the same type.

    Raises ``ValueError`` when the two sides expose different registers.
    """
    s1, s2 = register_signature(t1), register_signature(t2)
    if s1 is not None and s2 is not None and s1 != s2:
        raise ValueError(f"register signatures differ: {s1} vs {s2}")
    return strip_labels(t1), strip_labels(t2)


__all__ = [
    "SwapSpec",
    "basis_of_register",
    "eliminate_labels",
    "expand_labelled",
    "label_rules",
    "labelled_rewrite",
    "strip_labels",
    "trace_out",
]
