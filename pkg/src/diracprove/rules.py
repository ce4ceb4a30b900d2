"""The rewrite rule tables for plain Dirac notation.

Rules are listed per head in table order.  Simple rules are patterns; rules
that need types, fresh binders or variadic contexts are written as small
functions over the matched node.  :func:`plain_rules` returns the full list
in the order the engine tries them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .rewrite import Engine, Rule, RewriteRule
from .scalars import numeric_split, poly_normal, with_numeric
from .terms import (
    ONE,
    ZERO,
    Kind,
    Term,
    free_vars,
    fresh,
    mk,
    num,
    numeral_value,
    substitute,
    symbol_of,
    to_de_bruijn,
)
from .typecheck import STYPE, basis, prod

# ---------------------------------------------------------------------------
# small helpers


def _pattern_vars(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if not u.args:
            if symbol_of(u.head).kind is Kind.VARIABLE:
                out.add(u.head)
        stack.extend(u.args)
    return out


def P(name: str, lhs: str, rhs, seq: tuple[str, ...] = (), guard=None) -> RewriteRule:
    """Pattern rule; every identifier leaf of ``lhs`` is a pattern variable."""
    from .syntax import parse

    lt = parse(lhs)
    return RewriteRule(name, lt, rhs, _pattern_vars(lt), seq, guard)


def F(name: str, head: str, fn: Callable[[Engine, Term], Term | None]) -> Rule:
    return Rule(name, (head,), fn)


def is_sum(t: Term) -> bool:
    return (
        t.head == "SUM"
        and len(t.args) == 2
        and t.args[1].head == "FUN"
        and len(t.args[1].args) == 3
    )


def sum_block(t: Term) -> tuple[list[tuple[Term, str, Term]], Term]:
    """Split consecutive sums into ``[(set, name, annotation)]`` and the body."""
    binders: list[tuple[Term, str, Term]] = []
    while is_sum(t):
        s, f = t.args
        binders.append((s, f.args[0].head, f.args[1]))
        t = f.args[2]
    return binders, t


def build_block(binders: list[tuple[Term, str, Term]], core: Term) -> Term:
    for s, name, ann in reversed(binders):
        core = Term("SUM", (s, Term("FUN", (Term(name), ann, core))))
    return core


def zero_of(ty: Term) -> Term | None:
    if ty == STYPE:
        return ZERO
    if ty.head == "KTYPE":
        return Term("ZEROK", ty.args)
    if ty.head == "BTYPE":
        return Term("ZEROB", ty.args)
    if ty.head == "OTYPE":
        return Term("ZEROO", ty.args)
    if ty.head == "DTYPE":
        return Term("ZEROD", ty.args)
    return None


ZERO_HEADS = ("ZEROK", "ZEROB", "ZEROO", "ZEROD")


def is_zero(t: Term) -> bool:
    return t == ZERO or t.head in ZERO_HEADS


def _replace_arg(t: Term, k: int, new: Term) -> Term:
    args = list(t.args)
    args[k] = new
    return mk(t.head, *args)


def _push_sum(e: Engine, s: Term, others: list[Term], build: Callable[[Term], Term]) -> Term:
    """``C[sum_i X]`` to ``sum_i C[X]``, renaming ``i`` if ``C`` mentions it."""
    m, f = s.args
    i, ann, body = f.args
    if any(i.head in free_vars(o) for o in others):
        new = fresh(i.head)
        e.declare(new, ann)
        body = substitute(body, {i.head: Term(new)})
        i = Term(new)
    return Term("SUM", (m, Term("FUN", (i, ann, build(body)))))


def push_rule(name: str, head: str, pos: int) -> Rule:
    def fire(e: Engine, t: Term) -> Term | None:
        if len(t.args) <= pos or not is_sum(t.args[pos]):
            return None
        others = [a for k, a in enumerate(t.args) if k != pos]
        return _push_sum(e, t.args[pos], others, lambda body: _replace_arg(t, pos, body))

    return F(name, head, fire)


def push_ac_rule(name: str, head: str) -> Rule:
    def fire(e: Engine, t: Term) -> Term | None:
        for k, a in enumerate(t.args):
            if is_sum(a):
                others = [b for j, b in enumerate(t.args) if j != k]
                return _push_sum(e, a, others, lambda body: mk(head, *others, body))
        return None

    return F(name, head, fire)


def dist_rule(name: str, head: str, pos: int, result: str) -> Rule:
    """Distribute ``head`` over an ``ADD`` at argument ``pos``."""

    def fire(e: Engine, t: Term) -> Term | None:
        if len(t.args) <= pos or t.args[pos].head != "ADD":
            return None
        return mk(result, *[_replace_arg(t, pos, x) for x in t.args[pos].args])

    return F(name, head, fire)


def pull_rule(name: str, head: str, pos: int, scalar_result: bool = False) -> Rule:
    """Pull a scaling ``a.X`` at argument ``pos`` out of ``head``."""

    def fire(e: Engine, t: Term) -> Term | None:
        if len(t.args) <= pos or t.args[pos].head != "SCR":
            return None
        a, x = t.args[pos].args
        inner = _replace_arg(t, pos, x)
        return mk("MULS", a, inner) if scalar_result else mk("SCR", a, inner)

    return F(name, head, fire)


# ---------------------------------------------------------------------------
# beta and delta


def _unfold(e: Engine, t: Term) -> Term | None:
    entry = e.ctx.get(t.head)
    if entry is None or entry.kind != "def":
        return None
    assert entry.body is not None
    return e.freshen(entry.body)


def _beta(kind: str) -> Callable[[Engine, Term], Term | None]:
    def fire(e: Engine, t: Term) -> Term | None:
        f, arg = t.args
        if kind == "arrow" and f.head == "FUN" and len(f.args) == 3:
            return e.freshen(substitute(f.args[2], {f.args[0].head: arg}))
        if kind == "index" and f.head == "IDX" and len(f.args) == 2:
            return e.freshen(substitute(f.args[1], {f.args[0].head: arg}))
        return None

    return fire


BETA_RULES = [
    F("BETA-ARROW", "APPLY", _beta("arrow")),
    F("BETA-INDEX", "APPLY", _beta("index")),
    Rule("DELTA", ("$leaf",), _unfold),
]


# ---------------------------------------------------------------------------
# scalars


def _scalar_nf(e: Engine, t: Term) -> Term | None:
    return poly_normal(t)


SCALAR_NF = "SCALAR-NF"

CONJ_RULES = [
    P("R-CONJ5", "CONJ[DELTA[s, t]]", "DELTA[s, t]"),
    P("R-CONJ6", "CONJ[DOT[B, K]]", "DOT[ADJ[K], ADJ[B]]"),
    push_rule("R-SUM-PUSH1", "CONJ", 0),
    F(SCALAR_NF, "CONJ", _scalar_nf),
]

DOT_RULES = [
    P("R-DOT0", "DOT[ZEROB[s], K]", "0"),
    P("R-DOT1", "DOT[B, ZEROK[s]]", "0"),
    pull_rule("R-DOT2", "DOT", 0, scalar_result=True),
    pull_rule("R-DOT3", "DOT", 1, scalar_result=True),
    dist_rule("R-DOT4", "DOT", 0, "ADDS"),
    dist_rule("R-DOT5", "DOT", 1, "ADDS"),
    P("R-DOT6", "DOT[BRA[s], KET[t]]", "DELTA[s, t]"),
    P("R-DOT7", "DOT[TSR[B1, B2], KET[PAIR[s, t]]]", "MULS[DOT[B1, KET[s]], DOT[B2, KET[t]]]"),
    P("R-DOT8", "DOT[BRA[PAIR[s, t]], TSR[K1, K2]]", "MULS[DOT[BRA[s], K1], DOT[BRA[t], K2]]"),
    P("R-DOT9", "DOT[TSR[B1, B2], TSR[K1, K2]]", "MULS[DOT[B1, K1], DOT[B2, K2]]"),
    P("R-DOT10", "DOT[MULB[B, O], K]", "DOT[B, MULK[O, K]]"),
    P(
        "R-DOT11",
        "DOT[BRA[PAIR[s, t]], MULK[TSR[O1, O2], K]]",
        "DOT[TSR[MULB[BRA[s], O1], MULB[BRA[t], O2]], K]",
    ),
    P(
        "R-DOT12",
        "DOT[TSR[B1, B2], MULK[TSR[O1, O2], K]]",
        "DOT[TSR[MULB[B1, O1], MULB[B2, O2]], K]",
    ),
    push_rule("R-SUM-PUSH5", "DOT", 0),
    push_rule("R-SUM-PUSH10", "DOT", 1),
]

DELTA_RULES = [
    P("R-DELTA0", "DELTA[a, a]", "1"),
    P("R-DELTA1", "DELTA[PAIR[a, b], PAIR[c, d]]", "MULS[DELTA[a, c], DELTA[b, d]]"),
    P("R-BIT-DELTA", "DELTA[0, 1]", "0"),
]

MULS_RULES = [
    push_ac_rule("R-SUM-PUSH0", "MULS"),
    F(SCALAR_NF, "MULS", _scalar_nf),
]

ADDS_RULES = [F(SCALAR_NF, "ADDS", _scalar_nf)]


# ---------------------------------------------------------------------------
# scaling


def _scr_zero(e: Engine, t: Term) -> Term | None:
    if t.args[0] != ZERO:
        return None
    return zero_of(e.type_of(t.args[1]))


def _scr_zero_named(kind: str):
    def fire(e: Engine, t: Term) -> Term | None:
        if t.args[0] != ZERO:
            return None
        ty = e.type_of(t.args[1])
        if ty.head != kind:
            return None
        return zero_of(ty)

    return fire


def _scr_split_sum(e: Engine, t: Term) -> Term | None:
    """``(a + sum f).X`` becomes ``a.X + (sum f).X``.

    This mirrors the split of sums over coefficient additions so that a
    summed coefficient ends up as a sum block next to its peers.
    """
    coef, x = t.args
    if coef.head != "ADDS":
        return None
    sums = [a for a in coef.args if is_sum(a)]
    rest = [a for a in coef.args if not is_sum(a)]
    if not sums or (len(sums) == 1 and not rest):
        return None
    parts = [mk("SCR", a, x) for a in sums]
    if rest:
        parts.append(mk("SCR", rest[0] if len(rest) == 1 else mk("ADDS", *rest), x))
    return mk("ADD", *parts)


def _scr_scalar(e: Engine, t: Term) -> Term | None:
    if e.type_of(t.args[1]) == STYPE:
        return mk("MULS", t.args[0], t.args[1])
    return None


SCR_RULES = [
    P("R-SCR0", "SCR[1, X]", "X"),
    P("R-SCR1", "SCR[a, SCR[b, X]]", "SCR[MULS[a, b], X]"),
    F("R-SCR2", "SCR", lambda e, t: mk("ADD", *[mk("SCR", t.args[0], x) for x in t.args[1].args])
      if t.args[1].head == "ADD" else None),
    F("R-SCRK0", "SCR", _scr_zero_named("KTYPE")),
    P("R-SCRK1", "SCR[a, ZEROK[s]]", "ZEROK[s]"),
    F("R-SCRB0", "SCR", _scr_zero_named("BTYPE")),
    P("R-SCRB1", "SCR[a, ZEROB[s]]", "ZEROB[s]"),
    F("R-SCRO0", "SCR", _scr_zero_named("OTYPE")),
    P("R-SCRO1", "SCR[a, ZEROO[s, t]]", "ZEROO[s, t]"),
    push_rule("R-SUM-PUSH3", "SCR", 1),
    push_rule("R-SUM-PUSH4", "SCR", 0),
    F("R-SCR-ADDS", "SCR", _scr_split_sum),
    F("R-SCR-S", "SCR", _scr_scalar),
]


# ---------------------------------------------------------------------------
# addition


def _base_coef(x: Term) -> tuple[Term, Term | None]:
    if x.head == "SCR":
        return x.args[1], x.args[0]
    return x, None


def _add_merge(e: Engine, t: Term) -> Term | None:
    args = t.args
    seen: dict[Term, int] = {}
    for j, x in enumerate(args):
        base, cj = _base_coef(x)
        k = seen.get(base)
        if k is None:
            seen[base] = j
            continue
        ck = _base_coef(args[k])[1]
        merged = mk("SCR", mk("ADDS", ck or ONE, cj or ONE), base)
        rest = [a for m, a in enumerate(args) if m not in (j, k)]
        name = {(False, False): "R-ADD0", (False, True): "R-ADD1",
                (True, False): "R-ADD2", (True, True): "R-ADD3"}[(ck is not None, cj is not None)]
        _ADD_NAME[0] = name
        return mk("ADD", *rest, merged) if rest else merged
    return None


_ADD_NAME = ["R-ADD0"]


def _add_zero(kind: str):
    def fire(e: Engine, t: Term) -> Term | None:
        keep = [a for a in t.args if a.head != kind]
        if len(keep) == len(t.args) or not keep:
            return None
        return keep[0] if len(keep) == 1 else mk("ADD", *keep)

    return fire


def numeric_core(t: Term) -> tuple[Fraction, Term]:
    """Split the rational factor off the body of a sum block."""
    binders, core = sum_block(t)
    if core.head == "SCR":
        c, rest = numeric_split(core.args[0])
        stripped = Term("SCR", (rest, core.args[1])) if rest is not None else core.args[1]
    else:
        c, rest = numeric_split(core)
        stripped = rest if rest is not None else ONE
    return c, build_block(binders, stripped)


def rebuild_numeric(c: Fraction, t: Term) -> Term:
    """Put a rational factor back into the body of a sum block."""
    binders, core = sum_block(t)
    if core.head == "SCR":
        a = core.args[0]
        coef = with_numeric(c, a) if numeral_value(a) is None else num(c * numeral_value(a))
        core = Term("SCR", (coef, core.args[1])) if coef != ONE else core.args[1]
    elif e_is_scalar_shape(core):
        core = with_numeric(c, core) if numeral_value(core) is None else num(c * numeral_value(core))
    elif c != 1:
        core = Term("SCR", (num(c), core))
    return build_block(binders, core)


def e_is_scalar_shape(core: Term) -> bool:
    return core.head in ("MULS", "DELTA", "DOT", "CONJ", "IMAG", "SQRT2") or (
        not core.args and numeral_value(core) is not None
    )


def _sum_factor(e: Engine, t: Term) -> Term | None:
    sums = [(k, a) for k, a in enumerate(t.args) if is_sum(a)]
    if len(sums) < 2:
        return None
    keyed: dict[Term, tuple[int, Fraction, Term]] = {}
    for k, a in sums:
        c, stripped = numeric_core(a)
        key = to_de_bruijn(stripped)
        hit = keyed.get(key)
        if hit is None:
            keyed[key] = (k, c, stripped)
            continue
        k0, c0, stripped0 = hit
        total = c0 + c
        rest = [b for m, b in enumerate(t.args) if m not in (k, k0)]
        if total == 0:
            zero = zero_of(e.type_of(a))
            if zero is None:
                continue
            merged = zero
        else:
            merged = rebuild_numeric(total, stripped0)
        return mk("ADD", *rest, merged) if rest else merged
    return None


def _add_zero_labelled(e: Engine, t: Term) -> Term | None:
    keep = [a for a in t.args if a.head != "ZEROD" and not (a.head == "SCR" and a.args[0] == ZERO)]
    if len(keep) == len(t.args):
        return None
    if not keep:
        return zero_of(e.type_of(t))
    return keep[0] if len(keep) == 1 else mk("ADD", *keep)


class _AddRule(Rule):
    """Like-term merging; the reported name depends on which shape matched."""

    def __init__(self) -> None:
        super().__init__("R-ADD", ("ADD",), self._fire)

    def _fire(self, e: Engine, t: Term) -> Term | None:
        out = _add_merge(e, t)
        if out is not None:
            self._member = _ADD_NAME[0]
        return out

    @property
    def fired_as(self) -> str:
        return getattr(self, "_member", self.name)


ADD_RULES = [
    P("R-ADDID", "ADD[X]", "X"),
    F("R-ADDK0", "ADD", _add_zero("ZEROK")),
    F("R-ADDB0", "ADD", _add_zero("ZEROB")),
    F("R-ADDO0", "ADD", _add_zero("ZEROO")),
    _AddRule(),
    F("R-SUM-FACTOR", "ADD", _sum_factor),
    F("R-ADD-ZEROD", "ADD", _add_zero_labelled),
]


# ---------------------------------------------------------------------------
# adjoint


def _adj_scalar(e: Engine, t: Term) -> Term | None:
    if e.type_of(t.args[0]) == STYPE:
        return mk("CONJ", t.args[0])
    return None


ADJ_RULES = [
    P("R-ADJ0", "ADJ[ADJ[X]]", "X"),
    P("R-ADJ1", "ADJ[SCR[a, X]]", "SCR[CONJ[a], ADJ[X]]"),
    F("R-ADJ2", "ADJ", lambda e, t: mk("ADD", *[mk("ADJ", x) for x in t.args[0].args])
      if t.args[0].head == "ADD" else None),
    P("R-ADJ3", "ADJ[TSR[X, Y]]", "TSR[ADJ[X], ADJ[Y]]"),
    P("R-ADJK0", "ADJ[ZEROB[s]]", "ZEROK[s]"),
    P("R-ADJK1", "ADJ[BRA[t]]", "KET[t]"),
    P("R-ADJK2", "ADJ[MULB[B, O]]", "MULK[ADJ[O], ADJ[B]]"),
    P("R-ADJB0", "ADJ[ZEROK[s]]", "ZEROB[s]"),
    P("R-ADJB1", "ADJ[KET[t]]", "BRA[t]"),
    P("R-ADJB2", "ADJ[MULK[O, K]]", "MULB[ADJ[K], ADJ[O]]"),
    P("R-ADJO0", "ADJ[ZEROO[s, t]]", "ZEROO[t, s]"),
    P("R-ADJO1", "ADJ[ONEO[s]]", "ONEO[s]"),
    P("R-ADJO2", "ADJ[OUTER[K, B]]", "OUTER[ADJ[B], ADJ[K]]"),
    P("R-ADJO3", "ADJ[MULO[O1, O2]]", "MULO[ADJ[O2], ADJ[O1]]"),
    push_rule("R-SUM-PUSH2", "ADJ", 0),
    F("R-ADJ-S", "ADJ", _adj_scalar),
]


# ---------------------------------------------------------------------------
# tensor


def _tsr_zero(name: str, zero_head: str, zero_pos: int):
    def fire(e: Engine, t: Term) -> Term | None:
        z = t.args[zero_pos]
        other = t.args[1 - zero_pos]
        if z.head != zero_head:
            return None
        ty = e.type_of(other)
        if zero_head == "ZEROO":
            if ty.head != "OTYPE":
                return None
            if zero_pos == 0:
                return Term("ZEROO", (prod(z.args[0], ty.args[0]), prod(z.args[1], ty.args[1])))
            return Term("ZEROO", (prod(ty.args[0], z.args[0]), prod(ty.args[1], z.args[1])))
        if zero_pos == 0:
            return Term(zero_head, (prod(z.args[0], ty.args[0]),))
        return Term(zero_head, (prod(ty.args[0], z.args[0]),))

    return F(name, "TSR", fire)


TSR_RULES = [
    pull_rule("R-TSR0", "TSR", 0),
    pull_rule("R-TSR1", "TSR", 1),
    dist_rule("R-TSR2", "TSR", 0, "ADD"),
    dist_rule("R-TSR3", "TSR", 1, "ADD"),
    _tsr_zero("R-TSRK0", "ZEROK", 0),
    _tsr_zero("R-TSRK1", "ZEROK", 1),
    P("R-TSRK2", "TSR[KET[s], KET[t]]", "KET[PAIR[s, t]]"),
    _tsr_zero("R-TSRB0", "ZEROB", 0),
    _tsr_zero("R-TSRB1", "ZEROB", 1),
    P("R-TSRB2", "TSR[BRA[s], BRA[t]]", "BRA[PAIR[s, t]]"),
    _tsr_zero("R-TSRO0", "ZEROO", 1),
    _tsr_zero("R-TSRO1", "ZEROO", 0),
    P("R-TSRO2", "TSR[ONEO[s], ONEO[t]]", "ONEO[PROD[s, t]]"),
    P("R-TSRO3", "TSR[OUTER[K1, B1], OUTER[K2, B2]]", "OUTER[TSR[K1, K2], TSR[B1, B2]]"),
    push_rule("R-SUM-PUSH15", "TSR", 0),
    push_rule("R-SUM-PUSH16", "TSR", 1),
]


# ---------------------------------------------------------------------------
# products with operators


def _typed_zero(name: str, head: str, build: Callable[[Engine, Term], Term | None]) -> Rule:
    return F(name, head, build)


def _mulk1(e: Engine, t: Term) -> Term | None:
    if t.args[1].head != "ZEROK":
        return None
    return Term("ZEROK", (e.type_of(t.args[0]).args[0],))


def _mulb1(e: Engine, t: Term) -> Term | None:
    if t.args[0].head != "ZEROB":
        return None
    return Term("ZEROB", (e.type_of(t.args[1]).args[1],))


def _outer0(e: Engine, t: Term) -> Term | None:
    if t.args[0].head != "ZEROK":
        return None
    return Term("ZEROO", (t.args[0].args[0], e.type_of(t.args[1]).args[0]))


def _outer1(e: Engine, t: Term) -> Term | None:
    if t.args[1].head != "ZEROB":
        return None
    return Term("ZEROO", (e.type_of(t.args[0]).args[0], t.args[1].args[0]))


def _mulo0(e: Engine, t: Term) -> Term | None:
    if t.args[0].head != "ZEROO":
        return None
    return Term("ZEROO", (t.args[0].args[0], e.type_of(t.args[1]).args[1]))


def _mulo1(e: Engine, t: Term) -> Term | None:
    if t.args[1].head != "ZEROO":
        return None
    return Term("ZEROO", (e.type_of(t.args[0]).args[0], t.args[1].args[1]))


MULK_RULES = [
    P("R-MULK0", "MULK[ZEROO[s, t], K]", "ZEROK[s]"),
    _typed_zero("R-MULK1", "MULK", _mulk1),
    P("R-MULK2", "MULK[ONEO[s], K]", "K"),
    pull_rule("R-MULK3", "MULK", 0),
    pull_rule("R-MULK4", "MULK", 1),
    dist_rule("R-MULK5", "MULK", 0, "ADD"),
    dist_rule("R-MULK6", "MULK", 1, "ADD"),
    P("R-MULK7", "MULK[OUTER[K1, B], K2]", "SCR[DOT[B, K2], K1]"),
    P("R-MULK8", "MULK[MULO[O1, O2], K]", "MULK[O1, MULK[O2, K]]"),
    P(
        "R-MULK9",
        "MULK[TSR[O1, O2], MULK[TSR[P1, P2], K]]",
        "MULK[TSR[MULO[O1, P1], MULO[O2, P2]], K]",
    ),
    P("R-MULK10", "MULK[TSR[O1, O2], KET[PAIR[s, t]]]", "TSR[MULK[O1, KET[s]], MULK[O2, KET[t]]]"),
    P("R-MULK11", "MULK[TSR[O1, O2], TSR[K1, K2]]", "TSR[MULK[O1, K1], MULK[O2, K2]]"),
    push_rule("R-SUM-PUSH6", "MULK", 0),
    push_rule("R-SUM-PUSH11", "MULK", 1),
]

MULB_RULES = [
    P("R-MULB0", "MULB[B, ZEROO[s, t]]", "ZEROB[t]"),
    _typed_zero("R-MULB1", "MULB", _mulb1),
    P("R-MULB2", "MULB[B, ONEO[s]]", "B"),
    pull_rule("R-MULB3", "MULB", 0),
    pull_rule("R-MULB4", "MULB", 1),
    dist_rule("R-MULB5", "MULB", 0, "ADD"),
    dist_rule("R-MULB6", "MULB", 1, "ADD"),
    P("R-MULB7", "MULB[B1, OUTER[K, B2]]", "SCR[DOT[B1, K], B2]"),
    P("R-MULB8", "MULB[B, MULO[O1, O2]]", "MULB[MULB[B, O1], O2]"),
    P(
        "R-MULB9",
        "MULB[MULB[B, TSR[P1, P2]], TSR[O1, O2]]",
        "MULB[B, MULO[TSR[P1, P2], TSR[O1, O2]]]",
    ),
    P("R-MULB10", "MULB[BRA[PAIR[s, t]], TSR[O1, O2]]", "TSR[MULB[BRA[s], O1], MULB[BRA[t], O2]]"),
    P("R-MULB11", "MULB[TSR[B1, B2], TSR[O1, O2]]", "TSR[MULB[B1, O1], MULB[B2, O2]]"),
    push_rule("R-SUM-PUSH7", "MULB", 0),
    push_rule("R-SUM-PUSH12", "MULB", 1),
]

OUTER_RULES = [
    _typed_zero("R-OUTER0", "OUTER", _outer0),
    _typed_zero("R-OUTER1", "OUTER", _outer1),
    pull_rule("R-OUTER2", "OUTER", 0),
    pull_rule("R-OUTER3", "OUTER", 1),
    dist_rule("R-OUTER4", "OUTER", 0, "ADD"),
    dist_rule("R-OUTER5", "OUTER", 1, "ADD"),
    push_rule("R-SUM-PUSH8", "OUTER", 0),
    push_rule("R-SUM-PUSH13", "OUTER", 1),
]

MULO_RULES = [
    _typed_zero("R-MULO0", "MULO", _mulo0),
    _typed_zero("R-MULO1", "MULO", _mulo1),
    P("R-MULO2", "MULO[ONEO[s], O]", "O"),
    P("R-MULO3", "MULO[O, ONEO[s]]", "O"),
    P("R-MULO4", "MULO[OUTER[K, B], O]", "OUTER[K, MULB[B, O]]"),
    P("R-MULO5", "MULO[O, OUTER[K, B]]", "OUTER[MULK[O, K], B]"),
    pull_rule("R-MULO6", "MULO", 0),
    pull_rule("R-MULO7", "MULO", 1),
    dist_rule("R-MULO8", "MULO", 0, "ADD"),
    dist_rule("R-MULO9", "MULO", 1, "ADD"),
    P("R-MULO10", "MULO[MULO[O1, O2], O3]", "MULO[O1, MULO[O2, O3]]"),
    P("R-MULO11", "MULO[TSR[O1, O2], TSR[P1, P2]]", "TSR[MULO[O1, P1], MULO[O2, P2]]"),
    P(
        "R-MULO12",
        "MULO[TSR[O1, O2], MULO[TSR[P1, P2], O3]]",
        "MULO[TSR[MULO[O1, P1], MULO[O2, P2]], O3]",
    ),
    push_rule("R-SUM-PUSH9", "MULO", 0),
    push_rule("R-SUM-PUSH14", "MULO", 1),
]

SET_RULES = [P("R-SET0", "CATPROD[USET[s], USET[t]]", "USET[PROD[s, t]]")]


# ---------------------------------------------------------------------------
# sums


def _sum_const(kind: str):
    def fire(e: Engine, t: Term) -> Term | None:
        if not is_sum(t):
            return None
        body = t.args[1].args[2]
        if kind == "0":
            return ZERO if body == ZERO else None
        return body if body.head == kind else None

    return fire


def _oneo_expand(e: Engine, t: Term) -> Term:
    s = t.args[0]
    i = fresh("i")
    e.declare(i, basis(s))
    body = Term("OUTER", (Term("KET", (Term(i),)), Term("BRA", (Term(i),))))
    return Term("SUM", (Term("USET", (s,)), Term("FUN", (Term(i), basis(s), body))))


ONEO_RULES = [
    P("R-BIT-ONEO", "ONEO[BOOL]", "ADD[OUTER[KET[0], BRA[0]], OUTER[KET[1], BRA[1]]]"),
    F("R-SUM-CONST4", "ONEO", _oneo_expand),
]


def _find_delta(core: Term, ok: Callable[[Term], Term | None]):
    """Locate an eliminable delta in the body shapes of the SUM-ELIM rules.

    Returns ``(shape, partner, rebuilt_without_delta)`` where ``shape`` is
    0 (bare delta), 1 (product), 2 (scaled by a delta), 3 (scaled by a
    product) or 8 (scaled by a sum of products all containing the delta).
    """
    if core.head == "DELTA":
        p = ok(core)
        if p is not None:
            return 0, p, ONE
    if core.head == "MULS":
        for k, a in enumerate(core.args):
            if a.head == "DELTA":
                p = ok(a)
                if p is not None:
                    rest = core.args[:k] + core.args[k + 1:]
                    return 1, p, rest[0] if len(rest) == 1 else Term("MULS", rest)
    if core.head == "SCR":
        c, x = core.args
        if c.head == "DELTA":
            p = ok(c)
            if p is not None:
                return 2, p, x
        if c.head == "MULS":
            hit = _find_delta(c, ok)
            if hit is not None:
                return 3, hit[1], Term("SCR", (hit[2], x))
        if c.head == "ADDS":
            partner = None
            parts = []
            for m in c.args:
                hit = _find_delta(m, ok) if m.head in ("MULS", "DELTA") else None
                if hit is None or (partner is not None and hit[1] != partner):
                    return None
                partner = hit[1]
                parts.append(hit[2])
            if partner is not None:
                return 8, partner, Term("SCR", (mk("ADDS", *parts), x))
    return None


def _sum_elim(e: Engine, t: Term) -> Term | None:
    binders, core = sum_block(t)
    if not binders:
        return None
    s0, i, ann = binders[0]
    if s0.head == "USET":

        def ok(d: Term) -> Term | None:
            a, b = d.args
            if a == Term(i) and i not in free_vars(b):
                return b
            if b == Term(i) and i not in free_vars(a):
                return a
            return None

        hit = _find_delta(core, ok)
        if hit is None or hit[0] == 8:
            return None
        shape, tt, rest = hit
        _ELIM_NAME[0] = f"R-SUM-ELIM{shape}"
        new_core = substitute(rest, {i: tt})
        inner = [(substitute(s, {i: tt}), n, a) for s, n, a in binders[1:]]
        return build_block(inner, new_core)
    others = {n: k for k, (s, n, a) in enumerate(binders) if k > 0 and s == s0 and a == ann}
    if not others:
        return None

    def ok_pair(d: Term) -> Term | None:
        a, b = d.args
        if a == Term(i) and b.head in others and not b.args:
            return b
        if b == Term(i) and a.head in others and not a.args:
            return a
        return None

    hit = _find_delta(core, ok_pair)
    if hit is None:
        return None
    shape, j, rest = hit
    _ELIM_NAME[0] = f"R-SUM-ELIM{shape + 4 if shape != 8 else 8}"
    new_core = substitute(rest, {i: j})
    return build_block(binders[1:], new_core)


_ELIM_NAME = ["R-SUM-ELIM0"]


class _ElimRule(Rule):
    def __init__(self) -> None:
        super().__init__("R-SUM-ELIM", ("SUM",), self._fire)

    def _fire(self, e: Engine, t: Term) -> Term | None:
        out = _sum_elim(e, t)
        if out is not None:
            self._member = _ELIM_NAME[0]
        return out

    @property
    def fired_as(self) -> str:
        return getattr(self, "_member", self.name)


def _sum_split(head: str):
    def fire(e: Engine, t: Term) -> Term | None:
        if not is_sum(t):
            return None
        m, f = t.args
        i, ann, body = f.args
        if body.head != head:
            return None
        return mk(head, *[Term("SUM", (m, Term("FUN", (i, ann, x)))) for x in body.args])

    return fire


def _sum_add1(e: Engine, t: Term) -> Term | None:
    if not is_sum(t):
        return None
    m, f = t.args
    i, ann, body = f.args
    if body.head != "SCR" or body.args[0].head != "ADDS":
        return None
    x = body.args[1]
    return mk("ADD", *[Term("SUM", (m, Term("FUN", (i, ann, mk("SCR", a, x)))))
                       for a in body.args[0].args])


def _sum_index0(e: Engine, t: Term) -> Term | None:
    if not is_sum(t) or t.args[0].head != "USET" or t.args[0].args[0].head != "PROD":
        return None
    s, u = t.args[0].args[0].args
    return _split_binder(e, t, Term("USET", (s,)), Term("USET", (u,)), s, u)


def _sum_index1(e: Engine, t: Term) -> Term | None:
    if not is_sum(t) or t.args[0].head != "CATPROD":
        return None
    m1, m2 = t.args[0].args
    s = e.type_of(m1).args[0]
    u = e.type_of(m2).args[0]
    return _split_binder(e, t, m1, m2, s, u)


def _split_binder(e: Engine, t: Term, m1: Term, m2: Term, s: Term, u: Term) -> Term:
    i, _, body = t.args[1].args
    j, k = fresh("i"), fresh("i")
    e.declare(j, basis(s))
    e.declare(k, basis(u))
    new_body = substitute(body, {i.head: Term("PAIR", (Term(j), Term(k)))})
    inner = Term("SUM", (m2, Term("FUN", (Term(k), basis(u), new_body))))
    return Term("SUM", (m1, Term("FUN", (Term(j), basis(s), inner))))


def _bit_sum(e: Engine, t: Term) -> Term | None:
    if not is_sum(t) or t.args[0] != Term("USET", (Term("BOOL"),)):
        return None
    i, _, body = t.args[1].args
    head = "ADDS" if e.type_of(body) == STYPE else "ADD"
    return mk(head, substitute(body, {i.head: ZERO}), substitute(body, {i.head: ONE}))


SUM_RULES = [
    F("R-SUM-CONST0", "SUM", _sum_const("0")),
    F("R-SUM-CONST1", "SUM", _sum_const("ZEROK")),
    F("R-SUM-CONST2", "SUM", _sum_const("ZEROB")),
    F("R-SUM-CONST3", "SUM", _sum_const("ZEROO")),
    _ElimRule(),
    F("R-SUM-ADDS0", "SUM", _sum_split("ADDS")),
    F("R-SUM-ADD0", "SUM", _sum_split("ADD")),
    F("R-SUM-ADD1", "SUM", _sum_add1),
    F("R-SUM-INDEX0", "SUM", _sum_index0),
    F("R-SUM-INDEX1", "SUM", _sum_index1),
    F("R-BIT-SUM", "SUM", _bit_sum),
]


def plain_rules() -> list[Rule]:
    """All plain-notation rules in the order the engine tries them."""
    return (
        BETA_RULES
        + CONJ_RULES
        + DOT_RULES
        + DELTA_RULES
        + MULS_RULES
        + ADDS_RULES
        + SCR_RULES
        + ADD_RULES
        + ADJ_RULES
        + TSR_RULES
        + MULK_RULES
        + MULB_RULES
        + OUTER_RULES
        + MULO_RULES
        + SET_RULES
        + ONEO_RULES
        + SUM_RULES
    )
