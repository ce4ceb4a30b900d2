"""Term kernel: immutable ``ID[args]`` trees, AC flattening, substitution,
bound-variable bookkeeping, ordering and de Bruijn conversion.

Every object the prover manipulates (terms, types, index expressions,
registers) is a :class:`Term`.  Binders come in two shapes:

* named:      ``FUN[x, T, body]`` and ``IDX[x, body]``
* nameless:   ``FUN[T, body]`` and ``IDX[body]`` with ``$k`` occurrences

Sums are ordinary applications ``SUM[set, FUN[i, BASIS[s], body]]``.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping


class Kind(enum.Enum):
    CONSTANT = "constant"
    FUNCTION = "function-head"
    AC = "AC-head"
    COMMUTATIVE = "commutative-head"
    BINDER = "binder-head"
    VARIABLE = "variable"
    BOUND_MARKER = "bound-variable-marker"


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: Kind
    rank: int


# Registration order fixes the global order of built-in symbols.
_BUILTIN_SPEC: list[tuple[str, Kind]] = [
    ("IMAG", Kind.CONSTANT),
    ("SQRT2", Kind.CONSTANT),
    # scalars
    ("DELTA", Kind.COMMUTATIVE),
    ("DOT", Kind.FUNCTION),
    ("CONJ", Kind.FUNCTION),
    ("MULS", Kind.AC),
    ("ADDS", Kind.AC),
    # plain Dirac
    ("KET", Kind.FUNCTION),
    ("BRA", Kind.FUNCTION),
    ("ZEROK", Kind.FUNCTION),
    ("ZEROB", Kind.FUNCTION),
    ("ZEROO", Kind.FUNCTION),
    ("ONEO", Kind.FUNCTION),
    ("ADJ", Kind.FUNCTION),
    ("SCR", Kind.FUNCTION),
    ("TSR", Kind.FUNCTION),
    ("OUTER", Kind.FUNCTION),
    ("MULK", Kind.FUNCTION),
    ("MULB", Kind.FUNCTION),
    ("MULO", Kind.FUNCTION),
    ("ADD", Kind.AC),
    ("SUM", Kind.FUNCTION),
    ("FUN", Kind.BINDER),
    ("IDX", Kind.BINDER),
    ("APPLY", Kind.FUNCTION),
    ("PAIR", Kind.FUNCTION),
    ("USET", Kind.FUNCTION),
    ("CATPROD", Kind.FUNCTION),
    # labelled Dirac
    ("LKET", Kind.FUNCTION),
    ("LBRA", Kind.FUNCTION),
    ("LIFTK", Kind.FUNCTION),
    ("LIFTB", Kind.FUNCTION),
    ("LIFTO", Kind.FUNCTION),
    ("LTSR", Kind.AC),
    ("LDOT", Kind.FUNCTION),
    ("PTR", Kind.FUNCTION),
    # surface placeholders resolved by the typer
    ("COMPO", Kind.FUNCTION),
    ("SUBS", Kind.FUNCTION),
    ("SUBS2", Kind.FUNCTION),
    ("HOLE", Kind.CONSTANT),
    # types and indices
    ("BOOL", Kind.CONSTANT),
    ("PROD", Kind.FUNCTION),
    ("INDEX", Kind.CONSTANT),
    ("STYPE", Kind.CONSTANT),
    ("BASIS", Kind.FUNCTION),
    ("KTYPE", Kind.FUNCTION),
    ("BTYPE", Kind.FUNCTION),
    ("OTYPE", Kind.FUNCTION),
    ("SET", Kind.FUNCTION),
    ("REG", Kind.FUNCTION),
    ("DTYPE", Kind.FUNCTION),
    ("RSET", Kind.FUNCTION),
    ("ARROW", Kind.FUNCTION),
    ("FORALL", Kind.BINDER),
]

SYMBOLS: dict[str, Symbol] = {
    name: Symbol(name, kind, rank) for rank, (name, kind) in enumerate(_BUILTIN_SPEC)
}
AC_HEADS = frozenset(n for n, s in SYMBOLS.items() if s.kind is Kind.AC)
COMMUTATIVE_HEADS = frozenset(n for n, s in SYMBOLS.items() if s.kind is Kind.COMMUTATIVE)

_NUMERAL = re.compile(r"^-?\d+(/\d+)?$")
_DEBRUIJN = re.compile(r"^\$\d+$")


def is_numeral_name(name: str) -> bool:
    return bool(_NUMERAL.match(name))


def is_debruijn_name(name: str) -> bool:
    return name.startswith("$") and bool(_DEBRUIJN.match(name))


def symbol_of(name: str) -> Symbol:
    """Look up a symbol, classifying unknown names as variables."""
    sym = SYMBOLS.get(name)
    if sym is not None:
        return sym
    if is_numeral_name(name):
        return Symbol(name, Kind.CONSTANT, -1)
    if is_debruijn_name(name):
        return Symbol(name, Kind.BOUND_MARKER, -1)
    return Symbol(name, Kind.VARIABLE, -1)


def symbol_rank(name: str) -> tuple:
    """Position of a symbol in the global total order.

    Numerals come first (by value), then built-ins in registration order,
    then user identifiers lexicographically, then de Bruijn markers.
    """
    sym = SYMBOLS.get(name)
    if sym is not None:
        return (1, sym.rank)
    if is_numeral_name(name):
        return (0, Fraction(name))
    if is_debruijn_name(name):
        return (3, int(name[1:]))
    return (2, name)


class Term:
    """An immutable application node ``head[args]``; a leaf has no args."""

    __slots__ = ("head", "args", "_hash", "_fv")

    def __init__(self, head: str, args: Iterable[Term] = ()) -> None:
        args = tuple(args)
        self.head = head
        self.args = args
        self._hash = hash((head, args))
        self._fv: frozenset[str] | None = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term) or self._hash != other._hash:
            return False
        return self.head == other.head and self.args == other.args

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __repr__(self) -> str:
        return to_str(self)

    __str__ = __repr__

    def __reduce__(self):
        return (Term, (self.head, self.args))

    @property
    def is_leaf(self) -> bool:
        return not self.args

    def size(self) -> int:
        return 1 + sum(a.size() for a in self.args)


def leaf(name: str) -> Term:
    return Term(name)


def mk(head: str, *args: Term) -> Term:
    """Build ``head[args]``, flattening one level if ``head`` is AC."""
    if head in AC_HEADS:
        return Term(head, _splice(head, args))
    return Term(head, args)


def mk_list(head: str, args: Iterable[Term]) -> Term:
    return mk(head, *args)


def _splice(head: str, args: Iterable[Term]) -> list[Term]:
    out: list[Term] = []
    for a in args:
        if a.head == head and a.args:
            out.extend(a.args)
        else:
            out.append(a)
    return out


def num(value: int | Fraction) -> Term:
    """Numeric literal leaf (``0``, ``1``, ``-1``, ``1/2`` ...)."""
    value = Fraction(value)
    if value.denominator == 1:
        return Term(str(value.numerator))
    return Term(f"{value.numerator}/{value.denominator}")


def numeral_value(t: Term) -> Fraction | None:
    if t.args or not is_numeral_name(t.head):
        return None
    return Fraction(t.head)


ZERO = Term("0")
ONE = Term("1")


def is_variable(t: Term) -> bool:
    return not t.args and symbol_of(t.head).kind is Kind.VARIABLE


# ---------------------------------------------------------------------------
# binders


def is_named_binder(t: Term) -> bool:
    return (t.head == "FUN" and len(t.args) == 3) or (
        t.head in ("IDX", "FORALL") and len(t.args) == 2
    )


def binder_parts(t: Term) -> tuple[str, Term | None, Term]:
    """``(name, annotation, body)`` of a named binder node."""
    if t.head == "FUN":
        return t.args[0].head, t.args[1], t.args[2]
    return t.args[0].head, None, t.args[1]


def rebuild_binder(t: Term, name: str, ann: Term | None, body: Term) -> Term:
    if t.head == "FUN":
        return Term("FUN", (Term(name), ann, body))
    return Term(t.head, (Term(name), body))


def free_vars(t: Term) -> frozenset[str]:
    fv = t._fv
    if fv is not None:
        return fv
    if not t.args:
        fv = frozenset((t.head,)) if symbol_of(t.head).kind is Kind.VARIABLE else frozenset()
    elif is_named_binder(t):
        name, ann, body = binder_parts(t)
        fv = free_vars(body) - {name}
        if ann is not None:
            fv = fv | free_vars(ann)
    else:
        acc: set[str] = set()
        for a in t.args:
            acc |= free_vars(a)
        fv = frozenset(acc)
    t._fv = fv
    return fv


def occurs_free(name: str, t: Term) -> bool:
    return name in free_vars(t)


def bound_names(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if is_named_binder(u):
            out.add(u.args[0].head)
        stack.extend(u.args)
    return out


_counter = itertools.count(1)


def fresh(base: str = "x") -> str:
    """Globally fresh identifier derived from ``base``.

    ``itertools.count`` is atomic under the GIL, so concurrent callers never
    receive the same name.
    """
    stem = base.split("'")[0] or "x"
    if stem.startswith("$"):
        stem = "i"
    return f"{stem}'{next(_counter)}"


# ---------------------------------------------------------------------------
# flattening and substitution


def flatten(t: Term) -> Term:
    """Eagerly flatten every AC head; idempotent."""
    if not t.args:
        return t
    args = [flatten(a) for a in t.args]
    if t.head in AC_HEADS:
        args = _splice(t.head, args)
    if all(a is b for a, b in zip(args, t.args)) and len(args) == len(t.args):
        return t
    return Term(t.head, args)


def substitute(t: Term, s: Mapping[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution of free variables."""
    if not s:
        return t
    fv = free_vars(t)
    relevant = {k: v for k, v in s.items() if k in fv}
    if not relevant:
        return t
    return _subst(t, relevant)


def _subst(t: Term, s: Mapping[str, Term]) -> Term:
    if not t.args:
        return s.get(t.head, t)
    if is_named_binder(t):
        name, ann, body = binder_parts(t)
        new_ann = substitute(ann, s) if ann is not None else None
        inner = {k: v for k, v in s.items() if k != name and k in free_vars(body)}
        if inner and any(name in free_vars(v) for v in inner.values()):
            new_name = fresh(name)
            inner[name] = Term(new_name)
            name = new_name
        new_body = substitute(body, inner) if inner else body
        return rebuild_binder(t, name, new_ann, new_body)
    args = [substitute(a, s) for a in t.args]
    return mk(t.head, *args)


def rename_binders(t: Term, on_bind: Callable[[str, Term | None], None] | None = None) -> Term:
    """Rename every binder to a fresh name (the uniqueness pre-pass)."""
    return _rename(t, {}, on_bind)


def _rename(t: Term, env: dict[str, str], on_bind) -> Term:
    if not t.args:
        new = env.get(t.head)
        return Term(new) if new is not None else t
    if is_named_binder(t):
        name, ann, body = binder_parts(t)
        new_ann = _rename(ann, env, on_bind) if ann is not None else None
        new_name = fresh(name)
        if on_bind is not None:
            on_bind(new_name, new_ann)
        inner = dict(env)
        inner[name] = new_name
        return rebuild_binder(t, new_name, new_ann, _rename(body, inner, on_bind))
    return Term(t.head, [_rename(a, env, on_bind) for a in t.args])


# ---------------------------------------------------------------------------
# positions


Path = tuple[int, ...]


def subterm_at(t: Term, path: Path) -> Term:
    for k in path:
        t = t.args[k]
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    """Replace the subterm at ``path`` without re-flattening ancestors."""
    if not path:
        return new
    k = path[0]
    args = list(t.args)
    args[k] = replace_at(args[k], path[1:], new)
    return Term(t.head, args)


# ---------------------------------------------------------------------------
# de Bruijn conversion


def to_de_bruijn(t: Term) -> Term:
    """Drop binder names; bound occurrences become ``$k``."""
    return _to_db(t, ())


def _to_db(t: Term, scope: tuple[str, ...]) -> Term:
    if not t.args:
        name = t.head
        for k in range(len(scope) - 1, -1, -1):
            if scope[k] == name:
                return Term(f"${len(scope) - 1 - k}")
        return t
    if is_named_binder(t):
        name, ann, body = binder_parts(t)
        new_body = _to_db(body, scope + (name,))
        if ann is not None:
            return Term(t.head, (_to_db(ann, scope), new_body))
        return Term(t.head, (new_body,))
    return Term(t.head, [_to_db(a, scope) for a in t.args])


def is_nameless_binder(t: Term) -> bool:
    return (t.head == "FUN" and len(t.args) == 2) or (
        t.head in ("IDX", "FORALL") and len(t.args) == 1
    )


def from_de_bruijn(
    t: Term, on_bind: Callable[[str, Term | None], None] | None = None
) -> Term:
    """Inverse of :func:`to_de_bruijn` using fresh binder names."""
    return _from_db(t, [], on_bind)


def _from_db(t: Term, scope: list[str], on_bind) -> Term:
    if not t.args:
        if is_debruijn_name(t.head):
            k = int(t.head[1:])
            if k >= len(scope):
                raise ValueError(f"dangling de Bruijn index {t.head}")
            return Term(scope[len(scope) - 1 - k])
        return t
    if is_nameless_binder(t):
        if t.head == "FUN":
            ann = _from_db(t.args[0], scope, on_bind)
            base = "i" if ann.head == "BASIS" else "x"
            name = fresh(base)
            if on_bind is not None:
                on_bind(name, ann)
            body = _from_db(t.args[1], scope + [name], on_bind)
            return Term("FUN", (Term(name), ann, body))
        name = fresh("s")
        if on_bind is not None:
            on_bind(name, None)
        body = _from_db(t.args[0], scope + [name], on_bind)
        return Term(t.head, (Term(name), body))
    return Term(t.head, [_from_db(a, scope, on_bind) for a in t.args])


def alpha_equivalent(t1: Term, t2: Term) -> bool:
    return to_de_bruijn(t1) == to_de_bruijn(t2)


# ---------------------------------------------------------------------------
# order without bound variables


def order_key(t: Term, bound: Mapping[str, int] | frozenset[str] | set[str]) -> tuple:
    """Sort key realising the order "without bound variables".

    ``bound`` is either a set (every member compares equal, above all
    non-members) or a map from names to ranks, which refines the order
    among bound variables; names mapped to ``-1`` rank as unknown.
    """
    if isinstance(bound, Mapping):
        return _key_ranked(t, bound)
    return _key_set(t, bound)


_UNRANKED = 1 << 30


def _key_set(t: Term, bound) -> tuple:
    if not t.args:
        if t.head in bound:
            return (1,)
        return (0, symbol_rank(t.head))
    return (0, symbol_rank(t.head), *[_key_set(a, bound) for a in t.args])


def _key_ranked(t: Term, bound: Mapping[str, int]) -> tuple:
    if not t.args:
        r = bound.get(t.head)
        if r is not None:
            return (1, _UNRANKED if r < 0 else r)
        return (0, symbol_rank(t.head))
    return (0, symbol_rank(t.head), *[_key_ranked(a, bound) for a in t.args])


def compare_without_bound(e1: Term, e2: Term, bound: Iterable[str]) -> int:
    """Three-way comparison: -1 (less), 0 (equal), 1 (greater)."""
    b = frozenset(bound)
    k1, k2 = _key_set(e1, b), _key_set(e2, b)
    return (k1 > k2) - (k1 < k2)


# ---------------------------------------------------------------------------
# printing


def to_str(t: Term) -> str:
    """Render in the ``ID[arg, ...]`` application syntax."""
    parts: list[str] = []
    _emit(t, parts)
    return "".join(parts)


def _emit(t: Term, out: list[str]) -> None:
    out.append(t.head)
    if t.args:
        out.append("[")
        for k, a in enumerate(t.args):
            if k:
                out.append(", ")
            _emit(a, out)
        out.append("]")


_STRUCT_KEYS: dict[Term, tuple] = {}


def struct_key(t: Term) -> tuple:
    """Memoised total structural order (``order_key`` with no bound names).

    Used to keep AC argument lists sorted while rewriting, so that terms
    equal modulo AC are also structurally equal.
    """
    k = _STRUCT_KEYS.get(t)
    if k is None:
        if len(_STRUCT_KEYS) > 2_000_000:
            _STRUCT_KEYS.clear()
        if t.args:
            k = (0, symbol_rank(t.head), *[struct_key(a) for a in t.args])
        else:
            k = (0, symbol_rank(t.head))
        _STRUCT_KEYS[t] = k
    return k
