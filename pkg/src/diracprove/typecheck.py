"""Contexts and typing for plain and labelled Dirac terms.

Types are :class:`~diracprove.terms.Term` values built from the heads
``STYPE``, ``BASIS[s]``, ``KTYPE[s]``, ``BTYPE[s]``, ``OTYPE[s, t]``,
``SET[s]``, ``REG[s]``, ``DTYPE[RSET[..], RSET[..]]``, ``ARROW[A, B]`` and
``FORALL[x, A]``; indices are variables, ``BOOL`` or ``PROD[s, t]``.
A labelled type with two empty register sets is identified with ``STYPE``.

Two entry points:

* :meth:`Typer.infer` synthesises the type of an elaborated term.
* :meth:`Typer.elaborate` turns parser output (with ``COMPO`` and
  subscript placeholders) into an elaborated term, renaming every binder
  to a fresh name on the way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .terms import (
    Term,
    alpha_equivalent,
    fresh,
    is_numeral_name,
    mk,
    substitute,
)

STYPE = Term("STYPE")
INDEX = Term("INDEX")
BOOL = Term("BOOL")


class TypingError(Exception):
    """A typing judgement failed; ``rule`` names the rule that could not apply."""

    def __init__(self, rule: str, message: str, term: Term | None = None) -> None:
        super().__init__(f"[{rule}] {message}")
        self.rule = rule
        self.message = message
        self.term = term


# ---------------------------------------------------------------------------
# type constructors


def basis(s: Term) -> Term:
    return Term("BASIS", (s,))


def ktype(s: Term) -> Term:
    return Term("KTYPE", (s,))


def btype(s: Term) -> Term:
    return Term("BTYPE", (s,))


def otype(s: Term, t: Term) -> Term:
    return Term("OTYPE", (s, t))


def prod(s: Term, t: Term) -> Term:
    return Term("PROD", (s, t))


def dtype(cod: Iterable[str], dom: Iterable[str]) -> Term:
    cod = sorted(set(cod))
    dom = sorted(set(dom))
    if not cod and not dom:
        return STYPE
    return Term("DTYPE", (Term("RSET", [Term(r) for r in cod]),
                          Term("RSET", [Term(r) for r in dom])))


def dsets(ty: Term) -> tuple[frozenset[str], frozenset[str]]:
    if ty == STYPE:
        return frozenset(), frozenset()
    if ty.head != "DTYPE":
        raise TypingError("L-Type", f"expected a labelled type, got {ty}")
    return (frozenset(a.head for a in ty.args[0].args),
            frozenset(a.head for a in ty.args[1].args))


DIRAC_HEADS = ("KTYPE", "BTYPE", "OTYPE", "DTYPE")


def is_dirac(ty: Term) -> bool:
    return ty.head in DIRAC_HEADS


def is_labelled(ty: Term) -> bool:
    return ty.head == "DTYPE"


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Entry:
    name: str
    kind: str  # index | assum | register | def
    type: Term | None = None
    body: Term | None = None


class Context:
    """An immutable, ordered typing context."""

    __slots__ = ("entries", "_by_name")

    def __init__(self, entries: Iterable[Entry] = ()) -> None:
        self.entries: tuple[Entry, ...] = tuple(entries)
        self._by_name = {e.name: e for e in self.entries}

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Context) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def get(self, name: str) -> Entry | None:
        return self._by_name.get(name)

    def _extend(self, entry: Entry) -> Context:
        if entry.name in self._by_name:
            raise TypingError("W-Assum", f"name {entry.name!r} is already declared")
        return Context(self.entries + (entry,))

    def add_index(self, name: str) -> Context:
        return self._extend(Entry(name, "index"))

    def add_var(self, name: str, ty: Term) -> Context:
        kind = "register" if ty.head == "REG" else "assum"
        return self._extend(Entry(name, kind, ty))

    def add_def(self, name: str, body: Term, ty: Term) -> Context:
        return self._extend(Entry(name, "def", ty, body))

    def declare(self, name: str, type_term: Term) -> Context:
        """``Var name : type_term`` after checking the type is well formed."""
        if type_term == INDEX:
            return self.add_index(name)
        ty = Typer(self).check_type(type_term)
        return self.add_var(name, ty)

    def define(self, name: str, body: Term) -> Context:
        """``Def name := body``; returns the extended context."""
        t, ty = Typer(self).elaborate(body)
        return self.add_def(name, t, ty)

    def registers(self) -> list[str]:
        return [e.name for e in self.entries if e.kind == "register"]


def check_context(ctx: Context) -> list[str]:
    """Re-derive well-formedness entry by entry; empty list means ok."""
    prefix = Context()
    for e in ctx.entries:
        try:
            if e.name in prefix:
                return [f"{e.name}: duplicate name"]
            if e.kind == "index":
                prefix = prefix.add_index(e.name)
            elif e.kind in ("assum", "register"):
                assert e.type is not None
                Typer(prefix).check_type(e.type)
                prefix = prefix.add_var(e.name, e.type)
            else:
                assert e.body is not None and e.type is not None
                _, ty = Typer(prefix).elaborate(e.body)
                if not alpha_equivalent(ty, e.type):
                    return [f"{e.name}: body has type {ty}, declared {e.type}"]
                prefix = prefix.add_def(e.name, e.body, e.type)
        except TypingError as err:
            return [f"{e.name}: {err}"]
    return []


# ---------------------------------------------------------------------------
# the typer


class Typer:
    """Syntax-directed type synthesis over a fixed context.

    ``bound`` maps binder names to their annotations; it is filled as
    binders are traversed and relies on binder names being unique per
    annotation (fresh renaming guarantees this).
    """

    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.bound: dict[str, Term] = {}
        self.cache: dict[Term, Term] = {}

    # -- lookups ----------------------------------------------------------
    def declare_bound(self, name: str, ann: Term | None) -> None:
        self.bound[name] = ann if ann is not None else INDEX

    def lookup(self, name: str, t: Term | None = None) -> Term:
        ty = self.bound.get(name)
        if ty is not None:
            return ty
        e = self.ctx.get(name)
        if e is None:
            raise TypingError("Term-Var", f"unknown variable {name!r}", t)
        if e.kind == "index":
            return INDEX
        assert e.type is not None
        return e.type

    def is_index_name(self, name: str) -> bool:
        if name in self.bound:
            return self.bound[name] == INDEX
        e = self.ctx.get(name)
        return e is not None and e.kind == "index"

    # -- indices, types, registers ------------------------------------------
    def check_index(self, s: Term) -> Term:
        if s == BOOL:
            return s
        if not s.args:
            if self.is_index_name(s.head):
                return s
            raise TypingError("Index-Var", f"unknown index {s.head}", s)
        if s.head == "PROD" and len(s.args) == 2:
            self.check_index(s.args[0])
            self.check_index(s.args[1])
            return s
        raise TypingError("Index-Prod", f"not an index: {s}", s)

    def check_type(self, ty: Term) -> Term:
        h, a = ty.head, ty.args
        if ty in (STYPE, INDEX):
            return ty
        if h in ("BASIS", "KTYPE", "BTYPE", "SET", "REG") and len(a) == 1:
            self.check_index(a[0])
            return ty
        if h == "OTYPE" and len(a) == 2:
            self.check_index(a[0])
            self.check_index(a[1])
            return ty
        if h == "ARROW" and len(a) == 2:
            self.check_type(a[0])
            self.check_type(a[1])
            return ty
        if h == "FORALL" and len(a) == 2:
            self.declare_bound(a[0].head, INDEX)
            self.check_type(a[1])
            return ty
        if h == "DTYPE" and len(a) == 2:
            cod = [r.head for r in a[0].args]
            dom = [r.head for r in a[1].args]
            for r in cod + dom:
                self.register_index(Term(r))
            if len(set(cod)) != len(cod) or len(set(dom)) != len(dom):
                raise TypingError("Type-D", "duplicate register in labelled type", ty)
            return dtype(cod, dom)
        raise TypingError("Type", f"not a type: {ty}", ty)

    def register_index(self, r: Term) -> Term:
        """Index of a register term; checks no-cloning on pairs."""
        if not r.args:
            e = self.ctx.get(r.head)
            if e is None or e.kind != "register":
                raise TypingError("Reg-Var", f"unknown register {r.head}", r)
            assert e.type is not None
            return e.type.args[0]
        if r.head == "PAIR" and len(r.args) == 2:
            var_set(r)
            return prod(self.register_index(r.args[0]), self.register_index(r.args[1]))
        raise TypingError("Reg-Pair", f"not a register: {r}", r)

    # -- synthesis ------------------------------------------------------------
    def infer(self, t: Term) -> Term:
        ty = self.cache.get(t)
        if ty is None:
            ty = self._infer(t)
            self.cache[t] = ty
        return ty

    def infer_basis(self, t: Term) -> Term:
        if not t.args:
            if t.head in ("0", "1"):
                return basis(BOOL)
            ty = self.lookup(t.head, t)
            if ty.head != "BASIS":
                raise TypingError("Basis-Var", f"{t.head} is not a basis term", t)
            return ty
        if t.head == "PAIR" and len(t.args) == 2:
            s = self.infer_basis(t.args[0]).args[0]
            u = self.infer_basis(t.args[1]).args[0]
            return basis(prod(s, u))
        if t.head == "APPLY":
            ty = self.infer(t)
            if ty.head == "BASIS":
                return ty
        raise TypingError("Basis", f"not a basis term: {t}", t)

    def _kind(self, t: Term) -> Term:
        ty = self.infer(t)
        return ty

    def _infer(self, t: Term) -> Term:
        h, a = t.head, t.args
        if not a:
            if is_numeral_name(h) or h in ("IMAG", "SQRT2"):
                return STYPE
            ty = self.lookup(h, t)
            if ty == INDEX:
                raise TypingError("Term-Var", f"index {h} used as a term", t)
            return ty
        method = getattr(self, "_t_" + h, None)
        if method is None:
            raise TypingError("Term", f"no typing rule for head {h}", t)
        return method(t, a)

    def _scalar(self, t: Term, rule: str) -> None:
        ty = self.infer(t)
        if ty != STYPE:
            raise TypingError(rule, f"expected a scalar, got {ty}", t)

    # scalars
    def _t_ADDS(self, t, a):
        for x in a:
            self._scalar(x, "Sca-Add")
        return STYPE

    def _t_MULS(self, t, a):
        for x in a:
            self._scalar(x, "Sca-Mul")
        return STYPE

    def _t_CONJ(self, t, a):
        self._scalar(a[0], "Sca-Conj")
        return STYPE

    def _t_DELTA(self, t, a):
        s = self.infer_basis(a[0])
        u = self.infer_basis(a[1])
        if s != u:
            raise TypingError("Sca-Delta", f"basis types differ: {s} vs {u}", t)
        return STYPE

    def _t_DOT(self, t, a):
        b = self.infer(a[0])
        k = self.infer(a[1])
        if b.head != "BTYPE" or k.head != "KTYPE" or b.args[0] != k.args[0]:
            raise TypingError("Sca-Dot", f"cannot pair {b} with {k}", t)
        return STYPE

    # plain Dirac
    def _t_KET(self, t, a):
        return ktype(self.infer_basis(a[0]).args[0])

    def _t_BRA(self, t, a):
        return btype(self.infer_basis(a[0]).args[0])

    def _t_ZEROK(self, t, a):
        return ktype(self.check_index(a[0]))

    def _t_ZEROB(self, t, a):
        return btype(self.check_index(a[0]))

    def _t_ZEROO(self, t, a):
        return otype(self.check_index(a[0]), self.check_index(a[1]))

    def _t_ZEROD(self, t, a):
        return self.check_type(Term("DTYPE", a))

    def _t_ONEO(self, t, a):
        s = self.check_index(a[0])
        return otype(s, s)

    def _t_ADJ(self, t, a):
        ty = self.infer(a[0])
        if ty.head == "KTYPE":
            return btype(ty.args[0])
        if ty.head == "BTYPE":
            return ktype(ty.args[0])
        if ty.head == "OTYPE":
            return otype(ty.args[1], ty.args[0])
        if ty.head == "DTYPE":
            cod, dom = dsets(ty)
            return dtype(dom, cod)
        if ty == STYPE:
            return STYPE
        raise TypingError("Ket-Adj", f"cannot take the adjoint of {ty}", t)

    def _t_SCR(self, t, a):
        self._scalar(a[0], "Ket-Scr")
        ty = self.infer(a[1])
        if is_dirac(ty) or ty == STYPE:
            return ty
        raise TypingError("Ket-Scr", f"cannot scale {ty}", t)

    def _t_ADD(self, t, a):
        ty = self.infer(a[0])
        if not (is_dirac(ty) or ty == STYPE):
            raise TypingError("Ket-Add", f"cannot add {ty}", t)
        for x in a[1:]:
            if self.infer(x) != ty:
                raise TypingError("Ket-Add", f"summands differ in type: {ty} vs {self.infer(x)}", t)
        return ty

    def _t_TSR(self, t, a):
        x = self.infer(a[0])
        y = self.infer(a[1])
        if x.head == y.head == "KTYPE":
            return ktype(prod(x.args[0], y.args[0]))
        if x.head == y.head == "BTYPE":
            return btype(prod(x.args[0], y.args[0]))
        if x.head == y.head == "OTYPE":
            return otype(prod(x.args[0], y.args[0]), prod(x.args[1], y.args[1]))
        raise TypingError("Ket-Tsr", f"cannot tensor {x} with {y}", t)

    def _t_OUTER(self, t, a):
        k = self.infer(a[0])
        b = self.infer(a[1])
        if k.head != "KTYPE" or b.head != "BTYPE":
            raise TypingError("Opt-Outer", f"cannot form outer product of {k} and {b}", t)
        return otype(k.args[0], b.args[0])

    def _t_MULK(self, t, a):
        o = self.infer(a[0])
        k = self.infer(a[1])
        if o.head != "OTYPE" or k.head != "KTYPE" or o.args[1] != k.args[0]:
            raise TypingError("Ket-MulK", f"cannot apply {o} to {k}", t)
        return ktype(o.args[0])

    def _t_MULB(self, t, a):
        b = self.infer(a[0])
        o = self.infer(a[1])
        if b.head != "BTYPE" or o.head != "OTYPE" or o.args[0] != b.args[0]:
            raise TypingError("Bra-MulB", f"cannot apply {b} to {o}", t)
        return btype(o.args[1])

    def _t_MULO(self, t, a):
        o1 = self.infer(a[0])
        o2 = self.infer(a[1])
        if o1.head != "OTYPE" or o2.head != "OTYPE" or o1.args[1] != o2.args[0]:
            raise TypingError("Opt-MulO", f"cannot compose {o1} with {o2}", t)
        return otype(o1.args[0], o2.args[1])

    def _t_SUM(self, t, a):
        st = self.infer(a[0])
        f = a[1]
        if st.head != "SET" or f.head != "FUN" or len(f.args) != 3:
            raise TypingError("Sca-Sum", f"malformed sum {t}", t)
        if f.args[1] != basis(st.args[0]):
            raise TypingError("Sca-Sum", f"binder type {f.args[1]} does not match set {st}", t)
        self.declare_bound(f.args[0].head, f.args[1])
        body = self.infer(f.args[2])
        if not (is_dirac(body) or body == STYPE):
            raise TypingError("Sca-Sum", f"cannot sum values of type {body}", t)
        return body

    def _t_FUN(self, t, a):
        if len(a) != 3:
            raise TypingError("Term-Lam", "nameless binder outside a sum", t)
        ann = self.check_type(a[1])
        self.declare_bound(a[0].head, ann)
        return Term("ARROW", (ann, self.infer(a[2])))

    def _t_IDX(self, t, a):
        self.declare_bound(a[0].head, INDEX)
        return Term("FORALL", (a[0], self.infer(a[1])))

    def _t_APPLY(self, t, a):
        f = self.infer(a[0])
        if f.head == "ARROW":
            dom = f.args[0]
            got = self.infer_basis(a[1]) if dom.head == "BASIS" else self.infer(a[1])
            if got != dom:
                raise TypingError("Term-App-Lam", f"argument has type {got}, expected {dom}", t)
            return f.args[1]
        if f.head == "FORALL":
            s = self.check_index(a[1])
            return substitute(f.args[1], {f.args[0].head: s})
        raise TypingError("Term-App", f"cannot apply a value of type {f}", t)

    def _t_PAIR(self, t, a):
        return self.infer_basis(t)

    def _t_USET(self, t, a):
        return Term("SET", (self.check_index(a[0]),))

    def _t_CATPROD(self, t, a):
        s1 = self.infer(a[0])
        s2 = self.infer(a[1])
        if s1.head != "SET" or s2.head != "SET":
            raise TypingError("Set-Prod", f"cannot form product of {s1} and {s2}", t)
        return Term("SET", (prod(s1.args[0], s2.args[0]),))

    # labelled Dirac
    def _t_LKET(self, t, a):
        s = self.register_index(a[1])
        if a[1].args:
            raise TypingError("L-Basis-Ket", "labelled basis needs a single register", t)
        if self.infer_basis(a[0]) != basis(s):
            raise TypingError("L-Basis-Ket", f"basis does not match register {a[1]}", t)
        return dtype([a[1].head], [])

    def _t_LBRA(self, t, a):
        s = self.register_index(a[1])
        if a[1].args:
            raise TypingError("L-Basis-Bra", "labelled basis needs a single register", t)
        if self.infer_basis(a[0]) != basis(s):
            raise TypingError("L-Basis-Bra", f"basis does not match register {a[1]}", t)
        return dtype([], [a[1].head])

    def _t_LIFTK(self, t, a):
        k = self.infer(a[0])
        s = self.register_index(a[1])
        if k != ktype(s):
            raise TypingError("L-Ket", f"{k} does not fit register {a[1]}", t)
        return dtype(var_set(a[1]), [])

    def _t_LIFTB(self, t, a):
        b = self.infer(a[0])
        s = self.register_index(a[1])
        if b != btype(s):
            raise TypingError("L-Bra", f"{b} does not fit register {a[1]}", t)
        return dtype([], var_set(a[1]))

    def _t_LIFTO(self, t, a):
        o = self.infer(a[0])
        s1 = self.register_index(a[1])
        s2 = self.register_index(a[2])
        if o != otype(s1, s2):
            raise TypingError("L-Opt", f"{o} does not fit registers {a[1]}; {a[2]}", t)
        return dtype(var_set(a[1]), var_set(a[2]))

    def _t_LTSR(self, t, a):
        cod: set[str] = set()
        dom: set[str] = set()
        for x in a:
            c, d = self._labelled_sets(x, "L-Tsr")
            if cod & c or dom & d:
                raise TypingError("L-Tsr", "tensor factors share a register", t)
            cod |= c
            dom |= d
        return dtype(cod, dom)

    def _labelled_sets(self, x: Term, rule: str):
        ty = self.infer(x)
        if ty != STYPE and ty.head != "DTYPE":
            raise TypingError(rule, f"expected a labelled term, got {ty}", x)
        return dsets(ty)

    def _t_LDOT(self, t, a):
        s1, s1p = self._labelled_sets(a[0], "L-Dot")
        s2, s2p = self._labelled_sets(a[1], "L-Dot")
        return dtype(*ldot_sets(s1, s1p, s2, s2p, t))

    # -- elaboration ------------------------------------------------------------
    def elaborate(self, t: Term) -> tuple[Term, Term]:
        """Resolve placeholders and rename binders; returns ``(term, type)``."""
        e = self._elab(t, {})
        return e, self.infer(e)

    def _rn(self, t: Term, env: dict[str, str]) -> Term:
        if not t.args:
            new = env.get(t.head)
            return Term(new) if new else t
        return Term(t.head, [self._rn(x, env) for x in t.args])

    def _elab_index(self, s: Term, env) -> Term:
        return self.check_index(self._rn(s, env))

    def _elab_type(self, ty: Term, env) -> Term:
        return self.check_type(self._rn(ty, env))

    def _elab_basis(self, t: Term, env) -> Term:
        if not t.args:
            r = self._rn(t, env)
            self.infer_basis(r)
            return r
        if t.head == "PAIR":
            return mk("PAIR", self._elab_basis(t.args[0], env), self._elab_basis(t.args[1], env))
        if t.head in ("COMPO", "APPLY"):
            r = self._elab(t, env)
            self.infer_basis(r)
            return r
        raise TypingError("Basis", f"not a basis term: {t}", t)

    def _elab(self, t: Term, env: dict[str, str]) -> Term:
        h, a = t.head, t.args
        if not a:
            r = self._rn(t, env)
            self.infer(r)
            return r
        if h in ("FUN", "IDX") and (len(a) == 3 if h == "FUN" else len(a) == 2):
            name = a[0].head
            new = fresh(name)
            if h == "FUN":
                ann = self._elab_type(a[1], env)
                self.declare_bound(new, ann)
                body = self._elab(a[2], {**env, name: new})
                return Term("FUN", (Term(new), ann, body))
            self.declare_bound(new, INDEX)
            body = self._elab(a[1], {**env, name: new})
            return Term("IDX", (Term(new), body))
        if h == "SUM":
            s = self._elab(a[0], env)
            st = self.infer(s)
            if st.head != "SET":
                raise TypingError("Sca-Sum", f"sum over a non-set {s}", t)
            f = a[1]
            if f.head != "FUN" or len(f.args) != 3:
                raise TypingError("Sca-Sum", "sum body must be a function", t)
            ann = basis(st.args[0])
            if f.args[1].head != "HOLE":
                given = self._elab_type(f.args[1], env)
                if given != ann:
                    raise TypingError("Sca-Sum", f"binder type {given} does not match {ann}", t)
            new = fresh(f.args[0].head)
            self.declare_bound(new, ann)
            body = self._elab(f.args[2], {**env, f.args[0].head: new})
            return self._checked(mk("SUM", s, Term("FUN", (Term(new), ann, body))))
        if h in ("KET", "BRA"):
            return self._checked(mk(h, self._elab_basis(a[0], env)))
        if h == "DELTA":
            return self._checked(mk(h, self._elab_basis(a[0], env), self._elab_basis(a[1], env)))
        if h == "PAIR":
            return self._elab_basis(t, env)
        if h in ("ZEROK", "ZEROB", "ONEO", "ZEROO", "USET"):
            return self._checked(mk(h, *[self._elab_index(x, env) for x in a]))
        if h == "ZEROD":
            return self._checked(t)
        if h in ("LKET", "LBRA"):
            return self._checked(mk(h, self._elab_basis(a[0], env), a[1]))
        if h in ("LIFTK", "LIFTB"):
            return self._checked(mk(h, self._elab(a[0], env), a[1]))
        if h == "LIFTO":
            return self._checked(mk(h, self._elab(a[0], env), a[1], a[2]))
        if h == "COMPO":
            return self._elab_compo(t, env)
        if h in ("SUBS", "SUBS2"):
            return self._elab_subs(t, env)
        if h == "PTR":
            from .labels import trace_out

            d = self._elab(a[-1], env)
            regs = list(a[:-1])
            return self._elab(trace_out(self, regs, d), env)
        if h == "APPLY":
            f = self._elab(a[0], env)
            return self._apply(f, a[1], env, t)
        args = [self._elab(x, env) for x in a]
        return self._resolve(h, args, t)

    def _checked(self, t: Term) -> Term:
        self.infer(t)
        return t

    def _apply(self, f: Term, arg: Term, env, t: Term) -> Term:
        ft = self.infer(f)
        if ft.head == "FORALL":
            return self._checked(mk("APPLY", f, self._elab_index(arg, env)))
        if ft.head == "ARROW":
            if ft.args[0].head == "BASIS":
                return self._checked(mk("APPLY", f, self._elab_basis(arg, env)))
            return self._checked(mk("APPLY", f, self._elab(arg, env)))
        raise TypingError("Term-App", f"cannot apply a value of type {ft}", t)

    def _resolve(self, h: str, args: list[Term], t: Term) -> Term:
        tys = [self.infer(x) for x in args]
        if h == "ADD":
            if all(ty == STYPE for ty in tys):
                return self._checked(mk("ADDS", *args))
            return self._checked(mk("ADD", *args))
        if h == "SCR":
            if tys[1] == STYPE:
                return self._checked(mk("MULS", *args))
            return self._checked(mk("SCR", *args))
        if h == "TSR":
            if tys[0] == STYPE and tys[1] == STYPE:
                return self._checked(mk("MULS", *args))
            if tys[0] == STYPE:
                return self._checked(mk("SCR", args[0], args[1]))
            if tys[1] == STYPE:
                return self._checked(mk("SCR", args[1], args[0]))
            if is_labelled(tys[0]) or is_labelled(tys[1]):
                return self._checked(mk("LTSR", *args))
            return self._checked(mk("TSR", *args))
        if h == "ADJ" and tys[0] == STYPE:
            return self._checked(mk("CONJ", *args))
        return self._checked(mk(h, *args))

    def _elab_compo(self, t: Term, env) -> Term:
        left = self._elab(t.args[0], env)
        lt = self.infer(left)
        if lt.head in ("ARROW", "FORALL"):
            return self._apply(left, t.args[1], env, t)
        right = self._elab(t.args[1], env)
        return self._checked(compo(left, lt, right, self.infer(right), t))

    def _elab_subs(self, t: Term, env) -> Term:
        inner = self._elab(t.args[0], env)
        ty = self.infer(inner)
        if t.head == "SUBS2":
            if ty.head != "OTYPE":
                raise TypingError("L-Opt", f"only operators take (R1;R2) labels, got {ty}", t)
            return self._checked(mk("LIFTO", inner, t.args[1], t.args[2]))
        r = t.args[1]
        if ty.head == "KTYPE":
            if inner.head == "KET" and not r.args:
                return self._checked(mk("LKET", inner.args[0], r))
            return self._checked(mk("LIFTK", inner, r))
        if ty.head == "BTYPE":
            if inner.head == "BRA" and not r.args:
                return self._checked(mk("LBRA", inner.args[0], r))
            return self._checked(mk("LIFTB", inner, r))
        if ty.head == "OTYPE":
            return self._checked(mk("LIFTO", inner, r, r))
        raise TypingError("L-Lift", f"cannot label a value of type {ty}", t)


_COMPO_TABLE = {
    ("KTYPE", "KTYPE"): "TSR",
    ("KTYPE", "BTYPE"): "OUTER",
    ("BTYPE", "KTYPE"): "DOT",
    ("BTYPE", "BTYPE"): "TSR",
    ("BTYPE", "OTYPE"): "MULB",
    ("OTYPE", "KTYPE"): "MULK",
    ("OTYPE", "OTYPE"): "MULO",
}


def compo(left: Term, lt: Term, right: Term, rt: Term, where: Term | None = None) -> Term:
    """Pick the concrete head for a juxtaposition (the Compo-* rules)."""
    if lt == STYPE and rt == STYPE:
        return mk("MULS", left, right)
    if lt == STYPE and is_dirac(rt):
        return mk("SCR", left, right)
    if is_dirac(lt) and rt == STYPE:
        return mk("SCR", right, left)
    if lt.head == "DTYPE" and rt.head == "DTYPE":
        return mk("LDOT", left, right)
    head = _COMPO_TABLE.get((lt.head, rt.head))
    if head is None:
        raise TypingError("Compo", f"no composition rule for {lt} and {rt}", where)
    return mk(head, left, right)


def var_set(r: Term) -> list[str]:
    """Leaves of a register term in default (alphabetical) order."""
    leaves = register_leaves(r)
    if len(set(leaves)) != len(leaves):
        raise TypingError("Reg-Pair", "register reuse violates no-cloning typing", r)
    return sorted(leaves)


def register_leaves(r: Term) -> list[str]:
    """Leaves of a register term, left to right."""
    if not r.args:
        return [r.head]
    if r.head != "PAIR":
        raise TypingError("Reg-Pair", f"not a register: {r}", r)
    return register_leaves(r.args[0]) + register_leaves(r.args[1])


def ldot_sets(s1, s1p, s2, s2p, where: Term | None = None):
    """Result register sets of a generalised composition, with side conditions."""
    if s1 & (s2 - s1p):
        raise TypingError("L-Dot", "codomains overlap outside the contracted registers", where)
    if s2p & (s1p - s2):
        raise TypingError("L-Dot", "domains overlap outside the contracted registers", where)
    return s1 | (s2 - s1p), s2p | (s1p - s2)


def infer_type(ctx: Context, t: Term) -> Term:
    """Type of a surface or elaborated term in ``ctx``."""
    return Typer(ctx).elaborate(t)[1]


def compo_resolve(ctx: Context, t: Term) -> Term:
    """The elaborated term: every placeholder replaced by a concrete head."""
    return Typer(ctx).elaborate(t)[0]
