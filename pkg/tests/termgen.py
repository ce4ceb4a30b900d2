"""Random well-typed terms for the property and acceptance tests.

Terms are built directly in elaborated form against :data:`GEN_SCRIPT`.
``Gen.term`` produces a single term of a requested type;
``make_equal_pair`` produces two terms that differ by sound expansions
(unit laws, distributivity, adjoint laws, explicit completeness sums) and
are therefore semantically equal by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any

from diracprove.prover import load_library, run_text
from diracprove.terms import Term, bound_names, fresh, mk, num
from diracprove.typecheck import (
    BOOL,
    STYPE,
    btype,
    dtype,
    ktype,
    otype,
    prod,
    register_leaves,
)

T = Term("T")

GEN_SCRIPT = """
Var T : INDEX.
Var a : STYPE.
Var b : STYPE.
Var s : BASIS[T].
Var K : KTYPE[T].
Var J : KTYPE[bool].
Var B : BTYPE[T].
Var A : OTYPE[T, T].
Var C : OTYPE[T, bool].
Var g : BASIS[T] -> KTYPE[T].
Var h : BASIS[T] -> STYPE.
Var r1 : REG[bool].
Var r2 : REG[bool].
Var r3 : REG[bool].
Var M : SET[T].
Var N : SET[bool].
"""

REGISTERS = ("r1", "r2", "r3")

_VARS = {
    STYPE: ["a", "b"],
    ktype(T): ["K"],
    ktype(BOOL): ["J"],
    btype(T): ["B"],
    otype(T, T): ["A"],
    otype(T, BOOL): ["C"],
}


def gen_state():
    """Prover state with the library and the generator variables."""
    report = run_text(GEN_SCRIPT, load_library())
    assert report.ok, [o.text for o in report.outputs if o.failed]
    return report.state


@dataclass
class Gen:
    rng: random.Random
    max_depth: int = 6
    expand_rate: float = 0.0
    scope: list[tuple[str, Term]] = field(default_factory=list)
    ctx: Any = None  # the typing context, for builders that unfold definitions

    # -- helpers -----------------------------------------------------------
    def chance(self, p: float) -> bool:
        return self.rng.random() < p

    def index(self, allow_prod: bool = True) -> Term:
        if allow_prod and self.chance(0.15):
            return prod(self.index(False), self.index(False))
        return self.rng.choice([T, BOOL])

    def basis(self, s: Term) -> Term:
        if s.head == "PROD":
            return mk("PAIR", self.basis(s.args[0]), self.basis(s.args[1]))
        options: list[Term] = [Term(n) for n, ty in self.scope if ty == mk("BASIS", s)]
        if s == BOOL:
            options += [num(0), num(1)]
        else:
            options.append(Term("s"))
        return self.rng.choice(options)

    def _bound(self, stem: str, ann: Term):
        name = fresh(stem)
        self.scope.append((name, ann))
        return name

    def _sum(self, ty: Term, depth: int) -> Term:
        s = self.index(False)
        ann = mk("BASIS", s)
        name = self._bound("i", ann)
        try:
            body = self.term(ty, depth - 1)
        finally:
            self.scope.pop()
        return mk("SUM", mk("USET", s), Term("FUN", (Term(name), ann, body)))

    def _beta(self, ty: Term, depth: int) -> Term:
        """``(fun x : K(T) => body) arg`` with ``x`` free in ``body``."""
        ann = ktype(T)
        name = self._bound("x", ann)
        try:
            body = self.term(ty, depth - 1)
        finally:
            self.scope.pop()
        arg = self.term(ann, depth - 1)
        return mk("APPLY", Term("FUN", (Term(name), ann, body)), arg)

    def _leaf(self, ty: Term) -> Term:
        names = [n for n, t in self.scope if t == ty] + _VARS.get(ty, [])
        h = ty.head
        if h == "STYPE":
            consts = [num(self.rng.choice([0, 1, 2, -1])), Term("IMAG")]
            return self.rng.choice([Term(n) for n in names] + consts)
        if h == "KTYPE":
            opts = [Term(n) for n in names] + [mk("KET", self.basis(ty.args[0]))]
            if self.chance(0.05):
                opts.append(mk("ZEROK", ty.args[0]))
            return self.rng.choice(opts)
        if h == "BTYPE":
            opts = [Term(n) for n in names] + [mk("BRA", self.basis(ty.args[0]))]
            if self.chance(0.05):
                opts.append(mk("ZEROB", ty.args[0]))
            return self.rng.choice(opts)
        if h == "OTYPE":
            s, t = ty.args
            opts = [Term(n) for n in names] + [mk("OUTER", mk("KET", self.basis(s)), mk("BRA", self.basis(t)))]
            if s == t:
                opts.append(mk("ONEO", s))
            if self.chance(0.05):
                opts.append(mk("ZEROO", s, t))
            return self.rng.choice(opts)
        if h == "DTYPE":
            return self._dleaf(ty)
        raise ValueError(f"no leaf for {ty}")

    # -- main entry ----------------------------------------------------------
    def term(self, ty: Term, depth: int | None = None) -> Term:
        if depth is None:
            depth = self.max_depth
        if depth <= 1 or self.chance(0.2):
            return self._leaf(ty)
        if ty.head == "DTYPE":
            return self._dterm(ty, depth)
        builders = self._builders(ty)
        return self.rng.choice(builders)(depth)

    def _builders(self, ty: Term):
        h = ty.head
        t = self.term
        common = [
            lambda d: mk("SCR", t(STYPE, d - 1), t(ty, d - 1)),
            lambda d: mk("ADD", t(ty, d - 1), t(ty, d - 1)),
            lambda d: self._sum(ty, d),
        ]
        if h == "STYPE":
            return [
                lambda d: mk("ADDS", t(STYPE, d - 1), t(STYPE, d - 1)),
                lambda d: mk("MULS", t(STYPE, d - 1), t(STYPE, d - 1)),
                lambda d: mk("CONJ", t(STYPE, d - 1)),
                lambda d: self._delta(),
                lambda d: self._dot(d),
                lambda d: self._sum(STYPE, d),
                lambda d: mk("APPLY", Term("h"), self.basis(T)),
                lambda d: mk("APPLY", mk("APPLY", Term("tr"), T), t(otype(T, T), d - 1)),
                lambda d: self._beta(STYPE, d),
            ]
        if h == "KTYPE":
            s = ty.args[0]
            out = common + [
                lambda d: mk("ADJ", t(btype(s), d - 1)),
                lambda d: self._mulk(s, d),
            ]
            if s.head == "PROD":
                out.append(lambda d: mk("TSR", t(ktype(s.args[0]), d - 1), t(ktype(s.args[1]), d - 1)))
            if s == T:
                out.append(lambda d: mk("APPLY", Term("g"), self.basis(T)))
                out.append(lambda d: self._beta(ty, d))
            return out
        if h == "BTYPE":
            s = ty.args[0]
            out = common + [
                lambda d: mk("ADJ", t(ktype(s), d - 1)),
                lambda d: self._mulb(s, d),
            ]
            if s.head == "PROD":
                out.append(lambda d: mk("TSR", t(btype(s.args[0]), d - 1), t(btype(s.args[1]), d - 1)))
            return out
        if h == "OTYPE":
            s, u = ty.args
            out = common + [
                lambda d: mk("ADJ", t(otype(u, s), d - 1)),
                lambda d: mk("OUTER", t(ktype(s), d - 1), t(btype(u), d - 1)),
                lambda d: self._mulo(s, u, d),
            ]
            if s.head == "PROD" and u.head == "PROD":
                out.append(lambda d: mk("TSR", t(otype(s.args[0], u.args[0]), d - 1),
                                        t(otype(s.args[1], u.args[1]), d - 1)))
            return out
        raise ValueError(f"cannot generate {ty}")

    def _delta(self) -> Term:
        s = self.index(False)
        return mk("DELTA", self.basis(s), self.basis(s))

    def _dot(self, d: int) -> Term:
        s = self.index()
        return mk("DOT", self.term(btype(s), d - 1), self.term(ktype(s), d - 1))

    def _mulk(self, s: Term, d: int) -> Term:
        u = self.index()
        return mk("MULK", self.term(otype(s, u), d - 1), self.term(ktype(u), d - 1))

    def _mulb(self, s: Term, d: int) -> Term:
        u = self.index()
        return mk("MULB", self.term(btype(u), d - 1), self.term(otype(u, s), d - 1))

    def _mulo(self, s: Term, u: Term, d: int) -> Term:
        m = self.index()
        return mk("MULO", self.term(otype(s, m), d - 1), self.term(otype(m, u), d - 1))

    # -- labelled terms --------------------------------------------------------
    def dtype_random(self) -> Term:
        regs = list(REGISTERS)
        cod = [r for r in regs if self.chance(0.5)]
        dom = [r for r in regs if self.chance(0.4)]
        if not cod and not dom:
            cod = [self.rng.choice(regs)]
        return dtype(cod, dom)

    def _register_tuple(self, regs: list[str]) -> Term:
        regs = list(regs)
        self.rng.shuffle(regs)
        t = Term(regs[0])
        for r in regs[1:]:
            t = mk("PAIR", Term(r), t) if self.chance(0.5) else mk("PAIR", t, Term(r))
        return t

    def _reg_index(self, r: Term) -> Term:
        if r.head == "PAIR":
            return prod(self._reg_index(r.args[0]), self._reg_index(r.args[1]))
        return BOOL

    @staticmethod
    def _sets(ty: Term) -> tuple[list[str], list[str]]:
        return [x.head for x in ty.args[0].args], [x.head for x in ty.args[1].args]

    def _dleaf(self, ty: Term) -> Term:
        cod, dom = self._sets(ty)
        if len(cod) == 1 and not dom and self.chance(0.5):
            return mk("LKET", self.basis(BOOL), Term(cod[0]))
        if len(dom) == 1 and not cod and self.chance(0.5):
            return mk("LBRA", self.basis(BOOL), Term(dom[0]))
        if cod and dom:
            r1, r2 = self._register_tuple(cod), self._register_tuple(dom)
            op = self._plain_leaf_or_small(otype(self._reg_index(r1), self._reg_index(r2)))
            return mk("LIFTO", op, r1, r2)
        if cod:
            r1 = self._register_tuple(cod)
            return mk("LIFTK", self._plain_leaf_or_small(ktype(self._reg_index(r1))), r1)
        r2 = self._register_tuple(dom)
        return mk("LIFTB", self._plain_leaf_or_small(btype(self._reg_index(r2))), r2)

    def _plain_leaf_or_small(self, ty: Term) -> Term:
        return self.term(ty, self.rng.randint(1, 3))

    def _dterm(self, ty: Term, depth: int) -> Term:
        cod, dom = self._sets(ty)
        choice = self.rng.randrange(6)
        if choice == 0:
            return mk("SCR", self.term(STYPE, 2), self.term(ty, depth - 1))
        if choice == 1:
            return mk("ADD", self.term(ty, depth - 1), self.term(ty, depth - 1))
        if choice == 2:
            return mk("ADJ", self.term(dtype(dom, cod), depth - 1))
        if choice == 3 and len(cod) + len(dom) >= 2:
            parts = self._split(cod, dom)
            if parts is not None:
                (c1, d1), (c2, d2) = parts
                return mk("LTSR", self.term(dtype(c1, d1), depth - 1), self.term(dtype(c2, d2), depth - 1))
        if choice == 4:
            mid = [r for r in REGISTERS if self.chance(0.5)] or [self.rng.choice(REGISTERS)]
            return mk("LDOT", self.term(dtype(cod, mid), depth - 1), self.term(dtype(mid, dom), depth - 1))
        if choice == 5:
            return self._sum(ty, depth)
        return self._dleaf(ty)

    def _split(self, cod, dom):
        items = [("c", r) for r in cod] + [("d", r) for r in dom]
        for _ in range(4):
            k = self.rng.randint(1, len(items) - 1)
            left = self.rng.sample(items, k)
            right = [x for x in items if x not in left]
            c1 = [r for tag, r in left if tag == "c"]
            d1 = [r for tag, r in left if tag == "d"]
            c2 = [r for tag, r in right if tag == "c"]
            d2 = [r for tag, r in right if tag == "d"]
            # labelled tensor factors must not share registers
            if set(c1 + d1).isdisjoint(c2 + d2):
                return (c1, d1), (c2, d2)
        return None


# ---------------------------------------------------------------------------
# plain-Dirac types used by the acceptance generator


PLAIN_TYPES = [
    STYPE,
    ktype(T),
    ktype(BOOL),
    btype(T),
    otype(T, T),
    otype(T, BOOL),
    ktype(prod(T, BOOL)),
    otype(prod(BOOL, T), prod(BOOL, T)),
]


def random_plain(rng: random.Random, max_depth: int = 6) -> tuple[Term, Term]:
    ty = rng.choice(PLAIN_TYPES)
    return Gen(rng, max_depth).term(ty), ty


def random_labelled(rng: random.Random, max_depth: int = 4) -> tuple[Term, Term]:
    g = Gen(rng, max_depth)
    ty = g.dtype_random()
    return g.term(ty), ty


# ---------------------------------------------------------------------------
# input transformations that must not change the normal form


def alpha_rename(t: Term, rng: random.Random) -> Term:
    names = sorted(bound_names(t))
    mapping = {n: fresh(rng.choice(["u", "v", "w", "k"])) for n in names}

    def go(u: Term) -> Term:
        if not u.args:
            return Term(mapping[u.head]) if u.head in mapping else u
        return Term(u.head, [go(a) for a in u.args])

    return go(t)


_PERMUTABLE = {"ADD", "ADDS", "MULS", "LTSR"}


def ac_permute(t: Term, rng: random.Random) -> Term:
    if not t.args:
        return t
    args = [ac_permute(a, rng) for a in t.args]
    if t.head in _PERMUTABLE:
        rng.shuffle(args)
    elif t.head == "DELTA" and rng.random() < 0.5:
        args.reverse()
    return Term(t.head, args)


def _mentions(t: Term, name: str) -> bool:
    if not t.args:
        return t.head == name
    return any(_mentions(a, name) for a in t.args)


def sum_swap(t: Term, rng: random.Random) -> Term:
    """Swap adjacent independent sums (each with probability one half)."""
    if not t.args:
        return t
    args = [sum_swap(a, rng) for a in t.args]
    u = Term(t.head, args)
    if (
        u.head == "SUM"
        and u.args[1].head == "FUN"
        and u.args[1].args[2].head == "SUM"
        and rng.random() < 0.5
    ):
        outer_set, f = u.args
        inner = f.args[2]
        inner_set, g = inner.args
        if not _mentions(inner_set, f.args[0].head):
            return mk("SUM", inner_set, Term("FUN", (g.args[0], g.args[1],
                      mk("SUM", outer_set, Term("FUN", (f.args[0], f.args[1], g.args[2]))))))
    return u


# ---------------------------------------------------------------------------
# equal pairs built from sound axiom instances


R_EXPANSIONS = ("add-zero", "scale-one", "scale-dist", "vec-dist", "adj-adj", "adj-dist", "one-left",
                "one-right", "sum-split", "tensor-dist", "dot-basis", "complete-ket", "conj-conj")
E_SHUFFLES = ("ac", "alpha", "swap")


def expand_once(g: Gen, t: Term, ty: Term, kind: str) -> Term | None:
    """``t`` rewritten by one sound expansion of the named kind, if it applies."""
    h = ty.head
    dirac = h in ("KTYPE", "BTYPE", "OTYPE")
    if kind == "add-zero" and dirac:
        zero = {"KTYPE": "ZEROK", "BTYPE": "ZEROB", "OTYPE": "ZEROO"}[h]
        return mk("ADD", t, mk(zero, *ty.args))
    if kind == "add-zero" and h == "STYPE":
        return mk("ADDS", t, num(0))
    if kind == "scale-one" and dirac:
        return mk("SCR", num(1), t)
    if kind == "scale-dist" and dirac:
        c = g.term(STYPE, 2)
        # (1 + c).t + (-c).t  ==  t
        return mk("ADD", mk("SCR", mk("ADDS", num(1), c), t), mk("SCR", mk("MULS", num(-1), c), t))
    if kind == "vec-dist" and dirac:
        c = g.term(STYPE, 2)
        x = g.term(ty, 2)
        # c.(t + x) + (-c).x + (1 - c).t  ==  t
        return mk("ADD", mk("SCR", c, mk("ADD", t, x)), mk("SCR", mk("MULS", num(-1), c), x),
                  mk("SCR", mk("ADDS", num(1), mk("MULS", num(-1), c)), t))
    if kind == "adj-adj" and dirac:
        return mk("ADJ", mk("ADJ", t))
    if kind == "conj-conj" and h == "STYPE":
        return mk("CONJ", mk("CONJ", t))
    if kind == "adj-dist" and dirac:
        x = g.term(ty, 2)
        other = {"KTYPE": btype, "BTYPE": ktype}.get(h)
        flip = other(ty.args[0]) if other else otype(ty.args[1], ty.args[0])
        y = g.term(flip, 2)
        # (t^D + y)^D + (-1).(y^D)  ==  t
        return mk("ADD", mk("ADJ", mk("ADD", mk("ADJ", t), y)), mk("SCR", num(-1), mk("ADJ", y)))
    if kind == "one-left" and h in ("KTYPE", "OTYPE"):
        s = ty.args[0]
        return mk("MULK" if h == "KTYPE" else "MULO", mk("ONEO", s), t)
    if kind == "one-right" and h in ("BTYPE", "OTYPE"):
        s = ty.args[-1]
        return mk("MULB" if h == "BTYPE" else "MULO", t, mk("ONEO", s))
    if kind == "sum-split" and (dirac or h == "STYPE"):
        # t == sum over bool of delta(i, 0).t
        name = fresh("e")
        ann = mk("BASIS", BOOL)
        body = mk("MULS", mk("DELTA", Term(name), num(0)), t) if h == "STYPE" else \
            mk("SCR", mk("DELTA", Term(name), num(0)), t)
        return mk("SUM", mk("USET", BOOL), Term("FUN", (Term(name), ann, body)))
    if kind == "tensor-dist" and h == "KTYPE" and ty.args[0].head == "PROD" and t.head == "TSR":
        x = g.term(ktype(ty.args[0].args[1]), 2)
        # t1 (x) (t2 + x) - t1 (x) x
        t1, t2 = t.args
        return mk("ADD", mk("TSR", t1, mk("ADD", t2, x)), mk("SCR", num(-1), mk("TSR", t1, x)))
    if kind == "dot-basis" and h == "STYPE" and t.head == "DELTA":
        return mk("DOT", mk("BRA", t.args[0]), mk("KET", t.args[1]))
    if kind == "complete-ket" and h == "KTYPE":
        # t == sum_i |i><i| t
        s = ty.args[0]
        if s.head == "PROD":
            return None
        name = fresh("c")
        ann = mk("BASIS", s)
        body = mk("MULK", mk("OUTER", mk("KET", Term(name)), mk("BRA", Term(name))), t)
        return mk("SUM", mk("USET", s), Term("FUN", (Term(name), ann, body)))
    return None


def _typed_positions(t: Term, ty: Term, out: list, path=()) -> None:
    """Positions whose type is evident from the elaborated structure."""
    out.append((path, ty))
    h = t.head
    a = t.args
    if h in ("ADD",):
        for k, x in enumerate(a):
            _typed_positions(x, ty, out, path + (k,))
    elif h in ("ADDS", "MULS"):
        for k, x in enumerate(a):
            _typed_positions(x, STYPE, out, path + (k,))
    elif h == "CONJ":
        _typed_positions(a[0], STYPE, out, path + (0,))
    elif h == "SCR":
        _typed_positions(a[0], STYPE, out, path + (0,))
        _typed_positions(a[1], ty, out, path + (1,))


def make_equal_pair(rng: random.Random, kinds=R_EXPANSIONS, steps: int = 2,
                    max_depth: int = 4) -> tuple[Term, Term, list[str]]:
    """A seed term and a copy rewritten by ``steps`` random sound axioms."""
    from diracprove.terms import replace_at, subterm_at

    g = Gen(rng, max_depth)
    ty = rng.choice(PLAIN_TYPES)
    seed = g.term(ty)
    cur = seed
    applied: list[str] = []
    for _ in range(steps * 4):
        if len(applied) >= steps:
            break
        kind = rng.choice(kinds)
        if kind in E_SHUFFLES:
            cur = {"ac": ac_permute, "alpha": alpha_rename, "swap": sum_swap}[kind](cur, rng)
            applied.append(kind)
            continue
        spots: list = []
        _typed_positions(cur, ty, spots)
        path, sty = rng.choice(spots)
        new = expand_once(g, subterm_at(cur, path), sty, kind)
        if new is not None:
            cur = replace_at(cur, path, new)
            applied.append(kind)
    return seed, cur, applied


def registers_of(t: Term) -> set[str]:
    out: set[str] = set()
    if t.head in ("LKET", "LBRA"):
        out.update(register_leaves(t.args[1]))
    for a in t.args:
        out |= registers_of(a)
    return out


__all__ = [
    "E_SHUFFLES",
    "GEN_SCRIPT",
    "Gen",
    "PLAIN_TYPES",
    "R_EXPANSIONS",
    "ac_permute",
    "alpha_rename",
    "gen_state",
    "make_equal_pair",
    "random_labelled",
    "random_plain",
    "sum_swap",
]
