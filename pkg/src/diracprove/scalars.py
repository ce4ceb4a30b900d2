"""Canonical sum-of-products form for scalar terms.

A scalar is read as a polynomial with rational coefficients over atoms.
Atoms are every scalar subterm that is not a numeral, ``ADDS``, ``MULS``
or ``CONJ`` of those.  The constants ``IMAG`` and ``SQRT2`` are atoms
with the extra reductions ``IMAG * IMAG = -1`` and ``SQRT2 * SQRT2 = 2``,
so coefficients effectively live in Q(i, sqrt 2).
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction

from .terms import ONE, ZERO, Term, mk, num, numeral_value, struct_key

Monomial = tuple[Term, ...]
Poly = dict[Monomial, Fraction]

IMAG = Term("IMAG")
SQRT2 = Term("SQRT2")


def _add_into(p: Poly, m: Monomial, c: Fraction) -> None:
    v = p.get(m, Fraction(0)) + c
    if v:
        p[m] = v
    else:
        p.pop(m, None)


def _reduce(atoms: list[Term]) -> tuple[Fraction, Monomial]:
    counts = Counter(a for a in atoms if a in (IMAG, SQRT2))
    coef = Fraction(1)
    rest = [a for a in atoms if a not in (IMAG, SQRT2)]
    i, r = counts[IMAG], counts[SQRT2]
    coef *= (-1) ** (i // 2) * 2 ** (r // 2)
    if i % 2:
        rest.append(IMAG)
    if r % 2:
        rest.append(SQRT2)
    rest.sort(key=struct_key)
    return coef, tuple(rest)


def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            c, m = _reduce(list(m1) + list(m2))
            _add_into(out, m, c * c1 * c2)
    return out


def poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for m, c in q.items():
        _add_into(out, m, c)
    return out


def conj_atom(a: Term) -> tuple[Fraction, Term]:
    """Conjugate of an atom as ``(sign, atom)``."""
    if a == IMAG:
        return Fraction(-1), IMAG
    if a == SQRT2 or a.head == "DELTA":
        return Fraction(1), a
    if a.head == "CONJ":
        return Fraction(1), a.args[0]
    return Fraction(1), Term("CONJ", (a,))


def poly_conj(p: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        sign = Fraction(1)
        atoms: list[Term] = []
        for a in m:
            s, b = conj_atom(a)
            sign *= s
            atoms.extend(poly_atoms(b))
        k, mono = _reduce(atoms)
        _add_into(out, mono, c * sign * k)
    return out


def poly_atoms(t: Term) -> list[Term]:
    """Atoms of a term known to be a single factor (CONJ of a numeral is folded)."""
    v = numeral_value(t)
    if v is not None:
        return [] if v == 1 else [t]
    return [t]


def poly_of(t: Term) -> Poly:
    v = numeral_value(t)
    if v is not None:
        return {(): v} if v else {}
    h = t.head
    if h == "ADDS":
        out: Poly = {}
        for a in t.args:
            out = poly_add(out, poly_of(a))
        return out
    if h == "MULS":
        acc: Poly = {(): Fraction(1)}
        for a in t.args:
            acc = poly_mul(acc, poly_of(a))
            if not acc:
                break
        return acc
    if h == "CONJ" and len(t.args) == 1:
        return poly_conj(poly_of(t.args[0]))
    return {(t,): Fraction(1)}


def mono_term(m: Monomial, c: Fraction) -> Term:
    if not m:
        return num(c)
    if c == 1:
        return m[0] if len(m) == 1 else mk("MULS", *m)
    return mk("MULS", num(c), *m)


def poly_term(p: Poly) -> Term:
    if not p:
        return ZERO
    terms = sorted((mono_term(m, c) for m, c in p.items()), key=struct_key)
    return terms[0] if len(terms) == 1 else mk("ADDS", *terms)


def poly_normal(t: Term) -> Term:
    """Sum-of-products form of ``t`` (atoms are left untouched)."""
    return poly_term(poly_of(t))


def numeric_split(t: Term) -> tuple[Fraction, Term | None]:
    """Split a monomial into its rational factor and the rest (``None`` if 1)."""
    v = numeral_value(t)
    if v is not None:
        return v, None
    if t.head == "MULS":
        c = numeral_value(t.args[0])
        if c is not None:
            rest = t.args[1:]
            return c, rest[0] if len(rest) == 1 else Term("MULS", rest)
    return Fraction(1), t


def with_numeric(c: Fraction, rest: Term | None) -> Term:
    """Inverse of :func:`numeric_split`."""
    if rest is None:
        return num(c)
    if c == 1:
        return rest
    if rest.head == "MULS":
        return Term("MULS", (num(c),) + rest.args)
    return Term("MULS", (num(c), rest))


def normalize_scalar(t: Term, ctx=None) -> Term:
    """Rewrite a scalar term to its canonical sum-of-products form.

    Runs the full rule set (for delta, conjugation and inner-product laws)
    through the rewriting engine; ``ctx`` supplies variable types when rules
    need them.
    """
    from .normalize import normalize_term

    return normalize_term(ctx, t)


def scalar_equal(a: Term, b: Term, ctx=None) -> bool:
    """True iff both scalars reach the same canonical form."""
    return normalize_scalar(a, ctx) == normalize_scalar(b, ctx)


__all__ = [
    "ONE",
    "ZERO",
    "poly_of",
    "poly_term",
    "poly_normal",
    "normalize_scalar",
    "scalar_equal",
    "numeric_split",
    "with_numeric",
]
