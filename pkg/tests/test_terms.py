from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from diracprove.terms import (
    Term,
    alpha_equivalent,
    bound_names,
    free_vars,
    fresh,
    from_de_bruijn,
    mk,
    num,
    numeral_value,
    replace_at,
    substitute,
    subterm_at,
    to_de_bruijn,
    to_str,
)
from termgen import alpha_rename, random_plain


def lam(x: str, ann: Term, body: Term) -> Term:
    return Term("FUN", (Term(x), ann, body))


def test_mk_flattens_ac_heads_one_level():
    a, b, c = Term("a"), Term("b"), Term("c")
    assert mk("ADD", mk("ADD", a, b), c) == Term("ADD", (a, b, c))
    # non-AC heads are left alone
    assert mk("MULK", mk("MULK", a, b), c).args[0].head == "MULK"


def test_terms_are_hashable_values():
    t1 = mk("ADD", Term("a"), Term("b"))
    t2 = mk("ADD", Term("a"), Term("b"))
    assert t1 == t2 and hash(t1) == hash(t2)
    assert len({t1, t2}) == 1


def test_numerals_round_trip():
    for v in (0, 1, -3):
        assert numeral_value(num(v)) == v
    assert numeral_value(Term("x")) is None


def test_fresh_names_never_repeat():
    names = {fresh("i") for _ in range(200)}
    assert len(names) == 200
    assert all(n.startswith("i'") for n in names)


def test_free_and_bound_variables():
    t = lam("x", Term("KTYPE", (Term("T"),)), mk("ADD", Term("x"), Term("y")))
    # the annotation's index counts as free
    assert free_vars(t) == {"y", "T"}
    assert bound_names(t) == {"x"}


def test_substitution_avoids_capture():
    # (fun x => x + y)[y := x] must not capture the free x
    t = lam("x", Term("STYPE"), mk("ADDS", Term("x"), Term("y")))
    out = substitute(t, {"y": Term("x")})
    binder = out.args[0].head
    assert binder != "x"
    assert out.args[2] == mk("ADDS", Term(binder), Term("x"))


def test_de_bruijn_distinguishes_binding_structure():
    ann = Term("STYPE")
    k = lam("x", ann, lam("y", ann, Term("x")))
    k2 = lam("x", ann, lam("y", ann, Term("y")))
    assert to_str(to_de_bruijn(k)) == "FUN[STYPE, FUN[STYPE, $1]]"
    assert to_de_bruijn(k) != to_de_bruijn(k2)


def test_subterm_paths():
    t = mk("MULK", Term("A"), mk("ADD", Term("K"), Term("L")))
    assert subterm_at(t, (1, 0)) == Term("K")
    t2 = replace_at(t, (1, 0), Term("J"))
    assert subterm_at(t2, (1, 0)) == Term("J")
    assert subterm_at(t, (1, 0)) == Term("K")  # original untouched


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_alpha_renaming_preserves_de_bruijn_form(seed):
    rng = random.Random(seed)
    t, _ = random_plain(rng, 4)
    renamed = alpha_rename(t, rng)
    assert alpha_equivalent(t, renamed)
    assert to_de_bruijn(t) == to_de_bruijn(renamed)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_de_bruijn_round_trip(seed):
    t, _ = random_plain(random.Random(seed), 4)
    db = to_de_bruijn(t)
    assert to_de_bruijn(from_de_bruijn(db)) == db
