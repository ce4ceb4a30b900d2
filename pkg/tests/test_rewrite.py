from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracprove.normalize import all_rules, normalize
from diracprove.rewrite import (
    Engine,
    RewriteRule,
    StepLimitExceeded,
    apply_once,
    match_ac,
    replay,
    rewrite_to_fixpoint,
)
from diracprove.syntax import parse
from diracprove.terms import Term, mk
from diracprove.typecheck import Context
from termgen import random_labelled, random_plain

X, Y, Z = Term("X"), Term("Y"), Term("Z")


def test_ac_matching_ignores_argument_order():
    pat = mk("ADD", Term("p"), mk("SCR", Term("c"), Term("p")))
    subj = mk("ADD", mk("SCR", Term("a"), X), X)
    sub = match_ac(pat, subj, ["p", "c"])
    assert sub == {"p": X, "c": Term("a")}


def test_nonlinear_patterns_need_equal_instances():
    pat = mk("ADD", Term("p"), Term("p"))
    assert match_ac(pat, mk("ADD", X, X), ["p"]) == {"p": X}
    assert match_ac(pat, mk("ADD", X, Y), ["p"]) is None


def test_sequence_variables_take_the_remainder():
    pat = mk("ADD", X, Term("rest"))
    sub = match_ac(pat, mk("ADD", Y, X, Z), [], ["rest"])
    assert sub is not None
    assert sorted(a.head for a in sub["rest"].args) == ["Y", "Z"]


def test_commutative_heads_match_both_ways():
    pat = mk("DELTA", Term("0"), Term("i"))
    assert match_ac(pat, mk("DELTA", Term("j"), Term("0")), ["i"]) == {"i": Term("j")}


def _toy_rules():
    return [
        RewriteRule("swap", "F[x, y]", "G[y, x]", ["x", "y"]),
        RewriteRule("drop", "G[x, x]", "x", ["x"]),
    ]


def test_fixpoint_records_every_step():
    t = mk("F", X, X)
    out, trace = rewrite_to_fixpoint(_toy_rules(), Context(), t)
    assert out == X
    assert [r.rule for r in trace] == ["swap", "drop"]
    assert replay(t, trace) == out


def test_step_limit_reports_the_partial_trace():
    loop = [RewriteRule("flip", "F[x, y]", "F[y, x]", ["x", "y"])]
    with pytest.raises(StepLimitExceeded) as err:
        rewrite_to_fixpoint(loop, Context(), mk("F", X, Y), step_limit=25)
    assert err.value.limit == 25
    assert len(err.value.trace) == 26


def test_replay_detects_a_tampered_trace():
    t = mk("F", X, Y)
    _, trace = rewrite_to_fixpoint(_toy_rules(), Context(), t)
    with pytest.raises(ValueError):
        replay(mk("F", Y, X), trace)


def test_apply_once_fires_innermost_first():
    t = mk("F", mk("F", X, Y), Z)
    out, rec = apply_once(_toy_rules(), Context(), t)
    assert rec.path == (0,)
    assert out == mk("F", mk("G", Y, X), Z)


def test_engine_sorts_ac_arguments(gen_ctx):
    eng = Engine(gen_ctx, [], trace=True)
    nested = Term("ADD", (Term("K"), Term("ADD", (Term("A"), Term("B")))))
    out = eng.normalize(nested)
    assert [a.head for a in out.args] == ["A", "B", "K"]
    assert [r.rule for r in eng.records] == ["R-FLATTEN", "AC-SORT"]


def test_typing_errors_inside_rules_mean_no_match(gen_ctx):
    # the scalar-adjoint rule asks for a type; an unknown leaf makes it decline
    eng = Engine(gen_ctx, all_rules())
    assert eng.normalize(mk("ADJ", Term("unknown"))) == mk("ADJ", Term("unknown"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_trace_replays_to_the_rewritten_term(gen_ctx, seed, labelled):
    t, _ = (random_labelled if labelled else random_plain)(random.Random(seed), 4)
    nf = normalize(gen_ctx, t, trace=True)
    assert replay(nf.source, nf.trace) == nf.rewritten
    assert nf.steps == len(nf.trace) - sum(r.rule == "EXPAND" for r in nf.trace)


def test_parsed_rule_sides_are_terms():
    r = RewriteRule("id", "ADJ[ADJ[x]]", "x", ["x"])
    assert r.heads == ("ADJ",)
    assert r.fire(None, parse("ADJ[ADJ[K]]")) == Term("K")
