"""The acceptance criteria, one test and one summary line each.

Run ``pytest tests/test_acceptance.py -v`` to see the PASS/FAIL lines; they
are repeated in the "acceptance criteria" section at the end of the run.
"""

from __future__ import annotations

import time

from diracprove.normalize import rule_catalogue
from diracprove.prover import EQUAL_TEXT, run_script
from conftest import CORPUS
from props import canonicity, completeness, equal_pairs, soundness
from ruleinst import check, collect
from termgen import E_SHUFFLES, R_EXPANSIONS
from test_prover import USECASE_NF


def _timed(path, state):
    start = time.perf_counter()
    report = run_script(path, state)
    return report, time.perf_counter() - start


def test_1_usecase(lib, acceptance):
    report, secs = _timed(CORPUS / "usecase.dirac", lib)
    out = report.outputs[-1]
    ok = report.ok and out.text.splitlines() == [EQUAL_TEXT, USECASE_NF] and secs < 1.0
    assert acceptance("1 use case", ok, f"{out.verdict}, {secs:.3f}s (limit 1s)")


def test_2_ldn_suite(lib, acceptance):
    paths = sorted((CORPUS / "ldn").glob("ldn*.dirac"))
    slow: list[str] = []
    failed: list[str] = []
    worst = 0.0
    for path in paths:
        report, secs = _timed(path, lib)
        worst = max(worst, secs)
        if not report.ok or report.outputs[-1].verdict != "equal":
            failed.append(path.stem)
        if secs >= 60:
            slow.append(path.stem)
    ok = len(paths) == 18 and not failed and not slow
    detail = f"{len(paths) - len(failed)}/{len(paths)} equal, slowest {worst:.2f}s (limit 60s each)"
    if failed or slow:
        detail += f"; failed {failed}, slow {slow}"
    assert acceptance("2 LDN-1..18", ok, detail)


def test_3_qc5(lib, acceptance):
    report, secs = _timed(CORPUS / "qc5.dirac", lib)
    ok = report.ok and report.outputs[-1].verdict == "equal" and secs < 120
    assert acceptance("3 QC-5", ok, f"{report.outputs[-1].verdict}, {secs:.2f}s (limit 120s)")


def test_4_rule_instances(gen_ctx, acceptance):
    rules = rule_catalogue()
    found = collect(gen_ctx, rules, per_rule=50, pool_terms=300, seed=2024)
    short = sorted(r for r in rules if len(found[r]) < 50)
    failures = []
    checked = 0
    for rule in rules:
        for k, inst in enumerate(found[rule]):
            checked += 1
            if not check(gen_ctx, inst, dims=(2,), seed=k):
                failures.append(rule)
    ok = not short and not failures
    detail = f"{len(rules)} rules, {checked} instances, {len(failures)} failures"
    if short:
        detail += f"; under 50 instances: {short}"
    if failures:
        detail += f"; failing rules {sorted(set(failures))}"
    assert acceptance("4 per-rule soundness", ok, detail)


def test_5_soundness(gen_ctx, acceptance):
    tally = soundness(gen_ctx, 500, seed=5, max_depth=6, dims=(2, 3))
    ok = tally.total >= 500 and tally.failed == 0
    detail = f"{tally.passed}/{tally.total} preserved ({tally.skipped} over the evaluator cap, replaced)"
    assert acceptance("5 normalisation soundness", ok, detail)


def test_6_canonicity(gen_ctx, acceptance):
    tally = canonicity(gen_ctx, 300, seed=6)
    ok = tally.failed == 0
    assert acceptance("6 idempotence and invariance", ok, f"{tally.passed}/{tally.total} stable")


def test_7_equal_pairs(gen_ctx, acceptance):
    r = equal_pairs(gen_ctx, 200, R_EXPANSIONS, seed=7)
    e = equal_pairs(gen_ctx, 200, E_SHUFFLES, seed=7)
    ok = r.rate == 1.0 and e.rate >= 0.99
    detail = f"R {r.passed}/{r.total}, E {e.passed}/{e.total} ({100 * e.rate:.1f}%)"
    assert acceptance("7 equal pairs", ok, detail)


def test_8_plain_identities(lib, acceptance):
    report, secs = _timed(CORPUS / "identities.dirac", lib)
    checks = [o for o in report.outputs if o.command.startswith("CheckEq")]
    equal = sum(o.verdict == "equal" for o in checks)
    ok = len(checks) == 25 and equal == 25 and secs < 10
    assert acceptance("8 plain identities", ok, f"{equal}/{len(checks)}, {secs:.2f}s (limit 10s)")


def test_completeness_estimate(gen_ctx, acceptance):
    tally = completeness(gen_ctx, 300, seed=9)
    acceptance("semantic completeness (target 99%)", None,
               f"{tally.passed}/{tally.total} ({100 * tally.rate:.1f}%)")
