"""Counting harnesses shared by the property tests and the acceptance suite.

Each function runs a batch of random cases and returns a :class:`Tally`
so callers can either assert on it or print a summary line.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from diracprove.normalize import check_eq, normalize
from diracprove.oracle import OracleError, semantic_equal
from termgen import (
    E_SHUFFLES,
    R_EXPANSIONS,
    ac_permute,
    alpha_rename,
    make_equal_pair,
    random_labelled,
    random_plain,
    sum_swap,
)


@dataclass
class Tally:
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    examples: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.passed + self.failed

    @property
    def rate(self) -> float:
        return self.passed / self.total if self.total else 0.0

    def record(self, ok: bool, example=None) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.examples) < 5:
                self.examples.append(example)


def soundness(ctx, count: int, seed: int = 0, max_depth: int = 6, dims=(2, 3)) -> Tally:
    """``count`` plain terms whose value survives normalisation.

    Terms too large for the dense evaluator are skipped and replaced, so
    the tally always reaches ``count`` evaluated cases.
    """
    tally = Tally()
    k = 0
    while tally.total < count:
        rng = random.Random(seed * 1_000_003 + k)
        k += 1
        t, _ = random_plain(rng, max_depth)
        nf = normalize(ctx, t)
        try:
            ok = semantic_equal(ctx, t, nf.term, trials=1, seed=k, dims=dims)
        except OracleError:
            tally.skipped += 1
            continue
        tally.record(ok, t)
    return tally


def _same(a, b) -> bool:
    return a.key == b.key and a.signature == b.signature


def canonicity(ctx, count: int, seed: int = 0, labelled_share: float = 0.4) -> Tally:
    """Idempotence plus invariance under renaming, AC shuffles and sum swaps."""
    tally = Tally()
    for k in range(count):
        rng = random.Random(seed * 1_000_003 + k)
        if rng.random() < labelled_share:
            t, _ = random_labelled(rng)
        else:
            t, _ = random_plain(rng, 5)
        nf = normalize(ctx, t)
        again = normalize(ctx, nf.term)
        ok = again.term == nf.term
        for variant in (alpha_rename(t, rng), ac_permute(t, rng), sum_swap(t, rng)):
            ok = ok and _same(normalize(ctx, variant), nf)
        tally.record(ok, t)
    return tally


def equal_pairs(ctx, count: int, kinds=R_EXPANSIONS, seed: int = 0, steps: int = 2) -> Tally:
    """Pairs equal by construction that the decision procedure must identify."""
    tally = Tally()
    for k in range(count):
        rng = random.Random(seed * 1_000_003 + k)
        left, right, applied = make_equal_pair(rng, kinds, steps)
        tally.record(check_eq(ctx, left, right).equal, (left, right, applied))
    return tally


def completeness(ctx, count: int, seed: int = 0) -> Tally:
    """Mixed expansion and shuffle pairs: a logged estimate of completeness."""
    return equal_pairs(ctx, count, R_EXPANSIONS + E_SHUFFLES, seed=seed, steps=3)


__all__ = ["Tally", "canonicity", "completeness", "equal_pairs", "soundness"]
