from __future__ import annotations

from pathlib import Path

import pytest

from diracprove.prover import ProverState, load_library, run_text
from termgen import gen_state

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


@pytest.fixture(scope="session")
def gen() -> ProverState:
    """Library plus the random-term generator's variables."""
    return gen_state()


@pytest.fixture(scope="session")
def gen_ctx(gen):
    return gen.context


@pytest.fixture(scope="session")
def lib() -> ProverState:
    return load_library()


@pytest.fixture
def basic():
    """A small hand-written context: one index, a few variables, two registers."""
    report = run_text(
        """
        Var T : INDEX.
        Var a : STYPE.
        Var s : BASIS[T].
        Var K : KTYPE[T].
        Var B : BTYPE[T].
        Var M : OTYPE[T, T].
        Var r1 : REG[T].
        Var r2 : REG[T].
        """
    )
    assert report.ok
    return report.state


ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one summary line; all lines are repeated at the end of the run."""

    def log(label: str, ok: bool | None, detail: str) -> bool | None:
        status = "LOG " if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status} {label}: {detail}"
        print(line)
        ACCEPTANCE.append(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
