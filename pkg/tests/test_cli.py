from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from diracprove.cli import build_parser, main
from conftest import CORPUS


def run(argv, stdin: str = ""):
    out = io.StringIO()
    code = main(argv, stdin=io.StringIO(stdin), stdout=out)
    return code, out.getvalue()


def test_defaults():
    args = build_parser().parse_args([])
    assert args.step_limit == 100_000
    assert args.seed == 0
    assert not (args.lib or args.trace or args.oracle or args.json)
    assert args.script is None


def test_usecase_script():
    code, text = run(["--lib", "--script", str(CORPUS / "usecase.dirac")])
    assert code == 0
    assert "The two terms are equal." in text


def test_json_report(tmp_path):
    script = tmp_path / "s.dirac"
    script.write_text("Var T : INDEX.\nVar K : KTYPE[T].\nCheckEq K with 1.K.\nNormalize K + K.\n")
    code, text = run(["--json", "--trace", "--script", str(script)])
    assert code == 0
    entries = json.loads(text)
    assert [e["verdict"] for e in entries] == ["ok", "ok", "equal", "ok"]
    for e in entries:
        assert set(e) <= {"command", "verdict", "normal_form", "millis", "trace_len"}
        assert list(e)[:2] == ["command", "verdict"]
        assert isinstance(e["millis"], float)
    assert list(entries[2]) == ["command", "verdict", "normal_form", "millis", "trace_len"]
    assert entries[3]["normal_form"] == "SUM[USET[T], FUN[BASIS[T], SCR[MULS[2, DOT[BRA[$0], K]], KET[$0]]]]"


def test_not_equal_exits_with_one(tmp_path):
    script = tmp_path / "s.dirac"
    script.write_text("Var T : INDEX. Var K : KTYPE[T]. CheckEq K with 2.K.")
    code, text = run(["--script", str(script)])
    assert code == 1
    assert "The two terms are not equal." in text


def test_unreadable_script_exits_with_two(tmp_path):
    code, _ = run(["--script", str(tmp_path / "missing.dirac")])
    assert code == 2


@pytest.mark.parametrize("argv", [["--step-limit", "0"], ["--step-limit", "-4"]])
def test_bad_step_limit(argv):
    assert run(argv)[0] == 2


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--frobnicate"])
    assert exc.value.code == 2


def test_interactive_commands_may_span_lines():
    code, text = run(["--lib"], "Var T : INDEX.\nCheckEq (phi T)\n  with (phi T).\nCheck 1 + 1.\n")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "T : INDEX"
    assert lines[1] == "The two terms are equal."
    assert lines[-1] == "STYPE"


def test_json_from_stdin():
    code, text = run(["--json"], "Var T : INDEX. Check T.")
    assert code == 1
    assert [e["verdict"] for e in json.loads(text)] == ["ok", "error"]


def test_oracle_flag(tmp_path):
    script = tmp_path / "s.dirac"
    script.write_text("CheckEq X X with 1O[bool].")
    code, text = run(["--lib", "--oracle", "--seed", "3", "--script", str(script)])
    assert code == 0
    assert "oracle: agrees" in text


def test_step_limit_flag(tmp_path):
    script = tmp_path / "s.dirac"
    script.write_text("CheckEq H H with 1O[bool].")
    code, text = run(["--lib", "--step-limit", "3", "--script", str(script)])
    assert code == 1
    assert "Error" in text


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "diracprove", "--lib", "--script", str(CORPUS / "usecase.dirac")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("T : INDEX")
