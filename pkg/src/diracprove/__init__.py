"""Equational reasoning for plain and labelled Dirac notation.

The pipeline parses surface terms, elaborates and type-checks them,
rewrites them to a canonical form and compares canonical forms.
"""

from .normalize import NormalForm, check_eq, normalize
from .prover import ProverState, execute, load_library, run_script, run_text
from .syntax import parse
from .terms import Term
from .typecheck import Context

__all__ = [
    "Context",
    "NormalForm",
    "ProverState",
    "Term",
    "check_eq",
    "execute",
    "load_library",
    "normalize",
    "parse",
    "run_script",
    "run_text",
]
