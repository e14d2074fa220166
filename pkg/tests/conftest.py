import functools
import sys
import json
from pathlib import Path

import pytest

from qtruss.boolpoly import BoolPoly
from qtruss.symfem import build_objective
from qtruss.truss import BUILTIN_NAMES, builtin_problem

DATA = Path(__file__).parent / "data"

GOLDEN = {
    "two_truss": (7, [0, 0, 1, 1, 0, 0]),
    "three_truss": (21, [0, 0, 1, 1, 0, 0, 0, 0, 1]),
    "four_truss": (7, [1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0]),
}


@functools.lru_cache(maxsize=None)
def objective(name: str, kind: str = "fractional"):
    return build_objective(builtin_problem(name), kind)


@pytest.fixture(params=BUILTIN_NAMES)
def problem_name(request):
    return request.param


def reference_stress_e1() -> tuple[BoolPoly, BoolPoly]:
    doc = json.loads((DATA / "two_truss_stress_e1.json").read_text())
    num = BoolPoly({tuple(vs): c for vs, c in doc["num"]})
    den = BoolPoly({tuple(vs): c for vs, c in doc["den"]})
    return num, den


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
