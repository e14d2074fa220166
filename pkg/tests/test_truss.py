import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtruss.errors import (
    InvalidAssignment,
    LengthMismatch,
    ParseError,
    SingularStiffness,
    UnknownProblem,
    ValidationError,
)
from qtruss.truss import (
    BUILTIN_NAMES,
    Load,
    areas_from_assignment,
    builtin_problem,
    fixture_path,
    index_to_solution,
    is_valid,
    load_problem,
    numeric_fem_solve,
    problem_from_dict,
    problem_to_dict,
    resolve_problem,
    save_problem,
    solution_index,
    valid_assignments,
)

from conftest import GOLDEN


def test_two_truss_data():
    p = builtin_problem("two_truss")
    assert len(p.nodes) == 3
    n2 = p.nodes[p.node_index("N2")]
    assert (n2.x, n2.y) == (1000.0, -1000.0)
    assert p.load_vector()[2 * p.node_index("N2") + 1] == -70000.0
    assert p.num_vars == 6 and p.num_valid == 9


def test_three_and_four_truss_data():
    p3 = builtin_problem("three_truss")
    assert p3.elements[0].choices == (400.0, 500.0, 600.0)
    assert p3.num_valid == 27
    p4 = builtin_problem("four_truss")
    assert p4.num_elements == 4 and p4.num_valid == 81
    fixed = set(p4.fixed_dofs())
    for node in ("N1", "N2"):
        i = p4.node_index(node)
        assert {2 * i, 2 * i + 1} <= fixed
    assert len(p4.free_dofs()) == 4


def test_unknown_builtin():
    with pytest.raises(UnknownProblem):
        builtin_problem("five_truss")


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_fixture_round_trip(name, tmp_path):
    assert load_problem(fixture_path(name)) == builtin_problem(name)
    out = tmp_path / "p.json"
    save_problem(builtin_problem(name), out)
    assert load_problem(out) == builtin_problem(name)
    assert resolve_problem(str(out)) == builtin_problem(name)


def _two_truss_doc():
    return problem_to_dict(builtin_problem("two_truss"))


def test_missing_node_rejected():
    doc = _two_truss_doc()
    doc["elements"][0]["end"] = "N9"
    with pytest.raises(ValidationError):
        problem_from_dict(doc)


def test_decreasing_choices_rejected():
    doc = _two_truss_doc()
    doc["elements"][0]["choices_mm2"] = [900, 800, 1000]
    with pytest.raises(ValidationError):
        problem_from_dict(doc)


def test_mixed_choice_counts_rejected():
    doc = _two_truss_doc()
    doc["elements"][0]["choices_mm2"] = [800, 900]
    with pytest.raises(ValidationError):
        problem_from_dict(doc)


def test_zero_length_rejected():
    doc = _two_truss_doc()
    doc["nodes"][1].update(x_mm=0.0, y_mm=0.0)
    with pytest.raises(ValidationError):
        problem_from_dict(doc)


def test_all_supported_rejected():
    doc = _two_truss_doc()
    doc["supports"].append({"node": "N2", "fix_x": True, "fix_y": True})
    with pytest.raises(ValidationError):
        problem_from_dict(doc)


def test_bad_json_file(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(ParseError):
        load_problem(f)


def test_areas_from_assignment():
    p = builtin_problem("two_truss")
    assert areas_from_assignment(p, [0, 1, 0, 0, 1, 0]).tolist() == [900, 1500]
    assert areas_from_assignment(p, [0] * 6).tolist() == [0, 0]
    assert areas_from_assignment(p, [1, 1, 0, 0, 0, 1]).tolist() == [1700, 1600]
    with pytest.raises(LengthMismatch):
        areas_from_assignment(p, [0, 1])


def test_is_valid():
    assert is_valid([0, 0, 1, 1, 0, 0], 2, 3)
    assert not is_valid([0] * 6, 2, 3)
    assert not is_valid([1, 1, 0, 0, 1, 0], 2, 3)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_golden_solution_index(name):
    p = builtin_problem(name)
    idx, bits = GOLDEN[name]
    assert solution_index(bits, p.num_elements, p.num_choices) == idx
    assert index_to_solution(idx, p.num_elements, p.num_choices) == bits


def test_solution_index_rejects_invalid():
    with pytest.raises(InvalidAssignment):
        solution_index([1, 1, 0, 0, 1, 0], 2, 3)
    with pytest.raises(InvalidAssignment):
        index_to_solution(10, 2, 3)


@given(st.integers(1, 4), st.integers(2, 4), st.data())
def test_index_bijection(N, C, data):
    k = data.draw(st.integers(1, C ** N))
    bits = index_to_solution(k, N, C)
    assert is_valid(bits, N, C)
    assert solution_index(bits, N, C) == k


def test_valid_assignments_in_index_order():
    rows = valid_assignments(3, 3)
    assert [solution_index(r.tolist(), 3, 3) for r in rows] == list(range(1, 28))


STATICS = (70_000 * math.sqrt(2) / 1000, -70_000 / 1400)  # joint equilibrium at N2


def test_two_truss_statics_green_lagrange():
    res = numeric_fem_solve(builtin_problem("two_truss"), [1000, 1400])
    assert STATICS[0] == pytest.approx(98.99, rel=1e-3)
    assert res.stresses[0] == pytest.approx(STATICS[0], rel=1e-3)
    assert res.stresses[1] == pytest.approx(STATICS[1], rel=1e-3)


def test_two_truss_statics_linear_part():
    # the small-strain part of the same solution carries the member forces exactly
    res = numeric_fem_solve(builtin_problem("two_truss"), [1000, 1400])
    assert res.linear_stresses == pytest.approx(STATICS, rel=1e-9)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_equilibrium_residual(name):
    p = builtin_problem(name)
    res = numeric_fem_solve(p, [e.choices[1] for e in p.elements])
    residual = np.linalg.norm(res.stiffness @ res.displacements - res.load)
    assert residual <= 1e-9 * np.linalg.norm(res.load)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_strain_measures_agree_for_small_strain(name):
    p = builtin_problem(name)
    for row in valid_assignments(p.num_elements, p.num_choices):
        res = numeric_fem_solve(p, areas_from_assignment(p, row.tolist()))
        e = res.eng_strains
        assert np.abs(res.gl_strains - e * (1 + e / 2)).max() <= 1e-12


@pytest.mark.parametrize("field", ["stresses", "linear_stresses"])
def test_doubling_areas_halves_stress(field):
    p = builtin_problem("two_truss")
    for row in valid_assignments(2, 3):
        areas = areas_from_assignment(p, row.tolist())
        a = getattr(numeric_fem_solve(p, areas), field)
        b = getattr(numeric_fem_solve(p, 2 * areas), field)
        assert b == pytest.approx(a / 2, rel=1e-6)


def test_zero_load_zero_response():
    p = builtin_problem("four_truss").with_loads([])
    res = numeric_fem_solve(p, [e.choices[0] for e in p.elements])
    assert not res.full_displacements.any() and not res.stresses.any()


def test_missing_element_singular():
    with pytest.raises(SingularStiffness):
        numeric_fem_solve(builtin_problem("two_truss"), [0, 1400])


def test_problem_json_is_stable():
    doc = problem_to_dict(builtin_problem("two_truss"))
    assert json.loads(json.dumps(doc)) == doc
