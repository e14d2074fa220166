"""Truss problem definitions, assignment encoding and a numeric FEM oracle.

Units are N, mm and MPa throughout (N/mm^2 == MPa).

Variables are laid out element-major, choice-minor: the bit for element
``n`` (0-based) and area choice ``c`` (0-based, small to large) sits at index
``n * C + c``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    InvalidAssignment,
    LengthMismatch,
    ParseError,
    SingularStiffness,
    UnknownProblem,
    ValidationError,
)

BUILTIN_NAMES = ("two_truss", "three_truss", "four_truss")


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Element:
    id: str
    start: str
    end: str
    choices: tuple[float, ...]


@dataclass(frozen=True)
class Material:
    youngs_modulus: float
    sigma_limit: float


@dataclass(frozen=True)
class Load:
    node: str
    fx: float
    fy: float


@dataclass(frozen=True)
class Support:
    node: str
    fix_x: bool
    fix_y: bool


@dataclass(frozen=True)
class TrussProblem:
    nodes: tuple[Node, ...]
    elements: tuple[Element, ...]
    loads: tuple[Load, ...]
    supports: tuple[Support, ...]
    material: Material
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        validate(self)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def num_choices(self) -> int:
        return len(self.elements[0].choices)

    @property
    def num_vars(self) -> int:
        return self.num_elements * self.num_choices

    @property
    def num_valid(self) -> int:
        return self.num_choices ** self.num_elements

    def node_index(self, node_id: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise KeyError(node_id)

    def element_vars(self, n: int) -> list[int]:
        C = self.num_choices
        return list(range(n * C, (n + 1) * C))

    def element_geometry(self, n: int) -> tuple[int, int, float, float, float]:
        """(start node index, end node index, dx, dy, length)."""
        e = self.elements[n]
        i, j = self.node_index(e.start), self.node_index(e.end)
        dx = self.nodes[j].x - self.nodes[i].x
        dy = self.nodes[j].y - self.nodes[i].y
        return i, j, dx, dy, math.hypot(dx, dy)

    def fixed_dofs(self) -> list[int]:
        fixed = set()
        for s in self.supports:
            i = self.node_index(s.node)
            if s.fix_x:
                fixed.add(2 * i)
            if s.fix_y:
                fixed.add(2 * i + 1)
        return sorted(fixed)

    def free_dofs(self) -> list[int]:
        fixed = set(self.fixed_dofs())
        return [d for d in range(2 * len(self.nodes)) if d not in fixed]

    def load_vector(self) -> np.ndarray:
        f = np.zeros(2 * len(self.nodes))
        for ld in self.loads:
            i = self.node_index(ld.node)
            f[2 * i] += ld.fx
            f[2 * i + 1] += ld.fy
        return f

    def with_loads(self, loads: Sequence[Load]) -> "TrussProblem":
        return TrussProblem(self.nodes, self.elements, tuple(loads), self.supports,
                            self.material, self.name)


def validate(p: TrussProblem) -> None:
    ids = [n.id for n in p.nodes]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate node ids")
    known = set(ids)
    if not p.elements:
        raise ValidationError("no elements")
    if len({e.id for e in p.elements}) != len(p.elements):
        raise ValidationError("duplicate element ids")
    if p.material.youngs_modulus <= 0 or p.material.sigma_limit <= 0:
        raise ValidationError("material constants must be positive")
    C = len(p.elements[0].choices)
    for e in p.elements:
        for end in (e.start, e.end):
            if end not in known:
                raise ValidationError(f"element {e.id} references missing node {end}")
        if e.start == e.end:
            raise ValidationError(f"element {e.id} starts and ends at {e.start}")
        if len(e.choices) != C or C < 1:
            raise ValidationError("every element needs the same, non-zero number of choices")
        if any(a <= 0 for a in e.choices):
            raise ValidationError(f"element {e.id} has a non-positive area choice")
        if any(b <= a for a, b in zip(e.choices, e.choices[1:])):
            raise ValidationError(f"element {e.id} choices are not strictly increasing")
    coords = {n.id: (n.x, n.y) for n in p.nodes}
    for e in p.elements:
        (x0, y0), (x1, y1) = coords[e.start], coords[e.end]
        if math.hypot(x1 - x0, y1 - y0) == 0.0:
            raise ValidationError(f"element {e.id} has zero length")
    for ref in [ld.node for ld in p.loads] + [s.node for s in p.supports]:
        if ref not in known:
            raise ValidationError(f"load/support references missing node {ref}")
    if not p.free_dofs():
        raise ValidationError("no free degree of freedom after supports")


# -- builtin benchmarks -------------------------------------------------------

_STEEL = Material(youngs_modulus=200_000.0, sigma_limit=100.0)


def _build(name, nodes, elements, loads, fixed_nodes) -> TrussProblem:
    return TrussProblem(
        nodes=tuple(Node(i, float(x), float(y)) for i, x, y in nodes),
        elements=tuple(Element(i, s, e, tuple(float(a) for a in ch)) for i, s, e, ch in elements),
        loads=tuple(Load(n, fx * 1000.0, fy * 1000.0) for n, fx, fy in loads),  # kN -> N
        supports=tuple(Support(n, True, True) for n in fixed_nodes),
        material=_STEEL,
        name=name,
    )


def builtin_problem(name: str) -> TrussProblem:
    """One of the three benchmark trusses (``two_truss``, ``three_truss``, ``four_truss``)."""
    if name == "two_truss":
        return _build(
            name,
            [("N1", 0, 0), ("N2", 1000, -1000), ("N3", 0, -1000)],
            [("E1", "N1", "N2", (800, 900, 1000)), ("E2", "N2", "N3", (1400, 1500, 1600))],
            [("N2", 0, -70)],
            ["N1", "N3"],
        )
    if name == "three_truss":
        return _build(
            name,
            [("N1", -500, 500), ("N2", -500, -500), ("N3", 500, 100), ("N4", 0, 0)],
            [
                ("E1", "N1", "N4", (400, 500, 600)),
                ("E2", "N2", "N4", (950, 1050, 1150)),
                ("E3", "N3", "N4", (700, 800, 900)),
            ],
            [("N4", 0, -100)],
            ["N1", "N2", "N3"],
        )
    if name == "four_truss":
        return _build(
            name,
            [("N1", 0, 500), ("N2", 0, -500), ("N3", 500, 0), ("N4", 1000, 0)],
            [
                ("E1", "N1", "N3", (2400, 2500, 2600)),
                ("E2", "N2", "N3", (2400, 2500, 2600)),
                ("E3", "N1", "N4", (1900, 2000, 2100)),
                ("E4", "N3", "N4", (2400, 2500, 2600)),
            ],
            [("N4", 0, -100)],
            ["N1", "N2"],
        )
    raise UnknownProblem(f"unknown builtin problem {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def fixture_path(name: str) -> Path:
    if name not in BUILTIN_NAMES:
        raise UnknownProblem(name)
    return Path(str(resources.files("qtruss") / "fixtures" / f"{name}.json"))


def resolve_problem(source: str) -> TrussProblem:
    """Builtin name or path to a problem JSON file."""
    if source in BUILTIN_NAMES:
        return builtin_problem(source)
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        return load_problem(path)
    raise UnknownProblem(f"{source!r} is neither a builtin problem nor a file")


# -- JSON io ------------------------------------------------------------------


def problem_to_dict(p: TrussProblem) -> dict:
    return {
        "name": p.name,
        "nodes": [{"id": n.id, "x_mm": n.x, "y_mm": n.y} for n in p.nodes],
        "elements": [
            {"id": e.id, "start": e.start, "end": e.end, "choices_mm2": list(e.choices)}
            for e in p.elements
        ],
        "material": {"E_MPa": p.material.youngs_modulus,
                     "sigma_limit_MPa": p.material.sigma_limit},
        "loads": [{"node": ld.node, "fx_N": ld.fx, "fy_N": ld.fy} for ld in p.loads],
        "supports": [{"node": s.node, "fix_x": s.fix_x, "fix_y": s.fix_y} for s in p.supports],
    }


def problem_from_dict(doc: dict, name: str = "custom") -> TrussProblem:
    try:
        nodes = tuple(Node(str(n["id"]), float(n["x_mm"]), float(n["y_mm"])) for n in doc["nodes"])
        elements = tuple(
            Element(str(e["id"]), str(e["start"]), str(e["end"]),
                    tuple(float(a) for a in e["choices_mm2"]))
            for e in doc["elements"]
        )
        mat = doc["material"]
        material = Material(float(mat["E_MPa"]), float(mat["sigma_limit_MPa"]))
        loads = tuple(Load(str(ld["node"]), float(ld["fx_N"]), float(ld["fy_N"]))
                      for ld in doc.get("loads", []))
        supports = tuple(Support(str(s["node"]), bool(s["fix_x"]), bool(s["fix_y"]))
                         for s in doc["supports"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed problem document: {exc!r}") from None
    return TrussProblem(nodes, elements, loads, supports, material, doc.get("name", name))


def load_problem(path) -> TrussProblem:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return problem_from_dict(doc, name=path.stem)


def save_problem(p: TrussProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(p), indent=2) + "\n")


# -- assignments --------------------------------------------------------------


def _check_length(a: Sequence[int], n: int) -> None:
    if len(a) != n:
        raise LengthMismatch(f"assignment has {len(a)} bits, expected {n}")


def areas_from_assignment(p: TrussProblem, a: Sequence[int]) -> np.ndarray:
    _check_length(a, p.num_vars)
    C = p.num_choices
    return np.array([
        sum(a[n * C + c] * e.choices[c] for c in range(C))
        for n, e in enumerate(p.elements)
    ], dtype=float)


def is_valid(a: Sequence[int], N: int, C: int) -> bool:
    """True iff every element block has exactly one bit set."""
    _check_length(a, N * C)
    return all(sum(a[n * C:(n + 1) * C]) == 1 for n in range(N))


def solution_index(a: Sequence[int], N: int, C: int) -> int:
    """1-based mixed-radix number of a valid assignment (element 1 most significant)."""
    if not is_valid(a, N, C):
        raise InvalidAssignment(f"{list(a)} is not one-hot per element")
    idx = 0
    for n in range(N):
        block = a[n * C:(n + 1) * C]
        idx = idx * C + list(block).index(1)
    return idx + 1


def index_to_solution(index: int, N: int, C: int) -> list[int]:
    if not 1 <= index <= C ** N:
        raise InvalidAssignment(f"solution index {index} outside 1..{C ** N}")
    rest = index - 1
    choices = []
    for _ in range(N):
        choices.append(rest % C)
        rest //= C
    bits = []
    for c in reversed(choices):
        block = [0] * C
        block[c] = 1
        bits.extend(block)
    return bits


def valid_assignments(N: int, C: int) -> np.ndarray:
    """All C**N valid assignments as rows, in solution-index order."""
    rows = []
    for choice in itertools.product(range(C), repeat=N):
        row = [0] * (N * C)
        for n, c in enumerate(choice):
            row[n * C + c] = 1
        rows.append(row)
    return np.array(rows, dtype=np.int8)


# -- numeric FEM oracle -------------------------------------------------------


@dataclass
class FemResult:
    displacements: np.ndarray  # free DoFs, mm
    full_displacements: np.ndarray  # all DoFs, mm
    gl_strains: np.ndarray
    eng_strains: np.ndarray
    stresses: np.ndarray  # MPa, Green-Lagrange
    linear_stresses: np.ndarray  # MPa, small-strain axial projection
    stiffness: np.ndarray  # reduced
    load: np.ndarray  # reduced


def bar_stiffness(E: float, A: float, dx: float, dy: float) -> np.ndarray:
    L = math.hypot(dx, dy)
    c, s = dx / L, dy / L
    k = np.array([[c * c, c * s], [c * s, s * s]])
    return (E * A / L) * np.block([[k, -k], [-k, k]])


def assemble_numeric(p: TrussProblem, areas: Sequence[float]) -> np.ndarray:
    ndof = 2 * len(p.nodes)
    K = np.zeros((ndof, ndof))
    E = p.material.youngs_modulus
    for n in range(p.num_elements):
        i, j, dx, dy, _ = p.element_geometry(n)
        dofs = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
        K[np.ix_(dofs, dofs)] += bar_stiffness(E, areas[n], dx, dy)
    return K


def numeric_fem_solve(p: TrussProblem, areas: Sequence[float]) -> FemResult:
    """Linear FEM solve for given areas; strains use the Green-Lagrange measure."""
    areas = np.asarray(areas, dtype=float)
    if areas.shape != (p.num_elements,):
        raise LengthMismatch(f"expected {p.num_elements} areas, got {areas.shape}")
    if np.any(areas <= 0):
        raise SingularStiffness("all element areas must be positive")
    free = p.free_dofs()
    K = assemble_numeric(p, areas)[np.ix_(free, free)]
    f = p.load_vector()[free]
    # relative threshold catches mechanisms that LAPACK would still "solve"
    if np.linalg.cond(K) > 1e12:
        raise SingularStiffness("reduced stiffness matrix is singular (mechanism)")
    u = np.linalg.solve(K, f)
    full = np.zeros(2 * len(p.nodes))
    full[free] = u
    E = p.material.youngs_modulus
    gl, eng, lin = [], [], []
    for n in range(p.num_elements):
        i, j, dx, dy, L0 = p.element_geometry(n)
        dux = full[2 * j] - full[2 * i]
        duy = full[2 * j + 1] - full[2 * i + 1]
        # L^2 - L0^2 expanded, so an undeformed bar gives exactly zero
        stretch = 2.0 * (dx * dux + dy * duy) + dux * dux + duy * duy
        gl.append(stretch / (2.0 * L0 * L0))
        lin.append((dx * dux + dy * duy) / (L0 * L0))
        eng.append(math.sqrt(1.0 + stretch / (L0 * L0)) - 1.0)
    gl = np.array(gl)
    return FemResult(u, full, gl, np.array(eng), E * gl, E * np.array(lin), K, f)
