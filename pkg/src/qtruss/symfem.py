"""Symbolic finite-element analysis over boolean area-choice variables.

Element areas are linear polynomials ``A_n = sum_c q_{n,c} A_{n,c}``, so the
reduced stiffness matrix has polynomial entries.  The system is solved by
Cramer's rule with fraction-free determinants; displacements share the
denominator ``det K`` and stresses share ``det(K)**2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .boolpoly import BoolPoly, RationalExpr, max_abs_coeff, sum_polys
from .errors import NoFreeDof, ParseError, ZeroDeterminant, ZeroLength
from .truss import Element, Material, TrussProblem


@dataclass(frozen=True)
class SymStiffness:
    matrix: tuple[tuple[BoolPoly, ...], ...]
    dofs: tuple[int, ...]  # global DoF number of each row
    scale: float = 1.0  # matrix holds K / scale

    @property
    def size(self) -> int:
        return len(self.dofs)

    def evaluate(self, assignment) -> np.ndarray:
        return np.array([[e.evaluate(assignment) for e in row] for row in self.matrix]) * self.scale


@dataclass(frozen=True)
class SymSolution:
    shared_den: BoolPoly
    num_u: tuple[BoolPoly, ...]
    dofs: tuple[int, ...]

    def displacements(self, assignment) -> np.ndarray:
        d = self.shared_den.evaluate(assignment)
        return np.array([n.evaluate(assignment) for n in self.num_u]) / d


@dataclass(frozen=True)
class ObjectiveFractional:
    expr: RationalExpr
    normalization_scale: float = 1.0

    @property
    def num(self) -> BoolPoly:
        return self.expr.num

    @property
    def den(self) -> BoolPoly:
        return self.expr.den

    def evaluate(self, assignment) -> float:
        return self.expr.evaluate(assignment)

    __call__ = evaluate


def area_poly(element: Element, variables: Sequence[int]) -> BoolPoly:
    return BoolPoly.linear(dict(zip(variables, element.choices)))


def element_stiffness(element: Element, variables: Sequence[int], material: Material,
                      dx: float, dy: float) -> list[list[BoolPoly]]:
    """4x4 bar stiffness with the area replaced by its choice polynomial."""
    L = float(np.hypot(dx, dy))
    if L == 0.0:
        raise ZeroLength(f"element {element.id} has zero length")
    c, s = dx / L, dy / L
    area = area_poly(element, variables)
    k = material.youngs_modulus / L
    local = [[c * c, c * s], [c * s, s * s]]
    out = []
    for r in range(4):
        row = []
        for col in range(4):
            sign = 1.0 if (r < 2) == (col < 2) else -1.0
            row.append(area.scale(sign * k * local[r % 2][col % 2]))
        out.append(row)
    return out


def assemble(p: TrussProblem, variables: Sequence[Sequence[int]] | None = None,
             scale: float = 1.0) -> SymStiffness:
    """Scatter element matrices, then drop rows/columns of supported DoFs.

    ``scale`` divides every entry; solving ``(K/s) u = f/s`` leaves ``u`` unchanged.
    """
    if variables is None:
        variables = [p.element_vars(n) for n in range(p.num_elements)]
    ndof = 2 * len(p.nodes)
    acc: list[list[list[BoolPoly]]] = [[[] for _ in range(ndof)] for _ in range(ndof)]
    for n, e in enumerate(p.elements):
        i, j, dx, dy, _ = p.element_geometry(n)
        ke = element_stiffness(e, variables[n], p.material, dx, dy)
        dofs = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
        for a in range(4):
            for b in range(4):
                acc[dofs[a]][dofs[b]].append(ke[a][b])
    free = p.free_dofs()
    if not free:
        raise NoFreeDof("every degree of freedom is supported")
    inv = 1.0 / scale
    matrix = tuple(
        tuple(sum_polys(acc[r][c]).scale(inv) for c in free) for r in free
    )
    return SymStiffness(matrix, tuple(free), scale)


def determinant(matrix: Sequence[Sequence[BoolPoly]]) -> BoolPoly:
    """Fraction-free determinant by Laplace expansion with memoized minors.

    Row ``k`` is expanded against the set of still-unused columns, so each
    minor is computed once: O(n 2^n) polynomial products.
    """
    n = len(matrix)
    if n == 0:
        return BoolPoly.constant(1.0)

    @lru_cache(maxsize=None)
    def minor(row: int, cols: int) -> BoolPoly:
        if row == n:
            return BoolPoly.constant(1.0)
        terms = []
        sign = 1.0
        for col in range(n):
            if not cols >> col & 1:
                continue
            entry = matrix[row][col]
            if entry:
                sub = minor(row + 1, cols & ~(1 << col))
                if sub:
                    terms.append((entry * sub).scale(sign))
            sign = -sign
        return sum_polys(terms)

    return minor(0, (1 << n) - 1)


def _system_scale(p: TrussProblem) -> float:
    # largest possible diagonal stiffness; keeps det(K) near unit magnitude
    s = 0.0
    for n, e in enumerate(p.elements):
        *_, L = p.element_geometry(n)
        s = max(s, p.material.youngs_modulus * max(e.choices) / L)
    return s


def solve_symbolic(K: SymStiffness, f: Sequence[float]) -> SymSolution:
    """Cramer's rule: ``u_i = det(K with column i := f) / det(K)``.

    ``f`` is the reduced load vector in physical units; it is divided by the
    same scale as ``K``.
    """
    n = K.size
    f = [float(v) / K.scale for v in f]
    if len(f) != n:
        raise ValueError(f"load vector has {len(f)} entries, stiffness has {n} rows")
    den = determinant(K.matrix)
    if den.is_zero():
        raise ZeroDeterminant("symbolic stiffness determinant is identically zero")
    nums = []
    for i in range(n):
        replaced = [
            [BoolPoly.constant(f[r]) if c == i else K.matrix[r][c] for c in range(n)]
            for r in range(n)
        ]
        nums.append(determinant(replaced))
    return SymSolution(den, tuple(nums), K.dofs)


def solve_problem(p: TrussProblem) -> SymSolution:
    K = assemble(p, scale=_system_scale(p))
    f = p.load_vector()[list(K.dofs)]
    return solve_symbolic(K, f)


def stress_expressions(p: TrussProblem, sol: SymSolution) -> list[RationalExpr]:
    """Green-Lagrange stresses ``E (L^2 - L0^2) / (2 L0^2)`` over ``den**2``."""
    den = sol.shared_den
    den2 = den * den
    num_of_dof = dict(zip(sol.dofs, sol.num_u))
    zero = BoolPoly()
    E = p.material.youngs_modulus
    out = []
    for n in range(p.num_elements):
        i, j, dx, dy, L0 = p.element_geometry(n)
        dux = num_of_dof.get(2 * j, zero) - num_of_dof.get(2 * i, zero)
        duy = num_of_dof.get(2 * j + 1, zero) - num_of_dof.get(2 * i + 1, zero)
        # L^2 den^2 - L0^2 den^2 = 2 den (dx dux + dy duy) + dux^2 + duy^2
        stretch = (den * (dux.scale(dx) + duy.scale(dy))).scale(2.0) + dux * dux + duy * duy
        num = stretch.scale(E / (2.0 * L0 * L0))
        out.append(RationalExpr(num, den2))
    return out


def objective_fractional(p: TrussProblem, stresses: Sequence[RationalExpr]) -> ObjectiveFractional:
    """``sum_n (s_lim^2 - sigma_n^2)^2`` as one fraction over ``(den^2)^4``."""
    den2 = stresses[0].den
    den4 = den2 * den2
    lim2 = p.material.sigma_limit ** 2
    parts = []
    for st in stresses:
        if st.den != den2:
            raise ValueError("stresses must share one denominator")
        inner = den4.scale(lim2) - st.num * st.num
        parts.append(inner * inner)
    num = sum_polys(parts)
    den = den4 * den4
    expr, scale = RationalExpr(num, den).normalized()
    return ObjectiveFractional(expr, scale)


def objective_nonfractional_flawed(p: TrussProblem, stresses: Sequence[RationalExpr]) -> BoolPoly:
    """Reserve-factor difference objective ``sum_n (s_lim^2 D_n^2 - N_n^2)^2``.

    Minimizing a difference instead of the ratio does not preserve the
    minimizer in general; this exists to demonstrate that.
    """
    lim2 = p.material.sigma_limit ** 2
    parts = []
    for st in stresses:
        inner = (st.den * st.den).scale(lim2) - st.num * st.num
        parts.append(inner * inner)
    total = sum_polys(parts)
    return total.scale(1.0 / max_abs_coeff(total))


def build_stresses(p: TrussProblem) -> list[RationalExpr]:
    return stress_expressions(p, solve_problem(p))


def build_objective(p: TrussProblem, kind: str = "fractional"):
    stresses = build_stresses(p)
    if kind == "fractional":
        return objective_fractional(p, stresses)
    if kind == "flawed":
        return objective_nonfractional_flawed(p, stresses)
    raise ValueError(f"unknown objective kind {kind!r}")


# -- objective files ----------------------------------------------------------

_SEPARATOR = "---\n"


def export_objective(obj, path, problem: str) -> None:
    """Write a JSON header line, then the polynomial text blocks.

    Fractional objectives store the numerator then the denominator, each
    block preceded by a ``---`` line.
    """
    if isinstance(obj, ObjectiveFractional):
        header = {"problem": problem, "num_vars": max(obj.num.num_vars, obj.den.num_vars),
                  "kind": "fractional", "normalization_scale": obj.normalization_scale}
        blocks = [obj.num.to_text(), obj.den.to_text()]
    else:
        header = {"problem": problem, "num_vars": obj.num_vars, "kind": "flawed",
                  "normalization_scale": 1.0}
        blocks = [obj.to_text()]
    text = json.dumps(header, sort_keys=True) + "\n" + "".join(_SEPARATOR + b for b in blocks)
    Path(path).write_text(text)


def import_objective(path):
    """Inverse of :func:`export_objective`; returns ``(header, objective)``."""
    text = Path(path).read_text()
    head, _, body = text.partition("\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad objective header: {exc}") from None
    blocks = body.split(_SEPARATOR)[1:]
    if header.get("kind") == "fractional":
        if len(blocks) != 2:
            raise ParseError("fractional objective needs numerator and denominator blocks")
        expr = RationalExpr(BoolPoly.from_text(blocks[0]), BoolPoly.from_text(blocks[1]))
        return header, ObjectiveFractional(expr, float(header.get("normalization_scale", 1.0)))
    if header.get("kind") == "flawed":
        if len(blocks) != 1:
            raise ParseError("flawed objective needs exactly one block")
        return header, BoolPoly.from_text(blocks[0])
    raise ParseError(f"unknown objective kind {header.get('kind')!r}")
