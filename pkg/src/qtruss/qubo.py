"""QUBO and Ising model containers plus the JSON interchange format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boolpoly import BoolPoly
from .errors import ParseError


@dataclass
class QuboModel:
    """``offset + sum_i a_i x_i + sum_{i<j} b_ij x_i x_j``.

    Variables ``0..num_original-1`` are the problem's choice bits; anything
    above is an auxiliary introduced by quadratization, with ``aux_registry``
    mapping it to the pair whose product it stands for.
    """

    num_vars: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    aux_registry: dict[int, tuple[int, int]] = field(default_factory=dict)
    num_original: int | None = None
    var_labels: list[str] | None = None

    def __post_init__(self):
        if self.num_original is None:
            self.num_original = self.num_vars - len(self.aux_registry)
        for (i, j) in self.quadratic:
            if not i < j:
                raise ValueError(f"quadratic key {(i, j)} is not an ordered pair")
        if self.var_labels is None:
            self.var_labels = [f"q{i}" if i < self.num_original else f"aux{i}"
                               for i in range(self.num_vars)]

    @classmethod
    def from_poly(cls, p: BoolPoly, num_vars: int | None = None,
                  aux_registry: dict[int, tuple[int, int]] | None = None,
                  num_original: int | None = None) -> "QuboModel":
        if p.degree > 2:
            raise ValueError(f"polynomial has degree {p.degree}; quadratize it first")
        linear, quadratic, offset = {}, {}, 0.0
        for vs, c in p.items():
            if len(vs) == 0:
                offset += c
            elif len(vs) == 1:
                linear[vs[0]] = c
            else:
                quadratic[vs] = c
        n = max(p.num_vars, num_vars or 0)
        return cls(n, linear, quadratic, offset, dict(aux_registry or {}), num_original)

    def to_poly(self) -> BoolPoly:
        terms: dict = {(): self.offset}
        terms.update({(i,): c for i, c in self.linear.items()})
        terms.update({k: c for k, c in self.quadratic.items()})
        return BoolPoly(terms)

    def energy(self, x) -> float:
        """Exact energy, summed in a fixed order."""
        if len(x) < self.num_vars:
            raise ValueError(f"assignment has {len(x)} bits, model has {self.num_vars}")
        e = self.offset
        for i, c in sorted(self.linear.items()):
            if x[i]:
                e += c
        for (i, j), c in sorted(self.quadratic.items()):
            if x[i] and x[j]:
                e += c
        return e

    def energies(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=float)
        if bits.ndim == 1:
            bits = bits[None, :]
        e = np.full(bits.shape[0], self.offset)
        if self.linear:
            idx = np.fromiter(self.linear.keys(), dtype=np.int64)
            e += bits[:, idx] @ np.fromiter(self.linear.values(), dtype=float)
        if self.quadratic:
            ij = np.array(list(self.quadratic.keys()), dtype=np.int64)
            c = np.fromiter(self.quadratic.values(), dtype=float)
            e += (bits[:, ij[:, 0]] * bits[:, ij[:, 1]]) @ c
        return e

    @property
    def num_aux(self) -> int:
        return len(self.aux_registry)

    def max_abs_coeff(self) -> float:
        vals = list(self.linear.values()) + list(self.quadratic.values())
        return max((abs(v) for v in vals), default=0.0)

    # -- interchange JSON --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "num_original": self.num_original,
            "var_labels": list(self.var_labels),
            "linear": {str(i): c for i, c in sorted(self.linear.items())},
            "quadratic": {f"{i},{j}": c for (i, j), c in sorted(self.quadratic.items())},
            "offset": self.offset,
            "aux_registry": {str(y): list(pair) for y, pair in sorted(self.aux_registry.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QuboModel":
        try:
            linear = {int(k): float(v) for k, v in doc.get("linear", {}).items()}
            quadratic = {}
            for k, v in doc.get("quadratic", {}).items():
                i, j = (int(t) for t in k.split(","))
                quadratic[(min(i, j), max(i, j))] = quadratic.get((min(i, j), max(i, j)), 0.0) + float(v)
            registry = {int(k): (int(v[0]), int(v[1])) for k, v in doc.get("aux_registry", {}).items()}
            return cls(int(doc["num_vars"]), linear, quadratic, float(doc.get("offset", 0.0)),
                       registry, doc.get("num_original"), doc.get("var_labels"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed QUBO document: {exc!r}") from None

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "QuboModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc)) from None
        return cls.from_dict(doc)


@dataclass
class IsingModel:
    """``offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`` over spins in {-1, +1}."""

    h: dict[int, float]
    J: dict[tuple[int, int], float]
    offset: float = 0.0

    def energy(self, spins) -> float:
        e = self.offset
        for i, c in self.h.items():
            e += c * spins[i]
        for (i, j), c in self.J.items():
            e += c * spins[i] * spins[j]
        return e


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute ``x = (s + 1) / 2``; energies agree under that map."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = q.offset
    for i, a in q.linear.items():
        h[i] = h.get(i, 0.0) + a / 2
        offset += a / 2
    for (i, j), b in q.quadratic.items():
        J[(i, j)] = J.get((i, j), 0.0) + b / 4
        h[i] = h.get(i, 0.0) + b / 4
        h[j] = h.get(j, 0.0) + b / 4
        offset += b / 4
    h = {i: c for i, c in h.items() if c != 0.0}
    J = {k: c for k, c in J.items() if c != 0.0}
    return IsingModel(h, J, offset)


def bits_to_spins(x) -> list[int]:
    return [2 * int(b) - 1 for b in x]


def registry_fill(x, registry: dict[int, tuple[int, int]]) -> list[int]:
    """Set each auxiliary to the product it replaces (in creation order)."""
    x = list(x)
    for y in sorted(registry):
        i, j = registry[y]
        x[y] = x[i] & x[j]
    return x
