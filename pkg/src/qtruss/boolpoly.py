"""Multilinear polynomials over boolean variables.

A monomial is a set of variable indices, stored as an integer bitmask
(bit ``i`` set means variable ``i`` takes part).  Because every variable is
0 or 1, ``x * x == x`` and products of monomials are bitwise ORs, so every
polynomial stays multilinear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EmptyPolynomial, MissingVariable, ParseError

# Above this many term pairs a product goes through numpy.
_NUMPY_MUL_PAIRS = 4096
# Largest variable count for the dense bincount product.
_DENSE_MAX_VARS = 22


def mask_of(variables: Iterable[int]) -> int:
    mask = 0
    for v in variables:
        if v < 0:
            raise ValueError(f"negative variable index {v}")
        mask |= 1 << int(v)
    return mask


def vars_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _canonical_key(mask: int) -> tuple[int, tuple[int, ...]]:
    return (_popcount(mask), vars_of(mask))


class BoolPoly:
    """Immutable pseudo-boolean polynomial ``sum_m c_m prod_{i in m} x_i``.

    Construct from a mapping of monomials to coefficients, where a monomial is
    either an int bitmask or an iterable of variable indices::

        BoolPoly({(): 1.0, (0, 1): 2.0})   # 1 + 2 x0 x1

    Zero coefficients are dropped; repeated indices in one monomial collapse.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        acc: dict[int, float] = {}
        if terms:
            for mono, coeff in terms.items():
                m = mono if isinstance(mono, (int, np.integer)) else mask_of(mono)
                acc[int(m)] = acc.get(int(m), 0.0) + float(coeff)
        self._terms = {m: c for m, c in acc.items() if c != 0.0}
        self._hash = None

    @classmethod
    def _from_masks(cls, terms: dict[int, float]) -> "BoolPoly":
        # trusted fast path: caller guarantees int keys and float values
        obj = cls.__new__(cls)
        obj._terms = {m: c for m, c in terms.items() if c != 0.0}
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, value: float) -> "BoolPoly":
        return cls._from_masks({0: float(value)})

    @classmethod
    def variable(cls, index: int, coeff: float = 1.0) -> "BoolPoly":
        return cls._from_masks({1 << index: float(coeff)})

    @classmethod
    def linear(cls, coeffs: Mapping[int, float]) -> "BoolPoly":
        return cls._from_masks({1 << int(i): float(c) for i, c in coeffs.items()})

    # -- inspection -----------------------------------------------------

    @property
    def terms(self) -> dict[int, float]:
        """Read-only view semantics: a copy of the mask -> coefficient map."""
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple[int, ...], float]]:
        """Terms in canonical order (by degree, then variable tuple)."""
        for m in sorted(self._terms, key=_canonical_key):
            yield vars_of(m), self._terms[m]

    def coeff(self, monomial: Iterable[int] | int = ()) -> float:
        m = monomial if isinstance(monomial, int) else mask_of(monomial)
        return self._terms.get(m, 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(_popcount(m) for m in self._terms)

    @property
    def support(self) -> int:
        """Bitmask of all variables referenced."""
        s = 0
        for m in self._terms:
            s |= m
        return s

    def variables(self) -> tuple[int, ...]:
        return vars_of(self.support)

    @property
    def num_vars(self) -> int:
        """One past the largest variable index used (0 for constants)."""
        return self.support.bit_length()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = BoolPoly.constant(other)
        if not isinstance(other, BoolPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "BoolPoly({})"
        parts = []
        for vs, c in self.items():
            name = "*".join(f"x{v}" for v in vs) or "1"
            parts.append(f"{name}: {c!r}")
        if len(parts) > 8:
            parts = parts[:8] + [f"... ({len(self._terms)} terms)"]
        return "BoolPoly({" + ", ".join(parts) + "})"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> "BoolPoly":
        if isinstance(other, (int, float)):
            other = BoolPoly.constant(other)
        if not isinstance(other, BoolPoly):
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return BoolPoly._from_masks(out)

    __radd__ = __add__

    def __neg__(self) -> "BoolPoly":
        return BoolPoly._from_masks({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "BoolPoly":
        if isinstance(other, (int, float)):
            other = BoolPoly.constant(other)
        if not isinstance(other, BoolPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "BoolPoly":
        return (-self) + other

    def scale(self, factor: float) -> "BoolPoly":
        factor = float(factor)
        return BoolPoly._from_masks({m: c * factor for m, c in self._terms.items()})

    def __mul__(self, other) -> "BoolPoly":
        if isinstance(other, (int, float, np.floating)):
            return self.scale(other)
        if not isinstance(other, BoolPoly):
            return NotImplemented
        return _mul(self, other)

    def __rmul__(self, other) -> "BoolPoly":
        if isinstance(other, (int, float, np.floating)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> "BoolPoly":
        if n < 0:
            raise ValueError("negative power")
        result = BoolPoly.constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- evaluation -------------------------------------------------------

    def evaluate(self, assignment) -> float:
        """Value at a 0/1 assignment (a sequence indexed by variable, or a mapping)."""
        if isinstance(assignment, Mapping):
            amask = 0
            for v in self.variables():
                if v not in assignment:
                    raise MissingVariable(v)
                if assignment[v]:
                    amask |= 1 << v
        else:
            n = len(assignment)
            if self.num_vars > n:
                raise MissingVariable(self.num_vars - 1)
            amask = mask_of(i for i in range(n) if assignment[i])
        total = 0.0
        for m, c in self._terms.items():
            if m & amask == m:
                total += c
        return total

    __call__ = evaluate

    def evaluate_many(self, bits) -> np.ndarray:
        """Vectorized evaluation; ``bits`` is a (rows, V) 0/1 array."""
        bits = np.asarray(bits, dtype=np.int64)
        if bits.ndim == 1:
            bits = bits[None, :]
        rows, nv = bits.shape
        if self.num_vars > nv:
            raise MissingVariable(self.num_vars - 1)
        if not self._terms:
            return np.zeros(rows)
        if nv > 62:
            return np.array([self.evaluate(row) for row in bits])
        weights = np.left_shift(np.int64(1), np.arange(nv, dtype=np.int64))
        amasks = bits @ weights
        masks = np.fromiter(self._terms.keys(), dtype=np.int64, count=len(self._terms))
        coeffs = np.fromiter(self._terms.values(), dtype=float, count=len(self._terms))
        hit = (amasks[:, None] & masks[None, :]) == masks[None, :]
        return hit.astype(float) @ coeffs

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for vs, c in self.items():
            name = "*".join(f"v{v}" for v in vs) or "1"
            lines.append(f"{c!r}\t{name}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "BoolPoly":
        terms: dict[int, float] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                coeff_s, mono_s = line.split("\t")
                coeff = float(coeff_s)
                if mono_s == "1":
                    m = 0
                else:
                    m = mask_of(int(tok[1:]) for tok in mono_s.split("*") if tok[0] == "v")
                    if len(mono_s.split("*")) != len(vars_of(m)):
                        raise ValueError("bad or repeated variable token")
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {lineno}: {raw!r}: {exc}") from None
            terms[m] = terms.get(m, 0.0) + coeff
        return cls._from_masks(terms)


def _mul(p: BoolPoly, q: BoolPoly) -> BoolPoly:
    if not p._terms or not q._terms:
        return BoolPoly()
    if len(p) > len(q):
        p, q = q, p
    nv = max(p.num_vars, q.num_vars)
    if len(p) * len(q) <= _NUMPY_MUL_PAIRS or nv > 62:
        out: dict[int, float] = {}
        qt = list(q._terms.items())
        for mp, cp in p._terms.items():
            for mq, cq in qt:
                m = mp | mq
                out[m] = out.get(m, 0.0) + cp * cq
        return BoolPoly._from_masks(out)

    qm = np.fromiter(q._terms.keys(), dtype=np.int64, count=len(q))
    qc = np.fromiter(q._terms.values(), dtype=float, count=len(q))
    if nv <= _DENSE_MAX_VARS:
        dense = np.zeros(1 << nv)
        for mp, cp in p._terms.items():
            dense += np.bincount(qm | mp, weights=qc * cp, minlength=1 << nv)
        nz = np.flatnonzero(dense)
        return BoolPoly._from_masks(dict(zip(nz.tolist(), dense[nz].tolist())))

    pm = np.fromiter(p._terms.keys(), dtype=np.int64, count=len(p))
    pc = np.fromiter(p._terms.values(), dtype=float, count=len(p))
    masks = (pm[:, None] | qm[None, :]).ravel()
    coeffs = (pc[:, None] * qc[None, :]).ravel()
    uniq, inv = np.unique(masks, return_inverse=True)
    summed = np.bincount(inv, weights=coeffs)
    return BoolPoly._from_masks(dict(zip(uniq.tolist(), summed.tolist())))


# -- module-level operations ------------------------------------------------


def add(p: BoolPoly, q: BoolPoly) -> BoolPoly:
    return p + q


def mul(p: BoolPoly, q: BoolPoly) -> BoolPoly:
    return p * q


def evaluate(p: BoolPoly, assignment) -> float:
    return p.evaluate(assignment)


def truncate_above_order(p: BoolPoly, k: int) -> BoolPoly:
    """Drop every monomial with more than ``k`` variables.

    Assignments with at most ``k`` ones cannot activate such monomials, so
    their values are untouched.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    return BoolPoly._from_masks({m: c for m, c in p._terms.items() if _popcount(m) <= k})


def truncate_below_magnitude(p: BoolPoly, eps: float) -> BoolPoly:
    if not eps > 0:
        raise ValueError("eps must be positive")
    return BoolPoly._from_masks({m: c for m, c in p._terms.items() if abs(c) >= eps})


def max_abs_coeff(p: BoolPoly) -> float:
    if not p._terms:
        raise EmptyPolynomial("max_abs_coeff of the zero polynomial")
    return max(abs(c) for c in p._terms.values())


@dataclass(frozen=True)
class RationalExpr:
    """Quotient ``num / den`` of two boolean polynomials."""

    num: BoolPoly
    den: BoolPoly

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("denominator is the zero polynomial")

    def evaluate(self, assignment) -> float:
        d = self.den.evaluate(assignment)
        if d == 0.0:
            raise ZeroDivisionError("denominator vanishes at this assignment")
        return self.num.evaluate(assignment) / d

    __call__ = evaluate

    def evaluate_many(self, bits) -> np.ndarray:
        d = self.den.evaluate_many(bits)
        n = self.num.evaluate_many(bits)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d != 0.0, n / np.where(d != 0.0, d, 1.0), np.nan)

    def normalized(self) -> tuple["RationalExpr", float]:
        """Divide num and den by the larger of their max coefficients.

        Returns the rescaled expression and the divisor used.
        """
        scale = max_abs_coeff(self.den)
        if self.num:
            scale = max(scale, max_abs_coeff(self.num))
        if not math.isfinite(scale) or scale == 0.0:
            raise OverflowError("cannot normalize non-finite coefficients")
        return RationalExpr(self.num.scale(1.0 / scale), self.den.scale(1.0 / scale)), scale


def sum_polys(polys: Sequence[BoolPoly]) -> BoolPoly:
    out: dict[int, float] = {}
    for p in polys:
        for m, c in p._terms.items():
            out[m] = out.get(m, 0.0) + c
    return BoolPoly._from_masks(out)
