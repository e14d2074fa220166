"""Minimization backends: exhaustive enumeration and simulated annealing.

Every QUBO sampler here is a callable ``sampler(qubo, seed) -> list[Sample]``
returning samples sorted by energy, then by bitstring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .boolpoly import BoolPoly
from .errors import SingularPoint, TooManyVariables
from .qubo import QuboModel
from .symfem import ObjectiveFractional
from .truss import TrussProblem, is_valid, solution_index, valid_assignments


@dataclass(frozen=True)
class Sample:
    assignment: tuple[int, ...]
    energy: float
    occurrences: int = 1

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.assignment)

    def to_json(self) -> str:
        return json.dumps({"assignment": self.bitstring, "energy": self.energy,
                           "occurrences": self.occurrences})

    @classmethod
    def from_json(cls, line: str) -> "Sample":
        doc = json.loads(line)
        return cls(tuple(int(c) for c in doc["assignment"]), float(doc["energy"]),
                   int(doc.get("occurrences", 1)))


def write_samples(samples: Iterable[Sample], fh) -> None:
    for s in samples:
        fh.write(s.to_json() + "\n")


def read_samples(fh) -> list[Sample]:
    return [Sample.from_json(line) for line in fh if line.strip()]


@dataclass(frozen=True)
class SamplerParams:
    num_reads: int = 256
    sweeps_per_read: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1 or self.sweeps_per_read < 1:
            raise ValueError("num_reads and sweeps_per_read must be at least 1")
        if not 0 < self.beta_start < self.beta_end:
            raise ValueError("need 0 < beta_start < beta_end")

    def betas(self) -> np.ndarray:
        if self.sweeps_per_read == 1:
            return np.array([self.beta_end])
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps_per_read)


# -- brute force ----------------------------------------------------------------


@dataclass
class Landscape:
    """Objective value at every valid assignment, in solution-index order."""

    indices: np.ndarray
    bits: np.ndarray
    values: np.ndarray

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def argmin_index(self) -> int:
        # np.argmin returns the first minimum, i.e. the lowest solution index
        return int(self.indices[int(np.argmin(self.values))])

    @property
    def argmin_bits(self) -> list[int]:
        return self.bits[int(np.argmin(self.values))].tolist()

    @property
    def min_value(self) -> float:
        return float(self.values.min())


def brute_force_valid(obj: ObjectiveFractional | BoolPoly, p: TrussProblem) -> Landscape:
    """Evaluate ``obj`` at all C**N one-hot assignments."""
    bits = valid_assignments(p.num_elements, p.num_choices)
    if isinstance(obj, ObjectiveFractional):
        den = obj.den.evaluate_many(bits)
        if np.any(den == 0.0):
            bad = int(np.flatnonzero(den == 0.0)[0]) + 1
            raise SingularPoint(f"objective denominator vanishes at valid solution {bad}")
        values = obj.num.evaluate_many(bits) / den
    else:
        values = obj.evaluate_many(bits)
    return Landscape(np.arange(1, len(bits) + 1), bits, values)


def all_assignments(n: int) -> np.ndarray:
    """Rows of all 2**n bit vectors in lexicographic order (variable 0 first)."""
    k = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((k[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def brute_force_qubo(q: QuboModel, cap: int = 24, return_landscape: bool = False,
                     chunk_bits: int = 16):
    """Exact minimum over all 2**V assignments.

    Ties go to the lexicographically smallest bitstring.  Returns
    ``(assignment, energy)`` or ``(assignment, energy, energies)``.
    """
    n = q.num_vars
    if n > cap:
        raise TooManyVariables(f"{n} variables exceeds the enumeration cap of {cap}")
    if n == 0:
        result = ([], q.offset)
        return result + (np.array([q.offset]),) if return_landscape else result
    chunk_bits = min(chunk_bits, n)
    tail = all_assignments(chunk_bits)
    head_n = n - chunk_bits
    best_e, best_x = math.inf, None
    parts = []
    for h in range(1 << head_n):
        head = [(h >> (head_n - 1 - b)) & 1 for b in range(head_n)]
        rows = np.hstack([np.tile(np.array(head, dtype=np.int8), (len(tail), 1)), tail])
        e = q.energies(rows)
        if return_landscape:
            parts.append(e)
        k = int(np.argmin(e))
        if e[k] < best_e:
            best_e, best_x = float(e[k]), rows[k].tolist()
    best_e = q.energy(best_x)
    if return_landscape:
        return best_x, best_e, np.concatenate(parts)
    return best_x, best_e


def brute_force_sampler(q: QuboModel, seed=None) -> list[Sample]:
    x, e = brute_force_qubo(q)
    return [Sample(tuple(x), e, 1)]


# -- simulated annealing ---------------------------------------------------------


@numba.njit(cache=True)
def _anneal(h, indptr, indices, data, betas, seeds):  # pragma: no cover - compiled
    n = h.shape[0]
    reads = seeds.shape[0]
    out = np.zeros((reads, n), dtype=np.int8)
    x = np.zeros(n, dtype=np.int8)
    field = np.zeros(n)
    for r in range(reads):
        np.random.seed(seeds[r])
        for i in range(n):
            x[i] = 1 if np.random.random() < 0.5 else 0
        # field[i] = h[i] + sum_j J[i, j] x[j]
        for i in range(n):
            field[i] = h[i]
        for i in range(n):
            if x[i]:
                for k in range(indptr[i], indptr[i + 1]):
                    field[indices[k]] += data[k]
        for beta in betas:
            for i in range(n):
                delta = field[i] if x[i] == 0 else -field[i]
                if delta <= 0.0 or np.random.random() < math.exp(-beta * delta):
                    x[i] = 1 - x[i]
                    sgn = 1.0 if x[i] == 1 else -1.0
                    for k in range(indptr[i], indptr[i + 1]):
                        field[indices[k]] += sgn * data[k]
        out[r, :] = x
    return out


def _adjacency(q: QuboModel):
    n = q.num_vars
    h = np.zeros(n)
    for i, c in q.linear.items():
        h[i] += c
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), c in sorted(q.quadratic.items()):
        nbrs[i].append((j, c))
        nbrs[j].append((i, c))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(nbrs[i])
    indices = np.array([j for row in nbrs for j, _ in row], dtype=np.int64)
    data = np.array([c for row in nbrs for _, c in row], dtype=float)
    return h, indptr, indices, data


def read_seeds(seed: int, num_reads: int) -> np.ndarray:
    """Per-read 32-bit seeds derived from ``(seed, read index)``."""
    return np.array([np.random.SeedSequence([seed & (2**64 - 1), r]).generate_state(1)[0]
                     for r in range(num_reads)], dtype=np.uint32)


def aggregate(q: QuboModel, rows: np.ndarray) -> list[Sample]:
    """Merge duplicate rows, recompute energies exactly, sort by (energy, bits)."""
    counts: dict[tuple[int, ...], int] = {}
    for row in rows:
        key = tuple(int(b) for b in row)
        counts[key] = counts.get(key, 0) + 1
    samples = [Sample(x, q.energy(x), k) for x, k in counts.items()]
    samples.sort(key=lambda s: (s.energy, s.assignment))
    return samples


def simulated_anneal(q: QuboModel, params: SamplerParams = SamplerParams()) -> list[Sample]:
    """Single-flip Metropolis annealing, ``num_reads`` independent restarts."""
    if q.num_vars == 0:
        return [Sample((), q.offset, params.num_reads)]
    h, indptr, indices, data = _adjacency(q)
    seeds = read_seeds(params.seed, params.num_reads)
    rows = _anneal(h, indptr, indices, data, params.betas(), seeds)
    return aggregate(q, rows)


class SimulatedAnnealingSampler:
    """Sampler-contract wrapper; ``seed`` overrides ``params.seed`` per call."""

    def __init__(self, params: SamplerParams = SamplerParams()):
        self.params = params

    def __call__(self, q: QuboModel, seed: int | None = None) -> list[Sample]:
        params = self.params
        if seed is not None:
            params = SamplerParams(params.num_reads, params.sweeps_per_read,
                                   params.beta_start, params.beta_end, int(seed))
        return simulated_anneal(q, params)


# -- decoding --------------------------------------------------------------------


@dataclass(frozen=True)
class Decoded:
    assignment: tuple[int, ...]
    valid: bool
    penalty_violation: bool
    solution_index: int | None


def decode_sample(s: Sample, registry: dict[int, tuple[int, int]], num_original: int,
                  num_elements: int | None = None, num_choices: int | None = None) -> Decoded:
    """Drop auxiliaries; flag any auxiliary that disagrees with its pair product."""
    x = s.assignment
    violated = any(x[y] != (x[i] & x[j]) for y, (i, j) in registry.items())
    orig = tuple(x[:num_original])
    if num_elements is None or num_choices is None:
        return Decoded(orig, True, violated, None)
    ok = is_valid(orig, num_elements, num_choices)
    idx = solution_index(orig, num_elements, num_choices) if ok else None
    return Decoded(orig, ok, violated, idx)
