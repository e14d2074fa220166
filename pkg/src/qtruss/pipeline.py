"""From a fractional objective to QUBO models, and the iterative solve around them.

The fractional objective ``N/D`` is minimized by repeatedly minimizing the
polynomial ``N - lam * D`` and resetting ``lam`` to the true objective at the
minimizer (Dinkelbach's method).  Each step polynomial goes through the
processing passes below before it is handed to a QUBO sampler.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import boolpoly
from .boolpoly import BoolPoly, max_abs_coeff, truncate_above_order, truncate_below_magnitude
from .errors import AllIterationsInvalid, SamplerFailure
from .qubo import QuboModel
from .solvers import Sample, all_assignments, decode_sample
from .symfem import ObjectiveFractional
from .truss import TrussProblem, solution_index, valid_assignments

log = logging.getLogger(__name__)

Sampler = Callable[[QuboModel, int], list[Sample]]


@dataclass(frozen=True)
class PipelineParams:
    max_iters: int = 15
    delta: float = 1e-6
    max_order: int = 2
    c_user: float = 1.0
    c_NL: float = 0.1
    prec_eps: float = 1e-8
    unary_lambda: float = 10.0
    quad_strength: float = 10.0

    def __post_init__(self):
        for name in ("max_iters", "delta", "c_user", "c_NL", "prec_eps",
                     "unary_lambda", "quad_strength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_order < 2:
            raise ValueError("max_order must be at least 2")

    @classmethod
    def for_problem(cls, p: TrussProblem, **overrides) -> "PipelineParams":
        """Benchmark defaults: order cap = element count, penalties 10 (20 from 4 elements)."""
        strength = 20.0 if p.num_elements >= 4 else 10.0
        base = dict(max_order=max(2, p.num_elements), unary_lambda=strength,
                    quad_strength=strength)
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> "PipelineParams":
        d = asdict(self)
        d.update(changes)
        return PipelineParams(**d)


# -- passes ---------------------------------------------------------------------


def linear_scale(p: BoolPoly, c_user: float) -> BoolPoly:
    if not c_user > 0:
        raise ValueError("c_user must be positive")
    return p.scale(c_user / max_abs_coeff(p))


def nonlinear_scale(p: BoolPoly, c_NL: float) -> BoolPoly:
    """Saturating per-coefficient map ``c -> c / (|c| + c_NL)``.

    Small coefficients grow relative to large ones.  Applied per term, so
    the minimizer of the polynomial may move.
    """
    if not c_NL > 0:
        raise ValueError("c_NL must be positive")
    out = {}
    for m, c in p.terms.items():
        if c > 0:
            out[m] = c / (c + c_NL)
        else:
            out[m] = -c / (c - c_NL)
    return BoolPoly(out)


def unary_constraint(element_vars, lam: float) -> BoolPoly:
    """One-hot penalty ``lam * ((sum q) - 1)**2`` without its constant.

    Equals ``lam * (k*k - 2*k)`` when ``k`` of the variables are set.
    """
    vs = list(element_vars)
    if len(vs) < 2:
        raise ValueError("need at least two variables")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    terms = {(v,): -lam for v in vs}
    for a in range(len(vs)):
        for b in range(a + 1, len(vs)):
            terms[(vs[a], vs[b])] = 2.0 * lam
    return BoolPoly(terms)


def _pair_counts(terms: dict[int, float]) -> Counter:
    counts: Counter = Counter()
    for m in terms:
        vs = boolpoly.vars_of(m)
        if len(vs) < 3:
            continue
        for a in range(len(vs)):
            for b in range(a + 1, len(vs)):
                counts[(vs[a], vs[b])] += 1
    return counts


def quadratize(p: BoolPoly, strength: float, num_original: int | None = None) -> QuboModel:
    """Reduce to degree 2 by substituting auxiliaries for variable pairs.

    Each round takes the pair shared by the most monomials of degree >= 3
    (ties: smallest indices), adds a fresh variable ``y`` for it in those
    monomials, and adds ``strength * (xi xj - 2 xi y - 2 xj y + 3 y)``, which
    is zero when ``y == xi xj`` and at least ``strength`` otherwise.
    """
    if not strength > 0:
        raise ValueError("strength must be positive")
    num_original = max(p.num_vars, num_original or 0)
    terms = dict(p.terms)
    registry: dict[int, tuple[int, int]] = {}
    nxt = num_original
    while True:
        counts = _pair_counts(terms)
        if not counts:
            break
        (i, j), _ = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        y = nxt
        nxt += 1
        registry[y] = (i, j)
        pair = (1 << i) | (1 << j)
        new: dict[int, float] = {}
        for m, c in terms.items():
            if m & pair == pair and bin(m).count("1") >= 3:
                m = (m & ~pair) | (1 << y)
            new[m] = new.get(m, 0.0) + c
        for m, c in ((pair, strength), ((1 << i) | (1 << y), -2 * strength),
                     ((1 << j) | (1 << y), -2 * strength), (1 << y, 3 * strength)):
            new[m] = new.get(m, 0.0) + c
        terms = {m: c for m, c in new.items() if c != 0.0}
    return QuboModel.from_poly(BoolPoly(terms), num_vars=nxt, aux_registry=registry,
                               num_original=num_original)


def processed_polynomial(nf: BoolPoly, p: TrussProblem | None, params: PipelineParams) -> BoolPoly:
    """All passes except quadratization."""
    out = truncate_above_order(nf, params.max_order)
    out = linear_scale(out, params.c_user)
    out = nonlinear_scale(out, params.c_NL)
    out = truncate_below_magnitude(out, params.prec_eps)
    if p is not None:
        # penalties are added after truncation so they are never cut
        for n in range(p.num_elements):
            out = out + unary_constraint(p.element_vars(n), params.unary_lambda)
    return out


def process_objective(nf: BoolPoly, p: TrussProblem | None, params: PipelineParams) -> QuboModel:
    """Order truncation, linear scale, non-linear scale, precision truncation,
    one-hot penalties, quadratization."""
    num_original = p.num_vars if p is not None else nf.num_vars
    return quadratize(processed_polynomial(nf, p, params), params.quad_strength, num_original)


# -- iterative fractional solve -------------------------------------------------


@dataclass
class IterationRecord:
    iter: int
    lambda_in: float
    poly_terms: int
    poly_degree: int
    qubo_vars: int | None
    num_aux: int | None
    best_sample: str
    best_energy: float
    sample_valid: bool
    penalty_violation: bool
    solution_index: int | None
    lambda_out: float


@dataclass
class SolveReport:
    iterations: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    final_assignment: list[int] | None = None
    final_objective_value: float | None = None
    final_solution_index: int | None = None
    rng_seed: int | None = None

    @property
    def status(self) -> str:
        if self.converged:
            return "converged"
        return "max_iters" if self.final_assignment is not None else "no_valid_sample"

    def to_jsonl(self) -> str:
        lines = [json.dumps(asdict(r)) for r in self.iterations]
        summary = {"summary": True, "status": self.status, "converged": self.converged,
                   "final_assignment": self.final_assignment,
                   "final_solution_index": self.final_solution_index,
                   "final_objective_value": self.final_objective_value,
                   "rng_seed": self.rng_seed}
        return "\n".join(lines + [json.dumps(summary)]) + "\n"


def iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence([seed & (2**64 - 1), iteration]).generate_state(1, np.uint64)[0])


def _exact_step(nf: BoolPoly, obj: ObjectiveFractional, p: TrussProblem | None):
    """Minimize the step polynomial over the valid set (or every point where D > 0)."""
    if p is not None:
        cand = valid_assignments(p.num_elements, p.num_choices)
    else:
        cand = all_assignments(max(obj.num.num_vars, obj.den.num_vars))
        cand = cand[obj.den.evaluate_many(cand) > 0]
    vals = nf.evaluate_many(cand)
    k = int(np.argmin(vals))
    return tuple(int(b) for b in cand[k]), float(vals[k])


def dinkelbach_solve(obj: ObjectiveFractional, p: TrussProblem | None,
                     sampler: Sampler | None = None,
                     params: PipelineParams | None = None, seed: int = 0) -> SolveReport:
    """Minimize ``obj`` by iterating on ``N - lam D``.

    With ``sampler=None`` each step is solved exactly over the valid
    assignments, skipping the QUBO passes.  Otherwise the step polynomial is
    processed into a QUBO and the sampler's lowest-energy sample is decoded.
    An invalid decoded sample leaves ``lam`` unchanged; the iteration still
    counts.  Stops once ``|lam_out - lam_in| <= delta`` or after ``max_iters``.
    """
    if params is None:
        params = PipelineParams.for_problem(p) if p is not None else PipelineParams()
    N, D = obj.num, obj.den
    report = SolveReport(rng_seed=seed)
    lam = 0.0
    for it in range(1, params.max_iters + 1):
        nf = N - D.scale(lam)
        qubo_vars = num_aux = None
        violation = False
        if sampler is None:
            x, energy = _exact_step(nf, obj, p)
        else:
            qubo = process_objective(nf, p, params)
            qubo_vars, num_aux = qubo.num_vars, qubo.num_aux
            try:
                samples = sampler(qubo, iteration_seed(seed, it))
            except Exception as exc:  # adapters may fail in arbitrary ways
                raise SamplerFailure(f"sampler raised at iteration {it}: {exc}") from exc
            if not samples:
                raise SamplerFailure(f"sampler returned no samples at iteration {it}")
            best = samples[0]
            dec = decode_sample(best, qubo.aux_registry, qubo.num_original)
            x, energy, violation = dec.assignment, best.energy, dec.penalty_violation
        if p is not None:
            valid = sum(x) == p.num_elements and all(
                sum(x[n * p.num_choices:(n + 1) * p.num_choices]) == 1
                for n in range(p.num_elements))
        else:
            valid = D.evaluate(x) > 0
        idx = solution_index(x, p.num_elements, p.num_choices) if (valid and p) else None
        lam_out = obj.evaluate(x) if valid else lam
        report.iterations.append(IterationRecord(
            it, lam, len(nf), nf.degree, qubo_vars, num_aux, "".join(map(str, x)),
            energy, valid, violation, idx, lam_out))
        if not valid:
            log.info("iteration %d: best sample %s is invalid; lambda kept at %g",
                     it, "".join(map(str, x)), lam)
            continue
        report.final_assignment = list(x)
        report.final_objective_value = lam_out
        report.final_solution_index = idx
        done = abs(lam_out - lam) <= params.delta
        lam = lam_out
        if done:
            report.converged = True
            break
    if report.final_assignment is None:
        err = AllIterationsInvalid(f"no valid sample in {params.max_iters} iterations")
        err.report = report
        raise err
    return report


def fixed_point_residual(obj: ObjectiveFractional, p: TrussProblem, lam: float) -> float:
    """``min_q (N - lam D)`` over the valid set, relative to the step polynomial's scale."""
    nf = obj.num - obj.den.scale(lam)
    vals = nf.evaluate_many(valid_assignments(p.num_elements, p.num_choices))
    return float(vals.min()) / max_abs_coeff(nf)
