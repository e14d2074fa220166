"""Exhaustive oracles shared by the test modules."""

import numpy as np

from qtruss.qubo import QuboModel
from qtruss.solvers import all_assignments


def condition_on_original(q: QuboModel, x) -> QuboModel:
    """QUBO over the auxiliaries alone with the original bits fixed to ``x``."""
    n0 = q.num_original
    offset = q.offset + sum(c for i, c in q.linear.items() if i < n0 and x[i])
    linear, quadratic = {}, {}
    for i, c in q.linear.items():
        if i >= n0:
            linear[i - n0] = linear.get(i - n0, 0.0) + c
    for (i, j), c in q.quadratic.items():
        if j < n0:
            if x[i] and x[j]:
                offset += c
        elif i < n0:
            if x[i]:
                linear[j - n0] = linear.get(j - n0, 0.0) + c
        else:
            quadratic[(i - n0, j - n0)] = c
    return QuboModel(q.num_vars - n0, linear, quadratic, offset, num_original=q.num_vars - n0)


def min_over_aux(q: QuboModel, x) -> float:
    sub = condition_on_original(q, x)
    if sub.num_vars == 0:
        return sub.offset
    return float(sub.energies(all_assignments(sub.num_vars)).min())
