"""Discrete truss sizing as pseudo-boolean optimization.

Build an exact rational objective in the area-choice bits with symbolic
FEM, turn it into QUBO models, and minimize it iteratively with an annealer
or by enumeration.
"""

from .boolpoly import BoolPoly, RationalExpr
from .pipeline import PipelineParams, SolveReport, dinkelbach_solve, process_objective
from .qubo import IsingModel, QuboModel, qubo_to_ising
from .solvers import (
    Sample,
    SamplerParams,
    SimulatedAnnealingSampler,
    brute_force_qubo,
    brute_force_valid,
    decode_sample,
)
from .symfem import ObjectiveFractional, build_objective, build_stresses
from .truss import TrussProblem, builtin_problem, load_problem, numeric_fem_solve, solution_index

__all__ = [
    "BoolPoly", "RationalExpr", "PipelineParams", "SolveReport", "dinkelbach_solve",
    "process_objective", "IsingModel", "QuboModel", "qubo_to_ising", "Sample",
    "SamplerParams", "SimulatedAnnealingSampler", "brute_force_qubo", "brute_force_valid",
    "decode_sample", "ObjectiveFractional", "build_objective", "build_stresses",
    "TrussProblem", "builtin_problem", "load_problem", "numeric_fem_solve", "solution_index",
]
