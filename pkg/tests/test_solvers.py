import io

import numpy as np
import pytest

from qtruss.boolpoly import BoolPoly, RationalExpr
from qtruss.errors import SingularPoint, TooManyVariables
from qtruss.pipeline import PipelineParams, process_objective, unary_constraint
from qtruss.qubo import QuboModel
from qtruss.solvers import (
    Sample,
    SamplerParams,
    SimulatedAnnealingSampler,
    _adjacency,
    _anneal,
    aggregate,
    brute_force_qubo,
    brute_force_valid,
    decode_sample,
    read_samples,
    read_seeds,
    simulated_anneal,
    write_samples,
)
from qtruss.symfem import ObjectiveFractional
from qtruss.truss import builtin_problem

from conftest import GOLDEN, objective

FAST = SamplerParams(num_reads=32, sweeps_per_read=200, seed=11)


def random_qubo(n, seed):
    rng = np.random.default_rng(seed)
    lin = {i: float(rng.normal()) for i in range(n)}
    quad = {(i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4}
    return QuboModel(n, lin, quad, 0.0)


def test_landscape_order_and_values():
    p = builtin_problem("two_truss")
    land = brute_force_valid(objective("two_truss"), p)
    assert land.indices.tolist() == list(range(1, 10))
    assert land.argmin_index == 7 and land.argmin_bits == GOLDEN["two_truss"][1]
    assert land.entries[6][0] == 7 and land.min_value == land.values[6]


def test_four_truss_argmin_bits():
    land = brute_force_valid(objective("four_truss"), builtin_problem("four_truss"))
    assert land.argmin_index == 7
    assert land.argmin_bits == [1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0]


def test_singular_point_detected():
    p = builtin_problem("two_truss")
    obj = ObjectiveFractional(RationalExpr(BoolPoly({(): 1}), BoolPoly({(0,): 1})))
    with pytest.raises(SingularPoint):
        brute_force_valid(obj, p)


def test_brute_force_empty_qubo():
    x, e = brute_force_qubo(QuboModel(3))
    assert e == 0 and x == [0, 0, 0]
    assert brute_force_qubo(QuboModel(0)) == ([], 0.0)


def test_brute_force_unary_only():
    q = QuboModel.from_poly(unary_constraint([0, 1, 2], 10.0))
    x, e, land = brute_force_qubo(q, return_landscape=True)
    assert e == -10 and sum(x) == 1
    minimizers = np.flatnonzero(land == land.min())
    assert sorted(minimizers.tolist()) == [1, 2, 4]  # 001, 010, 100


def test_brute_force_tie_goes_to_smallest_bitstring():
    q = QuboModel(2, {0: -1.0, 1: -1.0}, {(0, 1): 1.0})
    assert brute_force_qubo(q)[0] == [0, 1]


def test_brute_force_cap():
    with pytest.raises(TooManyVariables):
        brute_force_qubo(QuboModel(30))


def test_brute_force_chunking_agrees():
    q = random_qubo(14, 3)
    a = brute_force_qubo(q, return_landscape=True, chunk_bits=4)
    b = brute_force_qubo(q, return_landscape=True, chunk_bits=14)
    assert a[0] == b[0] and a[1] == b[1] and np.array_equal(a[2], b[2])


def test_sa_single_variable():
    samples = simulated_anneal(QuboModel(1, {0: -1.0}), FAST)
    assert samples == [Sample((1,), -1.0, 32)]


def test_sa_params_validation():
    with pytest.raises(ValueError):
        SamplerParams(num_reads=0)
    with pytest.raises(ValueError):
        SamplerParams(beta_start=1.0, beta_end=0.5)
    b = SamplerParams(sweeps_per_read=5).betas()
    assert b[0] == pytest.approx(0.1) and b[-1] == pytest.approx(10.0)
    assert np.all(np.diff(np.log(b)) == pytest.approx(np.log(100) / 4))


def test_sa_reproducible():
    q = random_qubo(16, 0)
    assert simulated_anneal(q, FAST) == simulated_anneal(q, FAST)


def test_sa_reads_independent_of_batching():
    # a read's outcome depends only on (seed, read index)
    q = random_qubo(12, 4)
    h, indptr, indices, data = _adjacency(q)
    betas = SamplerParams(sweeps_per_read=50).betas()
    seeds = read_seeds(5, 8)
    together = _anneal(h, indptr, indices, data, betas, seeds)
    for r in range(8):
        alone = _anneal(h, indptr, indices, data, betas, seeds[r:r + 1])
        assert np.array_equal(alone[0], together[r])


def test_sa_energy_honesty_and_order():
    q = random_qubo(18, 1)
    samples = simulated_anneal(q, FAST)
    assert sum(s.occurrences for s in samples) == FAST.num_reads
    for s in samples:
        assert s.energy == q.energy(s.assignment)
    keys = [(s.energy, s.assignment) for s in samples]
    assert keys == sorted(keys)


@pytest.mark.parametrize("seed", range(5))
def test_sa_contract_random_small_qubos(seed):
    q = random_qubo(16, 100 + seed)
    exact = brute_force_qubo(q)[1]
    best = simulated_anneal(q, SamplerParams(num_reads=64, seed=seed))[0].energy
    assert best >= exact - 1e-12
    assert best == pytest.approx(exact, abs=1e-9)


def test_sa_matches_brute_force_on_two_truss_qubo():
    p = builtin_problem("two_truss")
    q = process_objective(objective("two_truss").num, p, PipelineParams.for_problem(p))
    x, e = brute_force_qubo(q)
    s = SimulatedAnnealingSampler(SamplerParams(num_reads=16))(q, seed=3)[0]
    assert list(s.assignment) == x and s.energy == e


def test_aggregate_merges_duplicates():
    q = QuboModel(2, {0: 1.0})
    rows = np.array([[1, 0], [0, 1], [1, 0]], dtype=np.int8)
    out = aggregate(q, rows)
    assert out == [Sample((0, 1), 0.0, 1), Sample((1, 0), 1.0, 2)]


def test_decode():
    reg = {6: (0, 3)}
    bad = decode_sample(Sample((1, 0, 0, 1, 0, 0, 0), 0.0), reg, 6, 2, 3)
    assert bad.penalty_violation and bad.valid and bad.solution_index == 1
    assert bad.assignment == (1, 0, 0, 1, 0, 0)
    ok = decode_sample(Sample((0, 0, 1, 1, 0, 0, 0), 0.0), reg, 6, 2, 3)
    assert ok.valid and not ok.penalty_violation and ok.solution_index == 7
    zero = decode_sample(Sample((0,) * 7, 0.0), reg, 6, 2, 3)
    assert not zero.valid and zero.solution_index is None


def test_sample_json_lines():
    samples = [Sample((0, 1, 1), -2.5, 3), Sample((1, 0, 0), 1.0, 1)]
    buf = io.StringIO()
    write_samples(samples, buf)
    assert buf.getvalue().splitlines()[0] == '{"assignment": "011", "energy": -2.5, "occurrences": 3}'
    buf.seek(0)
    assert read_samples(buf) == samples
