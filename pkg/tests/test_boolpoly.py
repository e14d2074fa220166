import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtruss.boolpoly import (
    BoolPoly,
    RationalExpr,
    add,
    evaluate,
    max_abs_coeff,
    mul,
    truncate_above_order,
    truncate_below_magnitude,
)
from qtruss.errors import EmptyPolynomial, MissingVariable, ParseError

from conftest import reference_stress_e1


def polys(max_vars=6, max_terms=12):
    mono = st.frozensets(st.integers(0, max_vars - 1), max_size=max_vars).map(tuple)
    coeff = st.floats(-100, 100, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
    return st.dictionaries(mono, coeff, max_size=max_terms).map(BoolPoly)


def cube(n):
    return [list(bits) for bits in itertools.product((0, 1), repeat=n)]


def test_add_examples():
    assert BoolPoly({(): 1}) + BoolPoly({(): -1}) == BoolPoly()
    assert len(BoolPoly({(): 1}) + BoolPoly({(): -1})) == 0
    assert add(BoolPoly({(0,): 2}), BoolPoly({(0,): 3, (1,): 1})) == BoolPoly({(0,): 5, (1,): 1})


def test_mul_examples():
    x0 = BoolPoly({(0,): 1})
    assert mul(x0, x0) == x0
    assert BoolPoly({(0,): 1, (): 1}) * BoolPoly({(1,): 1}) == BoolPoly({(0, 1): 1, (1,): 1})


def test_evaluate_examples():
    p = BoolPoly({(0, 1): 2, (): 1})
    assert evaluate(p, [1, 1]) == 3
    assert evaluate(p, [1, 0]) == 1
    assert p({0: 0, 1: 0}) == 1
    with pytest.raises(MissingVariable):
        p({0: 1})
    with pytest.raises(MissingVariable):
        p([1])


def test_repeated_index_collapses():
    assert BoolPoly({(2, 2, 0): 1.5}) == BoolPoly({(0, 2): 1.5})


def test_truncate_examples():
    assert truncate_above_order(BoolPoly({(0, 1, 2): 5, (0,): 1}), 2) == BoolPoly({(0,): 1})
    assert truncate_below_magnitude(BoolPoly({(0,): 1e-12, (1,): 0.5}), 1e-8) == BoolPoly({(1,): 0.5})
    p = BoolPoly({(0,): 0.1, (1, 2): -3})
    assert truncate_below_magnitude(p, 1e-8) == p


def test_max_abs_coeff_examples():
    assert max_abs_coeff(BoolPoly({(0,): -3, (1,): 2})) == 3
    assert max_abs_coeff(BoolPoly({(): 7})) == 7
    with pytest.raises(EmptyPolynomial):
        max_abs_coeff(BoolPoly())


def test_reference_denominator_max_term():
    _, den = reference_stress_e1()
    assert max_abs_coeff(den) == pytest.approx(8.1602493e32, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_ring_homomorphism_exhaustive(p, q):
    # checked on every point of {0,1}^6
    for x in cube(6):
        a, b = p(x), q(x)
        assert (p + q)(x) == pytest.approx(a + b, abs=1e-9)
        assert (p - q)(x) == pytest.approx(a - b, abs=1e-9)
        assert (p * q)(x) == pytest.approx(a * b, rel=1e-9, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(polys(max_vars=12, max_terms=40), polys(max_vars=12, max_terms=40))
def test_ring_homomorphism_twelve_vars(p, q):
    bits = np.array(cube(12), dtype=np.int8)
    np.testing.assert_allclose((p * q).evaluate_many(bits),
                               p.evaluate_many(bits) * q.evaluate_many(bits), rtol=1e-9, atol=1e-6)
    np.testing.assert_allclose((p + q).evaluate_many(bits),
                               p.evaluate_many(bits) + q.evaluate_many(bits), atol=1e-9)


def test_large_product_path_matches_small():
    rng = np.random.default_rng(5)
    def rand_poly(n_terms, nv):
        return BoolPoly({tuple(np.flatnonzero(rng.random(nv) < 0.3)): rng.normal()
                         for _ in range(n_terms)})
    p, q = rand_poly(120, 14), rand_poly(120, 14)
    bits = np.array(cube(14), dtype=np.int8)
    np.testing.assert_allclose((p * q).evaluate_many(bits),
                               p.evaluate_many(bits) * q.evaluate_many(bits), rtol=1e-9, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(polys(), st.integers(0, 6))
def test_truncation_preserves_low_weight_values(p, k):
    t = truncate_above_order(p, k)
    assert t.degree <= k
    for x in cube(6):
        if sum(x) <= k:
            assert t(x) == pytest.approx(p(x), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(polys(), st.floats(1e-3, 10))
def test_magnitude_truncation_perturbation_bound(p, eps):
    t = truncate_below_magnitude(p, eps)
    dropped = sum(abs(c) for c in p.terms.values() if abs(c) < eps)
    for x in cube(6):
        assert abs(t(x) - p(x)) <= dropped + 1e-12


def test_weight_two_truncation_on_two_truss_objective():
    from conftest import objective

    num = objective("two_truss").num
    assert len(num) == 63
    assert len(truncate_above_order(num, 2)) <= 21


def test_evaluate_many_matches_scalar():
    p = BoolPoly({(0, 3): 1.5, (1,): -2, (): 0.25, (2, 3, 4): 4})
    bits = np.array(cube(5))
    assert p.evaluate_many(bits).tolist() == [p(x) for x in bits.tolist()]


@settings(max_examples=40, deadline=None)
@given(polys())
def test_text_round_trip(p):
    assert BoolPoly.from_text(p.to_text()) == p


def test_from_text_rejects_garbage():
    with pytest.raises(ParseError):
        BoolPoly.from_text("1.0 v0\n")
    with pytest.raises(ParseError):
        BoolPoly.from_text("abc\tv0\n")


def test_items_canonical_order():
    p = BoolPoly({(1, 2): 1, (0,): 2, (): 3, (0, 2): 4})
    assert [vs for vs, _ in p.items()] == [(), (0,), (0, 2), (1, 2)]


def test_rational_expr():
    r = RationalExpr(BoolPoly({(0,): 2, (): 1}), BoolPoly({(1,): 4}))
    assert r([1, 1]) == 0.75
    with pytest.raises(ZeroDivisionError):
        r([1, 0])
    vals = r.evaluate_many([[1, 1], [0, 0]])
    assert vals[0] == 0.75 and math.isnan(vals[1])
    s, scale = r.normalized()
    assert scale == 4 and s([1, 1]) == 0.75
