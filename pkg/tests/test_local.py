from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from afv.local import (
    INFINITY,
    UnsupportedFragment,
    hensel_precision,
    in_valuation_ring_bounded,
    is_kth_power,
    is_square,
    local_holds,
    p2as,
    rationals_by_height,
    sol_k,
    tplus,
    unit_residue,
    vp,
)
from afv.logic import FIELD, SIGNATURES, parse_formula

PRIMES = [2, 3, 5, 7, 11, 13]
rationals = st.builds(Fraction, st.integers(-10**6, 10**6), st.integers(1, 10**6))
nonzero = rationals.filter(bool)
primes = st.sampled_from(PRIMES)


def test_vp_examples():
    assert vp(50, 5) == 2
    assert vp(Fraction(1, 6), 2) == -1
    assert vp(0, 7) == INFINITY


def test_unit_residue_examples():
    assert unit_residue(50, 5, 1) == 2
    assert unit_residue(Fraction(1, 3), 2, 3) == 3
    with pytest.raises(ValueError):
        unit_residue(0, 5, 1)


def test_square_examples():
    assert is_square(9, 5)
    assert not is_square(2, 5)
    assert is_square(17, 2)
    assert is_square(0, 3)


def test_kth_power_examples():
    assert is_kth_power(8, 7, 3)
    assert not is_kth_power(5, 11, 5)
    # cubes of units mod 7 are {1, 6}
    assert {pow(y, 3, 7) for y in range(1, 7)} == {1, 6}
    assert not is_kth_power(2, 7, 3)


def test_p2as_and_tplus_examples():
    assert p2as(2, 5) and not p2as(1, 5)
    assert all(p2as(0, p) for p in PRIMES)
    assert tplus(1, 5) and not tplus(2, 5)
    assert not any(tplus(0, p) for p in PRIMES)


def test_valuation_ring_search_examples():
    found = in_valuation_ring_bounded(3, 5, 20)
    assert found.found is True
    e, a, b, c, d = found.witness
    assert Fraction(3) == e + a + b + c * d and all(tplus(w, 5) for w in (a, b, c, d))
    assert in_valuation_ring_bounded(Fraction(1, 5), 5, 6).found is None
    assert in_valuation_ring_bounded(0, 3, 5).found is True


def test_sol_k_examples():
    assert sol_k([0, 1], 5)
    assert not sol_k([0, 1], 7)
    assert sol_k([0], 3)
    with pytest.raises(ValueError):
        sol_k([Fraction(1, 5)], 5)


@pytest.mark.parametrize("p,digits", [(2, 10), (3, 10), (5, 6), (7, 5)])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_kth_power_against_exhaustive_search(p, digits, k):
    # k-th powers of units modulo p^digits, well past the Hensel bound for these k
    mod = p ** digits
    table = {pow(y, k, mod) for y in range(1, mod) if y % p}
    for x in rationals_by_height(100):
        v = vp(x, p)
        expected = v % k == 0 and unit_residue(x, p, digits) in table
        assert is_kth_power(x, p, k) == expected, (x, p, k, hensel_precision(p, k))


@settings(max_examples=500, deadline=None)
@given(nonzero, nonzero, primes)
def test_valuation_laws(x, y, p):
    assert vp(x * y, p) == vp(x, p) + vp(y, p)
    if x + y:
        assert vp(x + y, p) >= min(vp(x, p), vp(y, p))


@settings(max_examples=300, deadline=None)
@given(rationals, primes)
def test_squares_and_second_powers_agree(x, p):
    assume(x != 0)
    assert is_square(x * x, p)
    assert is_square(x, p) == is_kth_power(x, p, 2)


def test_square_against_brute_force():
    roots = list(rationals_by_height(200))[:4000]
    squares = {y * y for y in roots}
    for x in list(rationals_by_height(30)):
        if x in squares:
            assert all(is_square(x, p) for p in PRIMES)


@settings(max_examples=300, deadline=None)
@given(rationals, primes)
def test_p2as_is_discriminant_square(x, p):
    assert p2as(x, p) == is_square(1 + 4 * x, p)


def test_p2as_against_witness_search():
    ys = [Fraction(0), *rationals_by_height(15)]
    for y in ys:
        for p in PRIMES:
            assert p2as(y * y + y, p)


@settings(max_examples=500, deadline=None)
@given(rationals, primes)
def test_tplus_only_on_units(x, p):
    if tplus(x, p):
        assert vp(x, p) == 0


def test_local_holds_ring_formula():
    f = parse_formula("(and (V x) (not (= x 0)) (pow 2 (+ x 1)))", SIGNATURES["ring"], free_sorts={"x": FIELD})
    assert local_holds(f, 5, {"x": 3})  # 4 is a square
    assert not local_holds(f, 3, {"x": Fraction(1, 3)})
    with pytest.raises(UnsupportedFragment):
        local_holds(parse_formula("(exists (y field) (= y x))", SIGNATURES["ring"],
                                  free_sorts={"x": FIELD}), 5, {"x": 1})
