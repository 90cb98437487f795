from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from afv.boolean import Cofinite, Finite, Frontier, primes_below
from afv.hyper import Cls, HyperCtx, ZERO
from afv.local import is_square, local_holds
from afv.logic import FIELD, SIGNATURES, parse_formula
from afv.restricted import (
    AdeleHFamily,
    FiniteAdele,
    QuantifierPresent,
    adele_from_json,
    adele_to_json,
    boolean_value,
    diagonal,
    h_boolean_value,
    h_local_holds,
    h_stalk_project,
    idempotent,
    is_idempotent,
    is_min_idempotent,
    stalk_project,
    supp,
)

RING = SIGNATURES["ring"]
HYPER = SIGNATURES["hyperring"]
CHECK_PRIMES = primes_below(200)


def ring(text, names=("a", "b")):
    return parse_formula(text, RING, free_sorts={n: FIELD for n in names})


def hyper(text, names=("F", "G")):
    return parse_formula(text, HYPER, free_sorts={n: "hyper" for n in names})


def e(*primes):
    return idempotent(Finite(primes))


def test_ring_operation_examples():
    assert e(2) * e(3) == diagonal(0)
    assert diagonal(1) + diagonal(-1) == diagonal(0)
    a = FiniteAdele(1, {2: 0})
    assert a * a == a and is_idempotent(a)


def test_support_examples():
    assert supp(FiniteAdele(0, {5: 1})) == Finite([5])
    assert supp(FiniteAdele(1, {2: 0, 7: 0})) == Cofinite([2, 7])
    assert supp(diagonal(0)) == Finite([])


def test_minimal_idempotents():
    assert is_min_idempotent(e(3)) == 3
    assert is_min_idempotent(e(2, 3)) is None
    assert is_min_idempotent(diagonal(0)) is None


def test_stalk_projection():
    a = FiniteAdele(Fraction(1, 6), {2: 4})
    assert stalk_project(a, 2) == 4 and stalk_project(a, 5) == Fraction(1, 6)
    fam = AdeleHFamily(1, "(0; 1)")
    assert h_stalk_project(fam, 11) == Cls(0, 1)


def test_json_literals():
    a = adele_from_json({"default": "1/6", "exceptions": {"2": "4"}})
    assert a == FiniteAdele(Fraction(1, 6), {2: 4})
    assert adele_from_json(adele_to_json(a)) == a
    with pytest.raises(ValueError):
        adele_from_json({"exceptions": {}})


def test_boolean_value_examples():
    assert boolean_value(ring("(V a)"), {"a": diagonal(Fraction(1, 6))}) == Cofinite([2, 3])
    assert boolean_value(ring("(= a 0)"), {"a": e(5)}) == Cofinite([5])
    squares = boolean_value(ring("(pow 2 a)"), {"a": diagonal(2)})
    assert isinstance(squares, Frontier)
    assert all(squares.contains(p) == is_square(2, p) for p in CHECK_PRIMES)
    with pytest.raises(QuantifierPresent):
        boolean_value(ring("(exists (c field) (= c a))"), {"a": e(2)})


def test_h_boolean_value_examples():
    fam = AdeleHFamily(1, "(0; 1)", {5: "(-1; 1)"})
    assert h_boolean_value(hyper("(Pdelta F)"), {"F": fam}) == Cofinite([5])
    zero = AdeleHFamily(1, "0", {3: "(0; 1)", 7: "(2; 1)"})
    assert h_boolean_value(hyper("(= F 0)"), {"F": zero}) == Cofinite([3, 7])
    one, two = AdeleHFamily(1, "(0; 1)"), AdeleHFamily(1, "(0; 2)")
    # the unit 2 is read at each prime: at p = 2 it is the class (1; 1), which
    # lies in the ball (1; 1) + (1; 1) = Ball(1)
    value = h_boolean_value(hyper("(Sigma F F G)"), {"F": one, "G": two})
    assert value == Cofinite([])
    assert two.at(2) == Cls(1, 1)


# ---------------------------------------------------------------- agreement with per-prime evaluation

values = st.sampled_from([0, 1, -1, 2, 3, Fraction(1, 2), Fraction(1, 6), Fraction(4, 9), 5, 25, -3, 7])
adeles = st.builds(
    lambda d, exc: FiniteAdele(d, exc),
    values,
    st.dictionaries(st.sampled_from([2, 3, 5, 7, 11]), values, max_size=3),
)
ring_formulas = st.sampled_from([
    "(V a)", "(= a 0)", "(= (* a b) 1)", "(not (V (+ a b)))", "(pow 2 a)", "(pow 3 (* a b))",
    "(and (V a) (not (= a b)))", "(or (= a 1) (pow 2 (- a 1)))", "(implies (V a) (V (* a a)))",
    "(= (* a a) a)",
])


@settings(max_examples=300, deadline=None)
@given(ring_formulas, adeles, adeles)
def test_boolean_value_matches_local_evaluation(text, a, b):
    f = ring(text)
    value = boolean_value(f, {"a": a, "b": b})
    for p in CHECK_PRIMES:
        assert value.contains(p) == local_holds(f, p, {"a": a.at(p), "b": b.at(p)}), p


sym_classes = st.sampled_from(["0", "(0; 1)", "(0; 2)", "(1; 3)", "(0; 1/2)", "(2; -1)"])
families = st.builds(
    lambda d, exc: AdeleHFamily(1, d, exc),
    sym_classes,
    st.dictionaries(st.sampled_from([2, 3, 5]), st.sampled_from(["0", "(0; 1)", "(-1; 1)", "(1; 1)"]),
                    max_size=2),
)
hyper_formulas = st.sampled_from([
    "(Pdelta F)", "(= F 0)", "(Sigma F F G)", "(Sigma F G 0)", "(not (Pdelta (* F (inv G))))",
    "(Sigma F -1 G)", "(or (= F G) (Sigma 1 F G))",
])


@settings(max_examples=200, deadline=None)
@given(hyper_formulas, families, families)
def test_h_boolean_value_matches_local_evaluation(text, f_fam, g_fam):
    f = hyper(text)
    if "inv" in text and any(g_fam.at(p) is ZERO for p in CHECK_PRIMES[:40]):
        return
    value = h_boolean_value(f, {"F": f_fam, "G": g_fam})
    for p in CHECK_PRIMES[:40]:
        expected = h_local_holds(f, HyperCtx(p, 1), {"F": f_fam.at(p), "G": g_fam.at(p)})
        assert value.contains(p) == expected, p
