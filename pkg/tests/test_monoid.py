import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from afv.boolean import Cofinite, Finite
from afv.logic import MONOID, SIGNATURES, parse_formula
from afv.monoid import (
    BBETA_ONE,
    BBETA_ZERO,
    BETA,
    INF,
    TOP,
    ZERO,
    MonoidElement,
    atom,
    bbeta,
    bbeta_complement,
    bbeta_fin,
    bbeta_join,
    bbeta_meet,
    boolean_element,
    boolean_support,
    chain_interval,
    check_bbeta,
    check_monoid_axioms,
    check_stalk_lemma,
    dsum_fin_check,
    equiv_at_atom,
    in_internal_stalk,
    in_stalk_direct,
    in_version,
    is_atom,
    is_finite_boolean,
    linear_order_witness,
    m_add,
    m_join,
    m_leq,
    m_meet,
    m_neg,
    monoid_boolean_value,
    monoid_from_json,
    monoid_to_json,
    prod_val,
    prod_val_total,
)
from afv.restricted import FiniteAdele


def M(default=0, **exc):
    return MonoidElement(default, {int(k[1:]): v for k, v in exc.items()})


def mformula(text, names=("x",)):
    return parse_formula(text, SIGNATURES["monoid"], free_sorts={n: MONOID for n in names})


def test_element_normalisation():
    assert M(0, p2=0) == ZERO
    assert M(1, p3=1, p5=2).exceptions == ((5, 2),)
    with pytest.raises(ValueError):
        MonoidElement(-1)
    with pytest.raises(ValueError):
        MonoidElement(0, {4: 1})


def test_lattice_examples():
    e2, e3 = atom(2), atom(3)
    assert m_join(e2, e3) == M(0, p2=1, p3=1)
    assert m_meet(e2, e3) == ZERO
    assert m_add(e2, e2) == M(0, p2=2)
    assert m_add(e2, TOP) == TOP
    assert m_leq(ZERO, e2) and not m_leq(e2, e3)


def test_negation():
    assert m_neg(M(0, p2=3, p5=-1)) == M(0, p2=-3, p5=1)
    assert m_neg(M(1)) is None
    assert m_neg(M(0, p2=INF)) is None


def test_atoms():
    assert is_atom(atom(7)) == 7
    assert is_atom(M(0, p2=2)) is None
    assert is_atom(M(0, p2=1, p3=1)) is None
    assert is_atom(M(1)) is None


def test_versions():
    assert in_version(M(1), "finite") and not in_version(M(1), "idelic")
    assert not in_version(M(0, p2=INF), "finite")
    assert in_version(M(0, p2=-4), "idelic")
    with pytest.raises(ValueError):
        in_version(ZERO, "other")


def test_chain_examples():
    assert chain_interval(atom(2), M(0, p2=4))
    assert not chain_interval(ZERO, M(0, p2=1, p3=1))
    assert not chain_interval(ZERO, M(1))
    with pytest.raises(ValueError):
        chain_interval(atom(2), ZERO)


def test_stalk_examples():
    e = atom(5)
    assert in_internal_stalk(ZERO, e)
    assert in_internal_stalk(M(0, p5=3), e)
    assert in_internal_stalk(M(0, p5=-2), e)
    assert in_internal_stalk(M(0, p5=INF), e)
    assert not in_internal_stalk(M(0, p5=1, p2=1), e)
    assert not in_internal_stalk(M(1), e)
    with pytest.raises(ValueError):
        in_internal_stalk(ZERO, M(0, p5=2))


def test_agreement_at_an_atom():
    f, g = M(0, p2=3, p3=1), M(1, p2=3)
    assert equiv_at_atom(f, g, atom(2), debug=True)
    assert equiv_at_atom(f, g, atom(3), debug=True)
    assert not equiv_at_atom(f, g, atom(5), debug=True)
    assert equiv_at_atom(M(0, p2=INF), M(INF), atom(2), debug=True)


def test_boolean_part():
    b = boolean_element(Finite([2, 3]))
    assert is_finite_boolean(b) and boolean_support(b) == Finite([2, 3])
    c = boolean_element(Cofinite([5]))
    assert not is_finite_boolean(c) and boolean_support(c) == Cofinite([5])
    with pytest.raises(ValueError):
        is_finite_boolean(M(0, p2=2))


def test_bbeta_examples():
    a, b = bbeta([2, 3]), bbeta([3], cofinite=True)
    assert bbeta_meet(a, b) == bbeta([2])
    assert bbeta_join(a, b) == bbeta([], cofinite=True)
    assert bbeta_complement(a) == bbeta([2, 3], cofinite=True)
    assert bbeta_complement(BBETA_ZERO) == BBETA_ONE
    assert bbeta_fin(a) and not bbeta_fin(b)
    assert b.as_prime_set() == Cofinite([3])
    assert BBETA_ONE.flag == BETA


def test_bbeta_matches_prime_sets():
    primes = (2, 3, 5)
    elems = [bbeta(s, c) for r in range(4) for s in itertools.combinations(primes, r) for c in (False, True)]
    for a, b in itertools.product(elems, repeat=2):
        sa, sb = a.as_prime_set(), b.as_prime_set()
        assert bbeta_meet(a, b).as_prime_set() == (sa & sb)
        assert bbeta_join(a, b).as_prime_set() == (sa | sb)
    assert check_bbeta().passed


def test_json_round_trip():
    a = M(1, p2=INF, p7=-3)
    assert monoid_to_json(a) == {"default": 1, "exceptions": {"2": "inf", "7": -3}}
    assert monoid_from_json(monoid_to_json(a)) == a
    with pytest.raises(ValueError):
        monoid_from_json({"default": 1.5})


def test_prod_val():
    assert prod_val(FiniteAdele(12, {5: 25})) == M(0, p2=2, p3=1, p5=2)
    with pytest.raises(ValueError):
        prod_val(FiniteAdele(0))
    assert prod_val_total(FiniteAdele(0, {3: Fraction(1, 9)})) == M(INF, p3=-2)
    assert prod_val_total(FiniteAdele(12, {5: 0, 7: 49})) == M(0, p2=2, p3=1, p5=INF, p7=2)


def test_direct_sum_boolean_values():
    x = atom(2)
    assert monoid_boolean_value(mformula("(not (= x 0))"), {"x": x}) == Finite([2])
    assert dsum_fin_check(mformula("(not (= x 0))"), {"x": x})
    assert not dsum_fin_check(mformula("(= x 0)"), {"x": x})
    assert not dsum_fin_check(mformula("(= (meet x 0) 0)"), {"x": x})
    with pytest.raises(ValueError):
        dsum_fin_check(mformula("(= x 0)"), {"x": M(1)})


def test_linear_order_fails_in_the_product():
    assert linear_order_witness([atom(2), atom(3)]) == (atom(2), atom(3))
    assert linear_order_witness([atom(2), M(0, p2=3)]) is None


def test_suites_pass_small():
    assert check_monoid_axioms(500, seed=1).passed
    assert check_monoid_axioms(500, seed=1, version="idelic").passed
    assert check_stalk_lemma(200, seed=3).passed


values = st.one_of(st.integers(-4, 4), st.just(INF))
elements = st.builds(
    MonoidElement,
    st.sampled_from([0, 1, 2, INF]),
    st.dictionaries(st.sampled_from([2, 3, 5, 7]), values, max_size=3),
)


@settings(max_examples=300, deadline=None)
@given(elements, elements, elements)
def test_lattice_ordered_monoid_laws(a, b, c):
    assert m_add(a, m_add(b, c)) == m_add(m_add(a, b), c)
    assert m_add(a, b) == m_add(b, a)
    assert m_meet(a, m_join(a, b)) == a
    assert m_add(a, m_meet(b, c)) == m_meet(m_add(a, b), m_add(a, c))
    assert m_leq(a, b) == (m_meet(a, b) == a)


@settings(max_examples=300, deadline=None)
@given(elements, st.sampled_from([2, 3, 5, 7]))
def test_internal_stalk_matches_support(h, p):
    assert in_internal_stalk(h, atom(p)) == in_stalk_direct(h, atom(p))


@settings(max_examples=200, deadline=None)
@given(elements, elements, st.sampled_from([2, 3, 5, 7]))
def test_agreement_definable_reading(f, g, p):
    equiv_at_atom(f, g, atom(p), debug=True)


def test_random_seeded_stalk_candidates_agree():
    rng = random.Random(11)
    for _ in range(300):
        p = rng.choice([2, 3, 5])
        h = MonoidElement(0, {p: rng.randint(-3, 3)}) if rng.random() < 0.5 else \
            MonoidElement(0, {p: 1, rng.choice([7, 11]): rng.randint(-2, 2)})
        assert in_internal_stalk(h, atom(p)) == in_stalk_direct(h, atom(p))
