import random

import pytest
from hypothesis import given, settings, strategies as st

from afv.boolean import (
    DECLARED_COFINITE,
    DECLARED_FINITE,
    Cofinite,
    Finite,
    Frontier,
    Kleene,
    UnboundVariable,
    ba_decide,
    ba_eval,
    ba_qe,
    classify,
    eval_cj,
    eval_fin,
    is_prime,
    prime_set_from_json,
    prime_set_to_json,
    primes_below,
    ps_complement,
    ps_difference,
    ps_join,
    ps_meet,
)
from afv.local import is_square
from afv.logic import BOOL, SIGNATURES, is_quantifier_free, parse_formula, render_formula

from oracles import BA_BENCHMARK, QE_INPUTS, free_bool_names, qe_envs, random_small_set, witness_eval

BOOL_SIG = SIGNATURES["boolean"]


def bf(text, free=("x", "y", "z")):
    return parse_formula(text, BOOL_SIG, free_sorts={n: BOOL for n in free})


def test_ps_examples():
    assert ps_join(Finite([2, 3]), Finite([3, 5])) == Finite([2, 3, 5])
    assert ps_complement(Cofinite([7])) == Finite([7])
    assert ps_meet(Cofinite([2]), Cofinite([3])) == Cofinite([2, 3])
    assert ps_difference(Cofinite([]), Finite([2])) == Cofinite([2])


def test_prime_set_validation():
    with pytest.raises(ValueError):
        Finite([4])
    assert Finite([5, 2, 2]) == Finite([2, 5])


def test_json_round_trip():
    for s in (Finite([2, 3]), Cofinite([7])):
        assert prime_set_from_json(prime_set_to_json(s)) == s
    with pytest.raises(ValueError):
        prime_set_from_json({"finite": [2], "cofinite": [3]})


def test_primes_below_matches_trial_division():
    assert list(primes_below(60)) == [n for n in range(60) if n > 1 and all(n % d for d in range(2, n))]
    assert is_prime(97) and not is_prime(91)


def test_fin_and_cj_examples():
    assert eval_fin(Finite([2, 3, 5])) is Kleene.TRUE
    assert eval_fin(Cofinite([])) is Kleene.FALSE
    assert eval_cj(2, Finite([2, 3, 5])) is Kleene.TRUE
    assert eval_cj(4, Finite([2, 3, 5])) is Kleene.FALSE
    assert eval_cj(1, Cofinite([2, 3])) is Kleene.TRUE
    with pytest.raises(ValueError):
        eval_cj(0, Finite([]))


def test_frontier_density_report():
    two_is_square = Frontier(lambda p: p != 2 and is_square(2, p), bound=10_000, label="2 square")
    reports = []
    assert eval_fin(two_is_square, reports) is Kleene.INDETERMINATE
    (rep,) = reports
    # independent count: 2 is a square mod p iff p = +-1 mod 8
    assert rep.members == sum(1 for p in primes_below(10_000) if p % 8 in (1, 7))
    assert abs(rep.density - 0.5) < 0.02
    assert eval_fin(classify(two_is_square, DECLARED_FINITE)) is Kleene.TRUE
    assert eval_fin(classify(two_is_square, DECLARED_COFINITE)) is Kleene.FALSE


def test_ba_eval_examples():
    assert ba_eval(bf("(and (fin x) (cj 2 x))"), {"x": Finite([2, 3])}) is Kleene.TRUE
    assert ba_eval(bf("(fin (join x (compl x)))"), {"x": Finite([2])}) is Kleene.FALSE
    unknown = Frontier(lambda p: p % 4 == 1)
    assert ba_eval(bf("(not (fin x))"), {"x": unknown}) is Kleene.INDETERMINATE
    with pytest.raises(UnboundVariable):
        ba_eval(bf("(fin x)"), {})


def test_ba_qe_examples():
    assert render_formula(ba_qe(bf("(exists (x bool) (and (fin x) (cj 2 x)))"))) == "true"
    assert render_formula(ba_qe(bf("(exists (x bool) (and (<= x y) (cj 1 x) (fin x)))"))) == "(cj 1 y)"
    out = ba_qe(bf("(forall (x bool) (implies (fin (meet x y)) (fin x)))"))
    assert ba_eval(out, {"y": Finite([2])}) is Kleene.FALSE
    assert ba_eval(out, {"y": Cofinite([2])}) is Kleene.TRUE


@pytest.mark.parametrize("text,truth", BA_BENCHMARK)
def test_ba_decide_benchmark(text, truth):
    f = bf(text, ())
    assert ba_decide(f) is truth
    found = witness_eval(f, {}, (2, 3, 5, 7))
    if found is not Kleene.INDETERMINATE:
        assert found is Kleene.of(truth)


@pytest.mark.parametrize("text", QE_INPUTS)
def test_ba_qe_agrees_with_semantic_evaluation(text):
    f = bf(text)
    q = ba_qe(f)
    assert is_quantifier_free(q)
    names = free_bool_names(f)
    for env in qe_envs(names, count=400):
        assert ba_eval(q, env) is ba_eval(f, env), env
    rng = random.Random(5)
    for _ in range(20):
        env = {n: random_small_set(rng, (2, 3, 5, 7)) for n in names}
        found = witness_eval(f, env, (2, 3, 5, 7, 11, 13))
        if found is not Kleene.INDETERMINATE:
            assert found is ba_eval(q, env)


@pytest.mark.parametrize("text", QE_INPUTS[:6])
def test_ba_qe_idempotent(text):
    once = ba_qe(bf(text))
    assert ba_qe(once) == once


# ---------------------------------------------------------------- algebra laws

prime_sets = st.builds(
    lambda fin, ps: Finite(ps) if fin else Cofinite(ps),
    st.booleans(),
    st.lists(st.sampled_from(primes_below(50)), max_size=6),
)


@settings(max_examples=300, deadline=None)
@given(prime_sets, prime_sets, prime_sets)
def test_boolean_algebra_laws(a, b, c):
    assert ps_meet(a, b) == ps_meet(b, a) and ps_join(a, b) == ps_join(b, a)
    assert ps_meet(a, ps_join(b, c)) == ps_join(ps_meet(a, b), ps_meet(a, c))
    assert ps_join(a, ps_meet(b, c)) == ps_meet(ps_join(a, b), ps_join(a, c))
    assert ps_complement(ps_meet(a, b)) == ps_join(ps_complement(a), ps_complement(b))
    assert ps_complement(ps_complement(a)) == a
    assert ps_meet(a, ps_complement(a)) == Finite([])
    assert ps_join(a, ps_complement(a)) == Cofinite([])
    assert ps_meet(a, ps_join(a, b)) == a


@settings(max_examples=200, deadline=None)
@given(prime_sets, st.integers(1, 8))
def test_cj_monotone(a, j):
    if eval_cj(j, a) is Kleene.TRUE:
        assert all(eval_cj(i, a) is Kleene.TRUE for i in range(1, j + 1))


@settings(max_examples=200, deadline=None)
@given(prime_sets, prime_sets)
def test_membership_semantics(a, b):
    for p in primes_below(60):
        assert ps_meet(a, b).contains(p) == (a.contains(p) and b.contains(p))
        assert ps_join(a, b).contains(p) == (a.contains(p) or b.contains(p))
        assert ps_complement(a).contains(p) == (not a.contains(p))
