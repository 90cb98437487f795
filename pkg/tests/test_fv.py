import random
from fractions import Fraction

import pytest

from afv.boolean import Finite, Kleene, primes_below
from afv.fv import (
    ADELES,
    FULL_PRODUCT,
    Limits,
    ReducedForm,
    ReductionLimit,
    decide_sentence,
    eliminate,
    eval_formula,
    eval_reduced,
    fv_reduce,
    localize,
    localize_rules,
    stalk_holds,
)
from afv.local import is_square
from afv.localdec import decide_at, truth_interval
from afv.logic import FIELD, SIGNATURES, is_quantifier_free, parse_formula, render_formula
from afv.restricted import FiniteAdele, diagonal, idempotent
from afv.search import bounded_eval, candidate_pool
from afv.sweeps import load_corpus

from oracles import LOCALIZE_CASES, random_stalk_value, stalk_variables

PRODUCT = SIGNATURES["product"]
IDEMPOTENT = "(exists (e field) (and (= (* e e) e) (not (= e 0)) (not (= e 1))))"


def pf(text, names=()):
    return parse_formula(text, PRODUCT, free_sorts={n: FIELD for n in names})


def test_atomic_base_case():
    r = fv_reduce(pf("(= (bv-of (V x)) 1)", ["x"]))
    assert r.lines() == ["theta: (= (bv 0) 1)", "locals: 1", "local 0: (V x)"]


def test_reduced_form_checks_slots():
    with pytest.raises(ValueError):
        ReducedForm(pf("(fin (bv 3))"), ())


def test_zero_exists_in_full_product():
    r = fv_reduce(pf("(exists (x field) (= x 0))"), FULL_PRODUCT)
    assert any(render_formula(loc) == "(exists (x field) (= x 0))" for loc in r.locals)
    assert decide_sentence(pf("(exists (x field) (= x 0))"), FULL_PRODUCT).value is Kleene.TRUE


def test_idempotent_sentence():
    phi = pf(IDEMPOTENT)
    assert decide_sentence(phi, ADELES).value is Kleene.TRUE
    local = pf(IDEMPOTENT)
    for p in primes_below(30):
        assert decide_at(local, p, {}) is Kleene.FALSE
    witness = idempotent(Finite([2]))
    assert witness * witness == witness and witness != diagonal(0) and witness != diagonal(1)
    pool = candidate_pool()
    assert bounded_eval(phi, {}, pool) is Kleene.TRUE


@pytest.mark.parametrize("text,truth", [
    ("(exists (x field) (forall (y field) (= (* x y) y)))", True),
    ("(exists (x field) (= (* x x) -1))", False),
])
def test_decide_examples(text, truth):
    assert decide_sentence(pf(text)).value is Kleene.of(truth)


def test_eval_examples():
    r = fv_reduce(pf("(= (bv-of (V x)) 1)", ["x"]))
    assert eval_reduced(r, {"x": diagonal(2)}).value is Kleene.TRUE
    fin = pf("(fin (bv-of (not (V x))))", ["x"])
    assert eval_formula(fin, {"x": diagonal(Fraction(1, 6))}).value is Kleene.TRUE
    assert eval_formula(fin, {"x": idempotent(Finite([2]))}).value is Kleene.TRUE
    c3 = pf("(cj 3 (bv-of (= x 0)))", ["x"])
    assert eval_formula(c3, {"x": idempotent(Finite([2, 3]))}).value is Kleene.TRUE


def test_frontier_values_stay_indeterminate():
    d = eval_formula(pf("(fin (bv-of (pow 2 x)))", ["x"]), {"x": diagonal(2)})
    assert d.value is Kleene.INDETERMINATE
    assert d.reports and 0.4 < d.reports[0].density < 0.6


def test_limits():
    deep = "(exists (a field) (exists (b field) (exists (c field) (exists (d field) (exists (e field) " \
           "(= (* a b) (* c (* d e))))))))"
    with pytest.raises(ReductionLimit):
        fv_reduce(pf(deep))
    with pytest.raises(ReductionLimit):
        fv_reduce(pf("(exists (x field) (and (V (+ x 1)) (= (* x x) 2)))"), limits=Limits(max_split=1))


def test_eliminate_small_theta():
    r = eliminate(fv_reduce(pf("(exists (x field) (= x 0))"), FULL_PRODUCT))
    assert is_quantifier_free(r.theta)


def test_localize_examples():
    r = fv_reduce(pf("(fin (bv-of (= x 0)))", ["x"]))
    assert render_formula(localize(r, 5)) == "false"
    r = fv_reduce(pf("(cj 1 (bv-of (not (= x 0))))", ["x"]))
    assert render_formula(localize(r, 5)) == "(not (= x 0))"
    assert render_formula(localize_rules(r, 5)) == "(not (= x 0))"


def test_localized_square_root_matches_square_test():
    r = fv_reduce(pf("(exists (y field) (= (* y y) x))", ["x"]))
    rng = random.Random(3)
    for p in (2, 3, 5, 7):
        loc = localize(r, p)
        for _ in range(40):
            v = random_stalk_value(rng)
            assert stalk_holds(loc, p, {"x": v}) is Kleene.of(is_square(v, p))


def test_localized_inverse_is_false_on_stalks():
    # a point supported on one stalk is zero elsewhere, so never invertible
    r = fv_reduce(pf("(exists (y field) (= (* x y) 1))", ["x"]))
    assert all(render_formula(localize(r, p)) == "false" for p in (2, 3, 5))


@pytest.mark.parametrize("case", range(len(LOCALIZE_CASES)))
def test_localize_agrees_with_direct_evaluation(case):
    text, params = LOCALIZE_CASES[case]
    names = stalk_variables(text)
    phi = pf(text, [*names, *params])
    r = fv_reduce(phi)
    pool = candidate_pool()
    rng = random.Random(case)
    for p in (2, 3):
        loc = localize(r, p, params)
        for _ in range(15):
            point = {n: random_stalk_value(rng) for n in names}
            args = {**params, **{n: FiniteAdele(0, {p: v}) for n, v in point.items()}}
            want = stalk_holds(loc, p, point)
            assert want is not Kleene.INDETERMINATE
            assert eval_reduced(r, args).value is want
            direct = bounded_eval(phi, args, pool)
            if direct is not Kleene.INDETERMINATE:
                assert direct is want


def test_truth_interval_of_quantifier_free_local_is_exact():
    iv = truth_interval(pf("(V x)", ["x"]), {"x": Fraction(1, 6)}, {"x": {}})
    assert iv.exact


def test_corpus_is_well_formed():
    entries = load_corpus()
    assert len(entries) >= 20
    assert {e.structure for e in entries} <= {"adeles", "full"}
    for e in entries:
        pf(e.text)
