import pytest
from hypothesis import given, settings, strategies as st

from afv.logic import (
    FIELD,
    SIGNATURES,
    BoolAtom,
    BoolRef,
    Eq,
    Exists,
    LogicError,
    ParseError,
    SortError,
    Var,
    free_vars,
    parse_formula,
    parse_term,
    quantifier_count,
    relativize,
    render_formula,
    substitute,
)

RING = SIGNATURES["ring"]
BOOL_SIG = SIGNATURES["boolean"]
PRODUCT = SIGNATURES["product"]
XY = {"x": FIELD, "y": FIELD}


def ring(text, free=XY):
    return parse_formula(text, RING, free_sorts=free)


def test_parse_exists_square():
    f = parse_formula("(exists (x field) (= (* x x) x))", RING)
    assert isinstance(f, Exists) and f.var == "x" and f.sort == FIELD
    assert isinstance(f.body, Eq)


def test_parse_fin_of_slot():
    f = parse_formula("(fin (bv 0))", BOOL_SIG)
    assert isinstance(f, BoolAtom) and f.kind == "fin" and f.arg == BoolRef(0)


def test_cj_is_boolean_only():
    with pytest.raises(SortError):
        parse_formula("(= x (cj 2 y))", RING)


@pytest.mark.parametrize("text", ["(= x 0)", "(not (V x))",
                                  "(exists (e field) (and (= (* e e) e) (not (= e 0))))"])
def test_render_examples(text):
    assert render_formula(ring(text)) == text


@pytest.mark.parametrize("text", ["", "(and", "(= x)", "(exists x (= x 0))", "(cj 0 (bv 0))"])
def test_malformed_input_rejected(text):
    with pytest.raises(LogicError):
        parse_formula(text, PRODUCT)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse_formula("(= x 0))", RING, free_sorts=XY)
    assert "position" in str(info.value)


def test_substitute_constant():
    assert render_formula(substitute(ring("(= x 0)"), {"x": parse_term("1", FIELD, RING)})) == "(= 1 0)"


def test_substitute_avoids_capture():
    f = substitute(ring("(exists (x field) (= x y))"), {"y": Var("x", FIELD)})
    assert render_formula(f) == "(exists (x' field) (= x' x))"
    assert free_vars(f) == {Var("x", FIELD)}


def test_substitute_term():
    t = parse_term("(+ y 1)", FIELD, RING, free_sorts=XY)
    assert render_formula(substitute(ring("(V x)"), {"x": t})) == "(V (+ y 1))"


def test_relativize_exists_and_forall():
    guard = parse_formula("(fin (bv-of (not (V y))))", PRODUCT, free_sorts={"y": FIELD})
    f = relativize(parse_formula("(exists (y field) (= y 0))", PRODUCT), {FIELD: guard})
    assert render_formula(f) == "(exists (y field) (and (fin (bv-of (not (V y)))) (= y 0)))"
    g = relativize(ring("(forall (y field) (V y))", {}), {FIELD: ring("(V x)")})
    assert render_formula(g) == "(forall (y field) (implies (V y) (V y)))"


def test_relativize_quantifier_free_is_identity():
    f = ring("(and (V x) (= x y))")
    assert relativize(f, {FIELD: ring("(V x)")}) == f


def test_relativize_needs_guard():
    with pytest.raises(LogicError):
        relativize(ring("(exists (z field) (= z 0))"), {})


# ---------------------------------------------------------------- random formulas

terms = st.recursive(
    st.sampled_from(["x", "y", "0", "1", "-2", "1/3"]),
    lambda inner: st.tuples(st.sampled_from(["+", "*", "-"]), inner, inner).map(
        lambda t: f"({t[0]} {t[1]} {t[2]})"),
    max_leaves=6,
)
atoms = st.one_of(
    st.tuples(terms, terms).map(lambda t: f"(= {t[0]} {t[1]})"),
    terms.map(lambda t: f"(V {t})"),
    st.tuples(st.integers(2, 4), terms).map(lambda t: f"(pow {t[0]} {t[1]})"),
)


def _compound(inner):
    return st.one_of(
        inner.map(lambda f: f"(not {f})"),
        st.tuples(st.sampled_from(["and", "or", "implies"]), inner, inner).map(
            lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["exists", "forall"]), st.sampled_from(["x", "z"]), inner).map(
            lambda t: f"({t[0]} ({t[1]} field) {t[2]})"),
    )


formulas = st.recursive(atoms, _compound, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(formulas)
def test_parse_render_round_trip(text):
    f = ring(text)
    assert ring(render_formula(f)) == f


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_relativize_adds_one_guard_per_quantifier(text):
    f = ring(text)
    g = relativize(f, {FIELD: ring("(V x)")})
    assert quantifier_count(g) == quantifier_count(f)
    assert render_formula(g).count("(V ") == render_formula(f).count("(V ") + quantifier_count(f)


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_renaming_round_trip(text):
    f = ring(text)
    there = substitute(f, {"y": Var("w_fresh", FIELD)})
    back = substitute(there, {"w_fresh": Var("y", FIELD)})
    assert back == f
