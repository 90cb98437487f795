import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from afv.hyper import (
    Ball,
    Cls,
    HyperCtx,
    Single,
    Sphere,
    ZERO,
    all_classes,
    canon,
    check_hypergroup_axioms,
    classset_add,
    contains,
    h_inv,
    h_mul,
    h_neg,
    h_val,
    hyper_add,
    in_Pdelta,
    in_Udelta,
    members_in_window,
    p2as_kras,
    parse_class,
    project,
    render_class,
    sample_sum_classes,
    sigma,
    sigma3,
    theta_kras,
    tplus_kras,
)
from afv.local import INFINITY, p2as, tplus

C51 = HyperCtx(5, 1)
C32 = HyperCtx(3, 2)
GRID = [HyperCtx(p, lv) for p in (2, 3, 5) for lv in (1, 2)]
rationals = st.builds(Fraction, st.integers(-10**4, 10**4), st.integers(1, 10**4))


def test_project_examples():
    assert project(50, C51) == Cls(2, 2)
    assert project(0, C51) is ZERO
    assert project(Fraction(1, 3), HyperCtx(2, 3)) == Cls(0, 3)


def test_literals():
    assert parse_class("(2; 3)", C51) == Cls(2, 3)
    assert parse_class("0", C51) is ZERO
    assert render_class(Cls(-1, 4)) == "(-1; 4)"
    with pytest.raises(ValueError):
        parse_class("(1; 5)", C51)


def test_multiplicative_examples():
    assert h_mul(Cls(1, 1), Cls(1, 2), C32) == Cls(2, 2)
    assert h_inv(Cls(2, 3), C51) == Cls(-2, 2)
    assert h_neg(Cls(0, 1), C51) == Cls(0, 4)
    with pytest.raises(ZeroDivisionError):
        h_inv(ZERO, C51)


def test_hyper_add_examples():
    assert hyper_add(Cls(0, 1), Cls(1, 2), C51) == Single(Cls(0, 1))
    s = hyper_add(Cls(0, 1), Cls(0, 2), C32)
    assert s == Sphere(1, 1, 1)
    assert canon(s, C32).finite == {Cls(1, 1), Cls(1, 4), Cls(1, 7)}
    assert hyper_add(Cls(0, 1), Cls(0, 4), C51) == Ball(1)


@pytest.mark.parametrize("x,y,ctx", [
    (Cls(0, 1), Cls(1, 2), C51), (Cls(0, 1), Cls(0, 2), C32), (Cls(0, 1), Cls(0, 4), C51),
])
def test_hyper_add_examples_match_sampling(x, y, ctx):
    form = hyper_add(x, y, ctx)
    seen = sample_sum_classes(x, y, ctx, random.Random(1), 200, 1000)
    assert all(contains(form, z, ctx) for z in seen)
    if not isinstance(form, Ball):
        assert seen == canon(form, ctx).finite


def test_sigma_examples():
    assert sigma(Cls(0, 1), Cls(0, 4), ZERO, C51)
    assert sigma(Cls(0, 1), ZERO, Cls(0, 1), C51)
    assert not sigma(Cls(0, 1), Cls(0, 1), Cls(5, 1), C51)
    assert sigma3(Cls(0, 1), Cls(0, 4), Cls(0, 1), Cls(0, 1), C51)


def test_classset_add_examples():
    assert classset_add(Single(Cls(0, 1)), Cls(0, 4), C51) == canon(Ball(1), C51)
    assert classset_add(Ball(1), Cls(0, 1), C51) == canon(Single(Cls(0, 1)), C51)
    assert classset_add(Ball(1), Cls(2, 1), C51) == canon(Ball(1), C51)


def test_valuation_predicates():
    assert h_val(Cls(-3, 2)) == -3 and h_val(ZERO) == INFINITY
    assert in_Pdelta(ZERO) and not in_Udelta(Cls(1, 1)) and in_Udelta(Cls(0, 3))


def test_artin_schreier_examples():
    assert p2as_kras(project(2, C51), C51)
    assert p2as_kras(ZERO, C51)
    assert not tplus_kras(project(2, C51), C51)
    assert not tplus_kras(ZERO, C51)
    # At level 1 the class of 1 is hit: Cls(0,2)^2 + Cls(0,2) = {Cls(0,1)} since
    # 4 + 2 = 1 mod 5, although y^2 + y = 1 has no root in Q_5.
    assert hyper_add(h_mul(Cls(0, 2), Cls(0, 2), C51), Cls(0, 2), C51) == Single(Cls(0, 1))
    assert p2as_kras(project(1, C51), C51) and not p2as(1, 5)
    assert tplus(1, 5) and not tplus_kras(project(1, C51), C51)


def test_theta_examples():
    assert theta_kras(Cls(2, 3), C51)
    assert not theta_kras(Cls(-1, 1), C51)
    assert theta_kras(ZERO, C51)


def test_theta_margin_does_not_change_answers(monkeypatch):
    ctx = HyperCtx(3, 2)
    base = [theta_kras(x, ctx) for x in all_classes(ctx, 3)]
    monkeypatch.setenv("AFV_MARGIN", "4")
    assert [theta_kras(x, ctx) for x in all_classes(ctx, 3)] == base


def test_axioms_pass_examples():
    assert check_hypergroup_axioms(HyperCtx(5, 1), 3, 300).passed
    assert check_hypergroup_axioms(HyperCtx(2, 2), 3, 300).passed


def test_mutation_without_spheres_is_caught():
    ctx = HyperCtx(3, 2)

    def broken(x, y):
        s = hyper_add(x, y, ctx)
        if isinstance(s, Sphere):
            return Single(Cls(s.gamma, s.z0))
        return s

    rep = check_hypergroup_axioms(ctx, 2, 300, adder=broken)
    assert not rep.passed
    assert any(f.startswith(("associativity", "reversibility")) for f in rep.failures)


@pytest.mark.parametrize("ctx", GRID, ids=str)
def test_sum_valuation_at_least_min(ctx):
    universe = all_classes(ctx, 4)
    for x in universe:
        for y in universe:
            lo = min(h_val(x), h_val(y))
            for t in members_in_window(hyper_add(x, y, ctx), ctx, 6):
                assert h_val(t) >= lo


@settings(max_examples=300, deadline=None)
@given(rationals, rationals, st.sampled_from(GRID))
def test_projection_is_multiplicative_and_additive(x, y, ctx):
    assert project(x * y, ctx) == h_mul(project(x, ctx), project(y, ctx), ctx)
    assert sigma(project(x, ctx), project(y, ctx), project(x + y, ctx), ctx)
