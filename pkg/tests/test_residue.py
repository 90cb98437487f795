from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from afv.hyper import Cls, HyperCtx, ZERO, all_classes, project, sigma
from afv.residue import (
    EClass,
    check_ring_iso,
    e_equiv,
    eclass,
    eclass_add,
    eclass_mul,
    eclass_of_residue,
    fiber_size,
    in_zero_fiber,
    psi,
)

C51 = HyperCtx(5, 1)
C32 = HyperCtx(3, 2)


def test_zero_fiber_examples():
    assert in_zero_fiber(Cls(2, 3), C51)
    assert not in_zero_fiber(Cls(0, 2), C51)
    assert in_zero_fiber(ZERO, C51)


@pytest.mark.parametrize("ctx", [HyperCtx(p, lv) for p in (2, 3, 5) for lv in (1, 2, 3)], ids=str)
def test_zero_fiber_matches_valuation(ctx):
    for g in all_classes(ctx, ctx.level + 2, lo=0):
        assert in_zero_fiber(g, ctx) == (g is ZERO or g.gamma >= ctx.level)


def test_e_equiv_examples():
    assert all(e_equiv(Cls(2, u), ZERO, C32) for u in C32.units())
    assert not e_equiv(Cls(0, 1), Cls(0, 2), C32)
    assert e_equiv(Cls(1, 4), Cls(1, 4), C32)


@pytest.mark.parametrize("ctx", [HyperCtx(2, 2), HyperCtx(3, 2), HyperCtx(5, 1), HyperCtx(2, 3)], ids=str)
def test_e_equiv_against_witness_search(ctx):
    # z ranges over the zero fiber, cut at a window above the level
    fiber = [ZERO] + [z for z in all_classes(ctx, ctx.level + 3, lo=ctx.level) if z is not ZERO]
    classes = all_classes(ctx, ctx.level + 1, lo=0)
    for g in classes:
        for h in classes:
            brute = any(sigma(g, z, h, ctx) for z in fiber)
            assert e_equiv(g, h, ctx) == brute == (psi(g, ctx) == psi(h, ctx))


def test_psi_examples():
    assert psi(Cls(0, 1), C32) == 1
    assert psi(Cls(1, 2), C32) == 6
    with pytest.raises(ValueError):
        psi(Cls(-1, 1), C32)


def test_ring_operation_examples():
    s = eclass_add(eclass(Cls(0, 1), C32), eclass(Cls(0, 2), C32), verify=True)
    assert psi(s.rep, C32) == 3
    m = eclass_mul(eclass(Cls(1, 1), C32), eclass(Cls(1, 2), C32))
    assert m == EClass(ZERO, C32)
    x = eclass(Cls(1, 5), C32)
    assert eclass_add(EClass(ZERO, C32), x) == x


@pytest.mark.parametrize("p,level,bound,classes", [(3, 2, 4, 9), (2, 3, 5, 8), (5, 1, 2, 5)])
def test_ring_iso_examples(p, level, bound, classes):
    rep = check_ring_iso(HyperCtx(p, level), bound)
    assert rep.passed and rep.classes == classes


def test_fiber_sizes_cover_the_window():
    ctx = HyperCtx(3, 2)
    assert sum(fiber_size(r, ctx) for r in range(ctx.modulus)) == len(all_classes(ctx, 1, lo=0)) - 1


integral = st.builds(Fraction, st.integers(-10**4, 10**4), st.integers(1, 10**4).filter(lambda d: d % 3))


@settings(max_examples=300, deadline=None)
@given(integral, integral)
def test_psi_is_reduction_mod_p_level(x, y):
    """psi of a projected 3-integral rational is its residue mod 9."""
    ctx = C32

    def residue(q):
        return q.numerator * pow(q.denominator, -1, 9) % 9

    assert psi(project(x, ctx), ctx) == residue(x)
    sx, sy = eclass(project(x, ctx), ctx), eclass(project(y, ctx), ctx)
    assert psi(eclass_add(sx, sy).rep, ctx) == residue(x + y)
    assert psi(eclass_mul(sx, sy).rep, ctx) == residue(x * y)
    assert eclass_of_residue(residue(x), ctx) == sx
