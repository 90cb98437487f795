"""The residue ring Z/p^level read off inside the hyperfield.

A class ``Cls(a, u)`` of nonnegative valuation is sent to ``p^a u mod
p^level``.  Two classes are equivalent when one lies in the other plus the
zero fiber, and the zero fiber is ``Ball(level)``: zero together with every
class of valuation at least ``level``.  So ``e_equiv(g, h)`` reduces to the
exact test ``h in g + Ball(level)``, which :func:`afv.hyper.ball_add` gives in
closed form.

Canonical representatives collapse valuation ``>= level`` to ``ZERO`` and
reduce the unit of ``Cls(a, u)`` modulo ``p^(level - a)``, the only part of
``u`` the residue sees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .hyper import (
    Cls,
    HyperCtx,
    ZERO,
    all_classes,
    ball_add,
    contains,
    h_mul,
    h_val,
    hyper_add,
    members_in_window,
    render_class,
    sigma,
)


@dataclass(frozen=True)
class EClass:
    rep: object
    ctx: HyperCtx

    def __repr__(self) -> str:
        return f"[{render_class(self.rep)}]"


def _require_integral(g) -> None:
    if h_val(g) < 0:
        raise ValueError(f"{render_class(g)} has negative valuation")


def canonical(g, ctx: HyperCtx):
    _require_integral(g)
    if g is ZERO or g.gamma >= ctx.level:
        return ZERO
    return Cls(g.gamma, g.u % ctx.p ** (ctx.level - g.gamma))


def eclass(g, ctx: HyperCtx) -> EClass:
    return EClass(canonical(g, ctx), ctx)


def in_zero_fiber(g, ctx: HyperCtx) -> bool:
    """Does 1 + g contain 1?"""
    one = Cls(0, 1)
    return sigma(one, g, one, ctx)


def e_equiv(g, h, ctx: HyperCtx) -> bool:
    """Is there z in the zero fiber with h in g + z?"""
    return contains(ball_add(ctx.level, g, ctx), h, ctx)


def psi(g, ctx: HyperCtx) -> int:
    _require_integral(g)
    if g is ZERO or g.gamma >= ctx.level:
        return 0
    return (ctx.p ** g.gamma * g.u) % ctx.modulus


def _witnesses(s, ctx: HyperCtx) -> list:
    # members of the sum up to valuation level; anything higher is zero-class
    found = members_in_window(s, ctx, ctx.level)
    return found or [ZERO]


def eclass_add(a: EClass, b: EClass, verify: bool = False) -> EClass:
    """Class of any j in a + b; with ``verify`` every witness is checked."""
    ctx = a.ctx
    js = _witnesses(hyper_add(a.rep, b.rep, ctx), ctx)
    result = eclass(js[0], ctx)
    if verify:
        for j in js[1:]:
            other = eclass(j, ctx)
            if other != result:
                raise AssertionError(
                    f"{a} + {b} is not well defined: {render_class(js[0])} vs {render_class(j)}")
    return result


def eclass_mul(a: EClass, b: EClass) -> EClass:
    return eclass(h_mul(a.rep, b.rep, a.ctx), a.ctx)


def eclass_of_residue(r: int, ctx: HyperCtx) -> EClass:
    """Inverse of psi on canonical classes."""
    r %= ctx.modulus
    if r == 0:
        return EClass(ZERO, ctx)
    a = 0
    while r % ctx.p == 0:
        r //= ctx.p
        a += 1
    return eclass(Cls(a, r), ctx)


@dataclass
class IsoReport:
    p: int
    level: int
    gamma_bound: int
    classes: int = 0
    checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list:
        out = [
            f"suite: residue-iso",
            f"p: {self.p}",
            f"level: {self.level}",
            f"gamma_bound: {self.gamma_bound}",
            f"classes: {self.classes}",
            f"checks: {self.checks}",
            f"failures: {len(self.failures)}",
        ]
        out.extend(f"counterexample: {f}" for f in self.failures[:20])
        out.append(f"result: {'pass' if self.passed else 'fail'}")
        return out


def check_ring_iso(ctx: HyperCtx, gamma_bound: int) -> IsoReport:
    """Check that psi is a ring isomorphism from E-classes onto Z/p^level."""
    if gamma_bound < ctx.level:
        raise ValueError("gamma_bound must be at least the level")
    rep = IsoReport(ctx.p, ctx.level, gamma_bound)
    fail = rep.failures.append
    mod = ctx.modulus
    universe = all_classes(ctx, gamma_bound, lo=0)

    # E computed two ways must agree; grouping by psi then gives the classes
    by_psi: dict = {}
    for g in universe:
        by_psi.setdefault(psi(g, ctx), []).append(g)
        if in_zero_fiber(g, ctx) != (psi(g, ctx) == 0):
            fail(f"zero fiber {render_class(g)}")
        rep.checks += 1
    for g in universe:
        for h in universe:
            if e_equiv(g, h, ctx) != (psi(g, ctx) == psi(h, ctx)):
                fail(f"e_equiv {render_class(g)} {render_class(h)}")
            rep.checks += 1
    for r, group in by_psi.items():
        if len({canonical(g, ctx) for g in group}) != 1:
            fail(f"residue {r} has several canonical classes")
    rep.classes = len(by_psi)
    if set(by_psi) != set(range(mod)):
        fail(f"psi is not onto Z/{mod}: image size {len(by_psi)}")

    classes = [eclass_of_residue(r, ctx) for r in range(mod)]
    for a in classes:
        if eclass_of_residue(psi(a.rep, ctx), ctx) != a:
            fail(f"psi inverse mismatch at {a}")
        for b in classes:
            ra, rb = psi(a.rep, ctx), psi(b.rep, ctx)
            try:
                s = eclass_add(a, b, verify=True)
            except AssertionError as exc:
                fail(str(exc))
                continue
            if psi(s.rep, ctx) != (ra + rb) % mod:
                fail(f"{a} + {b} -> {s}")
            m = eclass_mul(a, b)
            if psi(m.rep, ctx) != (ra * rb) % mod:
                fail(f"{a} * {b} -> {m}")
            rep.checks += 2
    return rep


def fiber_size(r: int, ctx: HyperCtx) -> int:
    """Number of classes Cls(a, u) with 0 <= a < level mapping to residue r."""
    return sum(1 for g in all_classes(ctx, ctx.level - 1, lo=0)
               if g is not ZERO and psi(g, ctx) == r % ctx.modulus)


__all__ = [
    "EClass", "IsoReport", "canonical", "check_ring_iso", "e_equiv", "eclass",
    "eclass_add", "eclass_mul", "eclass_of_residue", "fiber_size", "in_zero_fiber", "psi",
]
