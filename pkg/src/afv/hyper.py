"""Krasner hyperfield Q_p / (1 + p^level Z_p).

A nonzero class is ``Cls(gamma, u)``: the valuation and the unit part modulo
p^level.  Hyperaddition returns the set of classes of all sums of
representatives, in closed form:

* different valuations a < b: the smaller one wins, ``Cls(a, u + w p^(b-a))``;
* equal valuations with m = v_p(u + w) < level: the sums fill
  ``Sphere(a + m, (u + w) / p^m mod p^(level - m), m)``, i.e. p^m classes;
* u + w = 0 mod p^level: the sums fill all of p^(a+level) Z_p, ``Ball(a + level)``.

Search windows
--------------
``p2as_kras(X)`` asks for Y with X in Y^2 + Y.  For Y = Cls(c, w): if c > 0
the sum is the single class of valuation c, if c < 0 it has valuation 2c,
and if c = 0 every member has valuation >= 0.  So for X of valuation g only
c in {0, g, g/2} can work.  Every T+ class is a unit: if g > 0 then
Y = Cls(g, w) gives Y^2 + Y = Cls(g, w + w^2 p^g), and w -> w + w^2 p^g is a
bijection on units, so X is hit; if g < 0 the same holds for 1/X.  Hence
the witnesses of Theta_1 and Theta_2 range over the finitely many units.
In the third disjunct S ranges over X - 1; when that is a ball, Theta_2(S)
depends only on S^l - 1, which is constant once v(S) >= level, so a window
of ``level`` valuations above the ball floor suffices.  All windows are widened by ``AFV_MARGIN`` (default 2)
as a guard against a slip in this derivation.
"""

from __future__ import annotations

import itertools
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator

from .local import INFINITY, as_rational, check_prime, unit_residue, vp


# Exponent in the power clause of Theta.  With l = 2 the definition misses
# units at level 1 for p = 5 and p = 7; any multiple of p - 1 makes every unit
# satisfy the power clause at level 1, and 12 covers p <= 7.
DEFAULT_EXPONENT = 12


def search_margin() -> int:
    raw = os.environ.get("AFV_MARGIN", "2")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"AFV_MARGIN must be an integer, got {raw!r}")
    if value < 0:
        raise ValueError("AFV_MARGIN must be non-negative")
    return value


@dataclass(frozen=True)
class HyperCtx:
    p: int
    level: int

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.level < 1:
            raise ValueError("level must be at least 1")

    @property
    def modulus(self) -> int:
        return self.p ** self.level

    def units(self) -> list:
        return [u for u in range(1, self.modulus) if u % self.p]


class HZero:
    __slots__ = ()

    def __repr__(self) -> str:
        return "0"

    def __reduce__(self):
        return (_zero, ())


def _zero() -> "HZero":
    return ZERO


ZERO = object.__new__(HZero)


@dataclass(frozen=True, order=True)
class Cls:
    gamma: int
    u: int

    def __repr__(self) -> str:
        return f"({self.gamma}; {self.u})"


HClass = object  # ZERO or Cls


def make_class(gamma: int, u: int, ctx: HyperCtx) -> Cls:
    u %= ctx.modulus
    if u % ctx.p == 0:
        raise ValueError(f"{u} is not a unit modulo {ctx.modulus}")
    return Cls(gamma, u)


def parse_class(text: str, ctx: HyperCtx):
    s = text.strip()
    if s == "0":
        return ZERO
    if not (s.startswith("(") and s.endswith(")")) or ";" not in s:
        raise ValueError(f"bad class literal {text!r}; expected 0 or (g; u)")
    g, u = s[1:-1].split(";")
    return make_class(int(g), int(u), ctx)


def render_class(x) -> str:
    return "0" if x is ZERO else f"({x.gamma}; {x.u})"


def all_classes(ctx: HyperCtx, gamma_bound: int, lo: int | None = None) -> list:
    lo = -gamma_bound if lo is None else lo
    out: list = [ZERO]
    for g in range(lo, gamma_bound + 1):
        out.extend(Cls(g, u) for u in ctx.units())
    return out


# ---------------------------------------------------------------- projection and multiplication

def project(x, ctx: HyperCtx):
    x = as_rational(x)
    if x == 0:
        return ZERO
    return Cls(vp(x, ctx.p), unit_residue(x, ctx.p, ctx.level))


def representative(x, ctx: HyperCtx) -> Fraction:
    if x is ZERO:
        return Fraction(0)
    return Fraction(ctx.p) ** x.gamma * x.u


def h_mul(x, y, ctx: HyperCtx):
    if x is ZERO or y is ZERO:
        return ZERO
    return Cls(x.gamma + y.gamma, (x.u * y.u) % ctx.modulus)


def h_inv(x, ctx: HyperCtx):
    if x is ZERO:
        raise ZeroDivisionError("Zero has no inverse")
    return Cls(-x.gamma, pow(x.u, -1, ctx.modulus))


def h_neg(x, ctx: HyperCtx):
    if x is ZERO:
        return ZERO
    return Cls(x.gamma, (-x.u) % ctx.modulus)


def h_pow(x, k: int, ctx: HyperCtx):
    if k < 0:
        return h_pow(h_inv(x, ctx), -k, ctx)
    if x is ZERO:
        return ZERO if k else Cls(0, 1)
    return Cls(k * x.gamma, pow(x.u, k, ctx.modulus))


def h_val(x):
    return INFINITY if x is ZERO else x.gamma


def in_Pdelta(x) -> bool:
    return h_val(x) >= 0


def in_Udelta(x) -> bool:
    return h_val(x) == 0


def minus_one(ctx: HyperCtx) -> Cls:
    return Cls(0, ctx.modulus - 1)


# ---------------------------------------------------------------- class sets

@dataclass(frozen=True)
class Single:
    x: object

    def __repr__(self) -> str:
        return f"Single({render_class(self.x)})"


@dataclass(frozen=True)
class Sphere:
    """Classes Cls(gamma, z) with z = z0 mod p^(level - m); p^m members."""

    gamma: int
    z0: int
    m: int

    def __repr__(self) -> str:
        return f"Sphere({self.gamma}, {self.z0}, m={self.m})"


@dataclass(frozen=True)
class Ball:
    """Zero together with every class of valuation >= gamma_min."""

    gamma_min: int

    def __repr__(self) -> str:
        return f"Ball({self.gamma_min})"


@dataclass(frozen=True)
class ClassUnion:
    """Finite set of classes, optionally together with a ball."""

    finite: frozenset
    ball: int | None = None

    def __repr__(self) -> str:
        items = sorted((render_class(c) for c in self.finite))
        tail = f" + Ball({self.ball})" if self.ball is not None else ""
        return "{" + ", ".join(items) + "}" + tail


def sphere_members(s: Sphere, ctx: HyperCtx) -> list:
    step = ctx.p ** (ctx.level - s.m)
    return [Cls(s.gamma, (s.z0 + step * t) % ctx.modulus) for t in range(ctx.p ** s.m)]


def canon(s, ctx: HyperCtx) -> ClassUnion:
    """Canonical form, so that equal sets compare equal."""
    if isinstance(s, ClassUnion):
        return _normalize_union(s.finite, s.ball, ctx)
    if isinstance(s, Single):
        return ClassUnion(frozenset([s.x]))
    if isinstance(s, Sphere):
        return ClassUnion(frozenset(sphere_members(s, ctx)))
    if isinstance(s, Ball):
        return ClassUnion(frozenset(), s.gamma_min)
    raise TypeError(f"not a class set: {s!r}")


def _normalize_union(finite: Iterable, ball: int | None, ctx: HyperCtx) -> ClassUnion:
    if ball is None:
        return ClassUnion(frozenset(finite))
    kept = {c for c in finite if c is not ZERO and c.gamma < ball}
    # a full layer of units just below the ball extends the ball
    n_units = ctx.modulus - ctx.modulus // ctx.p
    while True:
        layer = {c for c in kept if c.gamma == ball - 1}
        if len(layer) < n_units:
            break
        kept -= layer
        ball -= 1
    return ClassUnion(frozenset(kept), ball)


def union_of(parts: Iterable, ctx: HyperCtx) -> ClassUnion:
    finite: set = set()
    ball = None
    for part in parts:
        cu = canon(part, ctx)
        finite |= cu.finite
        if cu.ball is not None:
            ball = cu.ball if ball is None else min(ball, cu.ball)
    return _normalize_union(finite, ball, ctx)


def contains(s, z, ctx: HyperCtx) -> bool:
    if isinstance(s, Single):
        return s.x == z
    if isinstance(s, Ball):
        return z is ZERO or z.gamma >= s.gamma_min
    if isinstance(s, Sphere):
        if z is ZERO or z.gamma != s.gamma:
            return False
        return (z.u - s.z0) % (ctx.p ** (ctx.level - s.m)) == 0
    if isinstance(s, ClassUnion):
        if z in s.finite:
            return True
        return s.ball is not None and (z is ZERO or z.gamma >= s.ball)
    raise TypeError(f"not a class set: {s!r}")


def members_in_window(s, ctx: HyperCtx, hi: int) -> list:
    """Members of ``s``; ball parts are cut at valuation ``hi``."""
    cu = canon(s, ctx)
    out = set(cu.finite)
    if cu.ball is not None:
        out.add(ZERO)
        for g in range(cu.ball, hi + 1):
            out.update(Cls(g, u) for u in ctx.units())
    return sorted(out, key=_class_key)


def _class_key(c) -> tuple:
    return (1, 0, 0) if c is ZERO else (0, c.gamma, c.u)


# ---------------------------------------------------------------- hyperaddition

def hyper_add(x, y, ctx: HyperCtx):
    return _hyper_add(x, y, ctx.p, ctx.level)


@lru_cache(maxsize=1 << 20)
def _hyper_add(x, y, p: int, level: int):
    if x is ZERO:
        return Single(y)
    if y is ZERO:
        return Single(x)
    mod = p ** level
    if x.gamma > y.gamma:
        x, y = y, x
    a, u = x.gamma, x.u
    b, w = y.gamma, y.u
    if a < b:
        if b - a >= level:
            return Single(x)
        return Single(Cls(a, (u + w * p ** (b - a)) % mod))
    s = (u + w) % mod
    if s == 0:
        return Ball(a + level)
    m = 0
    while s % p == 0:
        s //= p
        m += 1
    if m == 0:
        return Single(Cls(a, s))
    return Sphere(a + m, s % p ** (level - m), m)


def scale(s, r, ctx: HyperCtx):
    """The set {r * t : t in s}."""
    if r is ZERO:
        return Single(ZERO)
    if isinstance(s, Single):
        return Single(h_mul(r, s.x, ctx))
    if isinstance(s, Sphere):
        mod = ctx.p ** (ctx.level - s.m)
        return Sphere(s.gamma + r.gamma, (s.z0 * r.u) % mod, s.m)
    if isinstance(s, Ball):
        return Ball(s.gamma_min + r.gamma)
    if isinstance(s, ClassUnion):
        fin = frozenset(h_mul(r, c, ctx) for c in s.finite)
        return _normalize_union(fin, None if s.ball is None else s.ball + r.gamma, ctx)
    raise TypeError(f"not a class set: {s!r}")


def ball_add(gamma_min: int, z, ctx: HyperCtx):
    """Ball(gamma_min) + z in closed form."""
    if z is ZERO or z.gamma >= gamma_min:
        return Ball(gamma_min)
    gap = gamma_min - z.gamma
    if gap >= ctx.level:
        return Single(z)
    # z (1 + p^gap Z_p): unit parts agree with z.u modulo p^gap
    return Sphere(z.gamma, z.u % ctx.p ** gap, ctx.level - gap)


def classset_add(s, z, ctx: HyperCtx) -> ClassUnion:
    """Exact { t : t in c + z for some c in s }."""
    cu = canon(s, ctx)
    parts = [hyper_add(c, z, ctx) for c in cu.finite]
    if cu.ball is not None:
        parts.append(ball_add(cu.ball, z, ctx))
    return union_of(parts, ctx)


def set_add(s, t, ctx: HyperCtx) -> ClassUnion:
    """Sum of two class sets (used for associativity checks)."""
    cs, ct = canon(s, ctx), canon(t, ctx)
    parts = [classset_add(cs, z, ctx) for z in ct.finite]
    if ct.ball is not None:
        parts.extend(classset_add(Ball(ct.ball), z, ctx) for z in cs.finite)
        if cs.ball is not None:
            parts.append(Ball(min(cs.ball, ct.ball)))
    return union_of(parts, ctx)


def sigma(x, y, z, ctx: HyperCtx) -> bool:
    return contains(hyper_add(x, y, ctx), z, ctx)


def sigma3(x, y, z, t, ctx: HyperCtx) -> bool:
    """Exists w with w in x + y and t in w + z."""
    return contains(classset_add(hyper_add(x, y, ctx), z, ctx), t, ctx)


# ---------------------------------------------------------------- representative-sampling oracle

def random_representative(x, ctx: HyperCtx, rng: random.Random, height: int) -> Fraction:
    """A random rational in the class ``x`` with numerator/denominator near ``height``."""
    if x is ZERO:
        return Fraction(0)
    mod = ctx.modulus
    while True:
        d = rng.randint(1, height)
        if d % ctx.p:
            break
    # numerator n with n / d = x.u mod p^level
    base = (x.u * d) % mod
    k_max = max(0, (height - base) // mod)
    n = base + mod * rng.randint(0, k_max)
    if rng.random() < 0.5:
        n -= mod * (k_max + 1) if n - mod * (k_max + 1) != 0 else 0
    if n == 0:
        n = base
    return Fraction(ctx.p) ** x.gamma * Fraction(n, d)


def sample_sum_classes(x, y, ctx: HyperCtx, rng: random.Random, samples: int, height: int) -> set:
    seen = set()
    for _ in range(samples):
        a = random_representative(x, ctx, rng, height)
        b = random_representative(y, ctx, rng, height)
        seen.add(project(a + b, ctx))
    return seen


# ---------------------------------------------------------------- T+ and Theta

def p2as_kras(x, ctx: HyperCtx) -> bool:
    """Exists y with x in y^2 + y."""
    if x is ZERO:
        return True
    g = x.gamma
    centres = {0, g}
    if g % 2 == 0:
        centres.add(g // 2)
    margin = search_margin()
    cands = range(min(centres) - margin, max(centres) + margin + 1)
    for c in cands:
        for w in ctx.units():
            y = Cls(c, w)
            if contains(hyper_add(h_mul(y, y, ctx), y, ctx), x, ctx):
                return True
    return False


def tplus_kras(x, ctx: HyperCtx) -> bool:
    if x is ZERO:
        return False
    return not p2as_kras(x, ctx) and not p2as_kras(h_inv(x, ctx), ctx)


@lru_cache(maxsize=64)
def tplus_classes(ctx: HyperCtx, margin: int) -> tuple:
    """All T+ classes, searched over valuations |gamma| <= margin + 1."""
    found = [c for c in all_classes(ctx, margin + 1) if tplus_kras(c, ctx)]
    return tuple(sorted(found, key=_class_key))


def _tplus(ctx: HyperCtx) -> tuple:
    return tplus_classes(ctx, search_margin())


@lru_cache(maxsize=64)
def _theta1_set(ctx: HyperCtx, margin: int) -> ClassUnion:
    t = tplus_classes(ctx, margin)
    ab = union_of((hyper_add(a, b, ctx) for a in t for b in t), ctx)
    cds = {h_mul(c, d, ctx) for c in t for d in t}
    return union_of((classset_add(ab, cd, ctx) for cd in sorted(cds, key=_class_key)), ctx)


def theta1(x, ctx: HyperCtx) -> bool:
    return contains(_theta1_set(ctx, search_margin()), x, ctx)


@lru_cache(maxsize=64)
def _theta2_targets(ctx: HyperCtx, margin: int) -> ClassUnion:
    """Every w admitting Y, W in T+ with W in w + Y, i.e. the union of W - Y."""
    t = tplus_classes(ctx, margin)
    return union_of((hyper_add(w, h_neg(y, ctx), ctx) for w in t for y in t), ctx)


def _meets(s: ClassUnion, t: ClassUnion, ctx: HyperCtx) -> bool:
    if s.ball is not None and t.ball is not None:
        return True
    return any(contains(t, c, ctx) for c in s.finite) or any(contains(s, c, ctx) for c in t.finite)


def theta2(x, ctx: HyperCtx, l: int = DEFAULT_EXPONENT) -> bool:
    """Exists Y, W in T+ with Sigma_3(X^l, -1, Y, W).

    By reversibility W in w + Y iff w in W - Y, so the witnesses collapse to
    one precomputed set of admissible w.
    """
    w_set = canon(hyper_add(h_pow(x, l, ctx), minus_one(ctx), ctx), ctx)
    return _meets(w_set, _theta2_targets(ctx, search_margin()), ctx)


def theta3(x, ctx: HyperCtx, l: int = DEFAULT_EXPONENT) -> bool:
    """Exists S with Theta_2(S) and S in X - 1 (binary Sigma)."""
    cu = canon(hyper_add(x, minus_one(ctx), ctx), ctx)
    hi = (cu.ball if cu.ball is not None else 0) + ctx.level + search_margin()
    return any(theta2(s, ctx, l) for s in members_in_window(cu, ctx, hi))


def theta_kras(x, ctx: HyperCtx, l: int = DEFAULT_EXPONENT) -> bool:
    return theta1(x, ctx) or theta2(x, ctx, l) or theta3(x, ctx, l)


def theta_clauses(x, ctx: HyperCtx, l: int = DEFAULT_EXPONENT) -> dict:
    return {"theta1": theta1(x, ctx), "theta2": theta2(x, ctx, l), "theta3": theta3(x, ctx, l)}


# ---------------------------------------------------------------- axiom checks

@dataclass
class AxiomReport:
    ctx: HyperCtx
    gamma_bound: int
    samples: int
    seed: int
    checks: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list:
        out = [f"p: {self.ctx.p}", f"level: {self.ctx.level}", f"gamma_bound: {self.gamma_bound}",
               f"samples: {self.samples}", f"seed: {self.seed}"]
        for name in sorted(self.checks):
            out.append(f"{name}: {self.checks[name]}")
        for f in self.failures[:20]:
            out.append(f"counterexample: {f}")
        out.append(f"result: {'pass' if self.passed else 'fail'}")
        return out


def check_hypergroup_axioms(ctx: HyperCtx, gamma_bound: int, sample_count: int = 1000,
                            seed: int = 0, adder=None) -> AxiomReport:
    """Canonical hypergroup axioms plus distributivity over a window of classes.

    Commutativity, neutral element, unique negatives, reversibility and
    distributivity are checked on every class with |gamma| <= gamma_bound;
    associativity on ``sample_count`` random triples.  ``adder`` replaces
    hyper_add (used for mutation testing).
    """
    if gamma_bound < 1:
        raise ValueError("gamma_bound must be at least 1")
    add = adder or (lambda x, y: hyper_add(x, y, ctx))
    universe = all_classes(ctx, gamma_bound)
    nonzero = universe[1:]
    failures: list = []
    counts = dict.fromkeys(["commutativity", "neutral", "negative", "reversibility",
                            "distributivity", "associativity"], 0)

    def fail(axiom: str, *args) -> None:
        failures.append(f"{axiom} " + " ".join(render_class(a) for a in args))

    table = {}
    for x in universe:
        for y in universe:
            table[x, y] = canon(add(x, y), ctx)
    for x in universe:
        if table[ZERO, x] != canon(Single(x), ctx) or table[x, ZERO] != canon(Single(x), ctx):
            fail("neutral", x)
        counts["neutral"] += 1
        zeros = [y for y in universe if contains(table[x, y], ZERO, ctx)]
        if zeros != [h_neg(x, ctx)]:
            fail("negative", x)
        counts["negative"] += 1
        for y in universe:
            counts["commutativity"] += 1
            if table[x, y] != table[y, x]:
                fail("commutativity", x, y)
    # reversibility: x in y + z implies z in x - y
    for y in universe:
        ny = h_neg(y, ctx)
        for z in universe:
            for x in members_in_window(table[y, z], ctx, gamma_bound):
                if x is not ZERO and abs(x.gamma) > gamma_bound:
                    continue
                counts["reversibility"] += 1
                s = table.get((x, ny))
                if s is None:
                    s = canon(add(x, ny), ctx)
                if not contains(s, z, ctx):
                    fail("reversibility", x, y, z)
    # distributivity: r (s + t) = r s + r t, compared on closed forms, which
    # are unique per set (Single, Sphere with m >= 1, Ball never coincide)
    raw = {}
    for s in universe:
        for t in universe:
            raw[s, t] = add(s, t)
    for r in universe:
        for s in universe:
            rs = h_mul(r, s, ctx)
            for t in universe:
                left = scale(raw[s, t], r, ctx)
                right = add(rs, h_mul(r, t, ctx))
                if left != right and canon(left, ctx) != canon(right, ctx):
                    fail("distributivity", r, s, t)
        counts["distributivity"] += len(universe) ** 2
    rng = random.Random(seed)
    for _ in range(sample_count):
        x, y, z = (rng.choice(nonzero if rng.random() < 0.9 else universe) for _ in range(3))
        counts["associativity"] += 1
        left = _set_add_with(table.get((x, y)) or canon(add(x, y), ctx), z, ctx, add)
        right = _set_add_with(canon(add(y, z), ctx), x, ctx, add)
        if left != right:
            fail("associativity", x, y, z)
    return AxiomReport(ctx, gamma_bound, sample_count, seed, counts, failures)


def _set_add_with(s: ClassUnion, z, ctx: HyperCtx, add) -> ClassUnion:
    parts = [add(c, z) for c in s.finite]
    if s.ball is not None:
        parts.append(ball_add(s.ball, z, ctx))
    return union_of(parts, ctx)


def iter_units_classes(ctx: HyperCtx, gamma_bound: int) -> Iterator:
    return iter(all_classes(ctx, gamma_bound))
