"""Eventually constant families over the primes: finite adeles and hyperfield families.

An element is a default value plus finitely many exceptional coordinates.
Boolean values of quantifier-free formulas are computed exactly at the
exceptional primes and symbolically at the default tuple.

Ring formulas at the default tuple
    Equalities of rationals do not depend on the prime.  ``V(q)`` fails
    exactly at the primes dividing the denominator of q.  ``pow k`` of a
    rational that is neither zero nor a k-th power in Q gives a Frontier set.

Hyperring formulas at the default tuple
    A default class is the symbol ``p^g * u`` with u a nonzero rational.
    Products and inverses stay symbolic.  Off a finite set of bad primes
    (those dividing u, or the numerator of a difference of two units that
    gets compared) every atom has a prime-independent truth value:

    * ``Pdelta`` and zero tests only look at g;
    * ``x = y`` with equal g holds iff the unit rationals are equal;
    * ``Sigma(x, y, z)`` with g(x) < g(y) = g(x) + d yields the single class
      ``p^g(x) (u + w p^d)``, equal to ``p^g(x) t`` iff u = t and d >= level;
      with g(x) = g(y) and u + w nonzero the sum is ``p^g(x) (u + w)``; with
      u + w = 0 it is the ball of valuation ``g(x) + level``.

    The bad primes are then evaluated exactly, so hyperring Boolean values
    are always Finite or Cofinite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from sympy import integer_nthroot, primefactors

from .boolean import (
    UNKNOWN,
    Cofinite,
    Finite,
    Frontier,
    PrimeSet,
    ps_complement,
    ps_join,
    ps_meet,
)
from .hyper import (
    Cls,
    HyperCtx,
    ZERO,
    h_inv,
    h_mul,
    hyper_add,
    contains,
    in_Pdelta,
    minus_one,
    parse_class,
    project,
    render_class,
)
from .local import as_rational, check_prime, eval_ring_term, is_kth_power, local_holds, vp
from .logic import (
    And,
    App,
    Atom,
    Const,
    Eq,
    Formula,
    Implies,
    LogicError,
    Not,
    Or,
    Truth,
    Var,
    free_vars,
    is_quantifier_free,
    render_formula,
)


class QuantifierPresent(LogicError):
    pass


# ---------------------------------------------------------------- finite adeles

@dataclass(frozen=True)
class FiniteAdele:
    default: Fraction
    exceptions: tuple = ()  # sorted (prime, value) pairs, none equal to the default

    def __post_init__(self) -> None:
        d = as_rational(self.default)
        items = dict(self.exceptions) if not isinstance(self.exceptions, Mapping) else self.exceptions
        exc = {}
        for p, v in items.items():
            p = check_prime(int(p))
            v = as_rational(v)
            if v != d:
                exc[p] = v
        object.__setattr__(self, "default", d)
        object.__setattr__(self, "exceptions", tuple(sorted(exc.items())))

    def at(self, p: int) -> Fraction:
        return dict(self.exceptions).get(p, self.default)

    @property
    def exception_primes(self) -> tuple:
        return tuple(p for p, _ in self.exceptions)

    def __add__(self, other: "FiniteAdele") -> "FiniteAdele":
        return _combine(self, other, lambda a, b: a + b)

    def __sub__(self, other: "FiniteAdele") -> "FiniteAdele":
        return _combine(self, other, lambda a, b: a - b)

    def __mul__(self, other: "FiniteAdele") -> "FiniteAdele":
        return _combine(self, other, lambda a, b: a * b)

    def __neg__(self) -> "FiniteAdele":
        return FiniteAdele(-self.default, {p: -v for p, v in self.exceptions})

    def __repr__(self) -> str:
        exc = ", ".join(f"{p}: {v}" for p, v in self.exceptions)
        return f"Adele({self.default}; {{{exc}}})"


def _combine(a: FiniteAdele, b: FiniteAdele, op) -> FiniteAdele:
    primes = set(a.exception_primes) | set(b.exception_primes)
    return FiniteAdele(op(a.default, b.default), {p: op(a.at(p), b.at(p)) for p in primes})


def diagonal(q) -> FiniteAdele:
    return FiniteAdele(as_rational(q))


def adele_add(a: FiniteAdele, b: FiniteAdele) -> FiniteAdele:
    return a + b


def adele_sub(a: FiniteAdele, b: FiniteAdele) -> FiniteAdele:
    return a - b


def adele_mul(a: FiniteAdele, b: FiniteAdele) -> FiniteAdele:
    return a * b


def idempotent(s: PrimeSet) -> FiniteAdele:
    """The adele that is 1 on s and 0 off s."""
    if isinstance(s, Finite):
        return FiniteAdele(Fraction(0), {p: 1 for p in s.primes})
    if isinstance(s, Cofinite):
        return FiniteAdele(Fraction(1), {p: 0 for p in s.excluded})
    raise ValueError("idempotents need a Finite or Cofinite prime set")


def is_idempotent(a: FiniteAdele) -> bool:
    return a * a == a


def supp(a: FiniteAdele) -> PrimeSet:
    if a.default == 0:
        return Finite(p for p, v in a.exceptions if v != 0)
    return Cofinite(p for p, v in a.exceptions if v == 0)


def is_min_idempotent(a: FiniteAdele) -> int | None:
    if a.default == 0 and len(a.exceptions) == 1 and a.exceptions[0][1] == 1:
        return a.exceptions[0][0]
    return None


def stalk_project(a: FiniteAdele, p: int) -> Fraction:
    return a.at(p)


def is_restricted_at(a: FiniteAdele, p: int) -> bool:
    return vp(a.at(p), p) >= 0


def adele_from_json(obj) -> FiniteAdele:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, Mapping) or "default" not in obj:
        raise ValueError('adele literal needs a "default" key')
    return FiniteAdele(as_rational(str(obj["default"])),
                       {int(p): as_rational(str(v)) for p, v in obj.get("exceptions", {}).items()})


def adele_to_json(a: FiniteAdele) -> dict:
    return {"default": str(a.default), "exceptions": {str(p): str(v) for p, v in a.exceptions}}


# ---------------------------------------------------------------- Boolean values of ring formulas

def _bind(phi: Formula, args) -> dict:
    if isinstance(args, Mapping):
        return dict(args)
    names = sorted(v.name for v in free_vars(phi))
    if len(names) != len(args):
        raise LogicError(f"formula has free variables {names} but {len(args)} arguments were given")
    return dict(zip(names, args))


def _check_qf(phi: Formula) -> None:
    if not is_quantifier_free(phi):
        raise QuantifierPresent(f"quantifier-free formula expected: {render_formula(phi)}")


def _rational_kth_root_exists(q: Fraction, k: int) -> bool:
    if q == 0:
        return True
    if q < 0 and k % 2 == 0:
        return False
    _, exact_n = integer_nthroot(abs(q.numerator), k)
    _, exact_d = integer_nthroot(q.denominator, k)
    return exact_n and exact_d


def _generic_ring(f: Formula, values: Mapping) -> PrimeSet:
    """Truth set of f when every coordinate takes its default value."""
    if isinstance(f, Truth):
        return Cofinite() if f.value else Finite()
    if isinstance(f, Eq):
        same = eval_ring_term(f.left, values) == eval_ring_term(f.right, values)
        return Cofinite() if same else Finite()
    if isinstance(f, Atom):
        q = eval_ring_term(f.args[0], values)
        if f.rel == "V":
            return Cofinite(primefactors(q.denominator))
        if f.rel == "pow":
            k = f.index
            if _rational_kth_root_exists(q, k):
                return Cofinite()
            return Frontier(lambda p, q=q, k=k: is_kth_power(q, p, k), UNKNOWN,
                            label=f"pow {k} of {q}")
        raise LogicError(f"not a ring relation: {f.rel}")
    if isinstance(f, Not):
        return ps_complement(_generic_ring(f.body, values))
    if isinstance(f, And):
        out: PrimeSet = Cofinite()
        for part in f.parts:
            out = ps_meet(out, _generic_ring(part, values))
        return out
    if isinstance(f, Or):
        out = Finite()
        for part in f.parts:
            out = ps_join(out, _generic_ring(part, values))
        return out
    if isinstance(f, Implies):
        return ps_join(ps_complement(_generic_ring(f.left, values)), _generic_ring(f.right, values))
    raise LogicError(f"not a quantifier-free ring formula: {render_formula(f)}")


def boolean_value(phi: Formula, args) -> PrimeSet:
    """The set of primes at which phi holds of the coordinates of args."""
    _check_qf(phi)
    env = _bind(phi, args)
    exceptional = sorted({p for a in env.values() for p in a.exception_primes})
    generic = _generic_ring(phi, {n: a.default for n, a in env.items()})
    hits = [p for p in exceptional if local_holds(phi, p, {n: a.at(p) for n, a in env.items()})]
    return ps_join(ps_meet(generic, Cofinite(exceptional)), Finite(hits))


# ---------------------------------------------------------------- hyperfield families

@dataclass(frozen=True)
class SymClass:
    """The symbolic class p^gamma * unit, read at each prime."""

    gamma: int
    unit: Fraction

    def at(self, ctx: HyperCtx):
        return project(Fraction(ctx.p) ** self.gamma * self.unit, ctx)

    def __repr__(self) -> str:
        return f"({self.gamma}; {self.unit})"


SYM_ZERO = "0"


def parse_sym_class(text: str):
    s = text.strip()
    if s == "0":
        return SYM_ZERO
    if not (s.startswith("(") and s.endswith(")")) or ";" not in s:
        raise ValueError(f"bad class literal {text!r}; expected 0 or (g; u)")
    g, u = s[1:-1].split(";")
    unit = as_rational(u)
    if unit == 0:
        raise ValueError("unit must be nonzero")
    return SymClass(int(g), unit)


@dataclass(frozen=True)
class AdeleHFamily:
    level: int
    default: object  # SYM_ZERO or SymClass
    exceptions: tuple = ()  # sorted (prime, class) pairs

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("level must be at least 1")
        if isinstance(self.default, str):
            object.__setattr__(self, "default", parse_sym_class(self.default))
        items = self.exceptions.items() if isinstance(self.exceptions, Mapping) else self.exceptions
        exc = {}
        for p, c in items:
            p = check_prime(int(p))
            ctx = HyperCtx(p, self.level)
            if isinstance(c, str):
                c = parse_class(c, ctx)
            if c != self._default_at(ctx):
                exc[p] = c
        object.__setattr__(self, "exceptions", tuple(sorted(exc.items())))
        if self.default != SYM_ZERO and self.default.gamma < 0:
            raise ValueError("default class must have nonnegative valuation")

    def _default_at(self, ctx: HyperCtx):
        return ZERO if self.default == SYM_ZERO else self.default.at(ctx)

    def at(self, p: int):
        ctx = HyperCtx(p, self.level)
        return dict(self.exceptions).get(p, self._default_at(ctx))

    @property
    def exception_primes(self) -> tuple:
        return tuple(p for p, _ in self.exceptions)


def h_stalk_project(fam: AdeleHFamily, p: int):
    return fam.at(p)


def hfamily_from_json(obj, level: int) -> AdeleHFamily:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, Mapping) or "default" not in obj:
        raise ValueError('family literal needs a "default" key')
    return AdeleHFamily(level, str(obj["default"]),
                        {int(p): str(v) for p, v in obj.get("exceptions", {}).items()})


def _eval_hterm(t, ctx: HyperCtx, values: Mapping):
    if isinstance(t, Var):
        return values[t.name]
    if isinstance(t, Const):
        if t.name == "0":
            return ZERO
        if t.name == "1":
            return Cls(0, 1)
        if t.name == "-1":
            return minus_one(ctx)
        raise LogicError(f"unknown hyperring constant {t.name}")
    if isinstance(t, App):
        args = [_eval_hterm(a, ctx, values) for a in t.args]
        if t.fn == "*":
            return h_mul(args[0], args[1], ctx)
        if t.fn == "inv":
            return h_inv(args[0], ctx)
        raise LogicError(f"not a hyperring function: {t.fn}")
    raise LogicError(f"not a hyperring term: {t!r}")


def h_local_holds(f: Formula, ctx: HyperCtx, values: Mapping) -> bool:
    """Truth of a quantifier-free hyperring formula in one hyperfield."""
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Eq):
        return _eval_hterm(f.left, ctx, values) == _eval_hterm(f.right, ctx, values)
    if isinstance(f, Atom):
        args = [_eval_hterm(a, ctx, values) for a in f.args]
        if f.rel == "Pdelta":
            return in_Pdelta(args[0])
        if f.rel == "Sigma":
            return contains(hyper_add(args[0], args[1], ctx), args[2], ctx)
        raise LogicError(f"not a hyperring relation: {f.rel}")
    if isinstance(f, Not):
        return not h_local_holds(f.body, ctx, values)
    if isinstance(f, And):
        return all(h_local_holds(q, ctx, values) for q in f.parts)
    if isinstance(f, Or):
        return any(h_local_holds(q, ctx, values) for q in f.parts)
    if isinstance(f, Implies):
        return (not h_local_holds(f.left, ctx, values)) or h_local_holds(f.right, ctx, values)
    raise LogicError(f"not a quantifier-free hyperring formula: {render_formula(f)}")


class _Generic:
    """Symbolic evaluation at the default tuple, collecting bad primes."""

    def __init__(self, level: int) -> None:
        self.level = level
        self.bad: set = set()

    def note(self, q: Fraction) -> None:
        if q != 0:
            self.bad.update(primefactors(q.numerator))
            self.bad.update(primefactors(q.denominator))

    def term(self, t, values: Mapping):
        if isinstance(t, Var):
            v = values[t.name]
            if v != SYM_ZERO:
                self.note(v.unit)
            return v
        if isinstance(t, Const):
            return {"0": SYM_ZERO, "1": SymClass(0, Fraction(1)), "-1": SymClass(0, Fraction(-1))}[t.name]
        if isinstance(t, App):
            args = [self.term(a, values) for a in t.args]
            if t.fn == "*":
                if SYM_ZERO in args:
                    return SYM_ZERO
                return SymClass(args[0].gamma + args[1].gamma, args[0].unit * args[1].unit)
            if t.fn == "inv":
                if args[0] == SYM_ZERO:
                    raise ZeroDivisionError("Zero has no inverse")
                return SymClass(-args[0].gamma, 1 / args[0].unit)
        raise LogicError(f"not a hyperring term: {t!r}")

    def equal(self, x, y) -> bool:
        if x == SYM_ZERO or y == SYM_ZERO:
            return x == y
        if x.gamma != y.gamma:
            return False
        self.note(x.unit - y.unit)
        return x.unit == y.unit

    def in_sum(self, x, y, z) -> bool:
        if x == SYM_ZERO:
            return self.equal(y, z)
        if y == SYM_ZERO:
            return self.equal(x, z)
        if x.gamma > y.gamma:
            x, y = y, x
        if x.gamma < y.gamma:
            if z == SYM_ZERO or z.gamma != x.gamma:
                return False
            self.note(x.unit - z.unit)
            return x.unit == z.unit and y.gamma - x.gamma >= self.level
        s = x.unit + y.unit
        if s == 0:
            return z == SYM_ZERO or z.gamma >= x.gamma + self.level
        self.note(s)
        return self.equal(SymClass(x.gamma, s), z)

    def holds(self, f: Formula, values: Mapping) -> bool:
        if isinstance(f, Truth):
            return f.value
        if isinstance(f, Eq):
            return self.equal(self.term(f.left, values), self.term(f.right, values))
        if isinstance(f, Atom):
            args = [self.term(a, values) for a in f.args]
            if f.rel == "Pdelta":
                return args[0] == SYM_ZERO or args[0].gamma >= 0
            if f.rel == "Sigma":
                return self.in_sum(*args)
            raise LogicError(f"not a hyperring relation: {f.rel}")
        if isinstance(f, Not):
            return not self.holds(f.body, values)
        if isinstance(f, And):
            return all([self.holds(q, values) for q in f.parts])
        if isinstance(f, Or):
            return any([self.holds(q, values) for q in f.parts])
        if isinstance(f, Implies):
            return (not self.holds(f.left, values)) or self.holds(f.right, values)
        raise LogicError(f"not a quantifier-free hyperring formula: {render_formula(f)}")


def h_boolean_value(phi: Formula, args) -> PrimeSet:
    """Exact Boolean value of a quantifier-free hyperring formula."""
    _check_qf(phi)
    env = _bind(phi, args)
    levels = {fam.level for fam in env.values()}
    if len(levels) > 1:
        raise ValueError("all families must share one level")
    level = levels.pop() if levels else 1
    gen = _Generic(level)
    # evaluate every atom so that all bad primes are collected
    truth = gen.holds(phi, {n: fam.default for n, fam in env.items()})
    special = sorted(gen.bad | {p for fam in env.values() for p in fam.exception_primes})
    hits = []
    for p in special:
        ctx = HyperCtx(p, level)
        if h_local_holds(phi, ctx, {n: fam.at(p) for n, fam in env.items()}):
            hits.append(p)
    if truth:
        return Cofinite(p for p in special if p not in hits)
    return Finite(hits)


__all__ = [
    "AdeleHFamily", "FiniteAdele", "QuantifierPresent", "SymClass", "adele_add", "adele_from_json",
    "adele_mul", "adele_sub", "adele_to_json", "boolean_value", "diagonal", "h_boolean_value",
    "h_local_holds", "h_stalk_project", "hfamily_from_json", "idempotent", "is_idempotent",
    "is_min_idempotent", "is_restricted_at", "parse_sym_class", "render_class", "stalk_project", "supp",
]
