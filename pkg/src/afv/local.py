"""Exact p-adic facts about rational numbers.

Elements of Q_p are restricted to rationals, which are exact and dense.  The
functions here answer valuation, residue and power questions about a
rational viewed inside Q_p, and evaluate quantifier-free ring formulas at a
single prime.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .boolean import is_prime
from .logic import (
    And,
    App,
    Atom,
    Const,
    Eq,
    Exists,
    FIELD,
    Forall,
    Formula,
    Implies,
    LogicError,
    Not,
    Or,
    Term,
    Truth,
    Var,
    render_formula,
)

INFINITY = math.inf


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def check_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"{p!r} is not a prime")
    return p


def _vp_int(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp(x, p: int):
    """Exact p-adic valuation; ``INFINITY`` at zero."""
    x = as_rational(x)
    if x == 0:
        return INFINITY
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def unit_part(x, p: int) -> Fraction:
    """x / p^vp(x), a rational with numerator and denominator prime to p."""
    x = as_rational(x)
    if x == 0:
        raise ValueError("zero has no unit part")
    v = vp(x, p)
    return x / Fraction(p) ** v


def unit_residue(x, p: int, k: int = 1) -> int:
    """The unit part of x reduced modulo p^k."""
    if k < 1:
        raise ValueError("k must be positive")
    u = unit_part(x, p)
    mod = p ** k
    return (u.numerator * pow(u.denominator, -1, mod)) % mod


def is_square(x, p: int) -> bool:
    x = as_rational(x)
    if x == 0:
        return True
    if vp(x, p) % 2:
        return False
    if p == 2:
        return unit_residue(x, 2, 3) == 1
    return pow(unit_residue(x, p, 1), (p - 1) // 2, p) == 1


def hensel_precision(p: int, k: int) -> int:
    """Precision at which a unit k-th power residue lifts to Z_p."""
    return _vp_int(k * k, p) + 1


def is_kth_power(x, p: int, k: int) -> bool:
    """True iff x is a k-th power in Q_p.

    For p not dividing k the residue-field criterion suffices.  Otherwise a
    unit u is a k-th power iff it is one modulo p^(vp(k^2)+1): a residue root
    y has v(f'(y)) = vp(k), and Hensel's lemma needs v(f(y)) > 2 vp(k).
    """
    if k < 1:
        raise ValueError("k must be positive")
    x = as_rational(x)
    if x == 0 or k == 1:
        return True
    if vp(x, p) % k:
        return False
    if k % p:
        u = unit_residue(x, p, 1)
        return pow(u, (p - 1) // gcd(k, p - 1), p) == 1
    n = hensel_precision(p, k)
    mod = p ** n
    u = unit_residue(x, p, n)
    return any(pow(y, k, mod) == u for y in range(1, mod) if y % p)


def kth_power_residues(p: int, k: int, precision: int) -> frozenset:
    mod = p ** precision
    return frozenset(pow(y, k, mod) for y in range(1, mod) if y % p)


def p2as(x, p: int) -> bool:
    """Solvability of y^2 + y = x in Q_p (quadratic formula, characteristic 0)."""
    return is_square(1 + 4 * as_rational(x), p)


def tplus(x, p: int) -> bool:
    x = as_rational(x)
    if x == 0:
        return False
    result = not p2as(x, p) and not p2as(1 / x, p)
    if result and vp(x, p) != 0:
        raise RuntimeError(f"tplus({x}, {p}) holds at a non-unit")
    return result


# ---------------------------------------------------------------- bounded valuation-ring search

def rationals_by_height(bound: int):
    """Nonzero rationals n/d with |n|, d <= bound, lowest height first."""
    seen = set()
    for h in range(1, bound + 1):
        for n in range(-h, h + 1):
            for d in range(1, h + 1):
                if n == 0 or max(abs(n), d) != h:
                    continue
                q = Fraction(n, d)
                if q not in seen:
                    seen.add(q)
                    yield q


@dataclass(frozen=True)
class ValuationSearch:
    found: bool | None  # True when a witness exists, None when the search gave up
    clause: str | None
    witness: tuple


def in_valuation_ring_bounded(x, p: int, search_bound: int, l: int = 2) -> ValuationSearch:
    """Look for witnesses that x lies in the sumset description of Z_p.

    Clauses tried in order: ``shift`` (x - e = a + b + c d with e in {0, 1}),
    ``power`` (some y with T+(y) and T+(x^l - 1 + y)) and ``shifted-power``
    (x - 1 satisfies ``power``).  Only witnesses of height at most
    ``search_bound`` are tried, so a miss is reported as ``found=None``.
    """
    x = as_rational(x)
    cands = [q for q in rationals_by_height(search_bound) if tplus(q, p)]
    for e in (0, 1):
        target = x - e
        for a, b, c in itertools.product(cands, repeat=3):
            d = (target - a - b) / c
            if tplus(d, p):
                return ValuationSearch(True, "shift", (e, a, b, c, d))
    for y in cands:
        if tplus(x ** l - 1 + y, p):
            return ValuationSearch(True, "power", (y,))
    z = x - 1
    for w in cands:
        if tplus(z ** l - 1 + w, p):
            return ValuationSearch(True, "shifted-power", (z, w))
    return ValuationSearch(None, None, ())


def sol_k(coeffs, p: int) -> bool:
    """Does x^n + c_1 x^(n-1) + ... + c_n have a root modulo p?"""
    cs = [as_rational(c) for c in coeffs]
    for c in cs:
        if c != 0 and vp(c, p) < 0:
            raise ValueError("coefficients must be p-integral")
    red = [0 if c == 0 else (c.numerator * pow(c.denominator, -1, p)) % p for c in cs]
    poly = [1] + red
    for r in range(p):
        acc = 0
        for a in poly:
            acc = (acc * r + a) % p
        if acc == 0:
            return True
    return False


# ---------------------------------------------------------------- local evaluation of ring formulas

class UnsupportedFragment(LogicError):
    """The formula lies outside what can be decided exactly here."""


def eval_ring_term(t: Term, values) -> Fraction:
    """Value of a ring term under an assignment name -> rational."""
    if isinstance(t, Const):
        return Fraction(t.name)
    if isinstance(t, Var):
        if t.name not in values:
            raise LogicError(f"unbound variable {t.name!r}")
        return as_rational(values[t.name])
    if isinstance(t, App):
        args = [eval_ring_term(a, values) for a in t.args]
        if t.fn == "+":
            return args[0] + args[1]
        if t.fn == "*":
            return args[0] * args[1]
        if t.fn == "-":
            return -args[0] if len(args) == 1 else args[0] - args[1]
        raise LogicError(f"not a ring function: {t.fn}")
    raise LogicError(f"not a ring term: {t!r}")


def local_holds(f: Formula, p: int, values) -> bool:
    """Truth of a quantifier-free ring formula in Q_p at rational values."""
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Eq):
        return eval_ring_term(f.left, values) == eval_ring_term(f.right, values)
    if isinstance(f, Atom):
        if f.rel == "V":
            return vp(eval_ring_term(f.args[0], values), p) >= 0
        if f.rel == "pow":
            return is_kth_power(eval_ring_term(f.args[0], values), p, f.index)
        raise UnsupportedFragment(f"relation {f.rel!r} is not a ring relation")
    if isinstance(f, Not):
        return not local_holds(f.body, p, values)
    if isinstance(f, And):
        return all(local_holds(q, p, values) for q in f.parts)
    if isinstance(f, Or):
        return any(local_holds(q, p, values) for q in f.parts)
    if isinstance(f, Implies):
        return (not local_holds(f.left, p, values)) or local_holds(f.right, p, values)
    if isinstance(f, (Exists, Forall)):
        raise UnsupportedFragment(f"quantified local formula: {render_formula(f)}")
    raise UnsupportedFragment(f"not a ring formula: {render_formula(f)}")


def bounded_local_search(f: Formula, p: int, values, height: int):
    """Search Q_p witnesses of height <= ``height`` for an existential prefix.

    Returns True when a witness is found, False when a universal prefix is
    refuted, and None when the search is inconclusive.
    """
    if isinstance(f, Exists) and f.sort == FIELD:
        cands = [Fraction(0)] + list(rationals_by_height(height))
        for q in cands:
            if bounded_local_search(f.body, p, {**values, f.var: q}, height) is True:
                return True
        return None  # a bounded miss never refutes existence
    if isinstance(f, Forall) and f.sort == FIELD:
        neg = bounded_local_search(Exists(f.var, f.sort, Not(f.body)), p, values, height)
        return False if neg is True else None
    if isinstance(f, Not) and isinstance(f.body, (Exists, Forall)):
        r = bounded_local_search(f.body, p, values, height)
        return None if r is None else not r
    return local_holds(f, p, values)
