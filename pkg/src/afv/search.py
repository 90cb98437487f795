"""Bounded evaluation of product-language formulas on eventually constant adeles.

This does not go through the Boolean reduction: terms are computed
componentwise on :class:`FiniteAdele` values, ring atoms are read prime by
prime, and Boolean values of local formulas come from
:func:`afv.restricted.boolean_value`.  Field quantifiers range over a finite
candidate pool, so the answer is three-valued: a found witness proves an
existential and a found counterexample refutes a universal, while a miss
proves nothing.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping

from .boolean import (
    Cofinite,
    Finite,
    Kleene,
    PrimeSet,
    ba_eval,
    primes_below,
)
from .local import rationals_by_height
from .logic import (
    BOOL,
    FIELD,
    And,
    App,
    Atom,
    BoolAtom,
    BoolValueOf,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    LogicError,
    Not,
    Or,
    Term,
    Truth,
    Var,
)
from .restricted import FiniteAdele, boolean_value, diagonal, idempotent


def candidate_pool(max_prime: int = 13, height: int = 3, exception_values: Iterable = (0, 1)) -> list:
    """Eventually constant adeles: a diagonal default with at most one changed coordinate."""
    defaults = [Fraction(0), *rationals_by_height(height)]
    primes = primes_below(max_prime + 1)
    pool = [diagonal(q) for q in dict.fromkeys(defaults)]
    for p in primes:
        for q in defaults:
            for v in exception_values:
                if Fraction(v) != q:
                    pool.append(FiniteAdele(q, {p: Fraction(v)}))
    # idempotents on a few small primes
    for size in (2, 3):
        for group in itertools.combinations(primes[:4], size):
            pool.append(idempotent(Finite(group)))
    return pool


def _term(t: Term, env: Mapping):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        if t.sort == FIELD:
            return diagonal(Fraction(t.name))
        return Cofinite(()) if t.name == "1" else Finite(())
    if isinstance(t, BoolValueOf):
        args = {name: env[name] for name in _field_names(t.formula)}
        return boolean_value(t.formula, args)
    if isinstance(t, App):
        args = [_term(a, env) for a in t.args]
        if t.sort == FIELD:
            if t.fn == "+":
                return args[0] + args[1]
            if t.fn == "*":
                return args[0] * args[1]
            if t.fn == "-":
                return -args[0] if len(args) == 1 else args[0] - args[1]
        else:
            from .boolean import ps_complement, ps_join, ps_meet

            if t.fn == "meet":
                return ps_meet(*args)
            if t.fn == "join":
                return ps_join(*args)
            if t.fn == "compl":
                return ps_complement(args[0])
    raise LogicError(f"cannot evaluate term {t!r}")


def _field_names(f: Formula) -> list:
    from .logic import free_vars

    return sorted(v.name for v in free_vars(f) if v.sort == FIELD)


def _ring_atom(f: Formula, env: Mapping) -> bool:
    if isinstance(f, Eq):
        return _term(f.left, env) == _term(f.right, env)
    # a non-rational root gives a Frontier, which misses infinitely many primes
    value = boolean_value(f, {name: env[name] for name in _field_names(f)})
    return value == Cofinite(())


def bounded_eval(f: Formula, env: Mapping, pool: list) -> Kleene:
    """Three-valued truth of f with field quantifiers over ``pool``.

    Boolean quantifiers are not searched; a formula containing them inside a
    field quantifier is handed to the Boolean decision procedure when all
    its field variables are bound.
    """
    if isinstance(f, Truth):
        return Kleene.of(f.value)
    if isinstance(f, Not):
        return ~bounded_eval(f.body, env, pool)
    if isinstance(f, And):
        out = Kleene.TRUE
        for q in f.parts:
            out = out & bounded_eval(q, env, pool)
            if out is Kleene.FALSE:
                break
        return out
    if isinstance(f, Or):
        out = Kleene.FALSE
        for q in f.parts:
            out = out | bounded_eval(q, env, pool)
            if out is Kleene.TRUE:
                break
        return out
    if isinstance(f, Implies):
        return ~bounded_eval(f.left, env, pool) | bounded_eval(f.right, env, pool)
    if isinstance(f, (Exists, Forall)) and f.sort == FIELD:
        want = Kleene.TRUE if isinstance(f, Exists) else Kleene.FALSE
        for a in pool:
            if bounded_eval(f.body, {**env, f.var: a}, pool) is want:
                return want
        return Kleene.INDETERMINATE
    if isinstance(f, Eq) and getattr(f.left, "sort", BOOL) == FIELD:
        return Kleene.of(_ring_atom(f, env))
    if isinstance(f, Atom) and f.rel in ("V", "pow"):
        return Kleene.of(_ring_atom(f, env))
    # Boolean-sort part: evaluate its Boolean-value terms, then decide
    return _boolean_part(f, env)


def _boolean_part(f: Formula, env: Mapping) -> Kleene:
    from .logic import map_terms

    slots: dict = {}

    def fn(t: Term) -> Term:
        if isinstance(t, BoolValueOf):
            key = f"__bv{len(slots)}"
            slots[key] = _term(t, env)
            return Var(key, BOOL)
        return t

    g = map_terms(f, lambda t: _replace(t, fn))
    benv = {**{k: v for k, v in env.items() if isinstance(v, PrimeSet)}, **slots}
    return ba_eval(g, benv)


def _replace(t: Term, fn) -> Term:
    t2 = fn(t)
    if t2 is not t:
        return t2
    if isinstance(t, App):
        return App(t.fn, tuple(_replace(a, fn) for a in t.args), t.sort)
    return t


__all__ = ["bounded_eval", "candidate_pool"]
