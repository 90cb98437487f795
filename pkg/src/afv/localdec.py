"""Truth sets of local ring formulas across all primes.

A local formula (ring language with ``V`` and ``pow k``, possibly quantified)
is evaluated in every Q_p at once.  The answer is an interval of prime sets
``(lower, upper)``: primes where the formula is proved true, and primes
where it is not proved false.  Equal bounds mean an exact answer.

Two evaluators cooperate.

``decide_at`` works at one prime with rational values.  A quantifier
``exists y`` is split into disjuncts of literals.  A disjunct with a
nontrivial equation has finitely many candidates: rational roots, and roots
of irreducible quadratic factors (which exist in Q_p iff the discriminant is
a square there, with valuations read off the Newton polygon).  A disjunct
without equations is open; when its ``V``/``pow`` atoms are monomials
``c * y^n``, their truth depends only on v(y) and the unit part of y modulo
the Hensel precision, so enumerating a finite window of such cells is
exhaustive.  Otherwise only witnesses are searched and a miss is
indeterminate.

``Generic`` treats the prime as a symbol ``P``.  Values are rational
functions of P; a nonzero one, N(P) / D(P) with N = P^e N1, has valuation e
minus the same for D at every prime not dividing the coefficient
denominators or N1(0).  Those primes, and every other prime where a
symbolic step could fail, are collected as *bad* and decided exactly by
``decide_at``.  Witness candidates in open disjuncts are symbolic points
``P^a * u``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import sympy as sp

from .boolean import (
    UNKNOWN,
    Cofinite,
    Finite,
    Frontier,
    Kleene,
    PrimeSet,
    ps_complement,
    ps_join,
    ps_meet,
)
from .local import (
    UnsupportedFragment,
    as_rational,
    hensel_precision,
    is_kth_power,
    is_square,
    rationals_by_height,
    vp,
)
from .logic import (
    FIELD,
    And,
    App,
    Atom,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Term,
    Truth,
    Var,
    free_vars,
    render_formula,
)

PSYM = sp.Symbol("P", positive=True)
YSYM = sp.Symbol("Y")
ALL: PrimeSet = Cofinite(())
NONE: PrimeSet = Finite(())
FRONTIER_BOUND = 2000
DNF_LIMIT = 512


@dataclass(frozen=True)
class Interval:
    lower: PrimeSet
    upper: PrimeSet

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def __invert__(self) -> "Interval":
        return Interval(ps_complement(self.upper), ps_complement(self.lower))

    def __and__(self, other: "Interval") -> "Interval":
        return Interval(ps_meet(self.lower, other.lower), ps_meet(self.upper, other.upper))

    def __or__(self, other: "Interval") -> "Interval":
        return Interval(ps_join(self.lower, other.lower), ps_join(self.upper, other.upper))


TRUE_I = Interval(ALL, ALL)
FALSE_I = Interval(NONE, NONE)


def _const(b: bool) -> Interval:
    return TRUE_I if b else FALSE_I


# ---------------------------------------------------------------- shared formula plumbing

def sym_term(t: Term, env: Mapping):
    """A ring term as a sympy expression; env maps names to sympy values."""
    if isinstance(t, Const):
        return sp.Rational(t.name)
    if isinstance(t, Var):
        if t.name not in env:
            raise UnsupportedFragment(f"unbound variable {t.name!r}")
        return env[t.name]
    if isinstance(t, App):
        args = [sym_term(a, env) for a in t.args]
        if t.fn == "+":
            return args[0] + args[1]
        if t.fn == "*":
            return args[0] * args[1]
        if t.fn == "-":
            return -args[0] if len(args) == 1 else args[0] - args[1]
        if t.fn == "/":
            # only produced by local elimination, always under a nonzero guard
            return sp.zoo if args[1] == 0 else args[0] / args[1]
    raise UnsupportedFragment(f"not a ring term: {t!r}")


def _undefined(expr) -> bool:
    return expr.has(sp.zoo, sp.nan, sp.oo, -sp.oo)


def _dnf(f: Formula, positive: bool = True) -> list:
    """Disjuncts as lists of (literal formula, polarity); quantified parts are opaque.

    Contradictory disjuncts are dropped and repeated ones merged as the
    product is formed.
    """
    if isinstance(f, Truth):
        return [[]] if f.value == positive else []
    if isinstance(f, Not):
        return _dnf(f.body, not positive)
    if isinstance(f, Implies):
        return _dnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, (And, Or)):
        conj_mode = isinstance(f, And) == positive
        pieces = [_dnf(p, positive) for p in f.parts]
        if not conj_mode:
            return _unique([d for piece in pieces for d in piece])
        out: list = [[]]
        for piece in sorted(pieces, key=len):
            out = _unique([a + b for a in out for b in piece])
            if len(out) > DNF_LIMIT:
                raise UnsupportedFragment("disjunctive normal form too large")
            if not out:
                break
        return out
    return [[(f, positive)]]


def _unique(disjuncts: list) -> list:
    seen: set = set()
    out = []
    for d in disjuncts:
        lits = tuple(dict.fromkeys(d))
        if not _consistent(lits):
            continue
        key = frozenset(lits)
        if key not in seen:
            seen.add(key)
            out.append(list(lits))
    return out


def _consistent(lits: list) -> bool:
    seen: dict = {}
    for atom, pol in lits:
        if seen.setdefault(atom, pol) != pol:
            return False
    return True


def _to_fraction(x) -> Fraction:
    x = sp.Rational(x)
    return Fraction(int(x.p), int(x.q))


def _mentions(f: Formula, name: str) -> bool:
    return any(v.name == name for v in free_vars(f))


def _independent(atom: Formula, y: str, env: Mapping) -> bool:
    """True when a V/pow atom's argument does not depend on y after substitution."""
    if not _mentions(atom, y):
        return True
    if isinstance(atom, Atom):
        expr = sp.expand(sym_term(atom.args[0], {**env, y: YSYM}))
        return YSYM not in expr.free_symbols
    return False


def _poly_y(expr) -> sp.Poly:
    return sp.Poly(sp.expand(expr), YSYM)


def _monomial(expr):
    """(c, n) when expr = c * Y^n with c free of Y and n possibly negative, else None."""
    num, den = sp.fraction(sp.together(sp.expand(expr)))
    if YSYM in den.free_symbols:
        dterms = _poly_y(den).terms()
        if len(dterms) != 1:
            return None
        (m,), dc = dterms[0]
    else:
        m, dc = 0, den
    terms = _poly_y(num).terms()
    if len(terms) != 1:
        return None
    (n,), c = terms[0]
    return sp.simplify(c / dc), n - m


# ---------------------------------------------------------------- elimination of inner quantifiers

def _var_symbol(name: str):
    return sp.Symbol(f"v_{name}")


def _to_term(expr, back: Mapping) -> Term:
    num, den = sp.fraction(sp.together(expr))
    t = _poly_term(sp.expand(num), back)
    if den != 1:
        t = App("/", (t, _poly_term(sp.expand(den), back)), FIELD)
    return t


def _poly_term(e, back: Mapping) -> Term:
    if e.is_Rational:
        return Const(str(e), FIELD)
    if e.is_Symbol:
        return Var(back[e], FIELD)
    if e.is_Add or e.is_Mul:
        op = "+" if e.is_Add else "*"
        parts = [_poly_term(a, back) for a in sorted(e.args, key=sp.default_sort_key)]
        out = parts[0]
        for q in parts[1:]:
            out = App(op, (out, q), FIELD)
        return out
    if e.is_Pow and e.exp.is_Integer and e.exp > 0:
        base = _poly_term(e.base, back)
        out = base
        for _ in range(int(e.exp) - 1):
            out = App("*", (out, base), FIELD)
        return out
    raise UnsupportedFragment(f"cannot express {e} as a ring term")


def _subst_term(f: Formula, name: str, t: Term) -> Formula:
    from .logic import substitute

    return substitute(f, {name: t})


def _linear_solution(atom: Eq, y: str, names: list):
    """(c, b) with atom equivalent to c*y + b = 0 where c, b are free of y, else None."""
    env = {n: _var_symbol(n) for n in names}
    env[y] = YSYM
    try:
        d = sp.together(sym_term(atom.left, env) - sym_term(atom.right, env))
    except UnsupportedFragment:
        return None
    num, den = sp.fraction(d)
    if YSYM in den.free_symbols:
        return None
    poly = sp.Poly(sp.expand(num), YSYM)
    if poly.degree() != 1:
        return None
    c, b = poly.all_coeffs()
    return c, b


def _fold(f: Formula) -> Formula:
    """Constant folding: ground equations are decided, truth constants absorbed."""
    if isinstance(f, Eq) and not free_vars(f):
        try:
            d = sym_term(f.left, {}) - sym_term(f.right, {})
        except UnsupportedFragment:
            return f
        return Truth(not _undefined(d) and sp.simplify(d) == 0)
    if isinstance(f, Not):
        body = _fold(f.body)
        if isinstance(body, Truth):
            return Truth(not body.value)
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(f, (And, Or)):
        unit = isinstance(f, And)
        parts: list = []
        for q in f.parts:
            q = _fold(q)
            if isinstance(q, Truth):
                if q.value != unit:
                    return Truth(not unit)
                continue
            for r in (q.parts if type(q) is type(f) else (q,)):
                if r not in parts:
                    parts.append(r)
        if not parts:
            return Truth(unit)
        return parts[0] if len(parts) == 1 else type(f)(tuple(parts))
    if isinstance(f, Exists):
        body = _fold(f.body)
        return body if isinstance(body, Truth) else Exists(f.var, f.sort, body)
    return f


@lru_cache(maxsize=None)
def local_qe(f: Formula) -> Formula:
    return _fold(_local_qe(f))


@lru_cache(maxsize=None)
def _local_qe(f: Formula) -> Formula:
    """Remove inner field quantifiers that have a linear equation in the bound variable.

    ``exists y (c*y + b = 0 and rest)`` becomes ``(c != 0 and rest[y := -b/c])``
    or, when c is not a nonzero constant, ``(c = 0 and exists y (b = 0 and
    rest))`` handled recursively.  A disjunct whose other literals mention only
    y is kept as a closed subsentence.  Anything else is left untouched, so the
    result is always equivalent to f.
    """
    if isinstance(f, (Truth, Eq, Atom)):
        return f
    if isinstance(f, Not):
        return Not(local_qe(f.body))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(local_qe(q) for q in f.parts))
    if isinstance(f, Implies):
        return Implies(local_qe(f.left), local_qe(f.right))
    if isinstance(f, Forall):
        inner = local_qe(Exists(f.var, f.sort, Not(f.body)))
        return Not(inner) if not isinstance(inner, Exists) else Forall(f.var, f.sort, local_qe(f.body))
    if isinstance(f, Exists):
        body = local_qe(f.body)
        out = _eliminate(f.var, body)
        return out if out is not None else Exists(f.var, f.sort, body)
    return f


def _eliminate(y: str, body: Formula, depth: int = 0) -> Formula | None:
    if depth > 4:
        return None
    try:
        disjuncts = _dnf(body)
    except UnsupportedFragment:
        return None
    pieces = []
    for lits in disjuncts:
        if not _consistent(lits):
            continue
        piece = _eliminate_disjunct(y, lits, depth)
        if piece is None:
            return None
        pieces.append(piece)
    return Or(tuple(pieces)) if pieces else Truth(False)


def _eliminate_disjunct(y: str, lits: list, depth: int) -> Formula | None:
    outside = [(a, pol) for a, pol in lits if not _mentions(a, y)]
    inside = [(a, pol) for a, pol in lits if _mentions(a, y)]
    if any(isinstance(a, (Exists, Forall)) for a, _ in inside):
        return None
    keep = _lits_formula(outside)
    if not inside:
        return keep
    names = sorted({v.name for a, _ in inside for v in free_vars(a)} - {y})
    if not names:
        return And((keep, Exists(y, FIELD, _lits_formula(inside))))
    back = {_var_symbol(n): n for n in names}
    inside, moved = _drop_fake_mentions(y, inside, names, back)
    if moved:
        keep = And((keep, _lits_formula(moved)))
    if not inside:
        return keep
    for i, (atom, pol) in enumerate(inside):
        if not (pol and isinstance(atom, Eq)):
            continue
        sol = _linear_solution(atom, y, names)
        if sol is None:
            continue
        c, b = sol
        try:
            root = _to_term(sp.cancel(-b / c), back)
            c_term = _to_term(c, back)
        except UnsupportedFragment:
            return None
        zero = Const("0", FIELD)
        solved = And((keep, Not(Eq(c_term, zero)),
                      _subst_term(_lits_formula(inside), y, root)))
        if not c.free_symbols and c != 0:
            return solved
        rest = inside[:i] + [(Eq(_to_term(b, back), zero), True)] + inside[i + 1:]
        degenerate = _eliminate(y, _lits_formula(rest), depth + 1)
        if degenerate is None:
            return None
        return Or((solved, And((keep, Eq(c_term, zero), degenerate))))
    open_part = _eliminate_open(y, inside, names, back)
    return None if open_part is None else And((keep, open_part))


def _drop_fake_mentions(y: str, inside: list, names: list, back: Mapping) -> tuple:
    """Split off literals that mention y only syntactically, rewritten without y."""
    env = {n: _var_symbol(n) for n in names}
    env[y] = YSYM
    zero = Const("0", FIELD)
    kept, moved = [], []
    for atom, pol in inside:
        try:
            if isinstance(atom, Eq):
                d = sp.together(sym_term(atom.left, env) - sym_term(atom.right, env))
                if YSYM not in d.free_symbols:
                    moved.append((Eq(_to_term(d, back), zero), pol))
                    continue
            elif isinstance(atom, Atom) and atom.rel == "V":
                d = sp.together(sym_term(atom.args[0], env))
                if YSYM not in d.free_symbols:
                    moved.append((Atom("V", (_to_term(d, back),)), pol))
                    continue
        except UnsupportedFragment:
            pass
        kept.append((atom, pol))
    return kept, moved


def _eliminate_open(y: str, inside: list, names: list, back: Mapping) -> Formula | None:
    """exists y over inequations and V literals that all hold as v(y) goes one way.

    Every such literal is eventually true along v(y) -> +inf or along
    v(y) -> -inf once its coefficient is nonzero, and inequations only
    remove finitely many points, so the existential reduces to conditions on
    coefficients.  Mixed directions are not handled.
    """
    env = {n: _var_symbol(n) for n in names}
    env[y] = YSYM
    zero = Const("0", FIELD)
    conds: list = []
    directions: set = set()
    for atom, pol in inside:
        if isinstance(atom, Eq) and not pol:
            num, den = sp.fraction(sp.together(sym_term(atom.left, env) - sym_term(atom.right, env)))
            if YSYM in den.free_symbols:
                return None
            coeffs = sp.Poly(sp.expand(num), YSYM).all_coeffs()
            conds.append(Or(tuple(Not(Eq(_to_term(c, back), zero)) for c in coeffs)))
            if not sp.expand(den).is_number:
                conds.append(Not(Eq(_to_term(den, back), zero)))
            continue
        if isinstance(atom, Atom) and atom.rel == "V":
            mono = _monomial(sym_term(atom.args[0], env))
            if mono is None:
                return None
            c, n = mono
            c_term = _to_term(c, back)
            if n == 0:
                conds.append(Atom("V", (c_term,)) if pol else Not(Atom("V", (c_term,))))
                continue
            if pol:
                # V(c y^n) holds where n v(y) is large, including c = 0
                directions.add(1 if n > 0 else -1)
            else:
                directions.add(-1 if n > 0 else 1)
                conds.append(Not(Eq(c_term, zero)))
            continue
        return None
    if len(directions) > 1:
        return None
    return And(tuple(conds)) if conds else Truth(True)


# ---------------------------------------------------------------- exact evaluation at one prime

def decide_at(f: Formula, p: int, env: Mapping) -> Kleene:
    """Three-valued truth of f in Q_p; env maps names to rationals."""
    senv = {k: sp.Rational(str(as_rational(v))) for k, v in env.items()}
    return _at(local_qe(f), p, senv)


def _atom_at(f: Formula, p: int, env: Mapping) -> bool:
    if isinstance(f, Eq):
        d = sym_term(f.left, env) - sym_term(f.right, env)
        return not _undefined(d) and sp.simplify(d) == 0
    if isinstance(f, Atom):
        value = sym_term(f.args[0], env)
        if _undefined(value):
            return False
        q = _to_fraction(value)
        if f.rel == "V":
            return vp(q, p) >= 0
        if f.rel == "pow":
            return is_kth_power(q, p, f.index)
    raise UnsupportedFragment(f"not a local atom: {render_formula(f)}")


@lru_cache(maxsize=None)
def _free_names(f: Formula) -> tuple:
    return tuple(sorted({v.name for v in free_vars(f)}))


def _env_key(f: Formula, env: Mapping) -> tuple:
    return (f, tuple((n, env.get(n)) for n in _free_names(f)))


_AT_CACHE: dict = {}
_GENERIC_CACHE: dict = {}


def _at(f: Formula, p: int, env: Mapping) -> Kleene:
    if isinstance(f, (Exists, Forall)):
        key = (p, _env_key(f, env))
        hit = _AT_CACHE.get(key)
        if hit is None:
            hit = _AT_CACHE[key] = _at_uncached(f, p, env)
        return hit
    return _at_uncached(f, p, env)


def _at_uncached(f: Formula, p: int, env: Mapping) -> Kleene:
    if isinstance(f, Truth):
        return Kleene.of(f.value)
    if isinstance(f, (Eq, Atom)):
        return Kleene.of(_atom_at(f, p, env))
    if isinstance(f, Not):
        return ~_at(f.body, p, env)
    if isinstance(f, And):
        out = Kleene.TRUE
        for q in f.parts:
            out = out & _at(q, p, env)
            if out is Kleene.FALSE:
                break
        return out
    if isinstance(f, Or):
        out = Kleene.FALSE
        for q in f.parts:
            out = out | _at(q, p, env)
            if out is Kleene.TRUE:
                break
        return out
    if isinstance(f, Implies):
        return ~_at(f.left, p, env) | _at(f.right, p, env)
    if isinstance(f, Forall):
        return ~_at(Exists(f.var, f.sort, Not(f.body)), p, env)
    if isinstance(f, Exists):
        if f.sort != FIELD:
            raise UnsupportedFragment(f"local quantifier over sort {f.sort!r}")
        result = Kleene.FALSE
        for lits in _dnf(f.body):
            if not _consistent(lits):
                continue
            result = result | _exists_disjunct_at(f.var, lits, p, env)
            if result is Kleene.TRUE:
                break
        return result
    raise UnsupportedFragment(f"not a local formula: {render_formula(f)}")


def _lits_formula(lits: list) -> Formula:
    parts = tuple(a if pol else Not(a) for a, pol in lits)
    return And(parts) if parts else Truth(True)


def _exists_disjunct_at(y: str, lits: list, p: int, env: Mapping) -> Kleene:
    yenv = {**env, y: YSYM}
    eqs, rest, outer = [], [], Kleene.TRUE
    for atom, pol in lits:
        if _independent(atom, y, env):
            val = _at(atom, p, {**env, y: sp.Integer(0)})
            outer = outer & (val if pol else ~val)
            if outer is Kleene.FALSE:
                return Kleene.FALSE
            continue
        if isinstance(atom, Eq):
            d = sp.expand(sp.numer(sp.together(sym_term(atom.left, yenv) - sym_term(atom.right, yenv))))
            if d == 0:
                if not pol:
                    return Kleene.FALSE
                continue
            if pol:
                eqs.append(d)
                continue
        rest.append((atom, pol))
    if eqs:
        return outer & _roots_at(y, eqs[0], lits, p, env)
    return outer & _open_at(y, rest, p, env)


@lru_cache(maxsize=4096)
def _factor(expr) -> tuple:
    _, factors = sp.factor_list(sp.expand(expr), YSYM)
    return tuple(sp.Poly(g, YSYM) for g, _ in factors if sp.Poly(g, YSYM).degree() > 0)


def _roots_at(y: str, eq, lits: list, p: int, env: Mapping) -> Kleene:
    body = _lits_formula(lits)
    result = Kleene.FALSE
    for g in _factor(eq):
        if g.degree() == 1:
            a, b = g.all_coeffs()
            r = -b / a
            result = result | _at(body, p, {**env, y: r})
        elif g.degree() == 2:
            result = result | _quadratic_at(y, g, lits, p, env)
        else:
            result = result | Kleene.INDETERMINATE
        if result is Kleene.TRUE:
            break
    return result


def _integer_coeffs(g: sp.Poly) -> list:
    coeffs = [sp.Rational(c) for c in g.all_coeffs()]
    den = math.lcm(*[int(c.q) for c in coeffs])
    return [int(c * den) for c in coeffs]


def _newton_valuations(coeffs: list, p: int) -> list:
    """Root valuations of a_n y^n + ... + a_0 (coefficients high to low)."""
    pts = [(i, vp(c, p)) for i, c in enumerate(reversed(coeffs)) if c != 0]
    hull: list = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    out = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        out.extend([Fraction(-(y2 - y1), x2 - x1)] * (x2 - x1))
    return out


def _quadratic_at(y: str, g: sp.Poly, lits: list, p: int, env: Mapping) -> Kleene:
    a, b, c = _integer_coeffs(g)
    if not is_square(b * b - 4 * a * c, p):
        return Kleene.FALSE
    vals = _newton_valuations([a, b, c], p)
    yenv = {**env, y: YSYM}
    ok = [True] * len(vals)
    for atom, pol in lits:
        if not _mentions(atom, y):
            continue
        if isinstance(atom, Eq):
            h = _poly_y(sym_term(atom.left, yenv) - sym_term(atom.right, yenv))
            holds = h.rem(g).is_zero
            if holds != pol:
                return Kleene.FALSE
            continue
        if isinstance(atom, Atom) and atom.rel == "V":
            mono = _monomial(sym_term(atom.args[0], yenv))
            if mono is None:
                return Kleene.INDETERMINATE
            coef, n = mono
            vc = vp(_to_fraction(coef), p)
            for i, v in enumerate(vals):
                if ((vc + n * v) >= 0) != pol:
                    ok[i] = False
            continue
        return Kleene.INDETERMINATE
    return Kleene.of(any(ok))


def _open_at(y: str, rest: list, p: int, env: Mapping) -> Kleene:
    yenv = {**env, y: YSYM}
    cells = []
    exhaustive = True
    ks = [1]
    for atom, pol in rest:
        if isinstance(atom, Eq):
            continue  # a nonzero polynomial removes finitely many points
        if isinstance(atom, Atom) and atom.rel in ("V", "pow"):
            mono = _monomial(sym_term(atom.args[0], yenv))
            if mono is None:
                exhaustive = False
                continue
            coef, n = mono
            if coef == 0:
                exhaustive = False
                continue
            k = atom.index if atom.rel == "pow" else None
            if k:
                ks.append(k)
            cells.append((atom.rel, k, _to_fraction(coef), n, pol))
            continue
        exhaustive = False
    if exhaustive:
        lcm = math.lcm(*ks)
        reach = max([abs(vp(c, p)) for _, _, c, _, _ in cells], default=0) + lcm + 1
        prec = max(hensel_precision(p, k) for k in ks)
        units = [1]
        if any(rel == "pow" for rel, *_ in cells):
            units = [u for u in range(1, p ** prec) if u % p]
        for a in range(-reach, reach + 1):
            for u in units:
                point = Fraction(p) ** a * u
                if all(_cell_literal(cell, point, p) for cell in cells):
                    return Kleene.TRUE
        return Kleene.FALSE
    body = _lits_formula(rest)
    for point in _witness_points(p):
        if _at(body, p, {**env, y: sp.Rational(str(point))}) is Kleene.TRUE:
            return Kleene.TRUE
    return Kleene.INDETERMINATE


def _cell_literal(cell, point: Fraction, p: int) -> bool:
    rel, k, coef, n, pol = cell
    value = coef * point ** n
    truth = vp(value, p) >= 0 if rel == "V" else is_kth_power(value, p, k)
    return truth == pol


def _witness_points(p: int) -> list:
    pts = [Fraction(0)]
    for a in range(-3, 4):
        for u in range(1, min(p * p, 30)):
            if u % p:
                pts.append(Fraction(p) ** a * u)
                pts.append(-Fraction(p) ** a * u)
    pts.extend(rationals_by_height(8))
    seen = set()
    return [q for q in pts if not (q in seen or seen.add(q))]


# ---------------------------------------------------------------- generic evaluation

def _primes_of(q) -> set:
    q = sp.Rational(q)
    if q == 0:
        return set()
    return set(sp.primefactors(abs(int(q.p)))) | set(sp.primefactors(int(q.q)))


@lru_cache(maxsize=None)
def _order(expr) -> tuple:
    """(valuation, leading constant, bad primes) of a nonzero rational function of P."""
    num, den = sp.fraction(sp.cancel(sp.together(expr)))
    out = []
    bad: set = set()
    for part in (num, den):
        poly = sp.Poly(part, PSYM)
        coeffs = list(reversed(poly.all_coeffs()))  # low to high
        e = next(i for i, c in enumerate(coeffs) if c != 0)
        for c in coeffs:
            bad |= _primes_of(sp.Rational(c).q) if c != 0 else set()
        lead = sp.Rational(coeffs[e])
        bad |= _primes_of(lead)
        out.append((e, lead))
    (en, cn), (ed, cd) = out
    return en - ed, cn / cd, bad


class Generic:
    """Evaluation at a symbolic prime P, collecting the primes where it may be wrong."""

    def __init__(self) -> None:
        self.bad: set = set()

    def note_zero_primes(self, expr) -> None:
        # primes p at which a nonzero rational function of P vanishes or has a pole
        if expr.free_symbols:
            _, _, bad = _order(expr)
            num, den = sp.fraction(sp.cancel(sp.together(expr)))
            self.bad |= bad
            for part in (num, den):
                poly = sp.Poly(part, PSYM)
                coeffs = list(reversed(poly.all_coeffs()))
                e = next(i for i, c in enumerate(coeffs) if c != 0)
                den_all = math.lcm(*[int(sp.Rational(c).q) for c in coeffs if c != 0])
                self.bad |= _primes_of(sp.Rational(coeffs[e]) * den_all)
        else:
            self.bad |= _primes_of(expr)

    def eval(self, f: Formula, env: Mapping) -> Interval:
        if not isinstance(f, (Exists, Forall, Eq, Atom)):
            return self._eval(f, env)
        key = _env_key(f, env)
        hit = _GENERIC_CACHE.get(key)
        if hit is None:
            sub = Generic()
            hit = _GENERIC_CACHE[key] = (sub._eval(f, env), frozenset(sub.bad))
        self.bad |= hit[1]
        return hit[0]

    def _eval(self, f: Formula, env: Mapping) -> Interval:
        if isinstance(f, Truth):
            return _const(f.value)
        if isinstance(f, Eq):
            d = sym_term(f.left, env) - sym_term(f.right, env)
            if _undefined(d):
                return FALSE_I
            d = sp.cancel(sp.together(d))
            if d == 0:
                return TRUE_I
            self.note_zero_primes(d)
            return FALSE_I
        if isinstance(f, Atom):
            return self._atom(f, env)
        if isinstance(f, Not):
            return ~self.eval(f.body, env)
        if isinstance(f, And):
            out = TRUE_I
            for q in f.parts:
                out = out & self.eval(q, env)
            return out
        if isinstance(f, Or):
            out = FALSE_I
            for q in f.parts:
                out = out | self.eval(q, env)
            return out
        if isinstance(f, Implies):
            return ~self.eval(f.left, env) | self.eval(f.right, env)
        if isinstance(f, Forall):
            return ~self.eval(Exists(f.var, f.sort, Not(f.body)), env)
        if isinstance(f, Exists):
            if f.sort != FIELD:
                raise UnsupportedFragment(f"local quantifier over sort {f.sort!r}")
            out = FALSE_I
            for lits in _dnf(f.body):
                if _consistent(lits):
                    out = out | self._exists_disjunct(f.var, lits, env)
            return out
        raise UnsupportedFragment(f"not a local formula: {render_formula(f)}")

    def _atom(self, f: Atom, env: Mapping) -> Interval:
        if f.rel not in ("V", "pow"):
            raise UnsupportedFragment(f"not a ring relation: {f.rel}")
        value = sym_term(f.args[0], env)
        if _undefined(value):
            return FALSE_I
        value = sp.cancel(sp.together(value))
        if value == 0:
            return TRUE_I
        v, lead, bad = _order(value)
        self.bad |= bad
        if f.rel == "V":
            return _const(v >= 0)
        k = f.index
        if v % k:
            return FALSE_I
        self.bad |= set(sp.primefactors(k))
        if _rational_root(lead, k):
            return TRUE_I
        if not value.free_symbols:
            q = _to_fraction(value)
            oracle = _pow_oracle(q, k)
            s = Frontier(oracle, UNKNOWN, FRONTIER_BOUND, f"pow {k} of {q}")
            return Interval(s, s)
        expr = value
        s = Frontier(lambda p, expr=expr, k=k: is_kth_power(_to_fraction(expr.subs(PSYM, p)), p, k),
                     UNKNOWN, FRONTIER_BOUND, f"pow {k} of {expr}")
        return Interval(s, s)

    def _exists_disjunct(self, y: str, lits: list, env: Mapping) -> Interval:
        yenv = {**env, y: YSYM}
        outer = TRUE_I
        eqs, rest = [], []
        for atom, pol in lits:
            if _independent(atom, y, env):
                val = self.eval(atom, {**env, y: sp.Integer(0)})
                outer = outer & (val if pol else ~val)
                continue
            if isinstance(atom, Eq):
                d = sp.expand(sp.together(sym_term(atom.left, yenv) - sym_term(atom.right, yenv)))
                d = sp.numer(sp.together(d))
                if sp.expand(d) == 0:
                    if not pol:
                        return FALSE_I
                    continue
                if pol:
                    eqs.append(d)
                    continue
            rest.append((atom, pol))
        if eqs:
            return outer & self._roots(y, eqs[0], lits, env)
        return outer & self._open(y, rest, env)

    def _roots(self, y: str, eq, lits: list, env: Mapping) -> Interval:
        body = _lits_formula(lits)
        _, factors = sp.factor_list(sp.expand(eq), YSYM)
        lower, upper = NONE, NONE
        exhaustive = True
        for g, _ in factors:
            poly = sp.Poly(g, YSYM)
            deg = poly.degree()
            if deg == 0:
                self.note_zero_primes(g)
                continue
            if deg == 1:
                a, b = poly.all_coeffs()
                self.note_zero_primes(a)
                r = sp.cancel(-b / a)
                val = self.eval(body, {**env, y: r})
            elif deg == 2 and not poly.free_symbols - {YSYM}:
                val = self._quadratic(y, poly, lits, env)
                if val is None:
                    exhaustive = False
                    continue
            else:
                exhaustive = False
                continue
            lower = ps_join(lower, val.lower)
            upper = ps_join(upper, val.upper)
        if not exhaustive:
            upper = ALL
        return Interval(lower, upper)

    def _quadratic(self, y: str, g: sp.Poly, lits: list, env: Mapping) -> Interval | None:
        a, b, c = _integer_coeffs(g)
        disc = b * b - 4 * a * c
        self.bad |= {2} | _primes_of(a) | _primes_of(b) | _primes_of(c) | _primes_of(disc)
        yenv = {**env, y: YSYM}
        for atom, pol in lits:
            if not _mentions(atom, y):
                continue
            if isinstance(atom, Eq):
                h = _poly_y(sym_term(atom.left, yenv) - sym_term(atom.right, yenv))
                if h.free_symbols - {YSYM}:
                    return None
                if h.rem(g).is_zero != pol:
                    return FALSE_I
                continue
            if isinstance(atom, Atom) and atom.rel == "V":
                mono = _monomial(sym_term(atom.args[0], yenv))
                if mono is None or mono[0].free_symbols:
                    return None
                self.bad |= _primes_of(mono[0])
                # roots are units at good primes
                if pol is False:
                    return FALSE_I
                continue
            return None
        s = Frontier(lambda p, disc=disc: is_square(disc, p), UNKNOWN, FRONTIER_BOUND,
                     f"square {disc}")
        return Interval(s, s)

    def _open(self, y: str, rest: list, env: Mapping) -> Interval:
        yenv = {**env, y: YSYM}
        exhaustive = True
        reach = 2
        for atom, pol in rest:
            if isinstance(atom, Eq):
                continue
            if isinstance(atom, Atom) and atom.rel == "V":
                mono = _monomial(sym_term(atom.args[0], yenv))
                if mono is None or mono[0] == 0:
                    exhaustive = False
                    continue
                v, _, bad = _order(mono[0])
                self.bad |= bad
                reach = max(reach, abs(v) + 2)
                continue
            if isinstance(atom, Atom) and atom.rel == "pow":
                mono = _monomial(sym_term(atom.args[0], yenv))
                if mono is not None and mono[0] != 0:
                    v, _, bad = _order(mono[0])
                    self.bad |= bad
                    reach = max(reach, abs(v) + atom.index + 1)
            exhaustive = False
        # in an exhaustive cell analysis inequations only remove finitely many points
        kept = [(a, pol) for a, pol in rest if not (exhaustive and isinstance(a, Eq))]
        body = _lits_formula(kept)
        lower, upper = NONE, NONE
        units = [1] if exhaustive else [1, -1, 2, 3, sp.Rational(1, 2), -2, 5]
        for a in range(-reach, reach + 1):
            for u in units:
                val = self.eval(body, {**env, y: PSYM ** a * u})
                lower = ps_join(lower, val.lower)
                upper = ps_join(upper, val.upper)
        if not exhaustive:
            upper = ALL
        return Interval(lower, upper)


def _rational_root(q, k: int) -> bool:
    q = sp.Rational(q)
    if q == 0:
        return True
    if q < 0 and k % 2 == 0:
        return False
    n_ok = sp.integer_nthroot(abs(int(q.p)), k)[1]
    d_ok = sp.integer_nthroot(int(q.q), k)[1]
    return bool(n_ok and d_ok)


def _pow_oracle(q: Fraction, k: int):
    return lambda p: is_kth_power(q, p, k)


# ---------------------------------------------------------------- truth sets

def truth_interval(f: Formula, values: Mapping | None = None, exceptions: Mapping | None = None) -> Interval:
    """Truth interval of f with free variables set to eventually constant values.

    ``values`` maps each free variable to its default rational and
    ``exceptions`` maps each free variable to a {prime: rational} override.
    """
    values = dict(values or {})
    exceptions = dict(exceptions or {})
    f = local_qe(f)
    gen = Generic()
    env = {k: sp.Rational(str(as_rational(v))) for k, v in values.items()}
    for v in env.values():
        gen.bad |= _primes_of(v)
    generic = gen.eval(f, env)
    special = set(gen.bad)
    for exc in exceptions.values():
        special |= set(exc)
    special = sorted(special)
    lower_hits, upper_hits = [], []
    for p in special:
        local_env = {k: exceptions.get(k, {}).get(p, v) for k, v in values.items()}
        k3 = decide_at(f, p, local_env)
        if k3 is Kleene.TRUE:
            lower_hits.append(p)
        if k3 is not Kleene.FALSE:
            upper_hits.append(p)
    off = Cofinite(special)
    return Interval(ps_join(ps_meet(generic.lower, off), Finite(lower_hits)),
                    ps_join(ps_meet(generic.upper, off), Finite(upper_hits)))


__all__ = ["Generic", "Interval", "decide_at", "local_qe", "truth_interval"]
