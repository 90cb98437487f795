"""The value monoid of a restricted product of valued fields, and its Boolean part.

Elements are families g(p) in Z with infinity, equal to a default at all but
finitely many primes; the default is >= 0, so g(p) >= 0 almost everywhere.
The operations +, meet (min) and join (max) act coordinatewise, with
inf + g = inf, inf meet g = g and inf join g = inf.

Three versions are supported:

* ``total``: values in Z with infinity (the valuation of every family);
* ``finite``: no infinite values;
* ``idelic``: default 0 and finite integer exceptions (the direct sum).

Intervals are chains.  In a product of chains, an interval [a, b] is linearly
ordered exactly when a and b differ in at most one coordinate: if they
differ at v and w, the elements equal to a except for b(v) at v, and except
for b(w) at w, are incomparable; if they differ only at v, every element of
the interval is determined by its v-coordinate.  :func:`chain_interval` uses
this instead of quantifying over the interval.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .boolean import Cofinite, Finite, PrimeSet, is_prime, primes_below
from .local import vp
from .logic import (
    MONOID,
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
    Term,
    Truth,
    Var,
    free_vars,
)
from .report import SuiteReport
from .restricted import FiniteAdele

INF = math.inf
VERSIONS = ("total", "finite", "idelic")


def _check_value(v) -> int | float:
    if v == INF:
        return INF
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"monoid values are integers or infinity, got {v!r}")
    return v


@dataclass(frozen=True)
class MonoidElement:
    default: int | float = 0
    exceptions: tuple = ()

    def __post_init__(self) -> None:
        d = _check_value(self.default)
        if d < 0:
            raise ValueError("the default value must be >= 0 (restrictedness)")
        raw = dict(self.exceptions) if not isinstance(self.exceptions, Mapping) else self.exceptions
        exc = {}
        for p, v in raw.items():
            p = int(p)
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            v = _check_value(v)
            if v != d:
                exc[p] = v
        object.__setattr__(self, "default", d)
        object.__setattr__(self, "exceptions", tuple(sorted(exc.items())))

    def at(self, p: int):
        return dict(self.exceptions).get(p, self.default)

    def primes(self) -> tuple:
        return tuple(p for p, _ in self.exceptions)

    def __add__(self, other: "MonoidElement") -> "MonoidElement":
        return m_add(self, other)

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}: {_show(v)}" for p, v in self.exceptions)
        return f"M({_show(self.default)}; {{{inner}}})"


def _show(v) -> str:
    return "inf" if v == INF else str(v)


ZERO = MonoidElement(0)
TOP = MonoidElement(INF)


def _pointwise(a: MonoidElement, b: MonoidElement, op) -> MonoidElement:
    primes = set(a.primes()) | set(b.primes())
    return MonoidElement(op(a.default, b.default), {p: op(a.at(p), b.at(p)) for p in primes})


def _plus(x, y):
    return INF if INF in (x, y) else x + y


def m_add(a: MonoidElement, b: MonoidElement) -> MonoidElement:
    return _pointwise(a, b, _plus)


def m_meet(a: MonoidElement, b: MonoidElement) -> MonoidElement:
    return _pointwise(a, b, min)


def m_join(a: MonoidElement, b: MonoidElement) -> MonoidElement:
    return _pointwise(a, b, max)


def m_leq(a: MonoidElement, b: MonoidElement) -> bool:
    return m_meet(a, b) == a


def m_neg(a: MonoidElement) -> MonoidElement | None:
    """Additive inverse, when it exists: finite support and no infinite values."""
    if a.default != 0 or any(v == INF for _, v in a.exceptions):
        return None
    return MonoidElement(0, {p: -v for p, v in a.exceptions})


def atom(p: int) -> MonoidElement:
    return MonoidElement(0, {p: 1})


def is_atom(a: MonoidElement) -> int | None:
    if a.default == 0 and len(a.exceptions) == 1 and a.exceptions[0][1] == 1:
        return a.exceptions[0][0]
    return None


def in_version(a: MonoidElement, version: str) -> bool:
    if version == "total":
        return True
    finite = a.default != INF and all(v != INF for _, v in a.exceptions)
    if version == "finite":
        return finite
    if version == "idelic":
        return finite and a.default == 0
    raise ValueError(f"unknown version {version!r}; expected one of {VERSIONS}")


def chain_interval(a: MonoidElement, b: MonoidElement) -> bool:
    """Is the interval [a, b] linearly ordered?"""
    if not m_leq(a, b):
        raise ValueError(f"chain_interval needs a <= b, got {a} and {b}")
    if a.default != b.default:
        return False  # they differ at infinitely many primes
    primes = set(a.primes()) | set(b.primes())
    return sum(1 for p in primes if a.at(p) != b.at(p)) <= 1


def in_internal_stalk(h: MonoidElement, e: MonoidElement, version: str = "total") -> bool:
    """h = 0, or h >= e with [e, 2h] a chain, or h <= -e with [2h, -e] a chain."""
    p = is_atom(e)
    if p is None:
        raise ValueError(f"{e} is not an atom")
    if not in_version(h, version):
        raise ValueError(f"{h} is not in the {version} version")
    if h == ZERO:
        return True
    twice = m_add(h, h)
    if m_leq(e, h) and chain_interval(e, twice):
        return True
    minus_e = m_neg(e)
    return m_leq(h, minus_e) and chain_interval(twice, minus_e)


def in_stalk_direct(h: MonoidElement, e: MonoidElement) -> bool:
    p = is_atom(e)
    return h.default == 0 and all(q == p for q in h.primes())


def _positive_part(f: MonoidElement) -> MonoidElement:
    return m_join(f, ZERO)


def _negative_part(f: MonoidElement) -> MonoidElement:
    return m_meet(f, ZERO)


def equiv_at_atom(f: MonoidElement, g: MonoidElement, e: MonoidElement, debug: bool = False) -> bool:
    """f and g agree at the prime of the atom e.

    With ``debug`` the definable reading is checked as well: writing
    f = f+ + f- with f+ = f join 0 and f- = f meet 0, f and g agree at e iff
    every positive stalk element h satisfies h <= f+ <=> h <= g+, and every
    negative stalk element h satisfies h >= f- <=> h >= g-.  Stalk elements
    are enumerated up to one past the largest finite value at e.
    """
    p = is_atom(e)
    if p is None:
        raise ValueError(f"{e} is not an atom")
    direct = f.at(p) == g.at(p)
    if debug:
        fp, gp, fn, gn = _positive_part(f), _positive_part(g), _negative_part(f), _negative_part(g)
        finite = [abs(v) for v in (f.at(p), g.at(p)) if v != INF]
        window = max(finite, default=0) + 1
        ok = True
        for n in [*range(window + 1), INF]:
            h = MonoidElement(0, {p: n})
            if m_leq(h, fp) != m_leq(h, gp):
                ok = False
        for n in range(window + 1):
            h = MonoidElement(0, {p: -n})
            if m_leq(fn, h) != m_leq(gn, h):
                ok = False
        if ok != direct:
            raise AssertionError(f"definable and direct readings of agreement at {p} differ for {f}, {g}")
    return direct


def _check_boolean(b: MonoidElement) -> None:
    values = {b.default, *(v for _, v in b.exceptions)}
    if not values <= {0, 1}:
        raise ValueError(f"{b} is not in the Boolean part (values must be 0 or 1)")


def is_finite_boolean(b: MonoidElement) -> bool:
    """A Boolean element is finite iff it has an additive inverse."""
    _check_boolean(b)
    finite = b.default == 0
    inverse = m_neg(b)
    if (inverse is not None and m_add(b, inverse) == ZERO) != finite:
        raise AssertionError(f"invertibility and finiteness disagree for {b}")
    return finite


def boolean_support(b: MonoidElement) -> PrimeSet:
    _check_boolean(b)
    ones = [p for p, v in b.exceptions if v == 1]
    zeros = [p for p, v in b.exceptions if v == 0]
    return Cofinite(zeros) if b.default == 1 else Finite(ones)


def boolean_element(s: PrimeSet) -> MonoidElement:
    if isinstance(s, Finite):
        return MonoidElement(0, {p: 1 for p in s.primes})
    if isinstance(s, Cofinite):
        return MonoidElement(1, {p: 0 for p in s.excluded})
    raise ValueError("only finite and cofinite sets have Boolean elements")


# ---------------------------------------------------------------- B_beta

BETA_PRIME = 2
BETA = atom(BETA_PRIME)


@dataclass(frozen=True)
class BBetaElement:
    """(x, 0) stands for the finite set x and (x, beta) for its complement."""

    x: MonoidElement
    flag: MonoidElement = ZERO

    def __post_init__(self) -> None:
        _check_boolean(self.x)
        if self.x.default != 0:
            raise ValueError("the first component must have finite support")
        if self.flag not in (ZERO, BETA):
            raise ValueError("the flag must be 0 or beta")

    @property
    def cofinite(self) -> bool:
        return self.flag == BETA

    def as_prime_set(self) -> PrimeSet:
        s = boolean_support(self.x)
        return Cofinite(s.primes) if self.cofinite else s

    def __repr__(self) -> str:
        return f"({sorted(boolean_support(self.x).primes)}, {'beta' if self.cofinite else '0'})"


def bbeta(primes: Iterable[int], cofinite: bool = False) -> BBetaElement:
    return BBetaElement(boolean_element(Finite(tuple(primes))), BETA if cofinite else ZERO)


def _b_meet(x: MonoidElement, y: MonoidElement) -> MonoidElement:
    return m_meet(x, y)


def _b_join(x: MonoidElement, y: MonoidElement) -> MonoidElement:
    return m_join(x, y)


def _b_minus(x: MonoidElement, y: MonoidElement) -> MonoidElement:
    """x meet (complement of y), inside the finite support of x."""
    return MonoidElement(0, {p: 1 for p, v in x.exceptions if v == 1 and y.at(p) == 0})


def bbeta_meet(a: BBetaElement, b: BBetaElement) -> BBetaElement:
    if not a.cofinite and not b.cofinite:
        return BBetaElement(_b_meet(a.x, b.x), ZERO)
    if a.cofinite and b.cofinite:
        return BBetaElement(_b_join(a.x, b.x), BETA)
    finite, cof = (a, b) if not a.cofinite else (b, a)
    return BBetaElement(_b_minus(finite.x, cof.x), ZERO)


def bbeta_complement(a: BBetaElement) -> BBetaElement:
    return BBetaElement(a.x, ZERO if a.cofinite else BETA)


def bbeta_join(a: BBetaElement, b: BBetaElement) -> BBetaElement:
    return bbeta_complement(bbeta_meet(bbeta_complement(a), bbeta_complement(b)))


def bbeta_fin(a: BBetaElement) -> bool:
    """Fin((x, 0)) is Fin(x), which holds; Fin((x, beta)) is not Fin(x)."""
    fin_x = is_finite_boolean(a.x)
    return not fin_x if a.cofinite else fin_x


BBETA_ZERO = BBetaElement(ZERO, ZERO)
BBETA_ONE = BBetaElement(ZERO, BETA)


def check_bbeta(primes: tuple = (2, 3, 5, 7)) -> SuiteReport:
    """Boolean algebra axioms and the Fin flag on all elements with support in ``primes``."""
    rep = SuiteReport("bbeta", {"primes": ",".join(map(str, primes))})
    elems = [bbeta(sub, cof) for r in range(len(primes) + 1)
             for sub in itertools.combinations(primes, r) for cof in (False, True)]
    meet, join, comp = bbeta_meet, bbeta_join, bbeta_complement
    for a in elems:
        rep.checks += 1
        s = a.as_prime_set()
        if bbeta_fin(a) != isinstance(s, Finite):
            rep.fail(f"Fin flag {a}")
        if meet(a, comp(a)) != BBETA_ZERO or join(a, comp(a)) != BBETA_ONE:
            rep.fail(f"complement laws {a}")
        if meet(a, a) != a or join(a, a) != a or comp(comp(a)) != a:
            rep.fail(f"idempotence/involution {a}")
        if meet(a, BBETA_ONE) != a or join(a, BBETA_ZERO) != a:
            rep.fail(f"bounds {a}")
    for a, b in itertools.product(elems, repeat=2):
        rep.checks += 1
        if meet(a, b) != meet(b, a) or join(a, b) != join(b, a):
            rep.fail(f"commutativity {a} {b}")
        if meet(a, join(a, b)) != a or join(a, meet(a, b)) != a:
            rep.fail(f"absorption {a} {b}")
        if comp(meet(a, b)) != join(comp(a), comp(b)):
            rep.fail(f"de Morgan {a} {b}")
        # the interpretation as finite/cofinite prime sets is a homomorphism
        if meet(a, b).as_prime_set() != (a.as_prime_set() & b.as_prime_set()):
            rep.fail(f"meet semantics {a} {b}")
        if join(a, b).as_prime_set() != (a.as_prime_set() | b.as_prime_set()):
            rep.fail(f"join semantics {a} {b}")
    for a, b, c in itertools.product(elems, repeat=3):
        rep.checks += 1
        if meet(a, meet(b, c)) != meet(meet(a, b), c) or join(a, join(b, c)) != join(join(a, b), c):
            rep.fail(f"associativity {a} {b} {c}")
        if meet(a, join(b, c)) != join(meet(a, b), meet(a, c)):
            rep.fail(f"distributivity {a} {b} {c}")
    rep.params["elements"] = len(elems)
    return rep


# ---------------------------------------------------------------- random elements and sweeps

SAMPLE_PRIMES = (2, 3, 5, 7, 11, 13)


def random_element(rng: random.Random, version: str = "total", spread: int = 3) -> MonoidElement:
    allow_inf = version == "total"
    if version == "idelic":
        default = 0
    else:
        default = rng.choice([0, 0, 1, 2] + ([INF] if allow_inf else []))
    exc = {}
    for p in rng.sample(SAMPLE_PRIMES, rng.randint(0, 3)):
        v = rng.randint(-spread, spread)
        if allow_inf and rng.random() < 0.1:
            v = INF
        exc[p] = v
    return MonoidElement(default, exc)


def random_stalk_candidate(rng: random.Random, version: str, p: int) -> MonoidElement:
    """Half the time supported at p alone, so both outcomes of the stalk test occur."""
    if rng.random() < 0.5:
        v = rng.randint(-4, 4)
        if version == "total" and rng.random() < 0.1:
            v = INF
        return MonoidElement(0, {p: v})
    return random_element(rng, version)


def check_monoid_axioms(samples: int = 10_000, seed: int = 0, version: str = "total") -> SuiteReport:
    rng = random.Random(seed)
    rep = SuiteReport("monoid-axioms", {"version": version, "samples": samples, "seed": seed})
    for _ in range(samples):
        a, b, c = (random_element(rng, version) for _ in range(3))
        rep.checks += 1
        for name, ok in (
            ("add assoc", m_add(a, m_add(b, c)) == m_add(m_add(a, b), c)),
            ("add comm", m_add(a, b) == m_add(b, a)),
            ("add zero", m_add(a, ZERO) == a),
            ("meet assoc", m_meet(a, m_meet(b, c)) == m_meet(m_meet(a, b), c)),
            ("join assoc", m_join(a, m_join(b, c)) == m_join(m_join(a, b), c)),
            ("meet comm", m_meet(a, b) == m_meet(b, a)),
            ("join comm", m_join(a, b) == m_join(b, a)),
            ("absorption", m_meet(a, m_join(a, b)) == a and m_join(a, m_meet(a, b)) == a),
            ("add over meet", m_add(a, m_meet(b, c)) == m_meet(m_add(a, b), m_add(a, c))),
            ("add over join", m_add(a, m_join(b, c)) == m_join(m_add(a, b), m_add(a, c))),
            ("order", m_leq(a, b) == (m_join(a, b) == b)),
            ("monotone add", not m_leq(a, b) or m_leq(m_add(a, c), m_add(b, c))),
        ):
            if not ok:
                rep.fail(f"{name}: {a} {b} {c}")
        if version == "total":
            for name, ok in (
                ("inf + g", m_add(TOP, a) == TOP),
                ("inf meet g", m_meet(TOP, a) == a),
                ("inf join g", m_join(TOP, a) == TOP),
            ):
                if not ok:
                    rep.fail(f"{name}: {a}")
    return rep


def linear_order_witness(candidates: Iterable[MonoidElement]) -> tuple | None:
    """A pair with x meet y equal to neither x nor y."""
    cands = list(candidates)
    for x, y in itertools.combinations(cands, 2):
        m = m_meet(x, y)
        if m != x and m != y:
            return x, y
    return None


def stalk_linear_order_holds(values: Iterable) -> bool:
    vals = list(values)
    return all(min(x, y) in (x, y) for x in vals for y in vals)


def check_stalk_lemma(samples: int = 1000, seed: int = 7) -> SuiteReport:
    """Internal stalk test, agreement at an atom, and the linear-order failure."""
    rng = random.Random(seed)
    rep = SuiteReport("stalk-lemma", {"samples": samples, "seed": seed})
    for version in VERSIONS:
        agree = 0
        for _ in range(samples):
            p = rng.choice(SAMPLE_PRIMES)
            e = atom(p)
            h = random_stalk_candidate(rng, version, p)
            rep.checks += 1
            internal = in_internal_stalk(h, e, version)
            if internal != in_stalk_direct(h, e):
                rep.fail(f"{version} stalk {h} at {p}")
            agree += internal
            f, g = random_element(rng, version), random_element(rng, version)
            if rng.random() < 0.5:
                g = MonoidElement(g.default, {**dict(g.exceptions), p: f.at(p)}) if \
                    (version == "idelic" and f.at(p) != INF) or version != "idelic" else g
            rep.checks += 1
            try:
                equiv_at_atom(f, g, e, debug=True)
            except AssertionError as exc:
                rep.fail(str(exc))
        rep.notes.append(f"{version}: {agree} of {samples} samples in the stalk")
    pool = [atom(p) for p in SAMPLE_PRIMES] + [MonoidElement(1), MonoidElement(0, {2: 3})]
    witness = linear_order_witness(pool)
    rep.checks += 1
    if witness is None:
        rep.fail("no linear-order failure found in the product")
    else:
        rep.notes.append(f"linear order fails in the product: {witness[0]} and {witness[1]}")
    stalk_values = [INF, *range(-5, 6)]
    rep.checks += 1
    if not stalk_linear_order_holds(stalk_values):
        rep.fail("linear order fails in a stalk")
    return rep


# ---------------------------------------------------------------- valuation of adeles

def prod_val(f: FiniteAdele) -> MonoidElement:
    """Coordinatewise p-adic valuation of an eventually constant adele."""
    q = f.default
    if q == 0:
        raise ValueError("the zero default has infinite valuation everywhere; use prod_val_total")
    exc: dict = {}
    default = 0
    for p in _prime_factors(q.numerator) | _prime_factors(q.denominator):
        exc[p] = vp(q, p)
    for p, v in f.exceptions:
        exc[p] = INF if v == 0 else vp(v, p)
    return MonoidElement(default, exc)


def prod_val_total(f: FiniteAdele) -> MonoidElement:
    """Like prod_val, but allows an infinite default (the adele is 0 almost everywhere)."""
    if f.default == 0:
        return MonoidElement(INF, {p: (INF if v == 0 else vp(v, p)) for p, v in f.exceptions})
    return prod_val(f)


def _prime_factors(n: int) -> set:
    n = abs(n)
    out, p = set(), 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


# ---------------------------------------------------------------- literals

def monoid_from_json(obj) -> MonoidElement:
    if not isinstance(obj, Mapping) or "default" not in obj:
        raise ValueError('monoid literal must look like {"default": 0, "exceptions": {"2": 3}}')

    def value(v):
        if v == "inf":
            return INF
        if isinstance(v, int) and not isinstance(v, bool):
            return v
        raise ValueError(f"bad monoid value {v!r}")

    return MonoidElement(value(obj["default"]),
                         {int(p): value(v) for p, v in obj.get("exceptions", {}).items()})


def monoid_to_json(a: MonoidElement) -> dict:
    def enc(v):
        return "inf" if v == INF else v

    return {"default": enc(a.default), "exceptions": {str(p): enc(v) for p, v in a.exceptions}}


# ---------------------------------------------------------------- Boolean values over the direct sum

def _mterm(t: Term, values: Mapping):
    if isinstance(t, Var):
        return values[t.name]
    if isinstance(t, Const):
        return INF if t.name == "inf" else int(t.name)
    if isinstance(t, App):
        a, b = (_mterm(x, values) for x in t.args)
        if t.fn == "+":
            return _plus(a, b)
        if t.fn == "meet":
            return min(a, b)
        if t.fn == "join":
            return max(a, b)
    raise LogicError(f"not a monoid term: {t!r}")


def stalk_holds(f: Formula, values: Mapping) -> bool:
    """Truth of a quantifier-free monoid formula in Z with infinity."""
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Eq):
        return _mterm(f.left, values) == _mterm(f.right, values)
    if isinstance(f, Atom) and f.rel == "<=":
        a, b = (_mterm(x, values) for x in f.args)
        return a <= b
    if isinstance(f, Not):
        return not stalk_holds(f.body, values)
    if isinstance(f, And):
        return all(stalk_holds(q, values) for q in f.parts)
    if isinstance(f, Or):
        return any(stalk_holds(q, values) for q in f.parts)
    if isinstance(f, Implies):
        return (not stalk_holds(f.left, values)) or stalk_holds(f.right, values)
    raise LogicError("dsum_fin_check needs a quantifier-free monoid formula")


def monoid_boolean_value(phi: Formula, args: Mapping) -> PrimeSet:
    names = sorted(v.name for v in free_vars(phi) if v.sort == MONOID)
    missing = set(names) - set(args)
    if missing:
        raise LogicError(f"no argument for {sorted(missing)}")
    support: set = set()
    for n in names:
        support |= set(args[n].primes())
    hits = [p for p in sorted(support) if stalk_holds(phi, {n: args[n].at(p) for n in names})]
    if stalk_holds(phi, {n: args[n].default for n in names}):
        return Cofinite([p for p in sorted(support) if p not in hits])
    return Finite(hits)


def dsum_fin_check(phi: Formula, args: Mapping, bound: int = 60) -> bool:
    """Is [[phi(args)]] finite, for direct-sum arguments?

    Cross-checked against the bounded reading: some finite-support f bounds
    every atom in the Boolean value, tested on the atoms at primes up to
    twice ``bound``.
    """
    for name, a in args.items():
        if not in_version(a, "idelic"):
            raise ValueError(f"argument {name} is not in the direct sum")
    value = monoid_boolean_value(phi, args)
    finite = isinstance(value, Finite)
    support = sorted({p for a in args.values() for p in a.primes()})
    bound = max([bound, *support]) + 1
    hits = [p for p in primes_below(bound) if value.contains(p)]
    bounding = MonoidElement(0, {p: 1 for p in hits})
    bounded = all(m_leq(atom(q), bounding) for q in primes_below(2 * bound) if value.contains(q))
    if bounded != finite:
        raise AssertionError(f"bounded finiteness test disagrees for {value!r}")
    return finite


__all__ = [
    "BBETA_ONE", "BBETA_ZERO", "BETA", "BBetaElement", "INF", "MonoidElement", "SuiteReport",
    "TOP", "VERSIONS", "ZERO", "atom", "bbeta", "bbeta_complement", "bbeta_fin", "bbeta_join",
    "bbeta_meet", "boolean_element", "boolean_support", "chain_interval", "check_bbeta",
    "check_monoid_axioms", "check_stalk_lemma", "dsum_fin_check", "equiv_at_atom",
    "in_internal_stalk", "in_stalk_direct", "in_version", "is_atom", "is_finite_boolean",
    "linear_order_witness", "m_add", "m_join", "m_leq", "m_meet", "m_neg", "monoid_boolean_value",
    "monoid_from_json", "monoid_to_json", "prod_val", "prod_val_total", "random_element",
    "stalk_holds", "stalk_linear_order_holds",
]
