"""Powerset of the primes as a Boolean algebra, and its first-order theory with Fin and C_j.

Concrete sets are :class:`Finite`, :class:`Cofinite` or :class:`Frontier` (an
oracle-backed set whose finiteness is only declared, never proved here).

Decision method
---------------
Fix Boolean variables v_1..v_k.  Every element definable from them is a join
of minterms, so a quantifier-free formula only depends on the cardinalities
of the 2^k minterms.  Atoms translate as

* ``t = 0``      every minterm below t is empty,
* ``C_j(t)``     the minterm sizes below t sum to at least j,
* ``Fin(t)``     no minterm below t is infinite.

A cell size is recorded as an exact integer, ``LARGE`` (finite but at least
the current cap) or ``INF``.  To decide ``Exists x. phi`` we split each cell
c into c & x and c & ~x in every way the sizes allow and recurse.

Why a finite cap is enough: let M be the largest j in the formula (at least
1) and d the quantifier depth.  Two finite sizes that are both at least
M * 2^d are indistinguishable.  For d = 0 this is immediate from the atom
table above.  For d > 0, a split (a, b) of one size can be matched by a
split (a', b') of the other with a, a' and b, b' each equal or both at least
M * 2^(d-1), and induction applies.  Infinite cells split into any pair with
at least one infinite part (this is where the algebra being a full powerset
matters).  So children of a quantifier whose body has depth e are enumerated
with exact sizes below M * 2^e plus ``LARGE`` and ``INF``, and ``ba_qe``
tabulates the free-variable minterms at cap M * 2^d.  This doubling bound
is what makes the enumeration complete.  A cap of max j plus the number of
quantifiers is not: Exists x (x <= y and C_j(x) and C_j(y - x)) is C_{2j}(y).
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .logic import (
    BOOL,
    FALSE,
    TRUE,
    And,
    App,
    Atom,
    BoolAtom,
    BoolRef,
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
    conj,
    disj,
    neg,
    render_formula,
)


# ---------------------------------------------------------------- primes

@lru_cache(maxsize=None)
def primes_below(n: int) -> tuple:
    if n <= 2:
        return ()
    sieve = bytearray([1]) * n
    sieve[0] = sieve[1] = 0
    for i in range(2, int(n ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, n, i)))
    return tuple(i for i in range(n) if sieve[i])


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


# ---------------------------------------------------------------- three-valued logic

class Kleene(Enum):
    FALSE = 0
    INDETERMINATE = 1
    TRUE = 2

    @staticmethod
    def of(b: bool) -> "Kleene":
        return Kleene.TRUE if b else Kleene.FALSE

    def __and__(self, other: "Kleene") -> "Kleene":
        return Kleene(min(self.value, other.value))

    def __or__(self, other: "Kleene") -> "Kleene":
        return Kleene(max(self.value, other.value))

    def __invert__(self) -> "Kleene":
        return Kleene(2 - self.value)

    def __bool__(self) -> bool:
        raise TypeError("Kleene value has no two-valued truth; compare with Kleene.TRUE")

    @property
    def determinate(self) -> bool:
        return self is not Kleene.INDETERMINATE


def k_all(values: Iterable[Kleene]) -> Kleene:
    out = Kleene.TRUE
    for v in values:
        out = out & v
        if out is Kleene.FALSE:
            break
    return out


def k_any(values: Iterable[Kleene]) -> Kleene:
    out = Kleene.FALSE
    for v in values:
        out = out | v
        if out is Kleene.TRUE:
            break
    return out


# ---------------------------------------------------------------- prime sets

class PrimeSet:
    """A subset of the set of all primes."""

    def __and__(self, other: "PrimeSet") -> "PrimeSet":
        return ps_meet(self, other)

    def __or__(self, other: "PrimeSet") -> "PrimeSet":
        return ps_join(self, other)

    def __invert__(self) -> "PrimeSet":
        return ps_complement(self)

    def __sub__(self, other: "PrimeSet") -> "PrimeSet":
        return ps_difference(self, other)

    def contains(self, p: int) -> bool:
        raise NotImplementedError


def _normalize(primes: Iterable[int]) -> tuple:
    out = tuple(sorted(set(int(p) for p in primes)))
    for p in out:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
    return out


@dataclass(frozen=True)
class Finite(PrimeSet):
    primes: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "primes", _normalize(self.primes))

    def contains(self, p: int) -> bool:
        return p in self.primes

    def __repr__(self) -> str:
        return "Finite{" + ",".join(map(str, self.primes)) + "}"


@dataclass(frozen=True)
class Cofinite(PrimeSet):
    excluded: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "excluded", _normalize(self.excluded))

    def contains(self, p: int) -> bool:
        return is_prime(p) and p not in self.excluded

    def __repr__(self) -> str:
        return "Cofinite{" + ",".join(map(str, self.excluded)) + "}"


UNKNOWN = "Unknown"
DECLARED_FINITE = "DeclaredFinite"
DECLARED_COFINITE = "DeclaredCofinite"
CLASSIFICATIONS = (UNKNOWN, DECLARED_FINITE, DECLARED_COFINITE)


@dataclass(frozen=True)
class Frontier(PrimeSet):
    """A prime set known only through a membership oracle.

    The oracle must be a pure function of the prime; it may be called from
    several threads.  ``bound`` limits every empirical scan.
    """

    oracle: Callable[[int], bool] = field(compare=False)
    classification: str = UNKNOWN
    bound: int = 10_000
    label: str = "oracle"

    def __post_init__(self) -> None:
        if self.classification not in CLASSIFICATIONS:
            raise ValueError(f"bad classification {self.classification!r}")
        if self.bound < 2:
            raise ValueError("sample bound must be at least 2")

    def contains(self, p: int) -> bool:
        return bool(self.oracle(p))

    def members_below(self, bound: int | None = None) -> tuple:
        return tuple(p for p in primes_below(bound or self.bound) if self.oracle(p))

    def __repr__(self) -> str:
        return f"Frontier({self.label}, {self.classification}, B={self.bound})"


def classify(a: PrimeSet, classification: str) -> PrimeSet:
    """Attach a declared classification to a Frontier set (others pass through)."""
    if isinstance(a, Frontier):
        return Frontier(a.oracle, classification, a.bound, a.label)
    return a


def _frontier_class(a: PrimeSet) -> str:
    if isinstance(a, Finite):
        return DECLARED_FINITE
    if isinstance(a, Cofinite):
        return DECLARED_COFINITE
    return a.classification


def _bound(a: PrimeSet, b: PrimeSet) -> int:
    return max(x.bound for x in (a, b) if isinstance(x, Frontier))


def ps_complement(a: PrimeSet) -> PrimeSet:
    if isinstance(a, Finite):
        return Cofinite(a.primes)
    if isinstance(a, Cofinite):
        return Finite(a.excluded)
    swap = {UNKNOWN: UNKNOWN, DECLARED_FINITE: DECLARED_COFINITE, DECLARED_COFINITE: DECLARED_FINITE}
    oracle = a.oracle
    return Frontier(lambda p: not oracle(p), swap[a.classification], a.bound, f"not {a.label}")


def ps_meet(a: PrimeSet, b: PrimeSet) -> PrimeSet:
    if a == Cofinite(()):
        return b
    if b == Cofinite(()):
        return a
    if isinstance(a, Finite) and isinstance(b, Finite):
        return Finite(set(a.primes) & set(b.primes))
    if isinstance(a, Cofinite) and isinstance(b, Cofinite):
        return Cofinite(set(a.excluded) | set(b.excluded))
    if isinstance(a, Cofinite) and isinstance(b, Finite):
        a, b = b, a
    if isinstance(a, Finite):
        # a finite set filters anything exactly
        return Finite(p for p in a.primes if b.contains(p))
    if isinstance(b, Finite):
        return Finite(p for p in b.primes if a.contains(p))
    ca, cb = _frontier_class(a), _frontier_class(b)
    if DECLARED_FINITE in (ca, cb):
        cls = DECLARED_FINITE
    elif ca == cb == DECLARED_COFINITE:
        cls = DECLARED_COFINITE
    else:
        cls = UNKNOWN
    la = a.label if isinstance(a, Frontier) else repr(a)
    lb = b.label if isinstance(b, Frontier) else repr(b)
    return Frontier(lambda p: a.contains(p) and b.contains(p), cls, _bound(a, b), f"({la} and {lb})")


def ps_join(a: PrimeSet, b: PrimeSet) -> PrimeSet:
    if a == Finite(()):
        return b
    if b == Finite(()):
        return a
    return ps_complement(ps_meet(ps_complement(a), ps_complement(b)))


def ps_difference(a: PrimeSet, b: PrimeSet) -> PrimeSet:
    return ps_meet(a, ps_complement(b))


def ps_ops(a: PrimeSet, b: PrimeSet) -> dict:
    """All four operations at once: meet, join, complement of a, difference."""
    return {
        "meet": ps_meet(a, b),
        "join": ps_join(a, b),
        "complement": ps_complement(a),
        "difference": ps_difference(a, b),
    }


def exceptional_primes(a: PrimeSet) -> tuple:
    if isinstance(a, Finite):
        return a.primes
    if isinstance(a, Cofinite):
        return a.excluded
    raise ValueError("Frontier sets have no finite exception list")


def prime_set_from_json(obj: Mapping) -> PrimeSet:
    if not isinstance(obj, Mapping) or len(obj) != 1:
        raise ValueError('prime set literal must be {"finite": [...]} or {"cofinite": [...]}')
    (key, value), = obj.items()
    if key == "finite":
        return Finite(value)
    if key == "cofinite":
        return Cofinite(value)
    raise ValueError(f"unknown prime set kind {key!r}")


def prime_set_to_json(a: PrimeSet) -> dict:
    if isinstance(a, Finite):
        return {"finite": list(a.primes)}
    if isinstance(a, Cofinite):
        return {"cofinite": list(a.excluded)}
    raise ValueError("Frontier sets have no literal form")


# ---------------------------------------------------------------- density and atoms

@dataclass(frozen=True)
class DensityReport:
    label: str
    bound: int
    members: int
    primes: int
    classification: str

    @property
    def density(self) -> float:
        return self.members / self.primes if self.primes else 0.0

    def lines(self) -> list:
        return [
            f"frontier: {self.label}",
            f"classification: {self.classification}",
            f"bound: {self.bound}",
            f"members_below_bound: {self.members}",
            f"primes_below_bound: {self.primes}",
            f"density: {self.density:.6f}",
        ]


def density_report(a: Frontier) -> DensityReport:
    ps = primes_below(a.bound)
    members = sum(1 for p in ps if a.oracle(p))
    return DensityReport(a.label, a.bound, members, len(ps), a.classification)


def eval_fin(a: PrimeSet, reports: list | None = None) -> Kleene:
    if isinstance(a, Finite):
        return Kleene.TRUE
    if isinstance(a, Cofinite):
        return Kleene.FALSE
    if a.classification == DECLARED_FINITE:
        return Kleene.TRUE
    if a.classification == DECLARED_COFINITE:
        return Kleene.FALSE
    if reports is not None:
        reports.append(density_report(a))
    return Kleene.INDETERMINATE


def eval_cj(j: int, a: PrimeSet, reports: list | None = None) -> Kleene:
    if j < 1:
        raise ValueError("C_j needs j >= 1")
    if isinstance(a, Finite):
        return Kleene.of(len(a.primes) >= j)
    if isinstance(a, Cofinite):
        return Kleene.TRUE
    if a.classification == DECLARED_COFINITE:
        return Kleene.TRUE
    count = 0
    for p in primes_below(a.bound):
        if a.oracle(p):
            count += 1
            if count >= j:
                return Kleene.TRUE
    if reports is not None:
        reports.append(density_report(a))
    return Kleene.INDETERMINATE


def eval_empty(a: PrimeSet, reports: list | None = None) -> Kleene:
    if isinstance(a, Finite):
        return Kleene.of(not a.primes)
    if isinstance(a, Cofinite):
        return Kleene.FALSE
    if a.classification == DECLARED_COFINITE:
        return Kleene.FALSE
    for p in primes_below(a.bound):
        if a.oracle(p):
            return Kleene.FALSE
    if reports is not None:
        reports.append(density_report(a))
    return Kleene.INDETERMINATE


# ---------------------------------------------------------------- quantifier-free evaluation

class UnboundVariable(LogicError):
    pass


def _env_lookup(env: Mapping, t: Term) -> PrimeSet:
    if isinstance(t, Var):
        if t.name in env:
            return env[t.name]
        if t in env:
            return env[t]
        raise UnboundVariable(f"unbound Boolean variable {t.name!r}")
    if isinstance(t, BoolRef):
        for key in (t.index, t):
            if key in env:
                return env[key]
        raise UnboundVariable(f"unbound slot {t.index}")
    if t in env:
        return env[t]
    raise UnboundVariable(f"no value for {t!r}")


def eval_bool_term(t: Term, env: Mapping) -> PrimeSet:
    if isinstance(t, Const):
        if t.sort != BOOL:
            raise LogicError(f"not a Boolean constant: {t.name}")
        return Finite(()) if t.name == "0" else Cofinite(())
    if isinstance(t, App):
        args = [eval_bool_term(a, env) for a in t.args]
        if t.fn == "meet":
            return ps_meet(*args)
        if t.fn == "join":
            return ps_join(*args)
        if t.fn == "compl":
            return ps_complement(args[0])
        raise LogicError(f"not a Boolean function: {t.fn}")
    return _env_lookup(env, t)


def ba_eval(f: Formula, env: Mapping, reports: list | None = None) -> Kleene:
    """Evaluate a Boolean formula in Powerset(primes) under ``env``.

    ``env`` maps variable names (or slot indices for BoolRef leaves) to prime
    sets.  Quantifier-free formulas use Kleene propagation; formulas with
    Boolean quantifiers are decided by :func:`ba_decide_with` instead.
    """
    if any(isinstance(s, (Exists, Forall)) for s in _walk(f)):
        return ba_decide_with(f, env, reports)
    return _qf_eval(f, env, reports)


def _qf_eval(f: Formula, env: Mapping, reports: list | None) -> Kleene:
    if isinstance(f, Truth):
        return Kleene.of(f.value)
    if isinstance(f, Not):
        return ~_qf_eval(f.body, env, reports)
    if isinstance(f, And):
        return k_all(_qf_eval(p, env, reports) for p in f.parts)
    if isinstance(f, Or):
        return k_any(_qf_eval(p, env, reports) for p in f.parts)
    if isinstance(f, Implies):
        return ~_qf_eval(f.left, env, reports) | _qf_eval(f.right, env, reports)
    if isinstance(f, BoolAtom):
        a = eval_bool_term(f.arg, env)
        if f.kind == "fin":
            return eval_fin(a, reports)
        return eval_cj(f.j, a, reports)
    if isinstance(f, Eq):
        a = eval_bool_term(f.left, env)
        b = eval_bool_term(f.right, env)
        return eval_empty(ps_join(ps_difference(a, b), ps_difference(b, a)), reports)
    if isinstance(f, Atom) and f.rel == "<=":
        a = eval_bool_term(f.args[0], env)
        b = eval_bool_term(f.args[1], env)
        return eval_empty(ps_difference(a, b), reports)
    raise LogicError(f"not a Boolean formula: {render_formula(f)}")


def _walk(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from _walk(f.body)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from _walk(p)
    elif isinstance(f, Implies):
        yield from _walk(f.left)
        yield from _walk(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from _walk(f.body)


# ---------------------------------------------------------------- abstract cell sizes

class _Large:
    """A finite size at least as big as the current cap."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "LARGE"


class _Inf:
    __slots__ = ()

    def __repr__(self) -> str:
        return "INF"


LARGE = _Large()
INF = _Inf()


def _size_key(s) -> tuple:
    if s is INF:
        return (2, 0)
    if s is LARGE:
        return (1, 0)
    return (0, s)


def _abstract(n, cap: int):
    if n is INF or n is LARGE:
        return n
    return n if n < cap else LARGE


def _split_options(s, cap: int) -> list:
    """Ways to split a cell of size ``s`` into two children at ``cap``."""
    small = list(range(cap))
    if s is INF:
        others = small + [LARGE, INF]
        opts = [(INF, v) for v in others] + [(v, INF) for v in others if v is not INF]
        return opts
    if s is LARGE:
        opts = [(i, LARGE) for i in small] + [(LARGE, j) for j in small] + [(LARGE, LARGE)]
        return opts
    seen = set()
    opts = []
    for i in range(s + 1):
        pair = (_abstract(i, cap), _abstract(s - i, cap))
        key = (_size_key(pair[0]), _size_key(pair[1]))
        if key not in seen:
            seen.add(key)
            opts.append(pair)
    return opts


def _is_zero(s) -> bool:
    return s == 0 and s is not LARGE and s is not INF


# ---------------------------------------------------------------- formula analysis

def _max_j(f: Formula) -> int:
    best = 1
    for s in _walk(f):
        if isinstance(s, BoolAtom) and s.kind == "cj":
            best = max(best, s.j)
    return best


def _qdepth(f: Formula) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + _qdepth(f.body)
    if isinstance(f, Not):
        return _qdepth(f.body)
    if isinstance(f, (And, Or)):
        return max((_qdepth(p) for p in f.parts), default=0)
    if isinstance(f, Implies):
        return max(_qdepth(f.left), _qdepth(f.right))
    return 0


def _leaves(f: Formula, bound: frozenset = frozenset()) -> list:
    """Free Boolean leaves of ``f`` in first-occurrence order."""
    out: list = []

    def term(t: Term, bnd: frozenset) -> None:
        if isinstance(t, App):
            for a in t.args:
                term(a, bnd)
        elif isinstance(t, Const):
            return
        elif isinstance(t, Var) and t.name in bnd:
            return
        elif t not in out:
            out.append(t)

    def walk(g: Formula, bnd: frozenset) -> None:
        if isinstance(g, Truth):
            return
        if isinstance(g, Not):
            walk(g.body, bnd)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p, bnd)
        elif isinstance(g, Implies):
            walk(g.left, bnd)
            walk(g.right, bnd)
        elif isinstance(g, (Exists, Forall)):
            if g.sort != BOOL:
                raise LogicError(f"quantifier over non-Boolean sort {g.sort!r}")
            walk(g.body, bnd | {g.var})
        elif isinstance(g, BoolAtom):
            term(g.arg, bnd)
        elif isinstance(g, Eq):
            term(g.left, bnd)
            term(g.right, bnd)
        elif isinstance(g, Atom) and g.rel == "<=":
            term(g.args[0], bnd)
            term(g.args[1], bnd)
        else:
            raise LogicError(f"not a Boolean formula: {render_formula(g)}")

    walk(f, bound)
    return out


# ---------------------------------------------------------------- configuration evaluator

SEARCH_BUDGET = 500_000  # split configurations tried per decision


class SearchBudgetExceeded(LogicError):
    """The configuration search for Boolean quantifiers grew too large."""


class _ConfigEvaluator:
    """Truth of a Boolean formula at a configuration of cells.

    ``keys`` lists the leaves/variables in scope (bound variables as
    ('bound', name) pairs, free leaves as their term).  A cell is a pattern
    of membership bits over ``keys`` with an abstract size.
    """

    def __init__(self, formula: Formula, budget: int | None = None):
        self.formula = formula
        self.m = _max_j(formula)
        self.memo: dict = {}
        self.budget = SEARCH_BUDGET if budget is None else budget

    def evaluate(self, keys: tuple, cells: tuple) -> bool:
        return self._eval(self.formula, keys, cells)

    def _index(self, keys: tuple, t: Term) -> int:
        if isinstance(t, Var):
            bk = ("bound", t.name)
            for i in range(len(keys) - 1, -1, -1):
                if keys[i] == bk:
                    return i
        for i in range(len(keys) - 1, -1, -1):
            if keys[i] == t:
                return i
        raise UnboundVariable(f"no value for {t!r}")

    def _member(self, t: Term, keys: tuple, pattern: tuple) -> bool:
        if isinstance(t, Const):
            return t.name == "1"
        if isinstance(t, App):
            if t.fn == "meet":
                return self._member(t.args[0], keys, pattern) and self._member(t.args[1], keys, pattern)
            if t.fn == "join":
                return self._member(t.args[0], keys, pattern) or self._member(t.args[1], keys, pattern)
            if t.fn == "compl":
                return not self._member(t.args[0], keys, pattern)
            raise LogicError(f"not a Boolean function: {t.fn}")
        return pattern[self._index(keys, t)]

    def _size_of(self, pred, keys: tuple, cells: tuple):
        exact = 0
        large = False
        for pattern, s in cells:
            if pred(pattern):
                if s is INF:
                    return INF
                if s is LARGE:
                    large = True
                else:
                    exact += s
        return LARGE if large else exact

    def _eval(self, f: Formula, keys: tuple, cells: tuple) -> bool:
        if isinstance(f, Truth):
            return f.value
        if isinstance(f, Not):
            return not self._eval(f.body, keys, cells)
        if isinstance(f, And):
            return all(self._eval(p, keys, cells) for p in f.parts)
        if isinstance(f, Or):
            return any(self._eval(p, keys, cells) for p in f.parts)
        if isinstance(f, Implies):
            return (not self._eval(f.left, keys, cells)) or self._eval(f.right, keys, cells)
        if isinstance(f, BoolAtom):
            size = self._size_of(lambda pat: self._member(f.arg, keys, pat), keys, cells)
            if f.kind == "fin":
                return size is not INF
            if size is INF or size is LARGE:
                return True
            return size >= f.j
        if isinstance(f, Eq):
            size = self._size_of(
                lambda pat: self._member(f.left, keys, pat) != self._member(f.right, keys, pat),
                keys, cells)
            return _is_zero(size)
        if isinstance(f, Atom) and f.rel == "<=":
            size = self._size_of(
                lambda pat: self._member(f.args[0], keys, pat) and not self._member(f.args[1], keys, pat),
                keys, cells)
            return _is_zero(size)
        if isinstance(f, (Exists, Forall)):
            memo_key = (id(f), keys, cells)
            if memo_key in self.memo:
                return self.memo[memo_key]
            result = self._block(f, keys, cells)
            self.memo[memo_key] = result
            return result
        raise LogicError(f"not a Boolean formula: {render_formula(f)}")


    def _block(self, f: Formula, keys: tuple, cells: tuple) -> bool:
        """A chain of like quantifiers, split into all variable patterns at once.

        Splitting a cell into the 2^k patterns of k variables directly, with
        part sizes abstracted at the cap of the innermost body, is complete
        by the same doubling argument as k single splits.  Conjuncts of the
        form ``minterm <= B`` (B free of the chain variables) forbid a
        pattern in every cell lying outside B, which prunes the search.
        """
        kind = type(f)
        names: list = []
        body = f
        while isinstance(body, kind) and body.sort == BOOL:
            names.append(body.var)
            body = body.body
        want = kind is Exists
        cap = self.m * (2 ** _qdepth(body))
        forbidden = self._constraints(names, body, keys) if want else []
        patterns = list(itertools.product((True, False), repeat=len(names)))
        new_keys = keys + tuple(("bound", n) for n in names)
        per_cell = []
        for pattern, size in cells:
            allowed = [bits for bits in patterns
                       if not any(b == bits and not self._member(t, keys, pattern) for b, t in forbidden)]
            if not allowed:
                return not want
            per_cell.append([(pattern, allowed, d) for d in _distributions(size, len(allowed), cap)])
        for choice in itertools.product(*per_cell):
            self.budget -= 1
            if self.budget < 0:
                raise SearchBudgetExceeded("Boolean quantifier search exceeded its budget")
            child: list = []
            for pattern, allowed, dist in choice:
                for bits, part in zip(allowed, dist):
                    if not _is_zero(part):
                        child.append((pattern + bits, part))
            if self._eval(body, new_keys, tuple(child)) == want:
                return want
        return not want

    def _constraints(self, names: list, body: Formula, keys: tuple) -> list:
        parts = body.parts if isinstance(body, And) else (body,)
        out = []
        for part in parts:
            if not (isinstance(part, Atom) and part.rel == "<="):
                continue
            bits = _minterm_bits(part.args[0], names)
            if bits is None or _term_mentions(part.args[1], names):
                continue
            out.append((bits, part.args[1]))
        return out


def _minterm_bits(t: Term, names: list) -> tuple | None:
    """Bits of a meet of literals mentioning each of ``names`` exactly once."""
    lits: dict = {}

    def walk(u: Term) -> bool:
        if isinstance(u, App) and u.fn == "meet":
            return walk(u.args[0]) and walk(u.args[1])
        positive = True
        if isinstance(u, App) and u.fn == "compl":
            u, positive = u.args[0], False
        if isinstance(u, Var) and u.name in names and u.name not in lits:
            lits[u.name] = positive
            return True
        return False

    if not walk(t) or len(lits) != len(names):
        return None
    return tuple(lits[n] for n in names)


def _term_mentions(t: Term, names: list) -> bool:
    if isinstance(t, Var):
        return t.name in names
    if isinstance(t, App):
        return any(_term_mentions(a, names) for a in t.args)
    return False


def _distributions(size, parts: int, cap: int) -> list:
    """Abstract ways to split a cell of ``size`` into ``parts`` children."""
    finite_values = list(range(cap)) + [LARGE]
    out = []
    if size is INF:
        for vec in itertools.product(finite_values + [INF], repeat=parts):
            if INF in vec:
                out.append(vec)
        return out
    if size is LARGE:
        for vec in itertools.product(finite_values, repeat=parts):
            if LARGE in vec:
                out.append(vec)
        return out

    def rec(i: int, remaining: int, has_large: bool, acc: list) -> None:
        if i == parts:
            if remaining == 0 or (has_large and remaining >= 0):
                out.append(tuple(acc))
            return
        for v in range(min(cap - 1, remaining) + 1):
            acc.append(v)
            rec(i + 1, remaining - v, has_large, acc)
            acc.pop()
        if remaining >= cap:
            acc.append(LARGE)
            rec(i + 1, remaining - cap, True, acc)
            acc.pop()

    rec(0, size, False, [])
    return out


def _cells_from(patterns: Iterable[tuple]) -> tuple:
    """Merge (pattern, size) pairs with equal patterns, dropping empty cells."""
    acc: dict = {}
    for pattern, s in patterns:
        if _is_zero(s):
            continue
        old = acc.get(pattern, 0)
        if old is INF or s is INF:
            acc[pattern] = INF
        elif old is LARGE or s is LARGE:
            acc[pattern] = LARGE
        else:
            acc[pattern] = old + s
    return tuple(sorted(acc.items(), key=lambda kv: kv[0]))


# ---------------------------------------------------------------- decision with parameters

def ba_decide(f: Formula) -> bool:
    """Truth value of a Boolean sentence in any infinite powerset algebra with Fin/C_j."""
    if _leaves(f):
        raise LogicError("ba_decide needs a sentence without free variables or slots")
    ev = _ConfigEvaluator(f)
    return ev.evaluate((), (((), INF),))


def _tail_options(cap: int) -> list:
    return [0] + list(range(1, cap)) + [LARGE, INF]


def ba_decide_with(f: Formula, env: Mapping, reports: list | None = None) -> Kleene:
    """Decide ``f`` (quantifiers allowed) with free leaves bound to prime sets.

    Finite and cofinite values are exact.  Frontier values are known below
    their sample bound; every tail consistent with the declared
    classifications is tried, and the answer is determinate only when all
    tails agree.
    """
    leaves = _leaves(f)
    values = [_env_lookup(env, leaf) for leaf in leaves]
    keys = tuple(leaves)
    ev = _ConfigEvaluator(f)
    cap = ev.m * (2 ** _qdepth(f))
    frontiers = [i for i, v in enumerate(values) if isinstance(v, Frontier)]
    if not frontiers:
        special: set = set()
        for v in values:
            special.update(exceptional_primes(v))
        generic = tuple(not isinstance(v, Finite) for v in values)
        raw = [(tuple(v.contains(p) for v in values), 1) for p in sorted(special)]
        raw.append((generic, INF))
        return Kleene.of(ev.evaluate(keys, _cells_from(raw)))

    bound = max(values[i].bound for i in frontiers)
    for v in values:
        if not isinstance(v, Frontier):
            special_max = max(exceptional_primes(v), default=0)
            bound = max(bound, special_max + 1)
    known = [(tuple(v.contains(p) for v in values), 1) for p in primes_below(bound)]
    tail_fixed = [None if isinstance(v, Frontier) else isinstance(v, Cofinite) for v in values]
    tail_patterns = []
    for bits in itertools.product((True, False), repeat=len(frontiers)):
        pat = list(tail_fixed)
        for i, b in zip(frontiers, bits):
            pat[i] = b
        tail_patterns.append(tuple(pat))
    outcomes = set()
    for sizes in itertools.product(_tail_options(cap), repeat=len(tail_patterns)):
        if not any(s is INF for s in sizes):
            continue
        if not _tail_consistent(values, frontiers, tail_patterns, sizes):
            continue
        cells = _cells_from(known + list(zip(tail_patterns, sizes)))
        outcomes.add(ev.evaluate(keys, cells))
        if len(outcomes) == 2:
            break
    if len(outcomes) == 1:
        return Kleene.of(outcomes.pop())
    if reports is not None:
        for i in frontiers:
            reports.append(density_report(values[i]))
    return Kleene.INDETERMINATE


def _tail_consistent(values, frontiers, patterns, sizes) -> bool:
    for i in frontiers:
        cls = values[i].classification
        if cls == UNKNOWN:
            continue
        want_member = cls == DECLARED_FINITE  # the side that must be finite
        for pat, s in zip(patterns, sizes):
            if pat[i] == want_member and s is INF:
                return False
    return True


# ---------------------------------------------------------------- quantifier elimination

@dataclass(frozen=True)
class _Box:
    sets: tuple  # per minterm: frozenset of value indices


def _value_list(cap: int) -> list:
    return list(range(cap)) + [LARGE, INF]


def _minterm_term(leaves: list, bits: tuple) -> Term:
    if not leaves:
        return Const("1", BOOL)
    parts = [leaf if b else App("compl", (leaf,), BOOL) for leaf, b in zip(leaves, bits)]
    t = parts[0]
    for p in parts[1:]:
        t = App("meet", (t, p), BOOL)
    return t


def _constraint(t: Term, allowed: frozenset, cap: int) -> Formula:
    """Quantifier-free formula saying the size of ``t`` lies in ``allowed``."""
    n_values = cap + 2
    if len(allowed) == n_values:
        return TRUE
    if not allowed:
        return FALSE
    large, inf = cap, cap + 1
    zero = Eq(t, Const("0", BOOL))

    def at_least(a: int) -> Formula:
        return TRUE if a == 0 else BoolAtom("cj", t, a)

    pieces: list = []
    exact = sorted(v for v in allowed if v < cap)
    runs: list = []
    for v in exact:
        if runs and runs[-1][1] == v - 1:
            runs[-1][1] = v
        else:
            runs.append([v, v])
    tail_large = large in allowed
    tail_inf = inf in allowed
    # a run ending at cap-1 merges with LARGE/INF into an upward-closed piece
    if runs and runs[-1][1] == cap - 1 and tail_large:
        lo = runs.pop()[0]
        pieces.append(at_least(lo) if tail_inf else conj(at_least(lo), BoolAtom("fin", t)))
        tail_large = tail_inf = False
    for lo, hi in runs:
        if lo == hi == 0:
            pieces.append(zero)
        else:
            pieces.append(conj(at_least(lo), neg(BoolAtom("cj", t, hi + 1))))
    if tail_large and tail_inf:
        pieces.append(at_least(cap))
    elif tail_large:
        pieces.append(conj(at_least(cap), BoolAtom("fin", t)))
    elif tail_inf:
        pieces.append(neg(BoolAtom("fin", t)))
    return disj(*pieces)


def _cover_boxes(sat: set, allowed: set, dims: int, n_values: int) -> list:
    """Greedy cover of ``sat`` by boxes lying inside ``allowed``.

    Each uncovered point grows coordinate by coordinate into a maximal box;
    points are visited in sorted order so the cover is deterministic.
    """
    boxes: list = []
    covered: set = set()
    for point in sorted(sat):
        if point in covered:
            continue
        box = [frozenset([v]) for v in point]
        changed = True
        while changed:
            changed = False
            for i in range(dims):
                for v in range(n_values):
                    if v in box[i]:
                        continue
                    slab = box[:i] + [frozenset([v])] + box[i + 1:]
                    if all(c in allowed for c in itertools.product(*[sorted(s) for s in slab])):
                        box[i] = box[i] | {v}
                        changed = True
        boxes.append(tuple(box))
        covered.update(c for c in itertools.product(*[sorted(s) for s in box]) if c in sat)
    return boxes


def _table(f: Formula, leaves: list, cap: int) -> tuple:
    """Satisfying and impossible abstract configurations over the leaf minterms."""
    ev = _ConfigEvaluator(f)
    keys = tuple(leaves)
    patterns = list(itertools.product((True, False), repeat=len(leaves)))
    values = _value_list(cap)
    inf_index = cap + 1
    sat: set = set()
    impossible: set = set()
    for combo in itertools.product(range(len(values)), repeat=len(patterns)):
        if inf_index not in combo:
            impossible.add(combo)  # the whole algebra is infinite
            continue
        cells = _cells_from((pat, values[v]) for pat, v in zip(patterns, combo))
        if ev.evaluate(keys, cells):
            sat.add(combo)
    return sat, impossible, patterns


def _effective_cap(sat: set, impossible: set, cap: int) -> int:
    """Smallest cap c such that finite sizes >= c are indistinguishable."""
    best = cap
    for c in range(cap - 1, 0, -1):
        def squash(combo):
            return tuple(cap if c <= v < cap else v for v in combo)
        ok = True
        classes: dict = {}
        for combo in itertools.product(range(cap + 2), repeat=len(next(iter(sat | impossible), ()))):
            if combo in impossible:
                continue
            key = squash(combo)
            val = combo in sat
            if classes.setdefault(key, val) != val:
                ok = False
                break
        if not ok:
            break
        best = c
    return best


def ba_qe(f: Formula) -> Formula:
    """Equivalent quantifier-free formula in the same free leaves.

    The free leaves (Boolean variables and slot references) are tabulated
    over every abstract size assignment of their minterms; satisfying
    assignments are merged into boxes and rendered with Fin, C_j and
    equality atoms.  See the module docstring for why the tabulation cap is
    complete.
    """
    leaves = _leaves(f)
    m = _max_j(f)
    cap = m * (2 ** _qdepth(f))
    if not leaves:
        return TRUE if ba_decide(f) else FALSE
    sat, impossible, patterns = _table(f, leaves, cap)
    eff = _effective_cap(sat, impossible, cap) if sat else 1
    if eff != cap:
        sat, impossible, patterns = _table(f, leaves, eff)
        cap = eff
    if not sat:
        return FALSE
    boxes = _cover_boxes(sat, sat | impossible, len(patterns), cap + 2)
    terms = [_minterm_term(leaves, bits) for bits in patterns]
    disjuncts = []
    for b in boxes:
        disjuncts.append(conj(*[_constraint(t, s, cap) for t, s in zip(terms, b)]))
    return simplify(disj(*disjuncts))


# ---------------------------------------------------------------- simplification

def simplify(f: Formula) -> Formula:
    """Constant folding and flattening; leaves atoms untouched."""
    if isinstance(f, Not):
        return neg(simplify(f.body))
    if isinstance(f, And):
        parts = []
        for p in (simplify(q) for q in f.parts):
            if p not in parts:
                parts.append(p)
        return conj(*parts)
    if isinstance(f, Or):
        parts = []
        for p in (simplify(q) for q in f.parts):
            if p not in parts:
                parts.append(p)
        return disj(*parts)
    if isinstance(f, Implies):
        return disj(neg(simplify(f.left)), simplify(f.right))
    if isinstance(f, (Exists, Forall)):
        body = simplify(f.body)
        if isinstance(body, Truth):
            return body
        return type(f)(f.var, f.sort, body)
    return f
