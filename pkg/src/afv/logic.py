"""Many-sorted first-order syntax: terms, formulas, signatures, s-expression I/O.

Every other module builds on the node classes defined here.  Nodes are frozen
dataclasses, so structural equality and hashing come for free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union


class LogicError(Exception):
    """Base class for syntax-layer errors."""


class ParseError(LogicError):
    def __init__(self, message: str, position: int, expected: str | None = None):
        self.position = position
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at position {position}{detail}")


class SortError(LogicError):
    def __init__(self, term: str, expected: str | None, found: str | None):
        self.term = term
        self.expected = expected
        self.found = found
        super().__init__(f"sort error: {term} expected {expected}, found {found}")


class UnknownSymbol(LogicError):
    pass


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class Const:
    name: str
    sort: str


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple
    sort: str


@dataclass(frozen=True)
class BoolRef:
    """Placeholder for the Boolean value of the index-th local formula."""

    index: int
    sort: str = "bool"


@dataclass(frozen=True)
class BoolValueOf:
    """The Boolean value [[phi]] of a local formula, as a term of sort bool."""

    formula: "Formula"
    sort: str = "bool"


Term = Union[Var, Const, App, BoolRef, BoolValueOf]


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple
    index: int | None = None  # exponent k for power predicates


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    sort: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    sort: str
    body: "Formula"


@dataclass(frozen=True)
class BoolAtom:
    """Fin(t) when kind == 'fin', C_j(t) when kind == 'cj'."""

    kind: str
    arg: Term
    j: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fin", "cj"):
            raise ValueError(f"unknown Boolean condition {self.kind!r}")
        if self.kind == "cj" and (self.j is None or self.j < 1):
            raise ValueError("C_j needs j >= 1")


Formula = Union[Truth, Atom, Eq, Not, And, Or, Implies, Exists, Forall, BoolAtom]
TRUE = Truth(True)
FALSE = Truth(False)

BOOL = "bool"


# ---------------------------------------------------------------- signatures

@dataclass(frozen=True)
class Signature:
    """Sorts plus relation, function and constant symbols.

    Functions are keyed by (name, arity) and constants by (name, sort), so a
    two-sorted signature may share the symbols 0 and 1 between sorts.
    ``numeral_sorts`` lists the sorts in which integer and fraction literals
    are accepted as constants.
    """

    sorts: tuple
    relations: tuple = ()
    functions: tuple = ()
    constants: tuple = ()
    numeral_sorts: tuple = ()
    indexed_relations: tuple = ()  # (name, arg sort) taking a leading integer, e.g. pow

    def __post_init__(self) -> None:
        declared = set(self.sorts)
        if len(declared) != len(self.sorts):
            raise ValueError("duplicate sort")
        seen_rel: set = set()
        for name, arg_sorts in self.relations:
            if name in seen_rel:
                raise ValueError(f"duplicate relation {name}")
            seen_rel.add(name)
            _check_sorts(arg_sorts, declared, name)
        for name, arg_sort in self.indexed_relations:
            if name in seen_rel:
                raise ValueError(f"duplicate relation {name}")
            seen_rel.add(name)
            _check_sorts((arg_sort,), declared, name)
        seen_fn: set = set()
        for name, arg_sorts, result in self.functions:
            key = (name, len(arg_sorts))
            if key in seen_fn:
                raise ValueError(f"duplicate function {name}/{len(arg_sorts)}")
            seen_fn.add(key)
            _check_sorts(tuple(arg_sorts) + (result,), declared, name)
        seen_c: set = set()
        for name, sort in self.constants:
            if (name, sort) in seen_c:
                raise ValueError(f"duplicate constant {name}:{sort}")
            seen_c.add((name, sort))
            _check_sorts((sort,), declared, name)
        _check_sorts(self.numeral_sorts, declared, "numerals")

    def relation(self, name: str) -> tuple | None:
        for n, s in self.relations:
            if n == name:
                return tuple(s)
        return None

    def indexed_relation(self, name: str) -> str | None:
        for n, s in self.indexed_relations:
            if n == name:
                return s
        return None

    def function(self, name: str, arity: int) -> tuple | None:
        for n, args, res in self.functions:
            if n == name and len(args) == arity:
                return tuple(args), res
        return None

    def has_function_name(self, name: str) -> bool:
        return any(n == name for n, _, _ in self.functions)

    def constant_sorts(self, name: str) -> list:
        return [s for n, s in self.constants if n == name]

    def merge(self, other: "Signature") -> "Signature":
        def union(a: tuple, b: tuple) -> tuple:
            return tuple(a) + tuple(x for x in b if x not in a)

        return Signature(
            sorts=union(self.sorts, other.sorts),
            relations=union(self.relations, other.relations),
            functions=union(self.functions, other.functions),
            constants=union(self.constants, other.constants),
            numeral_sorts=union(self.numeral_sorts, other.numeral_sorts),
            indexed_relations=union(self.indexed_relations, other.indexed_relations),
        )


def _check_sorts(sorts: Iterable[str], declared: set, owner: str) -> None:
    for s in sorts:
        if s not in declared:
            raise ValueError(f"{owner} uses undeclared sort {s}")


FIELD = "field"
HYPER = "hyper"
MONOID = "monoid"

RING_SIGNATURE = Signature(
    sorts=(FIELD,),
    relations=(("V", (FIELD,)),),
    functions=(
        ("+", (FIELD, FIELD), FIELD),
        ("-", (FIELD, FIELD), FIELD),
        ("-", (FIELD,), FIELD),
        ("*", (FIELD, FIELD), FIELD),
    ),
    constants=(("0", FIELD), ("1", FIELD)),
    numeral_sorts=(FIELD,),
    indexed_relations=(("pow", FIELD),),
)

BOOLEAN_SIGNATURE = Signature(
    sorts=(BOOL,),
    relations=(("<=", (BOOL, BOOL)),),
    functions=(
        ("meet", (BOOL, BOOL), BOOL),
        ("join", (BOOL, BOOL), BOOL),
        ("compl", (BOOL,), BOOL),
    ),
    constants=(("0", BOOL), ("1", BOOL)),
)

HYPERRING_SIGNATURE = Signature(
    sorts=(HYPER,),
    relations=(("Sigma", (HYPER, HYPER, HYPER)), ("Pdelta", (HYPER,))),
    functions=(("*", (HYPER, HYPER), HYPER), ("inv", (HYPER,), HYPER)),
    constants=(("0", HYPER), ("1", HYPER), ("-1", HYPER)),
)

MONOID_SIGNATURE = Signature(
    sorts=(MONOID,),
    relations=(("<=", (MONOID, MONOID)),),
    functions=(
        ("+", (MONOID, MONOID), MONOID),
        ("meet", (MONOID, MONOID), MONOID),
        ("join", (MONOID, MONOID), MONOID),
    ),
    constants=(("0", MONOID), ("inf", MONOID)),
    numeral_sorts=(MONOID,),
)

# ring sort plus the Boolean sort: the two-sorted language of a restricted product
PRODUCT_SIGNATURE = RING_SIGNATURE.merge(BOOLEAN_SIGNATURE)

SIGNATURES = {
    "ring": RING_SIGNATURE,
    "boolean": BOOLEAN_SIGNATURE,
    "hyperring": HYPERRING_SIGNATURE,
    "monoid": MONOID_SIGNATURE,
    "product": PRODUCT_SIGNATURE,
}


# ---------------------------------------------------------------- s-expressions

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


@dataclass
class _Node:
    value: object  # str for atoms, list for lists
    pos: int


def _read_sexprs(text: str) -> list:
    stack: list = [[]]
    starts: list = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            break
        if m.group(1):
            starts.append(m.start(1))
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", m.start(2))
            items = stack.pop()
            stack[-1].append(_Node(items, starts.pop()))
        else:
            stack[-1].append(_Node(m.group(3), m.start(3)))
        i = m.end()
    if len(stack) != 1:
        raise ParseError("unexpected end of input", n, "')'")
    return stack[0]


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")
_NUMERAL = re.compile(r"-?\d+(/\d+)?$")
_FORMULA_HEADS = {"and", "or", "not", "implies", "=", "exists", "forall", "fin", "cj", "true", "false"}


class _Parser:
    def __init__(self, sig: Signature, free_sorts: Mapping[str, str] | None):
        self.sig = sig
        self.free: dict = dict(free_sorts or {})

    # formulas
    def formula(self, node: _Node, bound: dict) -> Formula:
        if isinstance(node.value, str):
            tok = node.value
            if tok == "true":
                return TRUE
            if tok == "false":
                return FALSE
            rel = self.sig.relation(tok)
            if rel == ():
                return Atom(tok, ())
            raise ParseError(f"expected a formula, found {tok!r}", node.pos, "'('")
        items = node.value
        if not items:
            raise ParseError("empty list", node.pos, "formula head")
        head = items[0]
        if not isinstance(head.value, str):
            raise ParseError("list head must be a symbol", head.pos, "formula head")
        h = head.value
        args = items[1:]
        if h in ("and", "or"):
            parts = tuple(self.formula(a, bound) for a in args)
            return And(parts) if h == "and" else Or(parts)
        if h == "not":
            self._arity(node, args, 1)
            return Not(self.formula(args[0], bound))
        if h == "implies":
            self._arity(node, args, 2)
            return Implies(self.formula(args[0], bound), self.formula(args[1], bound))
        if h in ("exists", "forall"):
            self._arity(node, args, 2)
            name, sort = self._binder(args[0])
            inner = dict(bound)
            inner[name] = sort
            body = self.formula(args[1], inner)
            return Exists(name, sort, body) if h == "exists" else Forall(name, sort, body)
        if h == "=":
            self._arity(node, args, 2)
            sort = self._guess(args[0], bound) or self._guess(args[1], bound)
            if sort is None:
                sort = self.sig.sorts[0]
            left = self.term(args[0], sort, bound)
            right = self.term(args[1], sort, bound)
            return Eq(left, right)
        if h == "fin":
            self._need_bool(node)
            self._arity(node, args, 1)
            return BoolAtom("fin", self.term(args[0], BOOL, bound))
        if h == "cj":
            self._need_bool(node)
            self._arity(node, args, 2)
            j = self._int(args[0])
            if j < 1:
                raise ParseError("C_j needs j >= 1", args[0].pos, "positive integer")
            return BoolAtom("cj", self.term(args[1], BOOL, bound), j)
        arg_sort = self.sig.indexed_relation(h)
        if arg_sort is not None:
            self._arity(node, args, 2)
            k = self._int(args[0])
            if k < 1:
                raise ParseError("power index must be positive", args[0].pos, "positive integer")
            return Atom(h, (self.term(args[1], arg_sort, bound),), k)
        rel = self.sig.relation(h)
        if rel is not None:
            self._arity(node, args, len(rel))
            return Atom(h, tuple(self.term(a, s, bound) for a, s in zip(args, rel)))
        if self.sig.has_function_name(h) or h in ("bv", "bv-of"):
            raise SortError(_show(node), "formula", "term")
        raise UnknownSymbol(f"unknown relation {h!r} at position {head.pos}")

    # terms
    def term(self, node: _Node, expected: str, bound: dict) -> Term:
        if isinstance(node.value, str):
            tok = node.value
            if tok in bound:
                return self._check(Var(tok, bound[tok]), expected, tok)
            csorts = self.sig.constant_sorts(tok)
            if csorts:
                if expected in csorts:
                    return Const(tok, expected)
                raise SortError(tok, expected, csorts[0])
            if _NUMERAL.match(tok):
                if expected in self.sig.numeral_sorts:
                    return Const(_canonical_numeral(tok), expected)
                raise SortError(tok, expected, "numeral")
            if not _IDENT.match(tok) or tok in _FORMULA_HEADS:
                raise ParseError(f"bad identifier {tok!r}", node.pos, "variable")
            if tok in self.free:
                return self._check(Var(tok, self.free[tok]), expected, tok)
            self.free[tok] = expected
            return Var(tok, expected)
        items = node.value
        if not items or not isinstance(items[0].value, str):
            raise ParseError("expected a term", node.pos, "function symbol")
        h = items[0].value
        args = items[1:]
        if h == "bv":
            self._need_bool(node)
            self._arity(node, args, 1)
            return self._check(BoolRef(self._int(args[0])), expected, _show(node))
        if h == "bv-of":
            self._need_bool(node)
            self._arity(node, args, 1)
            return self._check(BoolValueOf(self.formula(args[0], bound)), expected, _show(node))
        if h in _FORMULA_HEADS or self.sig.relation(h) is not None or self.sig.indexed_relation(h):
            raise SortError(_show(node), expected, "formula")
        sig_fn = self.sig.function(h, len(args))
        if sig_fn is None:
            if self.sig.has_function_name(h):
                raise ParseError(f"wrong arity for {h!r}", node.pos)
            raise UnknownSymbol(f"unknown function {h!r} at position {items[0].pos}")
        arg_sorts, result = sig_fn
        if result != expected:
            raise SortError(_show(node), expected, result)
        return App(h, tuple(self.term(a, s, bound) for a, s in zip(args, arg_sorts)), result)

    def _guess(self, node: _Node, bound: dict) -> str | None:
        if isinstance(node.value, str):
            tok = node.value
            if tok in bound:
                return bound[tok]
            cs = self.sig.constant_sorts(tok)
            if len(cs) == 1:
                return cs[0]
            if cs:
                return None
            if _NUMERAL.match(tok) and len(self.sig.numeral_sorts) == 1:
                return self.sig.numeral_sorts[0]
            return self.free.get(tok)
        items = node.value
        if not items or not isinstance(items[0].value, str):
            return None
        h = items[0].value
        if h in ("bv", "bv-of"):
            return BOOL
        fn = self.sig.function(h, len(items) - 1)
        return fn[1] if fn else None

    def _check(self, t: Term, expected: str, shown: str) -> Term:
        if t.sort != expected:
            raise SortError(shown, expected, t.sort)
        return t

    def _binder(self, node: _Node) -> tuple:
        if isinstance(node.value, str) or len(node.value) != 2:
            raise ParseError("malformed binder", node.pos, "'(' var sort ')'")
        name, sort = node.value
        if not isinstance(name.value, str) or not isinstance(sort.value, str):
            raise ParseError("malformed binder", node.pos, "'(' var sort ')'")
        if not _IDENT.match(name.value):
            raise ParseError(f"bad variable name {name.value!r}", name.pos, "identifier")
        if sort.value not in self.sig.sorts:
            raise UnknownSymbol(f"unknown sort {sort.value!r} at position {sort.pos}")
        return name.value, sort.value

    def _int(self, node: _Node) -> int:
        if not isinstance(node.value, str) or not re.match(r"-?\d+$", node.value):
            raise ParseError("expected an integer", node.pos, "integer")
        return int(node.value)

    def _arity(self, node: _Node, args: list, n: int) -> None:
        if len(args) != n:
            raise ParseError(f"expected {n} argument(s), found {len(args)}", node.pos)

    def _need_bool(self, node: _Node) -> None:
        if BOOL not in self.sig.sorts:
            raise SortError(_show(node), "formula over a signature with sort bool", "Boolean construct")


def _canonical_numeral(tok: str) -> str:
    return str(Fraction(tok))


def _show(node: _Node) -> str:
    if isinstance(node.value, str):
        return node.value
    return "(" + " ".join(_show(c) for c in node.value) + ")"


def parse_formula(text: str, sig: Signature = PRODUCT_SIGNATURE,
                  free_sorts: Mapping[str, str] | None = None) -> Formula:
    """Parse one s-expression formula and check it against ``sig``.

    Free variables take the sort their first occurrence demands; ``free_sorts``
    pins them in advance.  Bound variables that reuse the name of a free
    variable are renamed apart.
    """
    nodes = _read_sexprs(text)
    if not nodes:
        raise ParseError("empty input", 0, "formula")
    if len(nodes) > 1:
        raise ParseError("trailing input after formula", nodes[1].pos, "end of input")
    parser = _Parser(sig, free_sorts)
    f = parser.formula(nodes[0], {})
    return _rename_shadowing(f)


def parse_term(text: str, sort: str, sig: Signature = PRODUCT_SIGNATURE,
               free_sorts: Mapping[str, str] | None = None) -> Term:
    nodes = _read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one term", 0, "term")
    return _Parser(sig, free_sorts).term(nodes[0], sort, {})


# ---------------------------------------------------------------- rendering

def render_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, App):
        return "(" + " ".join([t.fn] + [render_term(a) for a in t.args]) + ")"
    if isinstance(t, BoolRef):
        return f"(bv {t.index})"
    if isinstance(t, BoolValueOf):
        return f"(bv-of {render_formula(t.formula)})"
    raise TypeError(f"not a term: {t!r}")


def render_formula(f: Formula) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        if f.index is not None:
            return f"({f.rel} {f.index} {' '.join(render_term(a) for a in f.args)})"
        if not f.args:
            return f.rel
        return "(" + " ".join([f.rel] + [render_term(a) for a in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {render_term(f.left)} {render_term(f.right)})"
    if isinstance(f, Not):
        return f"(not {render_formula(f.body)})"
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        return "(" + " ".join([head] + [render_formula(p) for p in f.parts]) + ")"
    if isinstance(f, Implies):
        return f"(implies {render_formula(f.left)} {render_formula(f.right)})"
    if isinstance(f, (Exists, Forall)):
        head = "exists" if isinstance(f, Exists) else "forall"
        return f"({head} ({f.var} {f.sort}) {render_formula(f.body)})"
    if isinstance(f, BoolAtom):
        if f.kind == "fin":
            return f"(fin {render_term(f.arg)})"
        return f"(cj {f.j} {render_term(f.arg)})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- traversal

def term_vars(t: Term) -> set:
    if isinstance(t, Var):
        return {t}
    if isinstance(t, App):
        out: set = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    if isinstance(t, BoolValueOf):
        return free_vars(t.formula)
    return set()


def free_vars(f: Formula) -> set:
    """Free variables of ``f`` as a set of Var nodes."""
    if isinstance(f, Truth):
        return set()
    if isinstance(f, Atom):
        out: set = set()
        for a in f.args:
            out |= term_vars(a)
        return out
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        out = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    if isinstance(f, Implies):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {Var(f.var, f.sort)}
    if isinstance(f, BoolAtom):
        return term_vars(f.arg)
    raise TypeError(f"not a formula: {f!r}")


def all_names(f: Formula) -> set:
    """Every variable name occurring in ``f``, free or bound."""
    names = {v.name for v in free_vars(f)}
    for sub in subformulas(f):
        if isinstance(sub, (Exists, Forall)):
            names.add(sub.var)
    return names


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from subformulas(p)
    elif isinstance(f, Implies):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from subformulas(f.body)
    else:
        for t in _terms_of(f):
            yield from _formulas_in_term(t)


def _terms_of(f: Formula) -> tuple:
    if isinstance(f, Atom):
        return f.args
    if isinstance(f, Eq):
        return (f.left, f.right)
    if isinstance(f, BoolAtom):
        return (f.arg,)
    return ()


def _formulas_in_term(t: Term) -> Iterator[Formula]:
    if isinstance(t, BoolValueOf):
        yield from subformulas(t.formula)
    elif isinstance(t, App):
        for a in t.args:
            yield from _formulas_in_term(a)


def quantifier_count(f: Formula) -> int:
    return sum(1 for s in subformulas(f) if isinstance(s, (Exists, Forall)))


def is_quantifier_free(f: Formula) -> bool:
    return quantifier_count(f) == 0


def fresh_name(base: str, taken: set) -> str:
    name = base + "'"
    while name in taken:
        name += "'"
    return name


def map_terms(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    """Rebuild ``f`` applying ``fn`` to each maximal term (binders untouched)."""
    if isinstance(f, Truth):
        return f
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(fn(a) for a in f.args), f.index)
    if isinstance(f, Eq):
        return Eq(fn(f.left), fn(f.right))
    if isinstance(f, BoolAtom):
        return BoolAtom(f.kind, fn(f.arg), f.j)
    if isinstance(f, Not):
        return Not(map_terms(f.body, fn))
    if isinstance(f, And):
        return And(tuple(map_terms(p, fn) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(map_terms(p, fn) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Exists):
        return Exists(f.var, f.sort, map_terms(f.body, fn))
    if isinstance(f, Forall):
        return Forall(f.var, f.sort, map_terms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- substitution

def _subst_term(t: Term, bindings: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        if t.name in bindings:
            new = bindings[t.name]
            if new.sort != t.sort:
                raise SortError(render_term(new), t.sort, new.sort)
            return new
        return t
    if isinstance(t, App):
        return App(t.fn, tuple(_subst_term(a, bindings) for a in t.args), t.sort)
    if isinstance(t, BoolValueOf):
        return BoolValueOf(substitute(t.formula, bindings))
    return t


def substitute(f: Formula, bindings: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of terms for free variables (by name)."""
    bindings = dict(bindings)
    if not bindings:
        return f
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in bindings.items() if k != f.var}
        if not inner:
            return f
        incoming: set = set()
        for k, v in inner.items():
            if any(x.name == k for x in free_vars(f.body)):
                incoming |= {x.name for x in term_vars(v)}
        var = f.var
        body = f.body
        if var in incoming:
            taken = incoming | all_names(f.body) | set(inner)
            var = fresh_name(f.var, taken)
            body = substitute(body, {f.var: Var(var, f.sort)})
        body = substitute(body, inner)
        return type(f)(var, f.sort, body)
    if isinstance(f, Not):
        return Not(substitute(f.body, bindings))
    if isinstance(f, And):
        return And(tuple(substitute(p, bindings) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, bindings) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.left, bindings), substitute(f.right, bindings))
    return map_terms(f, lambda t: _subst_term(t, bindings))


def _rename_shadowing(f: Formula) -> Formula:
    reserved = {v.name for v in free_vars(f)}
    if not reserved:
        return f

    def walk(g: Formula) -> Formula:
        if isinstance(g, (Exists, Forall)):
            body = g.body
            var = g.var
            if var in reserved:
                var = fresh_name(var, reserved | all_names(body))
                body = substitute(body, {g.var: Var(var, g.sort)})
            return type(g)(var, g.sort, walk(body))
        if isinstance(g, Not):
            return Not(walk(g.body))
        if isinstance(g, And):
            return And(tuple(walk(p) for p in g.parts))
        if isinstance(g, Or):
            return Or(tuple(walk(p) for p in g.parts))
        if isinstance(g, Implies):
            return Implies(walk(g.left), walk(g.right))
        return g

    return walk(f)


# ---------------------------------------------------------------- relativization

def relativize(f: Formula, guards: Mapping[str, Formula]) -> Formula:
    """Bound every quantifier of sort s by the one-variable guard formula for s.

    Exists(y, s, B) becomes Exists(y, s, And(G(y), B)) and Forall(y, s, B)
    becomes Forall(y, s, Implies(G(y), B)).  The guard's single free variable
    is replaced by the bound variable.
    """
    if isinstance(f, (Exists, Forall)):
        if f.sort not in guards:
            raise LogicError(f"no guard for quantified sort {f.sort!r}")
        guard = guards[f.sort]
        gvars = free_vars(guard)
        if len(gvars) != 1:
            raise LogicError("guard must have exactly one free variable")
        (gv,) = gvars
        if gv.sort != f.sort:
            raise SortError(render_formula(guard), f.sort, gv.sort)
        g = substitute(guard, {gv.name: Var(f.var, f.sort)})
        body = relativize(f.body, guards)
        if isinstance(f, Exists):
            return Exists(f.var, f.sort, And((g, body)))
        return Forall(f.var, f.sort, Implies(g, body))
    if isinstance(f, Not):
        return Not(relativize(f.body, guards))
    if isinstance(f, And):
        return And(tuple(relativize(p, guards) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(relativize(p, guards) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(relativize(f.left, guards), relativize(f.right, guards))
    return f


# ---------------------------------------------------------------- small builders

def conj(*parts: Formula) -> Formula:
    flat: list = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        elif p == TRUE:
            continue
        elif p == FALSE:
            return FALSE
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        elif p == FALSE:
            continue
        elif p == TRUE:
            return TRUE
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, Truth):
        return Truth(not f.value)
    if isinstance(f, Not):
        return f.body
    return Not(f)
