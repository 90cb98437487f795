"""Reduction of product-language formulas to Boolean formulas over Boolean values.

A formula over a product of the fields Q_p (or the restricted product, the
finite adeles) is compiled to a :class:`ReducedForm`: a Boolean-sort formula
``theta`` whose leaves ``(bv i)`` stand for the Boolean values [[local_i]].

Quantifier step
---------------
Given ``(theta; psi_1..psi_m)`` for the body of ``exists x``, let I be the
indices of the locals mentioning x.  For each i in I a Boolean variable X_i
stands for [[psi_i(f)]] at the witness f.  A family X arises from some f
exactly when at every prime the membership pattern s of that prime in the
X_i is realised locally, which is

    minterm_s(X) <= [[exists x (AND_{i in s} psi_i AND_{i in I - s} not psi_i)]]

for every s.  So the new theta is ``exists X (AND_s constraint_s AND
theta[X])``.  Over the finite adeles the guard V(x) joins the list and
``fin(compl X_guard)`` is added, since a witness must be integral at all
but finitely many primes.  Boolean quantifiers are kept; the decision
procedure of :mod:`afv.boolean` handles them, and ``eliminate`` runs the
Boolean quantifier elimination when the free leaves are few enough.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .boolean import (
    Cofinite,
    Finite,
    Frontier,
    Kleene,
    PrimeSet,
    SearchBudgetExceeded,
    ba_eval,
    ba_qe,
    eval_cj,
    eval_fin,
    primes_below,
    ps_complement,
    ps_join,
    ps_meet,
    simplify,
)
from .local import UnsupportedFragment
from .localdec import Interval, decide_at, truth_interval
from .logic import (
    BOOL,
    FALSE,
    FIELD,
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
    all_names,
    conj,
    disj,
    free_vars,
    fresh_name,
    is_quantifier_free,
    map_terms,
    neg,
    render_formula,
    substitute,
)
from .restricted import FiniteAdele


class ReductionLimit(LogicError):
    """The reduction would exceed the configured size limits."""


ONE = Const("1", BOOL)
ZERO_B = Const("0", BOOL)


@dataclass(frozen=True)
class Structure:
    name: str
    guard: Formula | None  # one free field variable, or None for the full product

    def guard_for(self, var: str) -> Formula | None:
        if self.guard is None:
            return None
        (gv,) = free_vars(self.guard)
        return substitute(self.guard, {gv.name: Var(var, FIELD)})


ADELES = Structure("adeles", Atom("V", (Var("x", FIELD),)))
FULL_PRODUCT = Structure("full", None)
STRUCTURES = {"adeles": ADELES, "full": FULL_PRODUCT}


@dataclass(frozen=True)
class ReducedForm:
    theta: Formula
    locals: tuple

    def __post_init__(self) -> None:
        for i in _slots(self.theta):
            if i >= len(self.locals):
                raise ValueError(f"slot {i} has no local formula")

    def lines(self) -> list:
        out = [f"theta: {render_formula(self.theta)}", f"locals: {len(self.locals)}"]
        out.extend(f"local {i}: {render_formula(f)}" for i, f in enumerate(self.locals))
        return out

    def render(self) -> str:
        return "\n".join(self.lines())


@dataclass(frozen=True)
class Limits:
    max_depth: int = 4  # nested field quantifiers
    max_split: int = 10  # locals mentioning one quantified variable


# ---------------------------------------------------------------- term helpers

def _term_sort(t: Term) -> str:
    if isinstance(t, (BoolRef, BoolValueOf)):
        return BOOL
    return t.sort


def _map_term(t: Term, fn) -> Term:
    t2 = fn(t)
    if t2 is not t:
        return t2
    if isinstance(t, App):
        return App(t.fn, tuple(_map_term(a, fn) for a in t.args), t.sort)
    return t


def _map_leaves(f: Formula, fn) -> Formula:
    return map_terms(f, lambda t: _map_term(t, fn))


def _slots(f: Formula) -> set:
    found: set = set()

    def visit(t: Term) -> Term:
        if isinstance(t, BoolRef):
            found.add(t.index)
        return t

    _map_leaves(f, visit)
    return found


def _remap_slots(f: Formula, mapping: Mapping) -> Formula:
    def fn(t: Term) -> Term:
        if isinstance(t, BoolRef):
            return mapping[t.index]
        return t

    return _map_leaves(f, fn)


def _shift(f: Formula, offset: int) -> Formula:
    return _remap_slots(f, {i: BoolRef(i + offset) for i in _slots(f)}) if offset else f


def _mentions(f: Formula, name: str) -> bool:
    return any(v.name == name for v in free_vars(f))


def _dedupe(theta: Formula, locals_: list) -> tuple:
    index: dict = {}
    new_locals: list = []
    mapping: dict = {}
    for i, loc in enumerate(locals_):
        if loc not in index:
            index[loc] = len(new_locals)
            new_locals.append(loc)
        mapping[i] = BoolRef(index[loc])
    used = _slots(theta)
    theta = _remap_slots(theta, {i: mapping[i] for i in used})
    # drop locals the theta no longer refers to
    live = sorted(_slots(theta))
    compact = {i: BoolRef(k) for k, i in enumerate(live)}
    return _remap_slots(theta, compact), [new_locals[i] for i in live]


# ---------------------------------------------------------------- reduction

class _Reducer:
    def __init__(self, structure: Structure, limits: Limits, taken: set) -> None:
        self.structure = structure
        self.limits = limits
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        name = fresh_name(base, self.taken)
        self.taken.add(name)
        return name

    def reduce(self, f: Formula, depth: int = 0) -> tuple:
        if isinstance(f, Truth):
            return f, []
        if isinstance(f, Eq) and _term_sort(f.left) == FIELD:
            return Eq(BoolRef(0), ONE), [f]
        if isinstance(f, Atom) and f.rel in ("V", "pow"):
            return Eq(BoolRef(0), ONE), [f]
        if isinstance(f, And) and f.parts and all(_is_local_atom(p) for p in f.parts):
            return Eq(BoolRef(0), ONE), [f]
        if isinstance(f, (Eq, BoolAtom)) or (isinstance(f, Atom) and f.rel == "<="):
            return self._boolean_atom(f)
        if isinstance(f, Not):
            theta, locs = self.reduce(f.body, depth)
            return Not(theta), locs
        if isinstance(f, (And, Or)):
            parts = list(f.parts)
            if isinstance(f, And):
                parts = _group_local_atoms(parts)
            thetas, locs = [], []
            for part in parts:
                t, l = self.reduce(part, depth)
                thetas.append(_shift(t, len(locs)))
                locs.extend(l)
            return type(f)(tuple(thetas)), locs
        if isinstance(f, Implies):
            return self.reduce(Or((Not(f.left), f.right)), depth)
        if isinstance(f, (Exists, Forall)) and f.sort == BOOL:
            theta, locs = self.reduce(f.body, depth)
            return type(f)(f.var, BOOL, theta), locs
        if isinstance(f, Forall) and f.sort == FIELD:
            return self.reduce(Not(Exists(f.var, FIELD, Not(f.body))), depth)
        if isinstance(f, Exists) and f.sort == FIELD:
            return self._exists(f, depth)
        if isinstance(f, (Exists, Forall)):
            raise LogicError(f"unsupported quantified sort {f.sort!r}")
        raise LogicError(f"not a product-language formula: {render_formula(f)}")

    def _boolean_atom(self, f: Formula) -> tuple:
        locs: list = []

        def fn(t: Term) -> Term:
            if isinstance(t, BoolValueOf):
                locs.append(t.formula)
                return BoolRef(len(locs) - 1)
            if isinstance(t, BoolRef):
                raise LogicError("slot references are not allowed in input formulas")
            return t

        return _map_leaves(f, fn), locs

    def _exists(self, f: Exists, depth: int) -> tuple:
        if depth + 1 > self.limits.max_depth:
            raise ReductionLimit(f"more than {self.limits.max_depth} nested field quantifiers")
        theta, locs = self.reduce(f.body, depth + 1)
        theta, locs = _dedupe(theta, locs)
        guard = self.structure.guard_for(f.var)
        guard_index = None
        if guard is not None:
            if guard in locs:
                guard_index = locs.index(guard)
            else:
                guard_index = len(locs)
                locs = locs + [guard]
        split = [i for i, loc in enumerate(locs) if _mentions(loc, f.var)]
        if len(split) > self.limits.max_split:
            raise ReductionLimit(f"{len(split)} locals mention {f.var}; the limit is {self.limits.max_split}")
        if not split:
            return theta, locs
        keep = [i for i in range(len(locs)) if i not in split]
        names = [self.fresh(f"X{f.var}") for _ in split]
        xvars = [Var(n, BOOL) for n in names]
        new_locals = [locs[i] for i in keep]
        mapping: dict = {i: BoolRef(k) for k, i in enumerate(keep)}
        mapping.update({i: xv for i, xv in zip(split, xvars)})
        constraints = []
        for bits in itertools.product((True, False), repeat=len(split)):
            lits = [locs[i] if b else neg(locs[i]) for i, b in zip(split, bits)]
            phi_s = Exists(f.var, FIELD, conj(*lits))
            if phi_s in new_locals:
                slot = new_locals.index(phi_s)
            else:
                slot = len(new_locals)
                new_locals.append(phi_s)
            constraints.append(Atom("<=", (_minterm(xvars, bits), BoolRef(slot))))
        body = [*constraints]
        if guard_index is not None:
            body.append(BoolAtom("fin", App("compl", (mapping[guard_index],), BOOL)))
        body.append(_remap_slots(theta, mapping))
        out: Formula = And(tuple(body))
        for n in reversed(names):
            out = Exists(n, BOOL, out)
        return out, new_locals


def _is_local_atom(f: Formula) -> bool:
    if isinstance(f, Eq):
        return _term_sort(f.left) == FIELD
    return isinstance(f, Atom) and f.rel in ("V", "pow")


def _group_local_atoms(parts: list) -> list:
    """Merge the ring atoms of a conjunction into one local formula.

    A conjunction of ring atoms holds in the product exactly when the local
    conjunction holds at every prime, so it needs one local, not one per atom.
    """
    flat: list = []
    for part in parts:
        flat.extend(part.parts if isinstance(part, And) else [part])
    atoms = [p for p in flat if _is_local_atom(p)]
    if len(atoms) < 2:
        return flat
    rest = [p for p in flat if not _is_local_atom(p)]
    return [And(tuple(atoms))] + rest


def _minterm(xvars: list, bits: tuple) -> Term:
    parts = [x if b else App("compl", (x,), BOOL) for x, b in zip(xvars, bits)]
    t = parts[0]
    for p in parts[1:]:
        t = App("meet", (t, p), BOOL)
    return t


def fv_reduce(phi: Formula, structure: Structure = ADELES, limits: Limits = Limits()) -> ReducedForm:
    """Compile a product-language formula to theta over Boolean values of locals."""
    reducer = _Reducer(structure, limits, all_names(phi))
    theta, locs = reducer.reduce(phi)
    theta, locs = _dedupe(theta, locs)
    return ReducedForm(theta, tuple(locs))


def eliminate(r: ReducedForm, max_leaves: int = 3) -> ReducedForm:
    """Remove Boolean quantifiers from theta when it has at most ``max_leaves`` free leaves."""
    from .boolean import _leaves

    if is_quantifier_free(r.theta):
        return r
    if len(_leaves(r.theta)) > max_leaves:
        raise ReductionLimit(f"theta has {len(_leaves(r.theta))} free leaves; the limit is {max_leaves}")
    theta = ba_qe(r.theta)
    return ReducedForm(*_dedupe(theta, list(r.locals)))


# ---------------------------------------------------------------- evaluation

@dataclass
class Decision:
    value: Kleene
    intervals: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    note: str = ""

    def lines(self) -> list:
        out = [f"result: {self.value.name.lower()}"]
        for i, iv in enumerate(self.intervals):
            if iv.exact:
                out.append(f"slot {i}: {iv.lower!r}")
            else:
                out.append(f"slot {i}: between {iv.lower!r} and {iv.upper!r}")
        for rep in self.reports:
            out.extend(rep.lines())
        if self.note:
            out.append(f"note: {self.note}")
        return out


def _polarity(theta: Formula) -> dict:
    """Slot -> set of signs: +1 where enlarging the slot can only help."""
    signs: dict = {}

    def term(t: Term, s: int) -> None:
        if isinstance(t, BoolRef):
            signs.setdefault(t.index, set()).add(s)
        elif isinstance(t, App):
            flip = -1 if t.fn == "compl" else 1
            for a in t.args:
                term(a, s * flip)

    def walk(f: Formula, s: int) -> None:
        if isinstance(f, Not):
            walk(f.body, -s)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p, s)
        elif isinstance(f, Implies):
            walk(f.left, -s)
            walk(f.right, s)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, s)
        elif isinstance(f, BoolAtom):
            term(f.arg, -s if f.kind == "fin" else s)
        elif isinstance(f, Atom) and f.rel == "<=":
            term(f.args[0], -s)
            term(f.args[1], s)
        elif isinstance(f, Eq):
            for side in (f.left, f.right):
                term(side, s)
                term(side, -s)

    walk(theta, 1)
    return signs


def decide_theta(theta: Formula, intervals: list, extra_env: Mapping | None = None) -> Decision:
    """Decide theta when each slot's Boolean value is only known up to an interval."""
    signs = _polarity(theta)
    pess, opt = dict(extra_env or {}), dict(extra_env or {})
    for i, iv in enumerate(intervals):
        s = signs.get(i, set())
        if iv.exact or not s:
            pess[i] = opt[i] = iv.lower
        elif s == {1}:
            pess[i], opt[i] = iv.lower, iv.upper
        elif s == {-1}:
            pess[i], opt[i] = iv.upper, iv.lower
        else:
            return Decision(Kleene.INDETERMINATE, intervals,
                            note=f"slot {i} is inexact and occurs with both polarities")
    reports: list = []
    try:
        return _decide_envs(theta, pess, opt, intervals, reports)
    except SearchBudgetExceeded as exc:
        return Decision(Kleene.INDETERMINATE, intervals, reports, note=str(exc))


def _decide_envs(theta: Formula, pess: dict, opt: dict, intervals: list, reports: list) -> Decision:
    low = ba_eval(theta, pess, reports)
    if low is Kleene.TRUE:
        return Decision(Kleene.TRUE, intervals)
    if pess == opt:
        return Decision(low, intervals, reports)
    high = ba_eval(theta, opt, reports)
    if high is Kleene.FALSE:
        return Decision(Kleene.FALSE, intervals)
    return Decision(Kleene.INDETERMINATE, intervals, reports)


def decide_sentence(phi: Formula, structure: Structure = ADELES, limits: Limits = Limits()) -> Decision:
    if free_vars(phi):
        raise LogicError("decide_sentence needs a sentence")
    r = fv_reduce(phi, structure, limits)
    try:
        intervals = [truth_interval(loc) for loc in r.locals]
    except UnsupportedFragment as exc:
        return Decision(Kleene.INDETERMINATE, note=str(exc))
    return decide_theta(r.theta, intervals)


def _split_args(args: Mapping) -> tuple:
    values, exceptions, booleans = {}, {}, {}
    for name, a in args.items():
        if isinstance(a, FiniteAdele):
            values[name] = a.default
            exceptions[name] = dict(a.exceptions)
        elif isinstance(a, PrimeSet):
            booleans[name] = a
        else:
            raise TypeError(f"argument {name!r} must be a FiniteAdele or a prime set")
    return values, exceptions, booleans


def eval_reduced(r: ReducedForm, args: Mapping) -> Decision:
    """Truth of the reduced formula at adele (and prime set) arguments."""
    values, exceptions, booleans = _split_args(args)
    for loc in r.locals:
        missing = {v.name for v in free_vars(loc)} - set(values)
        if missing:
            raise LogicError(f"no argument for {sorted(missing)}")
    try:
        intervals = [truth_interval(loc, values, exceptions) for loc in r.locals]
    except UnsupportedFragment as exc:
        return Decision(Kleene.INDETERMINATE, note=str(exc))
    return decide_theta(r.theta, intervals, booleans)


def eval_formula(phi: Formula, args: Mapping, structure: Structure = ADELES) -> Decision:
    return eval_reduced(fv_reduce(phi, structure), args)


# ---------------------------------------------------------------- localisation to one stalk

class FrontierParameter(LogicError):
    """A parameter Boolean value is not classified as finite or cofinite."""


def _term_split(t: Term, off: list, local: list):
    """(prime set off the stalk, local formula at the stalk) of a Boolean term."""
    if isinstance(t, BoolRef):
        return off[t.index], local[t.index]
    if isinstance(t, Const):
        return (Cofinite(()), TRUE) if t.name == "1" else (Finite(()), FALSE)
    if isinstance(t, App):
        parts = [_term_split(a, off, local) for a in t.args]
        if t.fn == "compl":
            s, f = parts[0]
            return ps_complement(s), neg(f)
        (s1, f1), (s2, f2) = parts
        if t.fn == "meet":
            return ps_meet(s1, s2), conj(f1, f2)
        if t.fn == "join":
            return ps_join(s1, s2), disj(f1, f2)
    raise LogicError(f"cannot localise Boolean term {t!r}")


def _as_bool(k: Kleene) -> bool:
    if k is Kleene.INDETERMINATE:
        raise FrontierParameter("a parameter Boolean value is not classified")
    return k is Kleene.TRUE


def _iff(a: Formula, b: Formula) -> Formula:
    return disj(conj(a, b), conj(neg(a), neg(b)))


def _localise(f: Formula, off: list, local: list) -> Formula:
    if isinstance(f, Truth):
        return f
    if isinstance(f, Not):
        return neg(_localise(f.body, off, local))
    if isinstance(f, And):
        return conj(*[_localise(p, off, local) for p in f.parts])
    if isinstance(f, Or):
        return disj(*[_localise(p, off, local) for p in f.parts])
    if isinstance(f, Implies):
        return disj(neg(_localise(f.left, off, local)), _localise(f.right, off, local))
    if isinstance(f, BoolAtom):
        s, lf = _term_split(f.arg, off, local)
        if f.kind == "fin":
            # one prime more or less never changes finiteness
            return TRUE if _as_bool(eval_fin(s)) else FALSE
        if _as_bool(eval_cj(f.j, s)):
            return TRUE
        if f.j == 1 or _as_bool(eval_cj(f.j - 1, s)):
            return lf
        return FALSE
    if isinstance(f, Eq):
        s1, f1 = _term_split(f.left, off, local)
        s2, f2 = _term_split(f.right, off, local)
        same = _is_empty(ps_join(ps_meet(s1, ps_complement(s2)), ps_meet(s2, ps_complement(s1))))
        return _iff(f1, f2) if same else FALSE
    if isinstance(f, Atom) and f.rel == "<=":
        s1, f1 = _term_split(f.args[0], off, local)
        s2, f2 = _term_split(f.args[1], off, local)
        inside = _is_empty(ps_meet(s1, ps_complement(s2)))
        return disj(neg(f1), f2) if inside else FALSE
    raise LogicError(f"localize needs a quantifier-free theta: {render_formula(f)}")


def _is_empty(d: PrimeSet) -> bool:
    if isinstance(d, Frontier):
        raise FrontierParameter("a parameter Boolean value is not classified")
    return isinstance(d, Finite) and not d.primes


def _rational_const(q: Fraction) -> Const:
    return Const(str(q), FIELD)


def _stalk_data(r: ReducedForm, p: int, params: Mapping | None) -> tuple:
    params = dict(params or {})
    values, exceptions, _ = _split_args(params)
    tuple_vars = sorted({v.name for loc in r.locals for v in free_vars(loc)} - set(values))
    zero_values = {**values, **{x: Fraction(0) for x in tuple_vars}}
    off, local = [], []
    for loc in r.locals:
        iv = truth_interval(loc, zero_values, exceptions)
        if not iv.exact or isinstance(iv.lower, Frontier):
            raise FrontierParameter(f"Boolean value of {render_formula(loc)} is not classified")
        off.append(ps_meet(iv.lower, Cofinite((p,))))
        at_p = {name: _rational_const(Fraction(exceptions.get(name, {}).get(p, values[name])))
                for name in values}
        local.append(substitute(loc, at_p))
    return off, local


def localize_rules(r: ReducedForm, p: int, params: Mapping | None = None) -> Formula:
    """Localise a quantifier-free theta atom by atom.

    Fin atoms fold to constants; C_j(t) becomes C_j(Z_t) or (C_{j-1}(Z_t)
    and the local formula of t), where Z_t is the Boolean value at the
    zero tuple with p removed.
    """
    if not is_quantifier_free(r.theta):
        raise LogicError("localize_rules needs a quantifier-free theta")
    off, local = _stalk_data(r, p, params)
    return simplify(_localise(r.theta, off, local))


def localize(r: ReducedForm, p: int, params: Mapping | None = None) -> Formula:
    """The trace of the defined set on the stalk at p, as a formula of Q_p.

    Free variables of the locals that are not parameters range over the
    stalk, so they are zero away from p and the Boolean value of local i at
    such a point is Z_i plus p exactly when local i holds at p.  Theta is
    decided for each pattern of local truth values at p and the true
    patterns are collected into a formula.  Parameter values are
    substituted at p as rational constants.
    """
    from sympy import symbols
    from sympy.logic import SOPform

    off, local = _stalk_data(r, p, params)
    used = sorted(_slots(r.theta))
    true_rows = []
    for bits in itertools.product((0, 1), repeat=len(used)):
        env = {i: off[i] for i in range(len(off))}
        for i, b in zip(used, bits):
            if b:
                env[i] = ps_join(off[i], Finite((p,)))
        k = ba_eval(r.theta, env)
        if k is Kleene.INDETERMINATE:
            raise FrontierParameter("theta is undetermined at the stalk")
        if k is Kleene.TRUE:
            true_rows.append(list(bits))
    if not used:
        return TRUE if true_rows else FALSE
    syms = symbols(f"s0:{len(used)}")
    return simplify(_from_sympy(SOPform(syms, true_rows), dict(zip(syms, [local[i] for i in used]))))


def _from_sympy(expr, atoms: Mapping) -> Formula:
    import sympy.logic.boolalg as bl

    if expr is bl.true:
        return TRUE
    if expr is bl.false:
        return FALSE
    if expr in atoms:
        return atoms[expr]
    if isinstance(expr, bl.Not):
        return neg(_from_sympy(expr.args[0], atoms))
    parts = [_from_sympy(a, atoms) for a in sorted(expr.args, key=str)]
    if isinstance(expr, bl.And):
        return conj(*parts)
    if isinstance(expr, bl.Or):
        return disj(*parts)
    raise LogicError(f"unexpected Boolean expression {expr}")


def stalk_holds(f: Formula, p: int, point: Mapping) -> Kleene:
    """Truth of a localised formula at a point of Q_p."""
    return decide_at(f, p, point)


__all__ = [
    "ADELES", "Decision", "FULL_PRODUCT", "FrontierParameter", "Limits", "ReducedForm",
    "ReductionLimit", "STRUCTURES", "Structure", "decide_sentence", "decide_theta", "eliminate",
    "eval_formula", "eval_reduced", "fv_reduce", "localize", "localize_rules", "stalk_holds",
]
