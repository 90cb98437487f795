"""Independent oracles and shared data sets for the test suite."""

import itertools
import random

from afv.boolean import Cofinite, Finite, Kleene, ba_eval, primes_below
from afv.logic import BOOL, And, Exists, Forall, Implies, Not, Or, free_vars

SMALL_PRIMES = primes_below(30)


def all_small_sets(primes=SMALL_PRIMES):
    out = []
    for r in range(len(primes) + 1):
        for s in itertools.combinations(primes, r):
            out += [Finite(s), Cofinite(s)]
    return out


def random_small_set(rng, primes=SMALL_PRIMES):
    s = [p for p in primes if rng.random() < 0.4]
    return Cofinite(s) if rng.random() < 0.5 else Finite(s)


def witness_eval(f, env, universe):
    """Bounded model check: Boolean quantifiers range over finite and cofinite
    subsets of ``universe``.  A found witness or counterexample is decisive,
    a miss gives INDETERMINATE."""
    if isinstance(f, (Exists, Forall)) and f.sort == BOOL:
        want = Kleene.TRUE if isinstance(f, Exists) else Kleene.FALSE
        for r in range(len(universe) + 1):
            for s in itertools.combinations(universe, r):
                for cand in (Finite(s), Cofinite(s)):
                    if witness_eval(f.body, {**env, f.var: cand}, universe) is want:
                        return want
        return Kleene.INDETERMINATE
    if isinstance(f, Not):
        return ~witness_eval(f.body, env, universe)
    if isinstance(f, And):
        out = Kleene.TRUE
        for q in f.parts:
            out = out & witness_eval(q, env, universe)
        return out
    if isinstance(f, Or):
        out = Kleene.FALSE
        for q in f.parts:
            out = out | witness_eval(q, env, universe)
        return out
    if isinstance(f, Implies):
        return ~witness_eval(f.left, env, universe) | witness_eval(f.right, env, universe)
    return ba_eval(f, env)


# Sentences with their truth value in the powerset algebra of an infinite set
# (Fin = finite subsets, C_j = at least j elements).  Some of them are false in
# the finite-cofinite algebra, so the witness oracle only confirms a subset.
BA_BENCHMARK = [
    ("(exists (x bool) (and (cj 3 x) (fin x)))", True),
    ("(forall (x bool) (implies (cj 1 x) (fin x)))", False),
    ("(exists (x bool) (and (fin x) (fin (compl x))))", False),
    ("(exists (x bool) (and (fin x) (cj 2 x)))", True),
    ("(forall (x bool) (or (fin x) (fin (compl x))))", False),
    ("(exists (x bool) (and (not (fin x)) (not (fin (compl x)))))", True),
    ("(forall (x bool) (implies (not (cj 1 x)) (= x 0)))", True),
    ("(exists (x bool) (exists (y bool) (and (= (meet x y) 0) (not (fin x)) (not (fin y)))))", True),
    ("(forall (x bool) (forall (y bool) (implies (and (fin x) (fin y)) (fin (join x y)))))", True),
    ("(exists (x bool) (and (cj 1 x) (not (cj 2 x)) (not (fin x))))", False),
    ("(forall (x bool) (implies (cj 2 x) (exists (y bool) (and (<= y x) (cj 1 y) (not (cj 2 y))))))", True),
    ("(forall (x bool) (implies (not (= x 0)) (exists (y bool) (and (<= y x) (not (= y x)) (not (= y 0))))))",
     False),
    ("(exists (x bool) (and (fin (compl x)) (cj 5 (compl x))))", True),
    ("(forall (x bool) (forall (y bool) (implies (and (<= x y) (fin y)) (fin x))))", True),
    ("(exists (x bool) (forall (y bool) (<= y x)))", True),
    ("(forall (x bool) (exists (y bool) (and (<= x y) (not (fin y)) (fin (meet y (compl x))))))", False),
]

# Formulas with free Boolean variables y (and z) for quantifier elimination.
QE_INPUTS = [
    "(exists (x bool) (and (fin x) (cj 2 x)))",
    "(exists (x bool) (and (<= x y) (cj 1 x) (fin x)))",
    "(forall (x bool) (implies (fin (meet x y)) (fin x)))",
    "(exists (x bool) (and (<= x y) (cj 2 x) (not (cj 3 x)) (fin (compl (join x y)))))",
    "(exists (x bool) (and (<= y x) (fin x) (not (= x y))))",
    "(forall (x bool) (implies (<= x y) (or (fin x) (cj 3 (meet y (compl x))))))",
    "(exists (x bool) (and (<= x y) (<= x z) (cj 2 x)))",
    "(exists (x bool) (and (= (meet x y) 0) (= (meet x z) 0) (not (fin x))))",
]


def qe_envs(names, rng=None, count=1500):
    """All single-variable environments over primes < 30, or a seeded sample of pairs."""
    if len(names) == 1:
        return [{names[0]: s} for s in all_small_sets()]
    rng = rng or random.Random(11)
    return [{n: random_small_set(rng) for n in names} for _ in range(count)]


def free_bool_names(f):
    return sorted(v.name for v in free_vars(f) if v.sort == BOOL)




# ---------------------------------------------------------------- stalk embedding

def _localize_cases():
    from fractions import Fraction as F

    from afv.restricted import FiniteAdele, diagonal

    return [
        ("(fin (bv-of (= x 0)))", {}),
        ("(cj 1 (bv-of (not (= x 0))))", {}),
        ("(cj 2 (bv-of (not (V x))))", {}),
        ("(= (bv-of (V (* a x))) 1)", {"a": diagonal(F(1, 2))}),
        ("(exists (y field) (= (* y y) x))", {}),
        ("(fin (bv-of (not (V (+ x a)))))", {"a": diagonal(F(1, 3))}),
        ("(cj 1 (meet (bv-of (V x)) (bv-of (not (= x a)))))", {"a": FiniteAdele(F(2), {5: F(0)})}),
        ("(exists (y field) (= (* x y) 1))", {}),
        ("(<= (bv-of (= x 0)) (bv-of (V (* x a))))", {"a": diagonal(F(1, 6))}),
        ("(exists (y field) (and (= (* y y) y) (= (* x y) x) (not (= y 0))))", {}),
        ("(cj 1 (bv-of (= (* x z) 1)))", {}),
    ]


LOCALIZE_CASES = _localize_cases()


def random_stalk_value(rng):
    from fractions import Fraction as F

    if rng.random() < 0.1:
        return F(0)
    return F(rng.randint(-40, 40) or 1, rng.randint(1, 40)) * F(rng.choice([1, 1, 2, 3, 5, 7])) ** rng.randint(-3, 3)


def stalk_variables(text):
    return ["x", "z"] if "z" in text else ["x"]
