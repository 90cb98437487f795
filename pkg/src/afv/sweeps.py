"""Verification sweeps over parameter grids.

Each sweep runs independent cells (one per prime/level pair, or one per
corpus line) and folds them into a :class:`SuiteReport` in sorted cell
order, so the report does not depend on how cells were scheduled.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterable

from .boolean import Kleene
from .hyper import (
    Ball,
    HyperCtx,
    Single,
    Sphere,
    ZERO,
    all_classes,
    check_hypergroup_axioms,
    contains,
    hyper_add,
    in_Pdelta,
    project,
    random_representative,
    render_class,
    search_margin,
    sphere_members,
    theta_kras,
    tplus_kras,
)
from .local import tplus
from .logic import SIGNATURES, LogicError, parse_formula
from .monoid import check_bbeta, check_stalk_lemma
from .report import SuiteReport
from .residue import check_ring_iso

SUITES = ("hyperaxioms", "theta-kras", "residue-iso", "stalk-lemma", "bbeta", "fv-corpus", "lift-image")

DEFAULT_GRIDS = {
    "hyperaxioms": ((2, 3, 5), (1, 2), 4),
    "theta-kras": ((2, 3, 5, 7), (1, 2, 3), 6),
    "residue-iso": ((2, 3, 5), (1, 2, 3), 3),
    "lift-image": ((2, 3, 5, 7), (1, 2, 3), None),
}


@dataclass(frozen=True)
class Cell:
    label: str
    checks: int
    failures: tuple

    def line(self) -> str:
        return f"cell: {self.label} checks={self.checks} failures={len(self.failures)}"


def _run_cells(fn: Callable, args: list, jobs: int) -> list:
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


def _fold(rep: SuiteReport, cells: Iterable[Cell]) -> SuiteReport:
    for c in cells:
        rep.notes.append(c.line())
        rep.checks += c.checks
        rep.failures.extend(f"[{c.label}] {f}" for f in c.failures)
    return rep


def _cell_seed(seed: int, *parts) -> random.Random:
    return random.Random("-".join(str(x) for x in (seed, *parts)))


# ---------------------------------------------------------------- hyperfield axioms and closed forms

def closed_form_oracle(ctx: HyperCtx, gamma_bound: int, samples: int = 200, height: int = 1000,
                       seed: int = 0) -> Cell:
    """Compare hyper_add with sums of random representatives.

    Every sampled class must lie in the closed form.  Singles and spheres
    are finite, and the samples must hit every member; for a ball the
    samples must reach its lowest valuation.
    """
    rng = _cell_seed(seed, "closed", ctx.p, ctx.level)
    universe = all_classes(ctx, gamma_bound)
    failures, checks = [], 0
    for i, x in enumerate(universe):
        for y in universe[i:]:
            form = hyper_add(x, y, ctx)
            seen = set()
            for _ in range(samples):
                a = random_representative(x, ctx, rng, height)
                b = random_representative(y, ctx, rng, height)
                seen.add(project(a + b, ctx))
            checks += 1
            stray = [z for z in seen if not contains(form, z, ctx)]
            if stray:
                failures.append(f"{render_class(x)} + {render_class(y)}: sampled {render_class(stray[0])} "
                                f"outside {form!r}")
                continue
            if isinstance(form, Single):
                missed = {form.x} - seen
            elif isinstance(form, Sphere):
                missed = set(sphere_members(form, ctx)) - seen
            else:
                assert isinstance(form, Ball)
                floor = [z for z in seen if z is not ZERO and z.gamma == form.gamma_min]
                missed = set() if floor else {f"valuation {form.gamma_min}"}
            if missed:
                failures.append(f"{render_class(x)} + {render_class(y)}: samples never reached "
                                f"{sorted(map(str, missed))[0]} of {form!r}")
    return Cell(f"closed-forms p={ctx.p} level={ctx.level} gamma_bound={gamma_bound} samples={samples}",
                checks, tuple(failures))


def _hyper_cell(arg) -> list:
    p, level, gamma_bound, samples, seed, oracle_samples = arg
    ctx = HyperCtx(p, level)
    ax = check_hypergroup_axioms(ctx, gamma_bound, samples, seed)
    cells = [Cell(f"axioms p={p} level={level} gamma_bound={gamma_bound} samples={samples}",
                  sum(ax.checks.values()), tuple(ax.failures))]
    if oracle_samples:
        cells.append(closed_form_oracle(ctx, gamma_bound, oracle_samples, seed=seed))
    return cells


def check_hyperaxioms(primes, levels, gamma_bound: int = 4, samples: int = 1000, seed: int = 0,
                      oracle_samples: int = 200, jobs: int = 1) -> SuiteReport:
    rep = SuiteReport("hyperaxioms", {"primes": _csv(primes), "levels": _csv(levels),
                                      "gamma_bound": gamma_bound, "samples": samples,
                                      "oracle_samples": oracle_samples, "seed": seed})
    args = [(p, lv, gamma_bound, samples, seed, oracle_samples) for p in primes for lv in levels]
    return _fold(rep, [c for cells in _run_cells(_hyper_cell, args, jobs) for c in cells])


# ---------------------------------------------------------------- the valuation-ring definition

def _theta_cell(arg) -> Cell:
    p, level, gamma_bound = arg
    ctx = HyperCtx(p, level)
    failures, checks = [], 0
    for x in all_classes(ctx, gamma_bound):
        checks += 1
        if theta_kras(x, ctx) != in_Pdelta(x):
            failures.append(f"{render_class(x)}: theta={theta_kras(x, ctx)} nonnegative={in_Pdelta(x)}")
    return Cell(f"p={p} level={level} gamma_bound={gamma_bound}", checks, tuple(failures))


def check_theta(primes, levels, gamma_bound: int = 6, jobs: int = 1) -> SuiteReport:
    rep = SuiteReport("theta-kras", {"primes": _csv(primes), "levels": _csv(levels),
                                     "gamma_bound": gamma_bound, "margin": search_margin()})
    args = [(p, lv, gamma_bound) for p in primes for lv in levels]
    return _fold(rep, _run_cells(_theta_cell, args, jobs))


def random_rational(rng: random.Random, height: int = 1000) -> Fraction:
    while True:
        q = Fraction(rng.randint(-height, height), rng.randint(1, height))
        if q:
            return q


def _lift_cell(arg) -> Cell:
    p, level, samples, seed = arg
    ctx = HyperCtx(p, level)
    rng = _cell_seed(seed, "lift", p, level)
    failures = []
    for _ in range(samples):
        x = random_rational(rng)
        field_side, hyper_side = tplus(x, p), tplus_kras(project(x, ctx), ctx)
        if field_side != hyper_side:
            failures.append(f"{x}: field={field_side} hyperfield={hyper_side}")
    return Cell(f"p={p} level={level} samples={samples}", samples, tuple(failures))


def check_lift_image(primes, levels, samples: int = 500, seed: int = 0, jobs: int = 1) -> SuiteReport:
    """T+ in the field against T+ of the projected class."""
    rep = SuiteReport("lift-image", {"primes": _csv(primes), "levels": _csv(levels),
                                     "samples": samples, "seed": seed, "margin": search_margin()})
    args = [(p, lv, samples, seed) for p in primes for lv in levels]
    return _fold(rep, _run_cells(_lift_cell, args, jobs))


# ---------------------------------------------------------------- residue ring

def _iso_cell(arg) -> Cell:
    p, level, gamma_bound = arg
    r = check_ring_iso(HyperCtx(p, level), max(gamma_bound, level))
    return Cell(f"p={p} level={level} gamma_bound={max(gamma_bound, level)} classes={r.classes}",
                r.checks, tuple(r.failures))


def check_residue(primes, levels, gamma_bound: int = 3, jobs: int = 1) -> SuiteReport:
    rep = SuiteReport("residue-iso", {"primes": _csv(primes), "levels": _csv(levels),
                                      "gamma_bound": gamma_bound})
    args = [(p, lv, gamma_bound) for p in primes for lv in levels]
    return _fold(rep, _run_cells(_iso_cell, args, jobs))


# ---------------------------------------------------------------- FV corpus

@dataclass(frozen=True)
class CorpusEntry:
    expected: bool
    structure: str
    text: str


def load_corpus(text: str | None = None) -> list:
    if text is None:
        text = resources.files("afv").joinpath("data/corpus.txt").read_text()
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        expected, structure, sentence = line.split(None, 2)
        if expected not in ("true", "false"):
            raise LogicError(f"corpus line {n}: expected value must be true or false")
        out.append(CorpusEntry(expected == "true", structure, sentence))
    return out


def _corpus_cell(arg) -> Cell:
    from .fv import STRUCTURES, decide_sentence
    from .search import bounded_eval, candidate_pool

    index, entry, bound, height = arg
    phi = parse_formula(entry.text, SIGNATURES["product"])
    decision = decide_sentence(phi, STRUCTURES[entry.structure])
    want = Kleene.of(entry.expected)
    failures = []
    if decision.value is not want:
        failures.append(f"decided {decision.value.name.lower()}, expected {want.name.lower()}: {entry.text}")
    searched = "-"
    if entry.structure == "adeles":
        found = bounded_eval(phi, {}, candidate_pool(bound, height))
        searched = found.name.lower()
        if found is not Kleene.INDETERMINATE and found is not decision.value:
            failures.append(f"bounded search found {searched}, decision {decision.value.name.lower()}")
    label = (f"#{index:02d} {entry.structure} expected={want.name.lower()} "
             f"decided={decision.value.name.lower()} search={searched}")
    return Cell(label, 2, tuple(failures))


def check_corpus(bound: int = 13, height: int = 10, jobs: int = 1, text: str | None = None) -> SuiteReport:
    entries = load_corpus(text)
    rep = SuiteReport("fv-corpus", {"sentences": len(entries), "search_primes": f"<={bound}",
                                    "search_height": height})
    args = [(i, e, bound, height) for i, e in enumerate(entries, 1)]
    return _fold(rep, _run_cells(_corpus_cell, args, jobs))


def _csv(xs) -> str:
    return ",".join(str(x) for x in xs)


def run_suite(name: str, primes=None, levels=None, gamma_bound=None, samples=None, seed=None,
              bound=None, jobs: int = 1, height: int = 10) -> SuiteReport:
    """Dispatch used by the command line; ``None`` selects the default grid."""
    if name not in SUITES:
        raise KeyError(name)
    grid = DEFAULT_GRIDS.get(name)
    if grid:
        primes = primes or grid[0]
        levels = levels or grid[1]
        gamma_bound = gamma_bound if gamma_bound is not None else grid[2]
    seed = 0 if seed is None else seed
    if name == "hyperaxioms":
        return check_hyperaxioms(primes, levels, gamma_bound, samples or 1000, seed, jobs=jobs)
    if name == "theta-kras":
        return check_theta(primes, levels, gamma_bound, jobs=jobs)
    if name == "lift-image":
        return check_lift_image(primes, levels, samples or 500, seed, jobs=jobs)
    if name == "residue-iso":
        return check_residue(primes, levels, gamma_bound, jobs=jobs)
    if name == "stalk-lemma":
        return check_stalk_lemma(samples or 1000, seed)
    if name == "bbeta":
        return check_bbeta()
    return check_corpus(bound or 13, height, jobs=jobs)


__all__ = [
    "Cell", "CorpusEntry", "DEFAULT_GRIDS", "SUITES", "check_corpus", "check_hyperaxioms",
    "check_lift_image", "check_residue", "check_theta", "closed_form_oracle", "load_corpus",
    "random_rational", "run_suite",
]
