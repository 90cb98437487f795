"""Command-line entry point: ``afv reduce|decide|eval|localize|check``.

Exit codes: 0 true or pass, 1 false or fail, 2 input error, 3 indeterminate,
4 unsupported fragment.  Reports are ``key: value`` lines and contain no
timings, so equal arguments give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .boolean import (
    DECLARED_COFINITE,
    DECLARED_FINITE,
    Frontier,
    Kleene,
    classify,
    prime_set_from_json,
)
from .hyper import search_margin
from .local import UnsupportedFragment
from .localdec import Interval, truth_interval
from .logic import SIGNATURES, LogicError, free_vars, parse_formula, render_formula

EXIT_TRUE, EXIT_FALSE, EXIT_INPUT, EXIT_INDETERMINATE, EXIT_UNSUPPORTED = 0, 1, 2, 3, 4
_KLEENE_EXIT = {Kleene.TRUE: EXIT_TRUE, Kleene.FALSE: EXIT_FALSE, Kleene.INDETERMINATE: EXIT_INDETERMINATE}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    fmt: str = "text"

    def header(self) -> list:
        out = [f"command: {self.command}"]
        out.extend(f"input: {p}" for p in self.inputs)
        out.extend(f"{k}: {v}" for k, v in sorted(self.params.items()) if v is not None)
        out.append(f"margin: {search_margin()}")
        return out


def _read(path: str) -> str:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    if not text.strip():
        raise InputError(f"{path} is empty")
    return text


def _formula(path: str, free_sorts: dict | None = None):
    text = _read(path)
    try:
        return parse_formula(text, SIGNATURES["product"], free_sorts=free_sorts or {})
    except LogicError as exc:
        raise InputError(f"{path}: {exc}")


def _load_args(path: str | None) -> tuple:
    """Adele and prime-set literals by variable name, plus slot classifications."""
    if path is None:
        return {}, {}
    from .restricted import adele_from_json

    try:
        raw = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})")
    if not isinstance(raw, dict):
        raise InputError(f"{path}: expected a JSON object of named arguments")
    classes = raw.pop("_classify", {})
    args = {}
    try:
        for name, lit in raw.items():
            if isinstance(lit, dict) and "default" in lit:
                args[name] = adele_from_json(lit)
            else:
                args[name] = prime_set_from_json(lit)
        marks = {int(k): {"finite": DECLARED_FINITE, "cofinite": DECLARED_COFINITE}[v]
                 for k, v in classes.items()}
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{path}: bad argument literal ({exc})")
    return args, marks


def _free_sorts(args: dict) -> dict:
    from .restricted import FiniteAdele

    return {name: ("field" if isinstance(a, FiniteAdele) else "bool") for name, a in args.items()}


def _emit(cfg: RunConfig, lines: list) -> None:
    out = (cfg.header() if cfg.fmt == "structured" else []) + lines
    sys.stdout.write("\n".join(out) + "\n")


# ---------------------------------------------------------------- commands

def cmd_reduce(ns, cfg: RunConfig) -> int:
    from .fv import STRUCTURES, fv_reduce

    phi = _formula(ns.formula)
    r = fv_reduce(phi, STRUCTURES[ns.structure])
    _emit(cfg, r.lines())
    return EXIT_TRUE


def cmd_decide(ns, cfg: RunConfig) -> int:
    from .fv import STRUCTURES, decide_sentence

    phi = _formula(ns.formula)
    if free_vars(phi):
        raise InputError(f"{ns.formula}: not a sentence (free {sorted(v.name for v in free_vars(phi))})")
    d = decide_sentence(phi, STRUCTURES[ns.structure])
    _emit(cfg, d.lines())
    return _KLEENE_EXIT[d.value]


def _classified(iv: Interval, mark: str | None) -> Interval:
    if mark is None:
        return iv
    return Interval(classify(iv.lower, mark), classify(iv.upper, mark))


def cmd_eval(ns, cfg: RunConfig) -> int:
    from .fv import STRUCTURES, _split_args, decide_theta, fv_reduce

    args, marks = _load_args(ns.args)
    phi = _formula(ns.formula, _free_sorts(args))
    missing = {v.name for v in free_vars(phi)} - set(args)
    if missing:
        raise InputError(f"no argument for {sorted(missing)}")
    r = fv_reduce(phi, STRUCTURES[ns.structure])
    values, exceptions, booleans = _split_args(args)
    intervals = [_classified(truth_interval(loc, values, exceptions), marks.get(i))
                 for i, loc in enumerate(r.locals)]
    d = decide_theta(r.theta, intervals, booleans)
    lines = d.lines()
    if d.value is Kleene.INDETERMINATE:
        open_slots = [i for i, iv in enumerate(intervals) if isinstance(iv.lower, Frontier)]
        if open_slots:
            lines.append("requires: a finite/cofinite classification for slot(s) "
                         + ",".join(map(str, open_slots))
                         + ' (args key "_classify", e.g. {"0": "finite"})')
    _emit(cfg, lines)
    return _KLEENE_EXIT[d.value]


def cmd_localize(ns, cfg: RunConfig) -> int:
    from .fv import STRUCTURES, FrontierParameter, fv_reduce, localize

    params, _ = _load_args(ns.args)
    phi = _formula(ns.formula, _free_sorts(params))
    r = fv_reduce(phi, STRUCTURES[ns.structure])
    try:
        out = localize(r, ns.p, params)
    except FrontierParameter as exc:
        _emit(cfg, ["result: indeterminate", f"note: {exc}"])
        return EXIT_INDETERMINATE
    free = sorted(v.name for v in free_vars(phi) if v.name not in params)
    _emit(cfg, [f"p: {ns.p}", f"stalk_variables: {','.join(free) or '-'}",
                f"localized: {render_formula(out)}"])
    return EXIT_TRUE


def cmd_check(ns, cfg: RunConfig) -> int:
    from .sweeps import SUITES, run_suite

    if ns.suite not in SUITES:
        raise InputError(f"unknown suite {ns.suite!r}; choose from {', '.join(SUITES)}")
    for name in ("gamma_bound", "samples", "bound"):
        v = getattr(ns, name)
        if v is not None and v < 1:
            raise InputError(f"--{name.replace('_', '-')} must be positive")
    rep = run_suite(ns.suite, ns.p, ns.level, ns.gamma_bound, ns.samples, ns.seed, ns.bound, ns.jobs)
    _emit(cfg, rep.lines())
    return EXIT_TRUE if rep.passed else EXIT_FALSE


# ---------------------------------------------------------------- argument parsing

def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return values


def _prime(text: str) -> int:
    from .boolean import is_prime

    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a prime, got {text!r}")
    if not is_prime(p):
        raise argparse.ArgumentTypeError(f"{p} is not prime")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afv", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("text", "structured"), default="text",
                        help="structured prepends the run configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_structure(p):
        p.add_argument("--structure", choices=("adeles", "full"), default="adeles")
        p.add_argument("--format", choices=("text", "structured"), default=argparse.SUPPRESS)

    p = sub.add_parser("reduce", help="print theta and the numbered local formulas")
    p.add_argument("formula")
    with_structure(p)
    p = sub.add_parser("decide", help="decide a sentence")
    p.add_argument("formula")
    with_structure(p)
    p = sub.add_parser("eval", help="evaluate a formula at adele arguments")
    p.add_argument("formula")
    p.add_argument("args", help="JSON object of adele / prime-set literals")
    with_structure(p)
    p = sub.add_parser("localize", help="trace of a defined set on one stalk")
    p.add_argument("formula")
    p.add_argument("--p", type=_prime, required=True)
    p.add_argument("--args", help="JSON object of parameter literals")
    with_structure(p)
    p = sub.add_parser("check", help="run a verification sweep")
    p.add_argument("suite")
    p.add_argument("--p", type=_int_list)
    p.add_argument("--level", type=_int_list)
    p.add_argument("--gamma-bound", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound", type=int, help="largest exception prime for bounded search")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across cells")
    p.add_argument("--format", choices=("text", "structured"), default=argparse.SUPPRESS)
    return parser


COMMANDS = {"reduce": cmd_reduce, "decide": cmd_decide, "eval": cmd_eval,
            "localize": cmd_localize, "check": cmd_check}


def main(argv: list | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_TRUE
    inputs = [x for x in (getattr(ns, "formula", None), getattr(ns, "args", None)) if x]
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "formula", "args", "format", "suite")}
    params = {k: (",".join(map(str, v)) if isinstance(v, tuple) else v) for k, v in params.items()}
    cfg = RunConfig(ns.command, inputs, params, ns.format)
    try:
        return COMMANDS[ns.command](ns, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnsupportedFragment as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except LogicError as exc:
        # reduction limits and unsupported constructs surface here
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
