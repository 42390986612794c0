"""Command-line driver: JSON inputs in, a JSON report on stdout, a summary on stderr.

Exit codes: 0 pass, 1 disagreement, 2 invalid input, 3 interpolation
failure, 4 precondition violated.
"""
from __future__ import annotations

import argparse
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .adapted import (
    SetupError,
    all_cases,
    adapted_basis,
    build_chart,
    check_adapted_basis,
    condition_A,
    diagram_of,
    recipe_value,
    setup_from_diagram,
    twist,
    verify_mainlemma,
)
from .exactlinalg import Matrix, NonPolynomialCount, is_prime
from .flagchi import BadPrime, WeightMismatch, delta_detail, verify_genform
from .freealg import FreeElement, parse_element, parse_fword
from .quiver import QuiverError, conjugate
from .serialize import (
    FormatError,
    dumps,
    fraction_str,
    load_json,
    matrix_rows,
    module_from_json,
    quiver_from_json,
    setup_from_json,
)
from .suite import genform_cases, random_conjugation, serre_cases, suite_modules

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_INTERP = 3
EXIT_PRECONDITION = 4

DESK_MAX_N = 5
DESK_MAX_DIM = 6
DEFAULT_BOUNDS = (4, DESK_MAX_DIM)

_INPUT_ERRORS = (FormatError, SetupError, QuiverError, WeightMismatch, BadPrime, ValueError, ZeroDivisionError)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    paths: dict = field(default_factory=dict)
    primes: list | None = None  # None means auto
    bounds: tuple = DEFAULT_BOUNDS
    seed: int = 0
    fmt: str = "json"


@dataclass
class Outcome:
    code: int
    report: dict
    summary: str


def parse_primes(text: str | None) -> list[int] | None:
    if text is None or text.strip() == "auto":
        return None
    try:
        ps = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise CliError(EXIT_INPUT, f"--primes must be 'auto' or a comma list of primes, got {text!r}") from None
    if not ps:
        raise CliError(EXIT_INPUT, "--primes is empty")
    if len(set(ps)) != len(ps):
        raise CliError(EXIT_INPUT, "--primes must be distinct")
    bad = [p for p in ps if not is_prime(p)]
    if bad:
        raise CliError(EXIT_INPUT, f"--primes contains non-primes {bad}")
    return ps


def parse_J(text: str | None) -> frozenset | None:
    if text is None:
        return None
    try:
        return frozenset(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError:
        raise CliError(EXIT_INPUT, f"--J must be a comma list of integers, got {text!r}") from None


def parse_bounds(text: str | None) -> tuple[int, int]:
    """``"N"`` or ``"N,D"``: max diagram size and max total module dimension."""
    if text is None:
        return DEFAULT_BOUNDS
    try:
        parts = [int(t) for t in text.split(",")]
    except ValueError:
        raise CliError(EXIT_INPUT, f"--bounds must be N or N,D, got {text!r}") from None
    if len(parts) == 1:
        parts.append(DESK_MAX_DIM)
    if len(parts) != 2 or min(parts) < 0:
        raise CliError(EXIT_INPUT, f"--bounds must be N or N,D with nonnegative entries, got {text!r}")
    n, d = parts
    if n > DESK_MAX_N or d > DESK_MAX_DIM:
        raise CliError(
            EXIT_INPUT,
            f"bounds ({n}, {d}) exceed the desk scale ({DESK_MAX_N}, {DESK_MAX_DIM}); "
            "the diagram count and flag counts grow super-exponentially, expect hours rather than minutes",
        )
    return n, d


def _curve(samples) -> list:
    return [[q, fraction_str(c)] for q, c in samples]


def _require(value, flag: str):
    if value is None:
        raise CliError(EXIT_INPUT, f"{flag} is required")
    return value


def _load_setup(path: str, J: frozenset | None):
    s = setup_from_json(load_json(path))
    return s.with_J(J) if J is not None else s


def _load_module(quiver_path: str, module_path: str):
    g = quiver_from_json(load_json(quiver_path))
    return module_from_json(load_json(module_path), g)


# commands


def cmd_eq4(setup_path: str, J: frozenset | None = None, primes: list | None = None) -> Outcome:
    s = _load_setup(setup_path, J)
    rep = verify_mainlemma(s, primes)
    vals = rep.values
    report = {
        "J": sorted(s.J),
        "values": vals,
        "pass": rep.passed,
        "primes": [q for q, _ in rep.side_f.curve.samples],
        "curve_F": _curve(rep.side_f.curve.samples),
        "curve_G": _curve(rep.side_g.curve.samples),
        "polynomial_F": str(rep.side_f.fitted),
        "polynomial_G": str(rep.side_g.fitted),
        "diagram": rep.diagram.to_dict(),
        "message": rep.message,
    }
    if rep.passed:
        report["value"] = rep.recipe
    summary = f"eq4 J={sorted(s.J)}: " + ", ".join(f"{k}={v}" for k, v in vals.items()) + f" -> {rep.message}"
    return Outcome(EXIT_PASS if rep.passed else EXIT_FAIL, report, summary)


def cmd_eq6(quiver_path: str, module_path: str, vertex: str, fword: str, primes: list | None = None) -> Outcome:
    m = _load_module(quiver_path, module_path)
    if vertex not in m.graph.vertices:
        raise CliError(EXIT_INPUT, f"unknown vertex {vertex!r}")
    u = parse_fword(fword)
    rep = verify_genform(m, vertex, u, primes)
    if not rep.precondition_ok:
        report = {"pass": False, "precondition": False, "message": rep.message}
        return Outcome(EXIT_PRECONDITION, report, f"eq6 {u}: {rep.message}")
    report = {
        "lhs": fraction_str(rep.lhs),
        "rhs": fraction_str(rep.rhs),
        "pass": rep.passed,
        "curve_lhs": _curve(rep.curve_lhs),
        "curve_rhs": _curve(rep.curve_rhs),
        "primes": rep.primes,
    }
    summary = f"eq6 {u}: lhs={report['lhs']} rhs={report['rhs']} -> {rep.message}"
    return Outcome(EXIT_PASS if rep.passed else EXIT_FAIL, report, summary)


def cmd_delta(quiver_path: str, module_path: str, word: str, primes: list | None = None) -> Outcome:
    m = _load_module(quiver_path, module_path)
    u = parse_element(word)
    res = delta_detail(m, u, primes)
    report = {
        "element": str(u),
        "value": fraction_str(res.value),
        "primes": res.primes,
        "curve": _curve(res.curve),
        "words": {
            ".".join(w) or "()": {"value": r.value, "polynomial": str(r.fitted)}
            for w, r in sorted(res.words.items(), key=lambda t: ".".join(t[0]))
        },
    }
    return Outcome(EXIT_PASS, report, f"delta({u}) = {report['value']}")


def cmd_diagram(setup_path: str, J: frozenset | None = None) -> Outcome:
    s = _load_setup(setup_path, J)
    d = diagram_of(s)
    t = twist(s)
    chart = build_chart(d, s.J) if len(s.J) == d.k else None
    report = {
        "diagram": d.to_dict(),
        "render": d.render(),
        "J": sorted(s.J),
        "twisted": {"diagram": diagram_of(t).to_dict(), "J": sorted(t.J)},
    }
    if chart is not None:
        report["condition_A"] = condition_A(d, s.J)
        report["recipe"] = recipe_value(d, s.J)
        report["chart"] = {"rows": list(chart.rows), "cols": list(chart.cols), "entries": chart.describe()}
    return Outcome(EXIT_PASS, report, d.render())


def cmd_adapted_basis(setup_path: str) -> Outcome:
    s = _load_setup(setup_path, None)
    basis = adapted_basis(s)
    check_adapted_basis(s, basis)
    d = diagram_of(s)
    rows = matrix_rows_of(s, basis)
    report = {"basis": rows, "diagram": d.to_dict()}
    text = "\n".join(f"v{p} = (" + ", ".join(map(str, r)) + ")" for p, r in enumerate(rows, start=1))
    return Outcome(EXIT_PASS, report, text)


def matrix_rows_of(s, basis) -> list:
    if not basis:
        return []
    return matrix_rows(Matrix.from_rows(s.field, [list(v) for v in basis], cols=s.n))


# sweep


def _eq4_case(case) -> dict:
    d, J = case
    label = f"n={d.n} cols={list(d.columns)} gray={sorted(d.gray)} J={sorted(J)}"
    try:
        rep = verify_mainlemma(setup_from_diagram(d, J))
        return {"case": label, "pass": rep.passed, "detail": rep.message, "values": rep.values}
    except (NonPolynomialCount, *_INPUT_ERRORS) as exc:
        return {"case": label, "pass": False, "detail": f"{type(exc).__name__}: {exc}"}


def _eq6_case(index: int) -> dict:
    c = genform_cases()[index]
    try:
        rep = verify_genform(c.module, c.vertex, c.fword)
        return {"case": c.name, "pass": rep.passed, "detail": rep.message}
    except (NonPolynomialCount, *_INPUT_ERRORS) as exc:
        return {"case": c.name, "pass": False, "detail": f"{type(exc).__name__}: {exc}"}


def _pool_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _section(results: list) -> dict:
    failed = [r for r in results if not r["pass"]]
    out = {"cases": len(results), "passed": len(results) - len(failed), "failed": len(failed)}
    if failed:
        out["first_failure"] = failed[0]
    return out


def _invariance_results(rng: random.Random, max_dim: int, trials: int) -> list:
    mods = [(n, m) for n, m in suite_modules() if sum(m.dims.values()) <= max_dim and m.dims]
    out = []
    for t in range(trials):
        name, m = mods[t % len(mods)]
        letters = [v for v, c in sorted(m.dimvec().items()) for _ in range(c)]
        rng.shuffle(letters)
        u = FreeElement.word(letters)
        before = delta_detail(m, u).value
        after = delta_detail(conjugate(m, random_conjugation(rng, m)), u).value
        out.append({"case": f"{name} : {'.'.join(letters)}", "pass": before == after, "detail": f"{before} vs {after}"})
    return out


def cmd_sweep(bounds: tuple[int, int] = DEFAULT_BOUNDS, seed: int = 0, workers: int | None = None) -> Outcome:
    max_n, max_dim = bounds
    workers = workers if workers is not None else min(4, os.cpu_count() or 1)
    eq4 = _pool_map(_eq4_case, list(all_cases(max_n)), workers)
    cases = genform_cases()
    idx = [k for k, c in enumerate(cases) if sum(c.module.dims.values()) <= max_dim]
    eq6 = _pool_map(_eq6_case, idx, workers)
    serre = []
    for c in serre_cases([(n, m) for n, m in suite_modules() if sum(m.dims.values()) <= max_dim]):
        v = delta_detail(c.module, c.element).value
        serre.append({"case": c.name, "pass": v == 0, "detail": fraction_str(v)})
    inv = _invariance_results(random.Random(seed), max_dim, 20)
    sections = {"eq4": _section(eq4), "eq6": _section(eq6), "serre": _section(serre), "invariance": _section(inv)}
    ok = all(s["failed"] == 0 for s in sections.values())
    report = {"bounds": {"max_n": max_n, "max_dim": max_dim}, "seed": seed, "sections": sections, "pass": ok}
    summary = "; ".join(f"{k}: {v['passed']}/{v['cases']}" for k, v in sections.items())
    return Outcome(EXIT_PASS if ok else EXIT_FAIL, report, f"sweep {summary} -> {'all pass' if ok else 'FAILURES'}")


# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preproj", description="Exact verification of flag-count identities.")
    ap.add_argument("command", choices=["eq4", "eq6", "delta", "diagram", "adapted-basis", "sweep"])
    ap.add_argument("--quiver")
    ap.add_argument("--module")
    ap.add_argument("--setup")
    ap.add_argument("--vertex")
    ap.add_argument("--fword", help='e.g. "1 | 2:1"')
    ap.add_argument("--word", help='e.g. "1 * 1.2 + -1 * 2.1"')
    ap.add_argument("--J", help="comma list overriding the setup's J")
    ap.add_argument("--primes", default="auto", help="'auto' or a comma list")
    ap.add_argument("--bounds", help=f"N or N,D (at most {DESK_MAX_N},{DESK_MAX_DIM})")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, help="sweep worker processes")
    ap.add_argument("--format", dest="fmt", choices=["json", "text"], default="json")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    paths = {k: getattr(args, k) for k in ("quiver", "module", "setup") if getattr(args, k) is not None}
    bounds = parse_bounds(args.bounds) if args.command == "sweep" else DEFAULT_BOUNDS
    return RunConfig(args.command, paths, parse_primes(args.primes), bounds, args.seed, args.fmt)


def run(args: argparse.Namespace) -> Outcome:
    cfg = config_from_args(args)
    J = parse_J(args.J)
    p = cfg.paths
    c = cfg.command
    if c == "eq4":
        return cmd_eq4(_require(p.get("setup"), "--setup"), J, cfg.primes)
    if c == "eq6":
        return cmd_eq6(
            _require(p.get("quiver"), "--quiver"),
            _require(p.get("module"), "--module"),
            _require(args.vertex, "--vertex"),
            _require(args.fword, "--fword"),
            cfg.primes,
        )
    if c == "delta":
        return cmd_delta(
            _require(p.get("quiver"), "--quiver"),
            _require(p.get("module"), "--module"),
            _require(args.word, "--word"),
            cfg.primes,
        )
    if c == "diagram":
        return cmd_diagram(_require(p.get("setup"), "--setup"), J)
    if c == "adapted-basis":
        return cmd_adapted_basis(_require(p.get("setup"), "--setup"))
    return cmd_sweep(cfg.bounds, cfg.seed, args.workers)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = run(args)
    except CliError as exc:
        out = Outcome(exc.code, {"error": str(exc), "pass": False}, f"error: {exc}")
    except NonPolynomialCount as exc:
        out = Outcome(EXIT_INTERP, {"error": str(exc), "pass": False}, f"interpolation failure: {exc}")
    except _INPUT_ERRORS as exc:
        out = Outcome(EXIT_INPUT, {"error": f"{type(exc).__name__}: {exc}", "pass": False}, f"invalid input: {exc}")
    out.report["exit"] = out.code
    if args.fmt == "json":
        print(dumps(out.report))
        print(out.summary, file=sys.stderr)
    else:
        print(out.summary)
    return out.code


if __name__ == "__main__":
    raise SystemExit(main())
