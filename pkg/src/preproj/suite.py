"""Fixture modules and case families shared by the tests and the sweep command."""
from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass

from .exactlinalg import QQ, Matrix, Subspace
from .flagchi import element_degree_bound, module_fwords
from .freealg import FreeElement, FWord, expand_fword, reflect_fword, serre_element
from .quiver import (
    LambdaModule,
    QuiverGraph,
    build_double_quiver,
    cartan_matrix,
    direct_sum,
    dynkin_a,
    edge_extension,
    module,
    phi_stats,
    sigma_star,
    simple,
    star_module,
    star_quiver,
)

MAX_DEGREE = 6


def a2_extension() -> LambdaModule:
    """Dimension (1, 1) on A2 with the arrow 1 -> 2 acting by 1."""
    return edge_extension(dynkin_a(2), "a1")


def suite_modules() -> list[tuple[str, LambdaModule]]:
    a2, a3, st = dynkin_a(2), dynkin_a(3), star_quiver(3)
    out = [
        ("A2:S1", simple(a2, "1")),
        ("A2:S2", simple(a2, "2")),
        ("A2:1->2", edge_extension(a2, "a1")),
        ("A2:2->1", edge_extension(a2, "a1*")),
        ("A2:S2+S2", direct_sum(simple(a2, "2"), simple(a2, "2"))),
        ("A2:(1->2)+S2", direct_sum(edge_extension(a2, "a1"), simple(a2, "2"))),
        ("A2:(2->1)+S1", direct_sum(edge_extension(a2, "a1*"), simple(a2, "1"))),
        ("A3:S2", simple(a3, "2")),
        ("A3:1->2", edge_extension(a3, "a1")),
        ("A3:2->3", edge_extension(a3, "a2")),
        ("A3:3->2", edge_extension(a3, "a2*")),
        ("A3:1->2->3", module(a3, {"1": 1, "2": 1, "3": 1}, {"a1": [[1]], "a2": [[1]]})),
        ("A3:3->2->1", module(a3, {"1": 1, "2": 1, "3": 1}, {"a2*": [[1]], "a1*": [[1]]})),
        ("A3:1->2<-3", module(a3, {"1": 1, "2": 1, "3": 1}, {"a1": [[1]], "a2*": [[1]]})),
        ("A3:1<-2->3", module(a3, {"1": 1, "2": 1, "3": 1}, {"a1*": [[1]], "a2": [[1]]})),
        ("A3:S1+S3", direct_sum(simple(a3, "1"), simple(a3, "3"))),
        ("A3:(1->2)+(3->2)", direct_sum(edge_extension(a3, "a1"), edge_extension(a3, "a2*"))),
        ("star3:S0", simple(st, "0")),
        ("star3:0->1", edge_extension(st, "r1")),
        ("star3:0->all", module(st, {"0": 1, "1": 1, "2": 1, "3": 1}, {"r1": [[1]], "r2": [[1]], "r3": [[1]]})),
        ("star3:x=0,W=<e1>", star_module(Matrix.zeros(QQ, 3, 3), Subspace.coordinate(QQ, 3, [0]))),
        (
            "star3:x=E13,W=<e1>",
            star_module(Matrix.from_rows(QQ, [[0, 0, 1], [0, 0, 0], [0, 0, 0]]), Subspace.coordinate(QQ, 3, [0])),
        ),
        (
            "star3:x=E13,W=<e1,e2>",
            star_module(Matrix.from_rows(QQ, [[0, 0, 1], [0, 0, 0], [0, 0, 0]]), Subspace.coordinate(QQ, 3, [0, 1])),
        ),
        ("star3:x=0,W=<e1+e3>", star_module(Matrix.zeros(QQ, 3, 3), Subspace.span(QQ, 3, [(1, 0, 1)]))),
    ]
    return out


@dataclass(frozen=True)
class GenFormCase:
    name: str
    module: LambdaModule
    vertex: str
    fword: FWord


def genform_cases() -> list[GenFormCase]:
    """Every (M, i, u) over the suite with ker m_out(i) = 0 and both degree bounds <= MAX_DEGREE."""
    out = []
    for name, m in suite_modules():
        cartan = cartan_matrix(m.graph)
        for i in m.graph.vertices:
            if phi_stats(m, i)[1]:
                continue
            reflected = sigma_star(m, i)
            for u in module_fwords(m, i):
                if not u.factors:
                    continue
                lhs = element_degree_bound(m, expand_fword(u))
                rhs = element_degree_bound(reflected, reflect_fword(u, cartan))
                if max(lhs, rhs) <= MAX_DEGREE:
                    out.append(GenFormCase(f"{name} @ {i} : {u}", m, i, u))
    return out


@dataclass(frozen=True)
class SerreCase:
    name: str
    module: LambdaModule
    element: FreeElement


def _arrangements(letters: Counter) -> list[tuple]:
    flat = [v for v, c in sorted(letters.items()) for _ in range(c)]
    return sorted(set(itertools.permutations(flat)))


def serre_cases(modules: list[tuple[str, LambdaModule]] | None = None) -> list[SerreCase]:
    """w * serre(i, j) * w' for every weight-matched placement."""
    out = []
    for name, m in modules or suite_modules():
        g = m.graph
        cartan = cartan_matrix(g)
        dv = Counter(m.dimvec())
        for i, j in itertools.permutations(g.vertices, 2):
            rel = serre_element(i, j, cartan)
            need = Counter({j: 1, i: 1 - cartan[i, j]})
            rest = dv - need
            if any(need[v] > dv[v] for v in need):
                continue
            for word in _arrangements(rest):
                for cut in range(len(word) + 1):
                    w, w2 = word[:cut], word[cut:]
                    el = FreeElement.word(w) * rel * FreeElement.word(w2)
                    label = f"{name}: {'.'.join(w) or '()'} * serre({i},{j}) * {'.'.join(w2) or '()'}"
                    out.append(SerreCase(label, m, el))
    return out


def random_invertible(rng: random.Random, n: int, lo: int = -3, hi: int = 3) -> Matrix:
    while True:
        rows = [[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)]
        m = Matrix.from_rows(QQ, rows, cols=n)
        if m.rank() == n:
            return m


def random_unipotent(rng: random.Random, n: int, lo: int = -3, hi: int = 3) -> Matrix:
    """Unit upper triangular: preserves the standard flag."""
    rows = [[1 if a == b else rng.randint(lo, hi) if b > a else 0 for b in range(n)] for a in range(n)]
    return Matrix.from_rows(QQ, rows, cols=n)


def random_conjugation(rng: random.Random, m: LambdaModule) -> dict[str, Matrix]:
    return {v: random_invertible(rng, m.dim(v)) for v in m.graph.vertices if m.dim(v)}


def quiver_variants(g: QuiverGraph) -> list[QuiverGraph]:
    """The same quiver with its edges listed in reverse order."""
    edges = [(a.id, a.source, a.target) for a in g.arrows.values() if a.sign == 1]
    return [build_double_quiver(list(reversed(edges)), g.vertices)]
