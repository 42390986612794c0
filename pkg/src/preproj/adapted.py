"""Filtrations adapted to a square-zero endomorphism and a flag.

Indices follow the 1-based convention of the box diagrams: basis vector
``e_p`` has index ``p`` in ``1..n``.  Vectors and matrices are stored
0-based, so ``V_p`` is the span of the first ``p`` standard coordinates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .exactlinalg import (
    QQ,
    FieldSpec,
    Matrix,
    NonPolynomialCount,
    Subspace,
    interpolate_and_eval1,
    primes as prime_stream,
    solve_preimage,
)
from .flagchi import MIN_SURPLUS, BadPrime, CountCurve, EulerResult


class SetupError(ValueError):
    pass


@dataclass(frozen=True)
class FiltrationSetup:
    """(V = F^n with its standard flag, x, W, J)."""

    x: Matrix
    W: Subspace
    J: frozenset

    def __post_init__(self) -> None:
        object.__setattr__(self, "J", frozenset(int(p) for p in self.J))

    @property
    def field(self) -> FieldSpec:
        return self.x.field

    @property
    def n(self) -> int:
        return self.x.rows

    @property
    def k(self) -> int:
        return self.W.dim

    def V(self, p: int) -> Subspace:
        return Subspace.coordinate(self.field, self.n, range(p))

    def xV(self, p: int) -> Subspace:
        return Subspace.span(self.field, self.n, [self.x.column(c) for c in range(p)])

    def with_J(self, J: Iterable[int]) -> "FiltrationSetup":
        return FiltrationSetup(self.x, self.W, frozenset(J))

    def reduce_mod(self, p: int) -> "FiltrationSetup":
        for v in _setup_entries(self):
            if v.denominator % p == 0:
                raise BadPrime(f"bad prime {p}: it divides the denominator of {v}")
        return FiltrationSetup(self.x.reduce_mod(p), self.W.reduce_mod(p), self.J)


def _setup_entries(s: FiltrationSetup) -> Iterator[Fraction]:
    for r in s.x.data:
        for v in r:
            if v:
                yield Fraction(v)
    for b in s.W.basis:
        for v in b:
            if v:
                yield Fraction(v)


@dataclass(frozen=True)
class SetupViolation:
    item: str  # "a".."f"
    message: str


def validate_setup(s: FiltrationSetup) -> SetupViolation | None:
    n = s.n
    if s.x.cols != n or s.W.ambient_dim != n:
        return SetupViolation("a", "x must be n x n and W must lie in F^n")
    if not s.k <= n:
        return SetupViolation("a", "need n >= k")
    if s.W.field != s.field:
        return SetupViolation("b", "x and W live over different fields")
    if not s.x.is_strictly_upper_triangular():
        return SetupViolation("d", "x does not preserve the standard flag nilpotently (not strictly upper triangular)")
    if not (s.x @ s.x).is_zero():
        return SetupViolation("d", "x^2 != 0")
    im, ker = s.x.image(), s.x.kernel()
    if not im <= s.W:
        return SetupViolation("e", "im x is not contained in W")
    if not s.W <= ker:
        return SetupViolation("e", "W is not contained in ker x")
    if len(s.J) != s.k or not all(1 <= p <= n for p in s.J):
        return SetupViolation("f", f"J must be a {s.k}-subset of 1..{n}")
    return None


def check_setup(s: FiltrationSetup) -> FiltrationSetup:
    v = validate_setup(s)
    if v is not None:
        raise SetupError(f"({v.item}) {v.message}")
    return s


def make_setup(x_rows: Sequence[Sequence], w_vectors: Sequence[Sequence], J: Iterable[int], field: FieldSpec = QQ) -> FiltrationSetup:
    x = Matrix.from_rows(field, x_rows, cols=len(x_rows))
    W = Subspace.span(field, x.rows, [tuple(field(v) for v in w) for w in w_vectors])
    return FiltrationSetup(x, W, frozenset(J))


# ---------------------------------------------------------------- adapted basis


def _extend(v: Sequence, n: int, F: FieldSpec) -> tuple:
    return tuple(v) + (F(0),) * (n - len(v))


def _adapted(F: FieldSpec, x: Matrix, chain: list[Subspace]) -> list[tuple]:
    n = x.rows
    if n == 0:
        return []
    ws = [x.image()] + chain + [x.kernel()]
    sub_x = x.submatrix(range(n - 1), range(n - 1))
    Vn1 = Subspace.coordinate(F, n, range(n - 1))
    sub_chain = []
    for w in ws:
        cut = w & Vn1
        sub_chain.append(Subspace.span(F, n - 1, [b[: n - 1] for b in cut.basis]))
    prev = [_extend(v, n, F) for v in _adapted(F, sub_x, sub_chain)]
    if ws[-1] <= Vn1:
        # ker x inside V_{n-1}: lift a basis vector of im x missed by x(V_{n-1})
        hit = {x.apply(v) for v in prev}
        image = ws[0]
        target = next(v for v in prev if image.contains(v) and v not in hit)
        e_n = solve_preimage(x, target)
    else:
        p = next(idx for idx, w in enumerate(ws) if not w <= Vn1)
        e_n = next(b for b in ws[p].basis if b[n - 1])
    return prev + [tuple(e_n)]


def adapted_basis(s: FiltrationSetup, chain: Sequence[Subspace] = ()) -> list[tuple]:
    """Basis e_1..e_n with V_p = <e_1..e_p>, x(e_p) in {0, e_1, .., e_{p-1}},
    and im x, ker x, W (and every space of ``chain``) coordinate subspaces.

    ``chain`` is an optional increasing sequence im x <= W_1 <= ... <= ker x;
    by default it is just ``[W]``.
    """
    check_setup(s)
    chain = list(chain) if chain else [s.W]
    basis = _adapted(s.field, s.x, chain)
    check_adapted_basis(s, basis, chain)
    return basis


def check_adapted_basis(s: FiltrationSetup, basis: Sequence[Sequence], chain: Sequence[Subspace] = ()) -> None:
    n = s.n
    if len(basis) != n:
        raise SetupError("basis has the wrong length")
    for p, v in enumerate(basis, start=1):
        if not v[p - 1] or any(v[c] for c in range(p, n)):
            raise SetupError(f"(l) fails: e_{p} does not span V_{p} modulo V_{p - 1}")
    zero = tuple(s.field(0) for _ in range(n))
    earlier: set = set()
    for p, v in enumerate(basis, start=1):
        xv = s.x.apply(v)
        if xv != zero and xv not in earlier:
            raise SetupError(f"(m) fails: x(e_{p}) is neither 0 nor an earlier basis vector")
        earlier.add(tuple(v))
    for name, sub in [("im x", s.x.image()), ("ker x", s.x.kernel()), ("W", s.W)] + [
        (f"chain[{t}]", c) for t, c in enumerate(chain)
    ]:
        if not sub.is_coordinate_wrt(basis):
            raise SetupError(f"(n) fails: {name} is not a coordinate subspace")


# ---------------------------------------------------------------------- diagram


@dataclass(frozen=True)
class Diagram:
    n: int
    columns: tuple  # ((top, bottom), ...) sorted by bottom
    isolated: tuple
    gray: frozenset

    def __post_init__(self) -> None:
        cols = ((int(t), int(b)) for t, b in self.columns)
        object.__setattr__(self, "columns", tuple(sorted(cols, key=lambda c: c[1])))
        object.__setattr__(self, "isolated", tuple(sorted(int(r) for r in self.isolated)))
        object.__setattr__(self, "gray", frozenset(int(g) for g in self.gray))
        boxes = [t for t, _ in self.columns] + [b for _, b in self.columns] + list(self.isolated)
        if sorted(boxes) != list(range(1, self.n + 1)):
            raise SetupError("columns and isolated boxes must partition 1..n")
        for t, b in self.columns:
            if t <= b:
                raise SetupError(f"column ({t}, {b}) has its top below its bottom")
            if b not in self.gray or t in self.gray:
                raise SetupError(f"column ({t}, {b}) must have a gray bottom and a white top")

    @property
    def k(self) -> int:
        return len(self.gray)

    @property
    def tops(self) -> dict[int, int]:
        return {t: b for t, b in self.columns}

    @property
    def bottoms(self) -> dict[int, int]:
        return {b: t for t, b in self.columns}

    def render(self) -> str:
        """Two-row ASCII picture; gray boxes are bracketed ``[p]``, white ones ``(p)``."""
        w = max(2, len(str(self.n)))

        def box(p: int) -> str:
            s = str(p).rjust(w)
            return f"[{s}]" if p in self.gray else f"({s})"

        blank = " " * (w + 2)
        top = " ".join([box(t) for t, _ in self.columns] + [blank for _ in self.isolated])
        mid = " ".join([box(b) for _, b in self.columns] + [box(r) for r in self.isolated])
        return top.rstrip() + "\n" + mid

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "columns": [list(c) for c in self.columns],
            "isolated": list(self.isolated),
            "gray": sorted(self.gray),
        }


def build_diagram(s: FiltrationSetup, basis: Sequence[Sequence]) -> Diagram:
    check_adapted_basis(s, basis)
    index = {tuple(v): p for p, v in enumerate(basis, start=1)}
    zero = tuple(s.field(0) for _ in range(s.n))
    columns = []
    for p, v in enumerate(basis, start=1):
        xv = s.x.apply(v)
        if xv != zero:
            columns.append((p, index[xv]))
    in_column = {t for c in columns for t in c}
    isolated = [p for p in range(1, s.n + 1) if p not in in_column]
    gray = {p for p, v in enumerate(basis, start=1) if s.W.contains(v)}
    d = Diagram(s.n, tuple(columns), tuple(isolated), frozenset(gray))
    if d.k != s.k:
        raise SetupError("gray boxes do not span W")
    return d


def diagram_of(s: FiltrationSetup) -> Diagram:
    check_setup(s)
    return build_diagram(s, _adapted(s.field, s.x, [s.W]))


def setup_from_diagram(d: Diagram, J: Iterable[int], field: FieldSpec = QQ) -> FiltrationSetup:
    """x sends e_top to e_bottom on each column; W is spanned by the gray coordinates."""
    n = d.n
    rows = [[0] * n for _ in range(n)]
    for t, b in d.columns:
        rows[b - 1][t - 1] = 1
    x = Matrix.from_rows(field, rows, cols=n)
    W = Subspace.coordinate(field, n, [g - 1 for g in d.gray])
    return FiltrationSetup(x, W, frozenset(J))


def all_diagrams(n: int) -> Iterator[Diagram]:
    """Every diagram on n boxes: partial matchings into columns, then gray isolated subsets."""

    def matchings(items: tuple) -> Iterator[list]:
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for m in matchings(rest):
            yield m
        for idx, other in enumerate(rest):
            remaining = rest[:idx] + rest[idx + 1 :]
            for m in matchings(remaining):
                yield [(other, first)] + m

    for cols in matchings(tuple(range(1, n + 1))):
        used = {p for c in cols for p in c}
        iso = [p for p in range(1, n + 1) if p not in used]
        bottoms = {b for _, b in cols}
        for r in range(len(iso) + 1):
            for gray_iso in itertools.combinations(iso, r):
                yield Diagram(n, tuple(cols), tuple(iso), frozenset(bottoms | set(gray_iso)))


def all_cases(max_n: int) -> Iterator[tuple[Diagram, frozenset]]:
    for n in range(0, max_n + 1):
        for d in all_diagrams(n):
            for J in itertools.combinations(range(1, n + 1), d.k):
                yield d, frozenset(J)


# ----------------------------------------------------------------------- recipe


def condition_A(d: Diagram, J: Iterable[int]) -> bool:
    tops = d.tops
    return all(p in tops or p in d.gray for p in J)


def top_hits(d: Diagram, J: Iterable[int]) -> int:
    tops = d.tops
    return sum(1 for p in J if p in tops)


def chi_f0(d: Diagram, J: Iterable[int]) -> int:
    """1 if every column holds exactly one element of J and the rest of J sits
    in isolated gray boxes, else 0."""
    J = set(J)
    for t, b in d.columns:
        if len({t, b} & J) != 1:
            return 0
    in_cols = {p for c in d.columns for p in c}
    rest = J - in_cols
    return int(all(p in d.gray and p in d.isolated for p in rest))


def recipe_value(d: Diagram, J: Iterable[int]) -> int:
    J = set(J)
    if len(J) != d.k:
        raise SetupError("|J| must equal the number of gray boxes")
    if any(r in J and r not in d.gray for r in d.isolated):
        return 0
    if any(t in J and b in J for t, b in d.columns):
        return 0
    return (-1) ** len(J - d.gray)


# ------------------------------------------------------------------------ chart


@dataclass(frozen=True)
class MatrixChart:
    """Coordinates on the nonvanishing locus: rows J, columns K = gray boxes."""

    rows: tuple
    cols: tuple
    fixed: dict = field(hash=False)  # (p, q) -> 0 or 1
    free: tuple = ()
    empty: bool = False

    @property
    def free_count(self) -> int:
        return len(self.free)

    def describe(self) -> list[list[str]]:
        out = []
        for p in self.rows:
            row = []
            for q in self.cols:
                row.append(str(self.fixed[p, q]) if (p, q) in self.fixed else f"xi{p}{q}")
            out.append(row)
        return out

    def instance(self, F: FieldSpec, values: Sequence) -> Matrix:
        val = dict(zip(self.free, values))
        data = [[F(self.fixed.get((p, q), val.get((p, q), 0))) for q in self.cols] for p in self.rows]
        return Matrix(F, len(self.rows), len(self.cols), tuple(tuple(r) for r in data))

    def satisfies(self, xi: Matrix) -> bool:
        """Conditions (E) and (F) on a filled-in chart."""
        F = xi.field
        if self.empty:
            return False
        k = len(self.cols)
        if xi.shape != (len(self.rows), k):
            return False
        for (p, q), v in self.fixed.items():
            if xi[self.rows.index(p), self.cols.index(q)] != F(v):
                return False
        if xi.rank() != k:
            return False
        rowset = set(self.rows)
        for c, p in enumerate(self.cols):
            if p in rowset:
                continue
            later = [xi.data[r] for r, pr in enumerate(self.rows) if pr > p]
            unit = tuple(F(1) if j == c else F(0) for j in range(k))
            if not Subspace.span(F, k, later).contains(unit):
                return False
        return True

    def points(self, F: FieldSpec) -> Iterator[Matrix]:
        if self.empty:
            return
        for values in itertools.product(F.elements(), repeat=len(self.free)):
            xi = self.instance(F, values)
            if self.satisfies(xi):
                yield xi

    def point_count(self, F: FieldSpec) -> int:
        return sum(1 for _ in self.points(F))


def build_chart(d: Diagram, J: Iterable[int]) -> MatrixChart:
    J = frozenset(J)
    rows = tuple(sorted(J))
    cols = tuple(sorted(d.gray))
    if not condition_A(d, J):
        return MatrixChart(rows, cols, {}, (), True)
    tops = d.tops
    fixed: dict = {}
    free = []
    for p in rows:
        if p not in tops:
            for q in cols:
                fixed[p, q] = 1 if q == p else 0
            continue
        fixed[p, tops[p]] = 1
        for p2, q2 in tops.items():
            if p2 != p and (p2 < p or p2 in J):
                fixed[p, q2] = 0
        for q3 in cols:
            if q3 > p and q3 not in tops and q3 in J:
                fixed[p, q3] = 0
        free.extend((p, q) for q in cols if (p, q) not in fixed)
    return MatrixChart(rows, cols, fixed, tuple(free), False)


# ------------------------------------------------------------------- bijection


def _dot(a: Sequence, b: Sequence, p: int):
    s = sum(x * y for x, y in zip(a, b))
    return s % p if p else s


def _dual_rows(s: FiltrationSetup, basis: Sequence[Sequence]) -> list[tuple]:
    E = Matrix.from_columns(s.field, [tuple(v) for v in basis], s.n)
    return list(E.inverse().data)


def check_f0(s: FiltrationSetup, X: Sequence[Subspace]) -> None:
    """Raise unless X satisfies (g), (h) and (i)."""
    n = s.n
    if len(X) != n + 1 or X[0].dim != 0 or X[n] != s.W:
        raise SetupError("filtration must run from 0 to W")
    for p in range(1, n + 1):
        if not X[p - 1] <= X[p]:
            raise SetupError(f"X_{p - 1} is not contained in X_{p}")
        jump = X[p].dim - X[p - 1].dim
        if jump != (1 if p in s.J else 0):
            raise SetupError(f"(g) fails at p = {p}")
        if not (s.xV(p) <= X[p] and X[p] <= s.V(p)):
            raise SetupError(f"(h) fails at p = {p}")
        if p in s.J and X[p] <= s.V(p - 1) and s.xV(p) <= X[p - 1]:
            raise SetupError(f"(i) fails at p = {p}")


def xi_to_filtration(xi: Matrix, chart: MatrixChart, s: FiltrationSetup, basis: Sequence[Sequence]) -> list[Subspace]:
    if not chart.satisfies(xi):
        raise SetupError("chart point violates conditions (B)-(F)")
    F = s.field
    dual = _dual_rows(s, basis)
    p_char = F.characteristic
    phi = {}
    for r, p in enumerate(chart.rows):
        form = [F(0)] * s.n
        for c, q in enumerate(chart.cols):
            a = xi[r, c]
            if a:
                form = [((u + a * v) % p_char if p_char else u + a * v) for u, v in zip(form, dual[q - 1])]
        phi[p] = tuple(form)
    X = []
    for p in range(s.n + 1):
        forms = [phi[p2] for p2 in chart.rows if p2 > p]
        X.append(s.W & Subspace.annihilator_of(F, s.n, forms))
    check_f0(s, X)
    return X


def filtration_to_xi(X: Sequence[Subspace], s: FiltrationSetup, basis: Sequence[Sequence], d: Diagram | None = None) -> Matrix:
    """Normalised chart coordinates of a filtration in the nonvanishing locus."""
    check_f0(s, X)
    F = s.field
    pc = F.characteristic
    d = d or build_diagram(s, basis)
    chart = build_chart(d, s.J)
    if chart.empty:
        raise SetupError("condition (A) fails, the nonvanishing locus is empty")
    cols = chart.cols
    kpos = {q: c for c, q in enumerate(cols)}
    dual = _dual_rows(s, basis)
    k = len(cols)

    def kcoords(sub: Subspace) -> Subspace:
        return Subspace.span(F, k, [tuple(_dot(dual[q - 1], v, pc) for q in cols) for v in sub.basis])

    tops = d.tops
    rows: dict[int, list] = {}
    for p in sorted(s.J, reverse=True):
        if p not in tops:
            rows[p] = [F(1) if q == p else F(0) for q in cols]
            continue
        q = tops[p]
        lower, upper = kcoords(X[p - 1]), kcoords(X[p])
        # a form vanishing on X_{p-1} but not on X_p
        upper_ann = upper.annihilator()
        psi = next(list(f) for f in lower.annihilator().basis if not upper_ann.contains(f))
        lead = psi[kpos[q]]
        if not lead:
            raise SetupError(f"x(e_{p}) lies in X_{p - 1}: not in the nonvanishing locus")
        inv = F.inv(lead)
        psi = [(a * inv) % pc if pc else a * inv for a in psi]
        for p2, q2 in tops.items():
            if p2 > p and p2 in s.J:
                c = psi[kpos[q2]]
                if c:
                    psi = [((a - c * b) % pc if pc else a - c * b) for a, b in zip(psi, rows[p2])]
        for q3 in cols:
            if q3 > p and q3 not in tops and q3 in s.J:
                psi[kpos[q3]] = F(0)
        rows[p] = psi
    xi = Matrix(F, len(chart.rows), k, tuple(tuple(rows[p]) for p in chart.rows))
    if not chart.satisfies(xi):
        raise SetupError("normalisation did not land in the chart")
    return xi


# ----------------------------------------------------------------- brute force


def _lines_outside(S: Subspace, B: Subspace, hi: Subspace) -> Iterator[tuple]:
    """Vectors spanning each line of hi/S not contained in B/S (S <= B <= hi)."""
    F = hi.field
    p = F.characteristic
    inner, outer = [], []
    cur = S
    for v in B.basis:
        if not cur.contains(v):
            inner.append(v)
            cur = cur.with_vectors([v])
    for v in hi.basis:
        if not cur.contains(v):
            outer.append(v)
            cur = cur.with_vectors([v])
    for t, lead in enumerate(outer):
        rest = inner + outer[:t]
        for coeffs in itertools.product(range(p), repeat=len(rest)):
            v = list(lead)
            for a, w in zip(coeffs, rest):
                if a:
                    v = [(x + a * y) % p for x, y in zip(v, w)]
            yield tuple(v)


def _signed_chains(
    start: Subspace,
    jumps: Sequence[bool],
    need: Sequence[Subspace],
    hi: Sequence[Subspace],
    zero_sign: Sequence[Subspace],
    eta,
    free_sign: int,
) -> Iterator[tuple[tuple, int]]:
    """Chains S_0 = start <= ... <= S_n growing by one exactly at the jump steps,
    with need[p] <= S_p <= hi[p], weighted by the product of eta over jump steps.

    ``need[p]`` already includes the lower bounds of the non-jump steps that
    follow p.  At a step with a free choice every line outside ``zero_sign[p]``
    has sign ``free_sign`` and every line inside it has sign 0, so only the former
    are visited.  Chains of value 0 are never yielded.
    """
    n = len(jumps) - 1

    def rec(p: int, chain: tuple, sign: int) -> Iterator[tuple[tuple, int]]:
        if p > n:
            yield chain, sign
            return
        prev = chain[-1]
        if not jumps[p]:
            if need[p] <= prev and prev <= hi[p]:
                yield from rec(p + 1, chain + (prev,), sign)
            return
        low = prev + need[p]
        if low.dim == prev.dim + 1:
            if low <= hi[p]:
                e = eta(p, prev, low)
                if e:
                    yield from rec(p + 1, chain + (low,), sign * e)
        elif low.dim == prev.dim:
            B = zero_sign[p] & hi[p]
            for v in _lines_outside(prev, B, hi[p]):
                yield from rec(p + 1, chain + (prev.with_vectors([v]),), sign * free_sign)

    yield from rec(1, (start,), 1)


def _run_needs(lo: Sequence[Subspace], jumps: Sequence[bool]) -> list:
    """need[p] = lo at the last step of the non-jump run following p (lo is increasing)."""
    n = len(jumps) - 1
    need = list(lo)
    for p in range(n - 1, 0, -1):
        if not jumps[p + 1]:
            need[p] = need[p + 1]
    return need


def enumerate_side_f(s: FiltrationSetup) -> Iterator[tuple[tuple, int]]:
    """Filtrations 0 = X_0 <= ... <= X_n = W with jumps at J satisfying (h), with
    their nonzero values f(X)."""
    n = s.n
    V = [s.V(p) for p in range(n + 1)]
    xV = [s.xV(p) for p in range(n + 1)]
    jumps = [False] + [p in s.J for p in range(1, n + 1)]

    def eta(p: int, prev: Subspace, X: Subspace) -> int:
        if not X <= V[p - 1]:
            return 1
        return -1 if not xV[p] <= prev else 0

    hi = [V[p] & s.W for p in range(n + 1)]
    yield from _signed_chains(Subspace.zero(s.field, n), jumps, _run_needs(xV, jumps), hi, V[:1] + V[:-1], eta, 1)


def enumerate_side_g(s: FiltrationSetup) -> Iterator[tuple[tuple, int]]:
    """Filtrations W = Y_0 <= ... <= Y_n = V with jumps off J satisfying (k), with
    their nonzero values g(Y)."""
    n = s.n
    V = [s.V(p) for p in range(n + 1)]
    pre = [V[p].preimage(s.x) for p in range(n + 1)]
    jumps = [False] + [p not in s.J for p in range(1, n + 1)]

    def eta(p: int, prev: Subspace, Y: Subspace) -> int:
        first = not V[p] <= prev
        second = not Y <= pre[p - 1]
        if first and second:
            raise AssertionError("both sign cases of g hold at once")
        return 1 if first else -1 if second else 0

    yield from _signed_chains(s.W, jumps, _run_needs(V, jumps), pre, pre[:1] + pre[:-1], eta, -1)


# Lean subspaces of F_p^n for the counting kernel: a state is the canonical
# fully reduced echelon basis, a tuple of (pivot, row) pairs sorted by pivot.


def _fp_state(sub: Subspace) -> tuple:
    return tuple(zip(sub.pivots, sub.basis))


def _fp_reduce(rows: tuple, v: Sequence, p: int) -> list:
    w = list(v)
    for c, r in rows:
        a = w[c]
        if a:
            w = [(x - a * y) % p for x, y in zip(w, r)]
    return w


def _fp_in(rows: tuple, v: Sequence, p: int) -> bool:
    return not any(_fp_reduce(rows, v, p))


def _fp_insert(rows: tuple, v: Sequence, p: int) -> tuple:
    return _fp_insert_reduced(rows, _fp_reduce(rows, v, p), p)


def _fp_insert_reduced(rows: tuple, w: Sequence, p: int) -> tuple:
    """Add a vector already reduced modulo ``rows`` (zero at every pivot)."""
    for c, a in enumerate(w):
        if a:
            break
    else:
        return rows
    inv = pow(a, p - 2, p)
    w = tuple([(x * inv) % p for x in w])
    out = []
    placed = False
    for c2, r in rows:
        if not placed and c2 > c:
            out.append((c, w))
            placed = True
        b = r[c]
        out.append((c2, tuple([(x - b * y) % p for x, y in zip(r, w)]) if b else r))
    if not placed:
        out.append((c, w))
    return tuple(out)


def _fp_leq(a: tuple, b: tuple, p: int) -> bool:
    return len(a) <= len(b) and all(_fp_in(b, r, p) for _, r in a)


def _fp_join(a: tuple, b: tuple, p: int) -> tuple:
    for _, r in b:
        if not _fp_in(a, r, p):
            a = _fp_insert(a, r, p)
    return a


def _fp_meet(a: tuple, b: tuple, n: int, p: int) -> tuple:
    """Intersection, as the annihilator of the sum of annihilators."""

    def ann(rows: tuple) -> tuple:
        piv = {c for c, _ in rows}
        out: tuple = ()
        for c in range(n):
            if c not in piv:
                v = [0] * n
                v[c] = 1
                for pc, r in rows:
                    v[pc] = (-r[c]) % p
                out = _fp_insert(out, v, p)
        return out

    return ann(_fp_join(ann(a), ann(b), p))


def _fp_lines_outside(S: tuple, B: tuple, hi: tuple, p: int) -> Iterator[list]:
    """Vectors reduced modulo S spanning each line of hi/S not contained in B/S (S <= B <= hi)."""
    inner, outer = [], []
    cur = S
    for src, dst in ((B, inner), (hi, outer)):
        for _, v in src:
            w = _fp_reduce(cur, v, p)
            if any(w):
                dst.append(_fp_reduce(S, v, p))
                cur = _fp_insert_reduced(cur, w, p)
    for t, lead in enumerate(outer):
        combos = [lead]
        for w in inner + outer[:t]:
            combos = [c if not a else [(x + a * y) % p for x, y in zip(c, w)] for c in combos for a in range(p)]
        yield from combos


def _fp_chain_sum(side: str, start: Subspace, jumps, need, hi, zero_sign, dyn) -> int:
    """Signed number of chains, as :func:`_signed_chains`, by memoised recursion on (q, S_{q-1}).

    Uses S_{q-1} <= hi[q-1] <= zero_sign[q] <= hi[q], so at a forced step the new
    space lies in hi[q], and avoids zero_sign[q], exactly when need[q] does.
    The remaining sign condition is ``dyn[q]`` not inside S_{q-1}.
    """
    p = start.field.characteristic
    n = len(jumps) - 1
    dim = start.ambient_dim
    fits = [need[q] <= hi[q] for q in range(n + 1)]
    escapes = [not need[q] <= zero_sign[q] for q in range(n + 1)]
    inside = [_fp_state(z & h) for z, h in zip(zero_sign, hi)]
    need = [_fp_state(x) for x in need]
    hi = [_fp_state(x) for x in hi]
    dyn = [_fp_state(x) for x in dyn]
    free_sign = 1 if side == "F" else -1
    later_jumps = [[r for r in range(q + 1, n + 1) if jumps[r]] for q in range(n + 1)]
    memo: dict = {}

    def eta(q: int, S: tuple) -> int:
        moved = not _fp_leq(dyn[q], S, p)
        if side == "F":
            return 1 if escapes[q] else -1 if moved else 0
        if moved and escapes[q]:
            raise AssertionError("both sign cases of g hold at once")
        return 1 if moved else -1 if escapes[q] else 0

    def lookahead(q: int, S: tuple) -> tuple | None:
        """Where the new line may live given the lower bounds of later jump steps."""
        allowed = hi[q]
        steps = 1
        for r in later_jumps[q]:
            steps += 1
            target = _fp_join(S, need[r], p)
            extra = len(target) - len(S)
            if extra > steps:
                return None
            if extra == steps:
                allowed = _fp_meet(allowed, target, dim, p)
        return allowed

    def T(q: int, S: tuple) -> int:
        if q > n:
            return 1
        key = (q, S)
        if key in memo:
            return memo[key]
        val = 0
        if not jumps[q]:
            if _fp_leq(need[q], S, p):
                val = T(q + 1, S)
        else:
            low = _fp_join(S, need[q], p)
            if len(low) == len(S) + 1:
                if fits[q]:
                    e = eta(q, S)
                    if e:
                        val = e * T(q + 1, low)
            elif len(low) == len(S):
                allowed = lookahead(q, S)
                if allowed is not None:
                    lines = _fp_lines_outside(S, _fp_meet(inside[q], allowed, dim, p), allowed, p)
                    val = free_sign * sum(T(q + 1, _fp_insert_reduced(S, v, p)) for v in lines)
        memo[key] = val
        return val

    return T(1, _fp_state(start))


def side_sum(s: FiltrationSetup, side: str) -> int:
    """Sum of f (side "F") or g (side "G") over all filtrations of a setup over F_p."""
    if not s.field.is_prime_field:
        raise ValueError("side_sum needs a setup over a prime field")
    n = s.n
    V = [s.V(q) for q in range(n + 1)]
    if side == "F":
        xV = [s.xV(q) for q in range(n + 1)]
        jumps = [False] + [q in s.J for q in range(1, n + 1)]
        hi = [V[q] & s.W for q in range(n + 1)]
        start = Subspace.zero(s.field, n)
        return _fp_chain_sum("F", start, jumps, _run_needs(xV, jumps), hi, V[:1] + V[:-1], xV)
    if side == "G":
        pre = [V[q].preimage(s.x) for q in range(n + 1)]
        jumps = [False] + [q not in s.J for q in range(1, n + 1)]
        return _fp_chain_sum("G", s.W, jumps, _run_needs(V, jumps), pre, pre[:1] + pre[:-1], V)
    raise ValueError("side must be 'F' or 'G'")


def twist(s: FiltrationSetup) -> FiltrationSetup:
    """Dual setup: transposed x, orthogonal of W, flags reversed, J -> {n+1-p : p not in J}."""
    n = s.n
    F = s.field
    xt = tuple(tuple(s.x.data[n - 1 - b][n - 1 - a] for b in range(n)) for a in range(n))
    x2 = Matrix(F, n, n, xt)
    ann = s.W.annihilator()
    W2 = Subspace.span(F, n, [tuple(reversed(v)) for v in ann.basis])
    return check_setup(FiltrationSetup(x2, W2, twist_J(s.J, n)))


def twisted_diagram(d: Diagram) -> Diagram:
    """Upside down, relabelled p -> n+1-p, colours inverted."""
    n = d.n

    def flip(p: int) -> int:
        return n + 1 - p

    return Diagram(
        n,
        tuple((flip(b), flip(t)) for t, b in d.columns),
        tuple(flip(r) for r in d.isolated),
        frozenset(flip(p) for p in range(1, n + 1) if p not in d.gray),
    )


def setup_good_prime(s: FiltrationSetup, p: int, diagram: Diagram | None = None) -> bool:
    """p is good when the setup reduces to a valid setup with the same diagram."""
    try:
        red = s.reduce_mod(p)
    except BadPrime:
        return False
    if validate_setup(red) is not None:
        return False
    return diagram_of(red) == (diagram or diagram_of(s))


def setup_auto_primes(s: FiltrationSetup, bound: int, diagram: Diagram | None = None) -> list[int]:
    """First ``bound + 3`` good primes."""
    d = diagram or diagram_of(s)
    out = []
    for p in prime_stream():
        if setup_good_prime(s, p, d):
            out.append(p)
            if len(out) == bound + 1 + MIN_SURPLUS:
                return out
    raise AssertionError("unreachable")


def side_degree_bound(s: FiltrationSetup, side: str, diagram: Diagram | None = None) -> int:
    """Free chart entries of the setup (side "F") or of its twist (side "G")."""
    d = diagram or diagram_of(s)
    if side == "F":
        return build_chart(d, s.J).free_count
    return build_chart(twisted_diagram(d), twist_J(s.J, s.n)).free_count


def twist_J(J: Iterable[int], n: int) -> frozenset:
    J = set(J)
    return frozenset(n + 1 - p for p in range(1, n + 1) if p not in J)


def brute_force_integral(
    s: FiltrationSetup, side: str, primes: Sequence[int] | None = None, diagram: Diagram | None = None
) -> EulerResult:
    """Signed point count of the f- (side "F") or g-filtrations, interpolated at q = 1."""
    if side not in ("F", "G"):
        raise ValueError("side must be 'F' or 'G'")
    if s.field.is_prime_field:
        raise ValueError("brute force needs a setup over Q")
    d = diagram or diagram_of(s)
    bound = side_degree_bound(s, side, d)
    if primes is None:
        primes = setup_auto_primes(s, bound, d)
    primes = list(primes)
    if len(primes) < bound + 1 + MIN_SURPLUS:
        raise ValueError(f"need at least {bound + 1 + MIN_SURPLUS} primes for degree bound {bound}")
    samples = []
    for p in primes:
        red = s.reduce_mod(p)
        if validate_setup(red) is not None:
            raise BadPrime(f"bad prime {p}: the reduced setup is invalid")
        samples.append((p, side_sum(red, side)))
    value, poly = interpolate_and_eval1(samples, bound, MIN_SURPLUS)
    if value.denominator != 1:
        raise NonPolynomialCount(f"non-polynomial count: value at q=1 is {value}")
    return EulerResult(int(value), CountCurve(tuple(samples), bound), poly)


@dataclass
class MainLemmaReport:
    recipe: int
    side_f: EulerResult
    side_g: EulerResult
    twisted_recipe: int
    diagram: Diagram
    twisted: Diagram
    passed: bool
    message: str = ""

    @property
    def values(self) -> dict[str, int]:
        return {
            "recipe": self.recipe,
            "side_F": self.side_f.value,
            "side_G": self.side_g.value,
            "twisted_recipe": self.twisted_recipe,
        }


def verify_mainlemma(s: FiltrationSetup, primes: Sequence[int] | None = None) -> MainLemmaReport:
    check_setup(s)
    d = diagram_of(s)
    t = twist(s)
    td = diagram_of(t)
    if td != twisted_diagram(d):
        raise SetupError("twisted setup does not have the flipped diagram")
    recipe = recipe_value(d, s.J)
    tw = recipe_value(td, t.J)
    if primes is None:
        bound = max(side_degree_bound(s, "F", d), side_degree_bound(s, "G", d))
        primes = setup_auto_primes(s, bound, d)
    f = brute_force_integral(s, "F", primes, d)
    g = brute_force_integral(s, "G", primes, d)
    vals = {"recipe": recipe, "side_F": f.value, "side_G": g.value, "twisted_recipe": tw}
    bad = [(a, b) for a, b in itertools.combinations(vals, 2) if vals[a] != vals[b]]
    msg = "all four agree" if not bad else f"{bad[0][0]}={vals[bad[0][0]]} disagrees with {bad[0][1]}={vals[bad[0][1]]}"
    return MainLemmaReport(recipe, f, g, tw, d, td, not bad, msg)
