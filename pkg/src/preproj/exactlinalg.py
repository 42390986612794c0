"""Exact scalars, matrices and subspaces over Q and prime fields.

Vectors are plain tuples.  Prime-field scalars are ints in ``[0, p)``,
rational scalars are :class:`fractions.Fraction`.  Every subspace is kept
in reduced row-echelon form so that equality of :class:`Subspace` values
is equality of the subspaces they denote.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Vector = tuple


class NonPolynomialCount(ValueError):
    """A surplus point-count sample disagrees with the fitted polynomial."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes(start: int = 2) -> Iterator[int]:
    n = start
    while True:
        if is_prime(n):
            yield n
        n += 1


@dataclass(frozen=True)
class FieldSpec:
    """Either the rationals (``characteristic == 0``) or F_p."""

    characteristic: int = 0

    def __post_init__(self) -> None:
        if self.characteristic != 0 and not is_prime(self.characteristic):
            raise ValueError(f"characteristic {self.characteristic} is not prime")

    @classmethod
    def rationals(cls) -> "FieldSpec":
        return cls(0)

    @classmethod
    def prime(cls, p: int) -> "FieldSpec":
        if p < 2:
            raise ValueError("characteristic must be >= 2")
        return cls(p)

    @property
    def kind(self) -> str:
        return "rationals" if self.characteristic == 0 else "prime-field"

    @property
    def is_prime_field(self) -> bool:
        return self.characteristic != 0

    def __call__(self, x) -> object:
        """Coerce an int, Fraction or decimal string into this field."""
        p = self.characteristic
        if isinstance(x, str):
            x = Fraction(x)
        if p == 0:
            return Fraction(x)
        if isinstance(x, Fraction):
            if x.denominator % p == 0:
                raise ZeroDivisionError(f"denominator of {x} vanishes mod {p}")
            return x.numerator * pow(x.denominator, -1, p) % p
        return int(x) % p

    def inv(self, a):
        if self.characteristic:
            return pow(a, -1, self.characteristic)
        return Fraction(1) / a

    def elements(self) -> range:
        if not self.characteristic:
            raise ValueError("the rationals are not enumerable")
        return range(self.characteristic)

    def format(self, a) -> str:
        return str(a)

    def __str__(self) -> str:
        return "Q" if self.characteristic == 0 else f"F_{self.characteristic}"


QQ = FieldSpec(0)


def _reduce_rows(rows: Iterable[Sequence], ncols: int, F: FieldSpec) -> tuple[list[list], list[int]]:
    """Return (reduced nonzero rows, pivot columns) of the row space of ``rows``."""
    p = F.characteristic
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    nrows = len(mat)
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if mat[i][c]:
                piv = i
                break
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        row = mat[r]
        a = row[c]
        if a != 1:
            ia = F.inv(a)
            if p:
                row = [v * ia % p for v in row]
            else:
                row = [v * ia for v in row]
            mat[r] = row
        for i in range(nrows):
            if i != r:
                b = mat[i][c]
                if b:
                    other = mat[i]
                    if p:
                        mat[i] = [(u - b * v) % p for u, v in zip(other, row)]
                    else:
                        mat[i] = [u - b * v for u, v in zip(other, row)]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return mat[:r], pivots


@dataclass(frozen=True)
class Matrix:
    """A dense matrix acting on column vectors (``rows`` = target dimension)."""

    field: FieldSpec
    rows: int
    cols: int
    data: tuple = dc_field(repr=False)

    def __post_init__(self) -> None:
        if len(self.data) != self.rows or any(len(r) != self.cols for r in self.data):
            raise ValueError(f"matrix data does not have shape {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, F: FieldSpec, rows: Sequence[Sequence], cols: int | None = None) -> "Matrix":
        data = tuple(tuple(F(v) for v in r) for r in rows)
        if cols is None:
            cols = len(data[0]) if data else 0
        return cls(F, len(data), cols, data)

    @classmethod
    def zeros(cls, F: FieldSpec, rows: int, cols: int) -> "Matrix":
        z = F(0)
        return cls(F, rows, cols, tuple((z,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, F: FieldSpec, n: int) -> "Matrix":
        one, z = F(1), F(0)
        return cls(F, n, n, tuple(tuple(one if i == j else z for j in range(n)) for i in range(n)))

    @classmethod
    def from_columns(cls, F: FieldSpec, columns: Sequence[Sequence], rows: int) -> "Matrix":
        return cls(F, rows, len(columns), tuple(tuple(c[i] for c in columns) for i in range(rows)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self.data)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def is_zero(self) -> bool:
        return all(not v for r in self.data for v in r)

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.cols, self.rows, tuple(zip(*self.data)) if self.rows else tuple(() for _ in range(self.cols)))

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        p = self.field.characteristic
        zero = self.field(0)
        ocols = other.columns()
        out = []
        for r in self.data:
            row = []
            for c in ocols:
                s = sum((a * b for a, b in zip(r, c) if a and b), zero)
                row.append(s % p if p else s)
            out.append(tuple(row))
        return Matrix(self.field, self.rows, other.cols, tuple(out))

    def apply(self, v: Sequence) -> Vector:
        p = self.field.characteristic
        zero = self.field(0)
        out = []
        for r in self.data:
            s = sum((a * b for a, b in zip(r, v) if a and b), zero)
            out.append(s % p if p else s)
        return tuple(out)

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch in addition")
        p = self.field.characteristic
        data = tuple(
            tuple(((a + b) % p if p else a + b) for a, b in zip(r, s)) for r, s in zip(self.data, other.data)
        )
        return Matrix(self.field, self.rows, self.cols, data)

    def scale(self, c) -> "Matrix":
        c = self.field(c)
        p = self.field.characteristic
        return Matrix(
            self.field, self.rows, self.cols, tuple(tuple(((a * c) % p if p else a * c) for a in r) for r in self.data)
        )

    def __neg__(self) -> "Matrix":
        return self.scale(-1)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        return Matrix(
            self.field, len(row_idx), len(col_idx), tuple(tuple(self.data[i][j] for j in col_idx) for i in row_idx)
        )

    def rank(self) -> int:
        return len(_reduce_rows(self.data, self.cols, self.field)[1])

    def row_space(self) -> "Subspace":
        return Subspace.span(self.field, self.cols, self.data)

    def image(self) -> "Subspace":
        return Subspace.span(self.field, self.rows, self.columns())

    def kernel(self) -> "Subspace":
        return Subspace.annihilator_of(self.field, self.cols, self.data)

    def is_strictly_upper_triangular(self) -> bool:
        return all(not self.data[i][j] for i in range(self.rows) for j in range(min(i + 1, self.cols)))

    def reduce_mod(self, p: int) -> "Matrix":
        if self.field.characteristic:
            raise ValueError("only rational matrices can be reduced mod p")
        F = FieldSpec.prime(p)
        return Matrix(F, self.rows, self.cols, tuple(tuple(F(v) for v in r) for r in self.data))

    def inverse(self) -> "Matrix":
        n = self.rows
        if n != self.cols:
            raise ValueError("inverse of a non-square matrix")
        one = self.field(1)
        zero = self.field(0)
        aug = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(self.data)]
        red, piv = _reduce_rows(aug, 2 * n, self.field)
        if piv[:n] != list(range(n)) or len(red) < n:
            raise ZeroDivisionError("matrix is singular")
        return Matrix(self.field, n, n, tuple(tuple(r[n:]) for r in red[:n]))

    @staticmethod
    def hstack(F: FieldSpec, rows: int, blocks: Sequence["Matrix"]) -> "Matrix":
        data = tuple(tuple(v for b in blocks for v in b.data[i]) for i in range(rows))
        return Matrix(F, rows, sum(b.cols for b in blocks), data)

    @staticmethod
    def vstack(F: FieldSpec, cols: int, blocks: Sequence["Matrix"]) -> "Matrix":
        data = tuple(r for b in blocks for r in b.data)
        return Matrix(F, len(data), cols, data)

    def to_lists(self) -> list[list[str]]:
        return [[format_scalar(v) for v in r] for r in self.data]


def format_scalar(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``field ** ambient_dim`` stored as an RREF basis."""

    field: FieldSpec
    ambient_dim: int
    basis: tuple
    pivots: tuple = dc_field(compare=False, repr=False)

    @classmethod
    def span(cls, F: FieldSpec, n: int, vectors: Iterable[Sequence]) -> "Subspace":
        vecs = [tuple(v) for v in vectors]
        for v in vecs:
            if len(v) != n:
                raise ValueError(f"vector of length {len(v)} in ambient dimension {n}")
        red, piv = _reduce_rows(vecs, n, F)
        return cls(F, n, tuple(tuple(r) for r in red), tuple(piv))

    @classmethod
    def zero(cls, F: FieldSpec, n: int) -> "Subspace":
        return cls(F, n, (), ())

    @classmethod
    def full(cls, F: FieldSpec, n: int) -> "Subspace":
        return cls.coordinate(F, n, range(n))

    @classmethod
    def coordinate(cls, F: FieldSpec, n: int, indices: Iterable[int]) -> "Subspace":
        """Span of the standard basis vectors with the given 0-based indices."""
        idx = sorted(set(indices))
        one, z = F(1), F(0)
        basis = tuple(tuple(one if j == i else z for j in range(n)) for i in idx)
        return cls(F, n, basis, tuple(idx))

    @classmethod
    def annihilator_of(cls, F: FieldSpec, n: int, rows: Iterable[Sequence]) -> "Subspace":
        """Common kernel of the linear forms given as row vectors."""
        red, piv = _reduce_rows(rows, n, F)
        p = F.characteristic
        pivset = set(piv)
        one = F(1)
        out = []
        for c in range(n):
            if c in pivset:
                continue
            v = [F(0)] * n
            v[c] = one
            for r, pc in zip(red, piv):
                if r[c]:
                    v[pc] = (-r[c]) % p if p else -r[c]
            out.append(v)
        return cls.span(F, n, out)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return len(self.basis)

    def reduce(self, v: Sequence) -> list:
        """Remainder of ``v`` modulo this subspace (zero at every pivot)."""
        p = self.field.characteristic
        w = list(v)
        for row, c in zip(self.basis, self.pivots):
            a = w[c]
            if a:
                if p:
                    w = [(x - a * y) % p for x, y in zip(w, row)]
                else:
                    w = [x - a * y for x, y in zip(w, row)]
        return w

    def contains(self, v: Sequence) -> bool:
        return not any(self.reduce(v))

    def __contains__(self, v) -> bool:
        return self.contains(v)

    def __le__(self, other: "Subspace") -> bool:
        return self.dim <= other.dim and all(other.contains(b) for b in self.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        if other.dim == 0:
            return self
        if self.dim == 0:
            return other
        return Subspace.span(self.field, self.ambient_dim, self.basis + other.basis)

    def with_vectors(self, vectors: Iterable[Sequence]) -> "Subspace":
        return Subspace.span(self.field, self.ambient_dim, self.basis + tuple(tuple(v) for v in vectors))

    def annihilator(self) -> "Subspace":
        """Orthogonal complement under the standard pairing."""
        return Subspace.annihilator_of(self.field, self.ambient_dim, self.basis)

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.field, self.ambient_dim)
        forms = self.annihilator().basis + other.annihilator().basis
        return Subspace.annihilator_of(self.field, self.ambient_dim, forms)

    def __and__(self, other: "Subspace") -> "Subspace":
        return self.intersect(other)

    def image(self, m: Matrix) -> "Subspace":
        return Subspace.span(self.field, m.rows, [m.apply(b) for b in self.basis])

    def preimage(self, m: Matrix) -> "Subspace":
        """``{v : m v in self}``."""
        forms = self.annihilator().basis
        if not forms:
            return Subspace.full(self.field, m.cols)
        cols = m.columns()
        p = self.field.characteristic
        rows = []
        for f in forms:
            r = []
            for c in cols:
                s = sum(a * b for a, b in zip(f, c))
                r.append(s % p if p else s)
            rows.append(r)
        return Subspace.annihilator_of(self.field, m.cols, rows)

    def complement_indices(self) -> list[int]:
        """Coordinates that are not pivots; their unit vectors span a complement."""
        piv = set(self.pivots)
        return [c for c in range(self.ambient_dim) if c not in piv]

    def is_coordinate_wrt(self, basis: Sequence[Sequence]) -> bool:
        """True iff this subspace is spanned by the basis vectors it contains."""
        inside = [b for b in basis if self.contains(b)]
        return Subspace.span(self.field, self.ambient_dim, inside).dim == self.dim

    def reduce_mod(self, p: int) -> "Subspace":
        F = FieldSpec.prime(p)
        return Subspace.span(F, self.ambient_dim, [tuple(F(v) for v in b) for b in self.basis])


def rank_kernel_image(m: Matrix) -> tuple[int, Subspace, Subspace]:
    image = m.image()
    kernel = m.kernel()
    return image.dim, kernel, image


def solve_preimage(m: Matrix, target: Sequence) -> Vector | None:
    """Canonical solution of ``m v = target``: pivot variables solved, free ones zero."""
    if len(target) != m.rows:
        raise ValueError("target length does not match matrix rows")
    F = m.field
    aug = [list(r) + [F(t)] for r, t in zip(m.data, target)]
    red, piv = _reduce_rows(aug, m.cols + 1, F)
    if piv and piv[-1] == m.cols:
        return None
    v = [F(0)] * m.cols
    for r, c in zip(red, piv):
        v[c] = r[m.cols]
    return tuple(v)


def _rref_cells(n: int, k: int) -> Iterator[tuple[tuple[int, ...], list[tuple[int, int]]]]:
    for pivots in itertools.combinations(range(n), k):
        pset = set(pivots)
        free = [(r, c) for r, pc in enumerate(pivots) for c in range(pc + 1, n) if c not in pset]
        yield pivots, free


def enumerate_rref(F: FieldSpec, n: int, k: int) -> Iterator[tuple]:
    """All k x n RREF matrices of rank k over a prime field, as tuples of rows."""
    if not F.is_prime_field:
        raise ValueError("subspace enumeration needs a prime field")
    if not 0 <= k <= n:
        raise ValueError(f"cannot choose {k}-subspaces of a {n}-space")
    elems = F.elements()
    for pivots, free in _rref_cells(n, k):
        base = [[0] * n for _ in range(k)]
        for r, c in enumerate(pivots):
            base[r][c] = 1
        for values in itertools.product(elems, repeat=len(free)):
            for (r, c), v in zip(free, values):
                base[r][c] = v
            yield tuple(tuple(row) for row in base)


def enumerate_subspaces(ambient: Subspace, k: int, F: FieldSpec | None = None) -> Iterator[Subspace]:
    """Every k-dimensional subspace of ``ambient`` exactly once."""
    F = F or ambient.field
    if not F.is_prime_field:
        raise ValueError("subspace enumeration needs a prime field")
    if F != ambient.field:
        raise ValueError("field does not match the ambient subspace")
    yield from enumerate_between(Subspace.zero(F, ambient.ambient_dim), ambient, k)


def enumerate_between(lower: Subspace, upper: Subspace, extra: int) -> Iterator[Subspace]:
    """Subspaces S with lower <= S <= upper and dim S = dim lower + extra."""
    F = upper.field
    if not F.is_prime_field:
        raise ValueError("subspace enumeration needs a prime field")
    p = F.characteristic
    # Complement of lower inside upper, taken from upper's basis.
    comp = []
    cur = lower
    for b in upper.basis:
        if not cur.contains(b):
            comp.append(b)
            cur = cur.with_vectors([b])
    d = len(comp)
    if not 0 <= extra <= d:
        return
    if extra == 0:
        yield lower
        return
    n = upper.ambient_dim
    if extra == d:
        yield upper
        return
    for coeffs in enumerate_rref(F, d, extra):
        new = []
        for row in coeffs:
            v = [0] * n
            for a, b in zip(row, comp):
                if a:
                    v = [(x + a * y) % p for x, y in zip(v, b)]
            new.append(v)
        yield lower.with_vectors(new)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    num = den = 1
    for s in range(k):
        num *= q ** (n - s) - 1
        den *= q ** (s + 1) - 1
    return num // den


@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial with rational coefficients, lowest degree first, no trailing zeros."""

    coefficients: tuple

    def __post_init__(self) -> None:
        c = [Fraction(a) for a in self.coefficients]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, q) -> Fraction:
        acc = Fraction(0)
        for a in reversed(self.coefficients):
            acc = acc * q + a
        return acc

    def __str__(self) -> str:
        if not self.coefficients:
            return "0"
        parts = []
        for d, a in enumerate(self.coefficients):
            if a:
                parts.append(format_scalar(a) + ("" if d == 0 else "*q" if d == 1 else f"*q^{d}"))
        return " + ".join(reversed(parts))


def lagrange_fit(points: Sequence[tuple[int, Fraction]]) -> IntPolynomial:
    coeffs = [Fraction(0)] * len(points)
    for i, (xi, yi) in enumerate(points):
        if not yi:
            continue
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            # multiply basis polynomial by (q - xj)
            basis = [Fraction(0)] + basis
            for d in range(len(basis) - 1):
                basis[d] -= xj * basis[d + 1]
            denom *= xi - xj
        scale = Fraction(yi) / denom
        for d, b in enumerate(basis):
            coeffs[d] += scale * b
    return IntPolynomial(tuple(coeffs))


def interpolate_and_eval1(
    samples: Sequence[tuple[int, object]], degree_bound: int, min_surplus: int = 1
) -> tuple[Fraction, IntPolynomial]:
    """Fit the first ``degree_bound + 1`` samples, check the rest, evaluate at 1.

    Raises :class:`NonPolynomialCount` if a surplus sample is off the curve.
    """
    qs = [q for q, _ in samples]
    if len(set(qs)) != len(qs):
        raise ValueError("sample abscissae must be distinct")
    if len(samples) < degree_bound + 1 + min_surplus:
        raise ValueError(
            f"{len(samples)} samples cannot fit degree {degree_bound} with {min_surplus} surplus check(s)"
        )
    fit = [(q, Fraction(c)) for q, c in samples[: degree_bound + 1]]
    poly = lagrange_fit(fit)
    for q, c in samples[degree_bound + 1 :]:
        if poly(q) != Fraction(c):
            raise NonPolynomialCount(f"non-polynomial count: fitted {poly} gives {poly(q)} at q={q}, observed {c}")
    return poly(1), poly
