"""The free associative algebra on generators e_i over Q.

Elements are finite Q-linear combinations of words; a word is a tuple of
vertex names, ``("i", "j")`` standing for ``e_i e_j``.  Nothing here knows
about the Serre quotient: relations are checked downstream by evaluating
linear forms that factor through it.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Mapping

Vertex = Hashable
Word = tuple


def weight(word: Iterable[Vertex]) -> Counter:
    """Multiplicity of each letter: the weight sum nu_i alpha_i as a Counter."""
    return Counter(word)


class FreeElement:
    """Immutable element of the free algebra: a map word -> nonzero Fraction."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Word, object] | None = None):
        clean: dict[Word, Fraction] = {}
        for w, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(w)] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def gen(cls, i: Vertex) -> "FreeElement":
        return cls({(i,): 1})

    @classmethod
    def word(cls, letters: Iterable[Vertex], coeff=1) -> "FreeElement":
        return cls({tuple(letters): coeff})

    @classmethod
    def one(cls) -> "FreeElement":
        return cls({(): 1})

    @classmethod
    def zero(cls) -> "FreeElement":
        return cls()

    @property
    def terms(self) -> dict[Word, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Word, Fraction]]:
        return iter(sorted(self._terms.items(), key=lambda t: tuple(map(str, t[0]))))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, word: Iterable[Vertex]) -> Fraction:
        return self._terms.get(tuple(word), Fraction(0))

    def __eq__(self, other) -> bool:
        if isinstance(other, FreeElement):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other: "FreeElement") -> "FreeElement":
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return FreeElement(out)

    def __neg__(self) -> "FreeElement":
        return FreeElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "FreeElement") -> "FreeElement":
        return self + (-other)

    def scale(self, c) -> "FreeElement":
        c = Fraction(c)
        return FreeElement({w: c * a for w, a in self._terms.items()})

    def __rmul__(self, c) -> "FreeElement":
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def __mul__(self, other) -> "FreeElement":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: dict[Word, Fraction] = {}
        for u, a in self._terms.items():
            for v, b in other._terms.items():
                w = u + v
                out[w] = out.get(w, 0) + a * b
        return FreeElement(out)

    def __pow__(self, n: int) -> "FreeElement":
        out = FreeElement.one()
        for _ in range(n):
            out = out * self
        return out

    def weights(self) -> set[frozenset]:
        return {frozenset(weight(w).items()) for w in self._terms}

    def is_homogeneous(self) -> bool:
        return len(self.weights()) <= 1

    def __repr__(self) -> str:
        return f"FreeElement({format_element(self)!r})"

    def __str__(self) -> str:
        return format_element(self)


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_element(a: FreeElement) -> str:
    if not a:
        return "0"
    parts = []
    for w, c in a.items():
        letters = ".".join(str(x) for x in w) if w else "()"
        parts.append(f"{_fmt_coeff(c)} * {letters}")
    return " + ".join(parts)


_TERM = re.compile(r"^\s*([+-]?\s*\d+(?:/\d+)?)\s*\*\s*(\(\)|[^\s*]+)\s*$")


def parse_element(text: str) -> FreeElement:
    """Parse ``"c * i1.i2 + c' * j"``; a bare word ``"i.j"`` has coefficient 1."""
    text = text.strip()
    if text in ("", "0"):
        return FreeElement()
    out: dict[Word, Fraction] = {}
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty term in {text!r}")
        m = _TERM.match(chunk)
        if m:
            coeff = Fraction(m.group(1).replace(" ", ""))
            letters = m.group(2)
        elif "*" not in chunk:
            coeff, letters = Fraction(1), chunk
        else:
            raise ValueError(f"cannot parse term {chunk!r}")
        w = () if letters == "()" else tuple(letters.split("."))
        out[w] = out.get(w, 0) + coeff
    return FreeElement(out)


def e(i: Vertex) -> FreeElement:
    return FreeElement.gen(i)


def divided_power(i: Vertex, p: int) -> FreeElement:
    """e_i^p / p! as a rational multiple of the word (i, ..., i)."""
    return FreeElement({(i,) * p: Fraction(1, math.factorial(p))})


def ad(i: Vertex, a: FreeElement) -> FreeElement:
    """The derivation D_i(a) = e_i a - a e_i."""
    out: dict[Word, Fraction] = {}
    for w, c in a._terms.items():
        left = (i,) + w
        right = w + (i,)
        out[left] = out.get(left, 0) + c
        out[right] = out.get(right, 0) - c
    return FreeElement(out)


def ad_power(i: Vertex, m: int, a: FreeElement) -> FreeElement:
    for _ in range(m):
        a = ad(i, a)
    return a


def f_gen(i: Vertex, j: Vertex, m: int) -> FreeElement:
    """sum_{p+q=m} (-1)^p e_i^p/p! e_j e_i^q/q!"""
    if i == j:
        raise ValueError("f_gen needs distinct vertices")
    if m < 0:
        raise ValueError("m must be nonnegative")
    terms = {}
    for p in range(m + 1):
        q = m - p
        terms[(i,) * p + (j,) + (i,) * q] = Fraction((-1) ** p, math.factorial(p) * math.factorial(q))
    return FreeElement(terms)


def segment_gen(i: Vertex, segment: Iterable[Vertex], m: int) -> FreeElement:
    """sum_{p+q=m} (-1)^p e_i^p/p! e_{s_1}...e_{s_r} e_i^q/q!; a one-letter segment gives f_gen."""
    segment = tuple(segment)
    if i in segment:
        raise ValueError("base vertex occurs in the segment")
    terms = {}
    for p in range(m + 1):
        q = m - p
        terms[(i,) * p + segment + (i,) * q] = Fraction((-1) ** p, math.factorial(p) * math.factorial(q))
    return FreeElement(terms)


def serre_element(i: Vertex, j: Vertex, cartan) -> FreeElement:
    return f_gen(i, j, 1 - cartan[i, j])


@dataclass(frozen=True)
class FWord:
    """The product f_{i,j_r,m_r} ... f_{i,j_1,m_1}; ``factors[0]`` is the rightmost."""

    base: Vertex
    factors: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple((j, int(m)) for j, m in self.factors))
        for j, m in self.factors:
            if j == self.base:
                raise ValueError(f"factor vertex {j!r} equals the base vertex")
            if m < 0:
                raise ValueError("factor exponents must be nonnegative")

    def check(self, cartan) -> None:
        for j, m in self.factors:
            if m > -cartan[self.base, j]:
                raise ValueError(f"factor ({j}, {m}) exceeds -a_{{{self.base}{j}}} = {-cartan[self.base, j]}")

    def weight(self) -> Counter:
        w = Counter()
        for j, m in self.factors:
            w[j] += 1
            if m:
                w[self.base] += m
        return w

    def reflected(self, cartan) -> tuple[int, "FWord"]:
        """(sign, word) with T_i(self) = sign * word."""
        self.check(cartan)
        sign = 1
        new = []
        for j, m in self.factors:
            sign *= (-1) ** m
            new.append((j, -cartan[self.base, j] - m))
        return sign, FWord(self.base, tuple(new))

    def __str__(self) -> str:
        return f"{self.base} | " + ", ".join(f"{j}:{m}" for j, m in self.factors)


def parse_fword(text: str) -> FWord:
    """Parse ``"i | j1:m1, j2:m2"`` (factors listed rightmost first)."""
    if "|" not in text:
        raise ValueError(f"fword {text!r} lacks the '|' separator")
    base, rest = text.split("|", 1)
    factors = []
    for chunk in rest.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        j, _, m = chunk.partition(":")
        if not _:
            raise ValueError(f"factor {chunk!r} is not of the form j:m")
        factors.append((j.strip(), int(m)))
    return FWord(base.strip(), tuple(factors))


def expand_fword(u: FWord) -> FreeElement:
    out = FreeElement.one()
    for j, m in reversed(u.factors):
        out = out * f_gen(u.base, j, m)
    return out


def reflect_fword(u: FWord, cartan) -> FreeElement:
    """T_i(u) on the generator presentation: f_{i,j,m} -> (-1)^m f_{i,j,-a_ij-m}."""
    sign, v = u.reflected(cartan)
    return expand_fword(v).scale(sign)


def leibniz_expand(base: Vertex, segment: Iterable[Vertex], m: int) -> FreeElement:
    """(-1)^m/m! D_base^m(e_{segment[0]} ... e_{segment[-1]}) in the free algebra."""
    segment = tuple(segment)
    if base in segment:
        raise ValueError("base vertex occurs in the segment")
    d = ad_power(base, m, FreeElement.word(segment))
    return d.scale(Fraction((-1) ** m, math.factorial(m)))


def leibniz_compositions(base: Vertex, segment: Iterable[Vertex], m: int) -> list[tuple[tuple, FreeElement]]:
    """Leibniz terms of (-1)^m/m! D^m(word): one product of f_gen per composition of m.

    Returns ``(exponents, product)`` pairs, exponents aligned with the segment.
    Their sum equals :func:`leibniz_expand` exactly in the free algebra.
    """
    segment = tuple(segment)
    out = []
    for ks in itertools.product(range(m + 1), repeat=len(segment)):
        if sum(ks) != m:
            continue
        prod = FreeElement.one()
        for j, k in zip(segment, ks):
            prod = prod * f_gen(base, j, k)
        out.append((ks, prod))
    return out


def leibniz_fwords(base: Vertex, segment: Iterable[Vertex], m: int) -> list[FWord]:
    """The subset terms v^J_{q} ... v^J_{p}: one FWord per m-subset J of the segment.

    ``segment`` is read left to right as the word e_{q_s} ... e_{p_s}; the
    returned FWords list their factors rightmost first.
    """
    segment = tuple(segment)
    out = []
    for chosen in itertools.combinations(range(len(segment)), m):
        cs = set(chosen)
        factors = tuple((segment[pos], 1 if pos in cs else 0) for pos in reversed(range(len(segment))))
        out.append(FWord(base, factors))
    return out


def leibniz_subset_sum(base: Vertex, segment: Iterable[Vertex], m: int) -> FreeElement:
    total = FreeElement()
    for u in leibniz_fwords(base, segment, m):
        total = total + expand_fword(u)
    return total


def reflect_sum(words: Iterable[FWord], cartan) -> FreeElement:
    total = FreeElement()
    for u in words:
        total = total + reflect_fword(u, cartan)
    return total
