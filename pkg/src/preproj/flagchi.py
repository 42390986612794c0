"""Linear forms delta_M on the free algebra, via counts of submodule flags.

The value of delta_M on a word e_{i_1} ... e_{i_n} is the Euler characteristic
of the variety of chains of submodules 0 = N_0 < ... < N_n = M with
N_s / N_{s-1} simple at the vertex read from the *right* end of the word.
Euler characteristics are obtained by counting F_p-points for several primes,
fitting a polynomial in q and evaluating it at q = 1.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exactlinalg import (
    IntPolynomial,
    NonPolynomialCount,
    Subspace,
    enumerate_between,
    gaussian_binomial,
    interpolate_and_eval1,
    primes as prime_stream,
)
from .freealg import FreeElement, FWord, expand_fword, reflect_fword
from .quiver import LambdaModule, cartan_matrix, check_module, phi_stats, sigma_star

MIN_SURPLUS = 2


class WeightMismatch(ValueError):
    pass


class BadPrime(ValueError):
    pass


@dataclass(frozen=True)
class FlagSpec:
    """Steps (vertex, multiplicity), bottom first."""

    steps: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple((v, int(m)) for v, m in self.steps))
        if any(m < 1 for _, m in self.steps):
            raise ValueError("step multiplicities must be >= 1")

    @classmethod
    def from_word(cls, word: Sequence) -> tuple["FlagSpec", int]:
        """Flag type of a word, runs of equal letters merged.

        Returns ``(spec, factor)`` with e_i^m = factor * (e_i^m / m!) accounted for.
        """
        steps: list[list] = []
        for v in reversed(tuple(word)):
            if steps and steps[-1][0] == v:
                steps[-1][1] += 1
            else:
                steps.append([v, 1])
        factor = 1
        for _, m in steps:
            factor *= math.factorial(m)
        return cls(tuple((v, m) for v, m in steps)), factor

    def weight(self) -> Counter:
        w = Counter()
        for v, m in self.steps:
            w[v] += m
        return w

    def degree_bound(self, dims: Mapping[str, int]) -> int:
        """Dimension of the ambient product of partial flag varieties."""
        used: Counter = Counter()
        total = 0
        for v, m in self.steps:
            total += m * (dims.get(v, 0) - used[v] - m)
            used[v] += m
        return total


def _check_weight(m: LambdaModule, w: Counter) -> None:
    if {v: c for v, c in w.items() if c} != m.dimvec():
        raise WeightMismatch(f"weight {dict(w)} does not match dimension vector {m.dimvec()}")


def submodule_flag_count(m: LambdaModule, spec: FlagSpec) -> int:
    """Number of F_p-rational submodule chains of the given flag type."""
    if not m.field.is_prime_field:
        raise ValueError("point counting needs a module over a prime field")
    _check_weight(m, spec.weight())
    F = m.field
    g = m.graph
    verts = g.vertices
    outs = {v: g.out_arrows(v) for v in verts}
    nbrs = {v: g.neighbours(v) for v in verts}
    detached = [
        not any(v in nbrs[i] for v, _ in spec.steps[s + 1 :]) for s, (i, _) in enumerate(spec.steps)
    ]
    memo: dict = {}

    def count(s: int, state: tuple) -> int:
        if s == len(spec.steps):
            return 1
        key = (s, state)
        if key in memo:
            return memo[key]
        i, mult = spec.steps[s]
        cur = dict(zip(verts, state))
        allowed = Subspace.full(F, m.dim(i))
        for a in outs[i]:
            allowed = allowed & cur[a.target].preimage(m.maps[a.id])
        total = 0
        idx = verts.index(i)
        if detached[s]:
            # later steps never look at M_i again, so every choice contributes equally
            choices = gaussian_binomial(allowed.dim - cur[i].dim, mult, F.characteristic)
            if choices:
                new = next(enumerate_between(cur[i], allowed, mult))
                total = choices * count(s + 1, state[:idx] + (new,) + state[idx + 1 :])
        else:
            for new in enumerate_between(cur[i], allowed, mult):
                total += count(s + 1, state[:idx] + (new,) + state[idx + 1 :])
        memo[key] = total
        return total

    start = tuple(Subspace.zero(F, m.dim(v)) for v in verts)
    return count(0, start)


def _entries(m: LambdaModule) -> Iterable[Fraction]:
    for mat in m.maps.values():
        for r in mat.data:
            for v in r:
                if v:
                    yield Fraction(v)


def is_good_prime(m: LambdaModule, p: int) -> bool:
    """p avoids every entry's numerator and denominator and keeps all arrow ranks."""
    for v in _entries(m):
        if v.denominator % p == 0 or v.numerator % p == 0:
            return False
    red = m.reduce_mod(p)
    return all(m.maps[h].rank() == red.maps[h].rank() for h in m.maps)


def auto_primes(modules: Sequence[LambdaModule], degree_bound: int) -> list[int]:
    """First ``degree_bound + 3`` primes that are good for every module."""
    out = []
    for p in prime_stream():
        if all(is_good_prime(m, p) for m in modules):
            out.append(p)
            if len(out) == degree_bound + 1 + MIN_SURPLUS:
                return out
    raise AssertionError("unreachable")


def _reduce(m: LambdaModule, p: int) -> LambdaModule:
    for v in _entries(m):
        if v.denominator % p == 0:
            raise BadPrime(f"bad prime {p}: it divides the denominator of {v}")
    return m.reduce_mod(p)


@dataclass(frozen=True)
class CountCurve:
    samples: tuple  # ((q, N(q)), ...)
    degree_bound: int


@dataclass(frozen=True)
class EulerResult:
    value: int
    curve: CountCurve
    fitted: IntPolynomial


def euler_characteristic(m: LambdaModule, spec: FlagSpec, primes: Sequence[int] | None = None) -> EulerResult:
    if m.field.is_prime_field:
        raise ValueError("euler_characteristic expects a module over Q")
    _check_weight(m, spec.weight())
    bound = spec.degree_bound(m.dims)
    if primes is None:
        primes = auto_primes([m], bound)
    primes = list(primes)
    if len(primes) < bound + 1 + MIN_SURPLUS:
        raise ValueError(f"need at least {bound + 1 + MIN_SURPLUS} primes for degree bound {bound}")
    samples = tuple((p, submodule_flag_count(_reduce(m, p), spec)) for p in primes)
    value, poly = interpolate_and_eval1(samples, bound, MIN_SURPLUS)
    if value.denominator != 1:
        raise NonPolynomialCount(f"non-polynomial count: value at q=1 is {value}")
    return EulerResult(int(value), CountCurve(samples, bound), poly)


@dataclass
class DeltaResult:
    value: Fraction
    primes: list
    curve: list  # [(q, combined count)]
    words: dict = field(default_factory=dict)  # word -> EulerResult


_word_cache: dict = {}


def _word_result(m: LambdaModule, word: tuple, primes: tuple) -> tuple[EulerResult, int]:
    key = (m.key(), word, primes)
    if key not in _word_cache:
        spec, factor = FlagSpec.from_word(word)
        _word_cache[key] = (euler_characteristic(m, spec, primes), factor)
    return _word_cache[key]


def element_degree_bound(m: LambdaModule, u: FreeElement) -> int:
    bounds = [FlagSpec.from_word(w)[0].degree_bound(m.dims) for w, _ in u.items()]
    return max(bounds, default=0)


def delta_detail(m: LambdaModule, u: FreeElement, primes: Sequence[int] | None = None) -> DeltaResult:
    for w, _ in u.items():
        _check_weight(m, Counter(w))
    if primes is None:
        primes = auto_primes([m], element_degree_bound(m, u))
    primes = tuple(primes)
    total = Fraction(0)
    curve = {p: Fraction(0) for p in primes}
    words = {}
    for w, c in u.items():
        res, factor = _word_result(m, w, primes)
        words[w] = res
        total += c * factor * res.value
        for q, n in res.curve.samples:
            curve[q] += c * factor * n
    return DeltaResult(total, list(primes), sorted(curve.items()), words)


def delta_eval(m: LambdaModule, u: FreeElement, primes: Sequence[int] | None = None) -> Fraction:
    """<delta_M, u>, extended linearly over the words of u."""
    return delta_detail(m, u, primes).value


@dataclass
class GenFormReport:
    precondition_ok: bool
    passed: bool
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    primes: list = field(default_factory=list)
    curve_lhs: list = field(default_factory=list)
    curve_rhs: list = field(default_factory=list)
    message: str = ""


def verify_genform(m: LambdaModule, i: str, u: FWord, primes: Sequence[int] | None = None) -> GenFormReport:
    """Compare <delta_M, u> with <delta_{Sigma_i^* M}, T_i(u)>; needs ker m_out(i) = 0."""
    check_module(m)
    if u.base != i:
        raise ValueError(f"fword base {u.base!r} is not the vertex {i!r}")
    cartan = cartan_matrix(m.graph)
    try:
        u.check(cartan)
    except ValueError as exc:
        raise WeightMismatch(str(exc)) from None
    _check_weight(m, u.weight())
    ker_out = phi_stats(m, i)[1]
    if ker_out:
        return GenFormReport(False, False, message=f"precondition violated: dim ker m_out({i}) = {ker_out}")
    reflected_module = sigma_star(m, i)
    check_module(reflected_module)
    lhs_el = expand_fword(u)
    rhs_el = reflect_fword(u, cartan)
    if primes is None:
        bound = max(element_degree_bound(m, lhs_el), element_degree_bound(reflected_module, rhs_el))
        primes = auto_primes([m, reflected_module], bound)
    left = delta_detail(m, lhs_el, primes)
    right = delta_detail(reflected_module, rhs_el, primes)
    ok = left.value == right.value
    return GenFormReport(
        True,
        ok,
        left.value,
        right.value,
        list(primes),
        left.curve,
        right.curve,
        "identity holds" if ok else f"identity fails: {left.value} != {right.value}",
    )


def module_fwords(m: LambdaModule, i: str) -> list[FWord]:
    """Every FWord based at ``i`` whose weight equals the dimension vector of ``m``."""
    cartan = cartan_matrix(m.graph)
    letters = []
    for v in m.graph.vertices:
        if v != i:
            letters += [v] * m.dim(v)
    orders = sorted(set(itertools.permutations(letters)))
    out = []
    target = m.dim(i)
    for order in orders:
        caps = [-cartan[i, j] for j in order]
        for ms in _bounded_compositions(target, caps):
            out.append(FWord(i, tuple(zip(order, ms))))
    return out


def _bounded_compositions(total: int, caps: Sequence[int]) -> Iterable[tuple]:
    if not caps:
        if total == 0:
            yield ()
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in _bounded_compositions(total - first, caps[1:]):
            yield (first,) + rest

