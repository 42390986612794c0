from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preproj.exactlinalg import (
    QQ,
    FieldSpec,
    IntPolynomial,
    Matrix,
    NonPolynomialCount,
    Subspace,
    enumerate_between,
    enumerate_rref,
    enumerate_subspaces,
    gaussian_binomial,
    interpolate_and_eval1,
    is_prime,
    lagrange_fit,
    primes,
    rank_kernel_image,
    solve_preimage,
)

small = st.integers(-4, 4)


def matrices(rows: int, cols: int):
    return st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


def q_binomial(n: int, k: int, q: int) -> int:
    # q-Pascal recursion, independent of the library's product formula
    if k < 0 or k > n:
        return 0
    if k == 0 or k == n:
        return 1
    return q_binomial(n - 1, k - 1, q) + q**k * q_binomial(n - 1, k, q)


def test_primes_and_fields():
    assert list(itertools.islice(primes(), 6)) == [2, 3, 5, 7, 11, 13]
    assert not is_prime(1) and is_prime(97) and not is_prime(91)
    with pytest.raises(ValueError):
        FieldSpec(4)
    F = FieldSpec.prime(5)
    assert F(Fraction(1, 2)) == 3
    with pytest.raises(ZeroDivisionError):
        F(Fraction(1, 5))
    assert QQ("3/4") == Fraction(3, 4)


@given(matrices(3, 4))
def test_rank_nullity(rows):
    m = Matrix.from_rows(QQ, rows, cols=4)
    r, ker, img = rank_kernel_image(m)
    assert r + ker.dim == 4
    assert img.dim == r
    for v in ker.basis:
        assert not any(m.apply(v))


@given(matrices(3, 3))
def test_inverse_roundtrip(rows):
    m = Matrix.from_rows(QQ, rows, cols=3)
    if m.rank() < 3:
        return
    assert m @ m.inverse() == Matrix.identity(QQ, 3)


@given(matrices(2, 4), matrices(2, 4))
def test_sum_intersection_dimension(a, b):
    A = Subspace.span(QQ, 4, a)
    B = Subspace.span(QQ, 4, b)
    assert (A + B).dim + (A & B).dim == A.dim + B.dim
    assert (A & B) <= A and (A & B) <= B
    assert A.annihilator().dim == 4 - A.dim


@given(matrices(3, 3), st.lists(small, min_size=3, max_size=3))
def test_solve_preimage(rows, x):
    m = Matrix.from_rows(QQ, rows, cols=3)
    target = m.apply([QQ(v) for v in x])
    sol = solve_preimage(m, target)
    assert sol is not None and tuple(m.apply(sol)) == tuple(target)


def test_preimage_of_subspace():
    x = Matrix.from_rows(QQ, [[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    line = Subspace.coordinate(QQ, 3, [0])
    assert line.preimage(x) == Subspace.coordinate(QQ, 3, [0, 1])


@pytest.mark.parametrize("q", [2, 3, 5])
@pytest.mark.parametrize("n", range(0, 5))
def test_subspace_enumeration_counts(q, n):
    F = FieldSpec.prime(q)
    full = Subspace.full(F, n)
    for k in range(n + 1):
        subs = list(enumerate_subspaces(full, k))
        assert len(subs) == q_binomial(n, k, q) == gaussian_binomial(n, k, q)
        assert len(set(subs)) == len(subs)


def test_rref_rows_are_reduced():
    F = FieldSpec.prime(3)
    for rows in enumerate_rref(F, 4, 2):
        assert Subspace.span(F, 4, rows).basis == rows


def test_enumerate_between():
    F = FieldSpec.prime(2)
    lo = Subspace.coordinate(F, 4, [0])
    hi = Subspace.coordinate(F, 4, [0, 1, 2])
    mids = list(enumerate_between(lo, hi, 1))
    assert len(mids) == q_binomial(2, 1, 2)
    assert all(lo <= m <= hi and m.dim == 2 for m in mids)


def test_interpolation():
    samples = [(q, q**3 - 2 * q + 5) for q in (2, 3, 5, 7, 11, 13)]
    value, poly = interpolate_and_eval1(samples, 3, 2)
    assert value == 4
    assert poly == IntPolynomial((5, -2, 0, 1))
    assert lagrange_fit([(2, 4), (3, 9), (5, 25)])(7) == 49


def test_interpolation_surplus_mismatch():
    samples = [(2, 0), (3, -1), (5, -1), (7, -1)]
    with pytest.raises(NonPolynomialCount):
        interpolate_and_eval1(samples, 0, 2)
    with pytest.raises(ValueError):
        interpolate_and_eval1(samples[:2], 1, 2)


@settings(max_examples=30)
@given(matrices(3, 3), st.sampled_from([2, 3, 5, 7]))
def test_reduce_mod_rank_bound(rows, p):
    m = Matrix.from_rows(QQ, rows, cols=3)
    assert m.reduce_mod(p).rank() <= m.rank()
