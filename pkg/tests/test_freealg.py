from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preproj.freealg import (
    FreeElement,
    FWord,
    ad,
    ad_power,
    divided_power,
    e,
    expand_fword,
    f_gen,
    format_element,
    leibniz_compositions,
    leibniz_expand,
    leibniz_fwords,
    leibniz_subset_sum,
    parse_element,
    parse_fword,
    reflect_fword,
    reflect_sum,
    segment_gen,
    serre_element,
    weight,
)
from preproj.quiver import cartan_matrix, dynkin_a, star_quiver

LETTERS = ["1", "2", "3"]

words = st.lists(st.sampled_from(LETTERS), max_size=4).map(tuple)
coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=4)
elements = st.dictionaries(words, coeffs, max_size=4).map(FreeElement)


@given(elements, elements)
def test_derivation_law(a, b):
    for i in LETTERS:
        assert ad(i, a * b) == ad(i, a) * b + a * ad(i, b)


@given(elements, elements)
def test_product_weights_add(a, b):
    for u, _ in a.items():
        for v, _ in b.items():
            assert weight(u + v) == weight(u) + weight(v)


@given(elements)
def test_format_parse_roundtrip(a):
    assert parse_element(format_element(a)) == a


@given(elements, elements, elements)
@settings(max_examples=40)
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0


def test_parse_forms():
    assert parse_element("1.2") == FreeElement.word(("1", "2"))
    assert parse_element("-1/2 * 1.1 + 3 * ()") == FreeElement({("1", "1"): Fraction(-1, 2), (): 3})
    assert parse_element("0") == 0
    with pytest.raises(ValueError):
        parse_element("2 * * 1")


def test_divided_power():
    assert divided_power("1", 3) == (e("1") ** 3).scale(Fraction(1, 6))


@pytest.mark.parametrize("graph", [dynkin_a(2), dynkin_a(3), star_quiver(3)], ids=["A2", "A3", "star3"])
def test_f_gen_is_scaled_derivative(graph):
    for a in graph.arrows.values():
        i, j = a.source, a.target
        for m in range(4):
            expected = ad_power(i, m, e(j)).scale(Fraction((-1) ** m, math.factorial(m)))
            assert f_gen(i, j, m) == expected


def test_serre_nesting():
    for m in range(4):
        assert ad("1", f_gen("1", "2", m)) == f_gen("1", "2", m + 1).scale(-(m + 1))


def test_serre_element_a2():
    c = cartan_matrix(dynkin_a(2))
    s = serre_element("1", "2", c)
    assert s == parse_element("1/2 * 1.1.2 + -1 * 1.2.1 + 1/2 * 2.1.1")


def test_reflection_rule():
    c = cartan_matrix(dynkin_a(2))
    assert reflect_fword(FWord("1", (("2", 0),)), c) == f_gen("1", "2", 1)
    assert reflect_fword(FWord("1", (("2", 1),)), c) == -e("2")
    with pytest.raises(ValueError):
        reflect_fword(FWord("1", (("2", 2),)), c)


def test_reflection_twice_sign():
    c = cartan_matrix(star_quiver(3))
    u = FWord("0", (("1", 1), ("2", 0), ("3", 1)))
    s1, v = u.reflected(c)
    s2, w = v.reflected(c)
    assert w == u
    assert s1 * s2 == (-1) ** len(u.factors)


def test_fword_parse_and_order():
    u = parse_fword("1 | 2:1, 3:0")
    assert u.factors == (("2", 1), ("3", 0))
    # factors[0] is the rightmost product factor
    assert expand_fword(u) == f_gen("1", "3", 0) * f_gen("1", "2", 1)
    with pytest.raises(ValueError):
        parse_fword("1 2:1")
    with pytest.raises(ValueError):
        FWord("1", (("1", 0),))


def test_segment_gen_reduces_to_f_gen():
    assert segment_gen("0", ("2",), 1) == f_gen("0", "2", 1)
    with pytest.raises(ValueError):
        segment_gen("0", ("0",), 1)


def test_leibniz_examples():
    assert leibniz_expand("0", ("1", "2"), 0) == FreeElement.word(("1", "2"))
    assert leibniz_expand("0", ("3",), 1) == f_gen("0", "3", 1)


@pytest.mark.parametrize("length", range(1, 5))
def test_leibniz_is_sum_of_compositions(length):
    seg = tuple(str(k) for k in range(1, length + 1))
    for m in range(length + 1):
        total = FreeElement()
        for _, prod in leibniz_compositions("0", seg, m):
            total = total + prod
        assert total == leibniz_expand("0", seg, m)


@pytest.mark.parametrize("length", range(1, 5))
def test_segment_reflection_identity(length):
    c = cartan_matrix(star_quiver(length))
    seg = tuple(str(k) for k in range(1, length + 1))
    for m in range(length + 1):
        lhs = reflect_sum(leibniz_fwords("0", seg, m), c)
        assert lhs == leibniz_subset_sum("0", seg, length - m).scale((-1) ** m)
