from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preproj.adapted import (
    Diagram,
    FiltrationSetup,
    SetupError,
    adapted_basis,
    all_cases,
    all_diagrams,
    brute_force_integral,
    build_chart,
    check_adapted_basis,
    check_f0,
    chi_f0,
    condition_A,
    diagram_of,
    enumerate_side_f,
    enumerate_side_g,
    filtration_to_xi,
    make_setup,
    recipe_value,
    setup_auto_primes,
    setup_from_diagram,
    setup_good_prime,
    side_degree_bound,
    side_sum,
    twist,
    twist_J,
    twisted_diagram,
    validate_setup,
    verify_mainlemma,
    xi_to_filtration,
)
from preproj.exactlinalg import (
    QQ,
    FieldSpec,
    Matrix,
    NonPolynomialCount,
    Subspace,
    enumerate_between,
    interpolate_and_eval1,
    primes,
)
from preproj.flagchi import BadPrime
from preproj.suite import random_unipotent

from conftest import EXAMPLE1, EXAMPLE2

F2, F3 = FieldSpec.prime(2), FieldSpec.prime(3)


def conjugated(s: FiltrationSetup, u: Matrix) -> FiltrationSetup:
    """u x u^-1 and u W: the flag is preserved when u is upper triangular."""
    x = u @ s.x @ u.inverse()
    W = Subspace.span(s.field, s.n, [u.apply(b) for b in s.W.basis])
    return FiltrationSetup(x, W, s.J)


def diagrams_up_to(n: int) -> list[Diagram]:
    return [d for m in range(n + 1) for d in all_diagrams(m)]


# setups


def test_validate_items():
    good = make_setup([[0, 1], [0, 0]], [[1, 0]], [2])
    assert validate_setup(good) is None
    assert validate_setup(make_setup([[0, 0], [1, 0]], [[1, 0]], [2])).item == "d"
    assert validate_setup(make_setup([[0, 1], [0, 0]], [[0, 1]], [2])).item == "e"
    assert validate_setup(make_setup([[0, 1], [0, 0]], [[1, 0]], [1, 2])).item == "f"
    assert validate_setup(make_setup([[0, 1, 0], [0, 0, 1], [0, 0, 0]], [[1, 0, 0], [0, 1, 0]], [1, 2])).item == "d"


def test_reduce_mod_bad_prime():
    s = make_setup([[0, "1/3"], [0, 0]], [[1, 0]], [2])
    with pytest.raises(BadPrime):
        s.reduce_mod(3)
    assert not setup_good_prime(s, 3)
    assert setup_good_prime(s, 5)


# adapted basis and diagrams


def test_diagram_counts():
    # involutions of n points weighted by 2^(fixed points)
    expected = [1, 2, 5, 14, 43, 142]
    assert [sum(1 for _ in all_diagrams(n)) for n in range(6)] == expected


@pytest.mark.parametrize("d", diagrams_up_to(4), ids=str)
def test_diagram_of_standard_setup(d):
    s = setup_from_diagram(d, set(range(1, d.k + 1)))
    assert diagram_of(s) == d
    basis = adapted_basis(s)
    check_adapted_basis(s, basis)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_diagram_invariant_under_flag_stabiliser(seed, n):
    rng = random.Random(seed)
    ds = list(all_diagrams(n))
    d = rng.choice(ds)
    s = setup_from_diagram(d, set(range(1, d.k + 1)))
    t = conjugated(s, random_unipotent(rng, n))
    assert validate_setup(t) is None
    assert diagram_of(t) == d
    check_adapted_basis(t, adapted_basis(t))


def test_adapted_basis_nonstandard():
    s = make_setup([[0, 2, 1], [0, 0, 0], [0, 0, 0]], [[1, 0, 0]], [3])
    basis = adapted_basis(s)
    d = diagram_of(s)
    assert d.columns == ((2, 1),) and d.isolated == (3,)
    assert s.x.apply(basis[1]) == basis[0]


def test_diagram_validation_and_render():
    with pytest.raises(SetupError):
        Diagram(3, ((1, 2),), (3,), frozenset({2}))
    with pytest.raises(SetupError):
        Diagram(3, ((2, 1),), (), frozenset({1}))
    d, _ = EXAMPLE2
    lines = d.render().splitlines()
    assert len(lines) == 2 and "[ 1]" in lines[1] and "( 7)" in lines[0]


# recipe and charts


def test_recipe_values():
    d, J = EXAMPLE1
    assert condition_A(d, J) and recipe_value(d, J) == 1
    d2, J2 = EXAMPLE2
    assert recipe_value(d2, J2) == 0
    with pytest.raises(SetupError):
        recipe_value(d, {1})


def test_example1_chart_shape():
    d, J = EXAMPLE1
    chart = build_chart(d, J)
    assert chart.rows == (2, 3, 7, 9) and chart.cols == (1, 2, 3, 5)
    assert chart.free == ((7, 2), (9, 2))
    assert chart.describe() == [
        ["0", "1", "0", "0"],
        ["0", "0", "1", "0"],
        ["0", "xi72", "0", "1"],
        ["1", "xi92", "0", "0"],
    ]
    for p in (2, 3, 5):
        pts = list(chart.points(FieldSpec.prime(p)))
        assert all(xi[2, 1] == 0 for xi in pts)
        assert len(pts) == p


def test_example2_chart_determinant():
    d, J = EXAMPLE2
    chart = build_chart(d, J)
    assert chart.free == ((5, 1), (5, 2), (6, 1), (6, 2))
    F = FieldSpec.prime(3)
    for vals in itertools.product(range(3), repeat=4):
        xi = chart.instance(F, vals)
        a, b, c, e = vals
        assert chart.satisfies(xi) == ((a * e - b * c) % 3 != 0)


def test_empty_chart_when_A_fails():
    d = Diagram(2, ((2, 1),), (), frozenset({1}))
    chart = build_chart(d, {1})
    assert condition_A(d, {2}) and not condition_A(Diagram(2, (), (1, 2), frozenset({1})), {2})
    assert not chart.empty
    assert build_chart(Diagram(2, (), (1, 2), frozenset({1})), {2}).empty


@pytest.mark.parametrize("n", range(0, 5))
def test_chi_f0_from_chart_counts(n):
    for d, J in all_cases(n):
        if d.n != n:
            continue
        chart = build_chart(d, J)
        if chart.empty:
            assert chi_f0(d, J) == 0
            continue
        bound = chart.free_count
        ps = list(itertools.islice(primes(), bound + 3))
        value, _ = interpolate_and_eval1([(p, chart.point_count(FieldSpec.prime(p))) for p in ps], bound, 2)
        assert value == chi_f0(d, J)
        assert recipe_value(d, J) == (-1) ** len(J - d.gray) * chi_f0(d, J)


# bijection


@pytest.mark.parametrize("F", [F2, F3], ids=str)
def test_bijection_small(F):
    for d, J in all_cases(3):
        s = setup_from_diagram(d, J, F)
        basis = adapted_basis(s)
        chart = build_chart(d, J)
        fil = [X for X, _ in enumerate_side_f(s)]
        assert len(fil) == chart.point_count(F)
        for X in fil:
            check_f0(s, X)
            assert xi_to_filtration(filtration_to_xi(X, s, basis, d), chart, s, basis) == list(X)


def test_xi_outside_chart_rejected():
    d, J = EXAMPLE1
    s = setup_from_diagram(d, J, F3)
    chart = build_chart(d, J)
    with pytest.raises(SetupError):
        xi_to_filtration(chart.instance(F3, (1, 0)), chart, s, adapted_basis(s))


# counting kernel against the definitional enumerators


@pytest.mark.parametrize("p", [2, 3])
def test_side_sum_matches_enumerators(p):
    F = FieldSpec.prime(p)
    for d, J in all_cases(4):
        s = setup_from_diagram(d, J, F)
        assert side_sum(s, "F") == sum(v for _, v in enumerate_side_f(s))
        assert side_sum(s, "G") == sum(v for _, v in enumerate_side_g(s))


@pytest.mark.parametrize("example", [EXAMPLE1, EXAMPLE2], ids=["ex1", "ex2"])
def test_side_sum_matches_enumerators_on_examples(example):
    d, J = example
    for p in (2, 3):
        s = setup_from_diagram(d, J, FieldSpec.prime(p))
        assert side_sum(s, "F") == sum(v for _, v in enumerate_side_f(s))
        assert side_sum(s, "G") == sum(v for _, v in enumerate_side_g(s))


def test_side_sum_needs_prime_field(example1):
    with pytest.raises(ValueError):
        side_sum(example1, "F")
    with pytest.raises(ValueError):
        side_sum(example1.reduce_mod(2), "H")


# twist


@pytest.mark.parametrize("d", diagrams_up_to(4), ids=str)
def test_twist_involution(d):
    assert twisted_diagram(twisted_diagram(d)) == d
    for J in itertools.combinations(range(1, d.n + 1), d.k):
        s = setup_from_diagram(d, J)
        t = twist(s)
        assert diagram_of(t) == twisted_diagram(d)
        assert twist_J(t.J, d.n) == frozenset(J)
        assert diagram_of(twist(t)) == d


def test_twist_of_conjugated_setup():
    rng = random.Random(3)
    d, J = EXAMPLE2
    s = conjugated(setup_from_diagram(d, J), random_unipotent(rng, d.n))
    assert diagram_of(twist(s)) == twisted_diagram(d)


# integrals


def test_examples_main_lemma(example1, example2):
    r1 = verify_mainlemma(example1)
    assert r1.passed and set(r1.values.values()) == {1}
    assert [c for _, c in r1.side_f.curve.samples] == [p for p, _ in r1.side_f.curve.samples]
    r2 = verify_mainlemma(example2)
    assert r2.passed and set(r2.values.values()) == {0}


def test_degree_bounds(example1, example2):
    assert side_degree_bound(example1, "F") == 2
    assert side_degree_bound(example2, "F") == 4


def test_auto_primes_skip_bad_reductions():
    s = make_setup([[0, 2], [0, 0]], [[1, 0]], [2])
    assert not setup_good_prime(s, 2)
    assert setup_auto_primes(s, 0) == [3, 5, 7]


def test_forced_surplus_mismatch():
    s = make_setup([[0, 2], [0, 0]], [[1, 0]], [2])
    with pytest.raises(NonPolynomialCount):
        brute_force_integral(s, "F", primes=[2, 3, 5, 7])
    assert brute_force_integral(s, "F").value == -1


def test_brute_force_rejects_bad_input(example1):
    with pytest.raises(ValueError):
        brute_force_integral(example1, "X")
    with pytest.raises(ValueError):
        brute_force_integral(example1, "F", primes=[2, 3])
    with pytest.raises(ValueError):
        brute_force_integral(example1.reduce_mod(2), "F")


def test_main_lemma_on_nonstandard_setup():
    x = [[0, 0, 1, 3], [0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0]]
    s = make_setup(x, [[1, 0, 0, 0], [0, 1, 0, 0]], [2, 4])
    rep = verify_mainlemma(s)
    assert rep.passed, rep.message
    assert rep.recipe == recipe_value(diagram_of(s), s.J)


def test_invalid_setup_rejected():
    bad = make_setup([[0, 1], [0, 0]], [[0, 1]], [2])
    with pytest.raises(SetupError):
        verify_mainlemma(bad)


def test_field_helpers():
    s = make_setup([[0, 1], [0, 0]], [[1, 0]], [2], field=QQ)
    assert s.field == QQ and s.n == 2 and s.k == 1
    assert s.xV(2) == Subspace.coordinate(QQ, 2, [0])
    assert s.with_J({1}).J == frozenset({1})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([2, 3]))
def test_bijection_after_unipotent_conjugation(seed, n, p):
    rng = random.Random(seed)
    d = rng.choice(list(all_diagrams(n)))
    Js = [J for J in itertools.combinations(range(1, n + 1), d.k) if condition_A(d, J)]
    if not Js:
        return
    J = rng.choice(Js)
    # conjugate over F_p directly: a rational conjugate's canonical W basis may have p in a denominator
    s = conjugated(setup_from_diagram(d, J).reduce_mod(p), random_unipotent(rng, n).reduce_mod(p))
    F = s.field
    assert diagram_of(s) == d
    basis = adapted_basis(s)
    chart = build_chart(d, J)
    fil = [X for X, _ in enumerate_side_f(s)]
    assert len(fil) == chart.point_count(F)
    for X in fil:
        assert xi_to_filtration(filtration_to_xi(X, s, basis, d), chart, s, basis) == list(X)


def naive_side_sums(s: FiltrationSetup) -> tuple[int, int]:
    """Sum f and g over every chain with the right jumps, straight from the definitions."""
    n, F = s.n, s.field
    V = [s.V(p) for p in range(n + 1)]
    xV = [s.xV(p) for p in range(n + 1)]
    pre = [V[p].preimage(s.x) for p in range(n + 1)]
    full = Subspace.full(F, n)

    def chains(start, jumps, top):
        out = [[start]]
        for p in range(1, n + 1):
            nxt = []
            for c in out:
                step = 1 if jumps[p] else 0
                nxt.extend(c + [S] for S in enumerate_between(c[-1], top, step))
            out = nxt
        return [c for c in out if c[-1] == top]

    f_total = 0
    for X in chains(Subspace.zero(F, n), [False] + [p in s.J for p in range(1, n + 1)], s.W):
        if not all(xV[p] <= X[p] <= V[p] for p in range(n + 1)):
            continue
        val = 1
        for p in s.J:
            val *= 1 if not X[p] <= V[p - 1] else (-1 if not xV[p] <= X[p - 1] else 0)
        f_total += val
    g_total = 0
    for Y in chains(s.W, [False] + [p not in s.J for p in range(1, n + 1)], full):
        if not all(V[p] <= Y[p] <= pre[p] for p in range(n + 1)):
            continue
        val = 1
        for p in range(1, n + 1):
            if p not in s.J:
                val *= 1 if not V[p] <= Y[p - 1] else (-1 if not Y[p] <= pre[p - 1] else 0)
        g_total += val
    return f_total, g_total


@pytest.mark.parametrize("p", [2, 3])
def test_enumerators_match_naive_definition(p):
    F = FieldSpec.prime(p)
    for d, J in all_cases(3):
        s = setup_from_diagram(d, J, F)
        f, g = naive_side_sums(s)
        assert sum(v for _, v in enumerate_side_f(s)) == f
        assert sum(v for _, v in enumerate_side_g(s)) == g
