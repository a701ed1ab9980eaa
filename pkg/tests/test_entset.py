import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dssbound.entset import (ALPHA, EQ, GE, LE, LinearConstraint, deduplicate, elemental_count,
                             elemental_inequalities, members, parse_varset, render,
                             subset_lattice, varset)
from dssbound.model import CapacityError, DssParams, Storage, Universe


def toy_universe(n_vars):
    """A bare universe of n_vars anonymous variables (names only matter for rendering)."""
    params = DssParams(2, 1, 1)
    vars_ = tuple(Storage(i + 1) for i in range(n_vars))
    return Universe(params, vars_, {v: p for p, v in enumerate(vars_)})


def brute_force_elemental(n_vars):
    """Independent enumeration: H(V) - H(V - i) >= 0 and I(i;j|K) >= 0 for i < j."""
    full = (1 << n_vars) - 1
    rows = set()

    def add(terms):
        con = LinearConstraint.build([(m, c) for m, c in terms if m], GE, 0)
        rows.add(con.key())

    for i in range(n_vars):
        add([(full, 1), (full & ~(1 << i), -1)])
    for i, j in itertools.combinations(range(n_vars), 2):
        rest = [p for p in range(n_vars) if p not in (i, j)]
        for r in range(len(rest) + 1):
            for K in itertools.combinations(rest, r):
                k = sum(1 << p for p in K)
                add([(k | 1 << i, 1), (k | 1 << j, 1), (k | 1 << i | 1 << j, -1), (k, -1)])
    return rows


@pytest.mark.parametrize("n_vars", [2, 3, 4, 5, 6])
def test_elemental_count_formula(n_vars):
    cons = elemental_inequalities(toy_universe(n_vars))
    assert len(cons) == elemental_count(n_vars) == n_vars + math.comb(n_vars, 2) * 2 ** (n_vars - 2)


@pytest.mark.parametrize("n_vars", [2, 3, 4])
def test_elemental_matches_brute_force(n_vars):
    got = {c.key() for c in elemental_inequalities(toy_universe(n_vars))}
    assert got == brute_force_elemental(n_vars)
    assert len(got) == elemental_count(n_vars)


def test_n2_rows():
    cons = elemental_inequalities(toy_universe(2))
    described = [c.as_dict() for c in cons]
    assert described == [{3: 1, 2: -1}, {3: 1, 1: -1}, {1: 1, 2: 1, 3: -1}]
    assert [c.provenance for c in cons] == ["elemental-H", "elemental-H", "elemental-I"]


def test_322_count():
    from dssbound.model import enumerate_universe
    assert len(elemental_inequalities(enumerate_universe(DssParams(3, 2, 2)))) == 11530


def test_elemental_is_deterministic():
    u = toy_universe(4)
    assert elemental_inequalities(u) == elemental_inequalities(u)


def entropy_vector(pmf, n_vars):
    H = np.zeros(1 << n_vars)
    outcomes = list(itertools.product((0, 1), repeat=n_vars))
    for m in range(1, 1 << n_vars):
        marg = {}
        for o, p in zip(outcomes, pmf):
            key = tuple(o[q] for q in members(m))
            marg[key] = marg.get(key, 0.0) + p
        H[m] = -sum(p * math.log2(p) for p in marg.values() if p > 0)
    return H


@given(st.integers(2, 4).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 9), min_size=2 ** n, max_size=2 ** n)
                        .filter(lambda w: sum(w) > 0))))
def test_elemental_valid_on_distributions(case):
    n_vars, weights = case
    pmf = np.array(weights, dtype=float) / sum(weights)
    H = entropy_vector(pmf, n_vars)
    for con in elemental_inequalities(toy_universe(n_vars)):
        assert float(con.evaluate(lambda m: Fraction(H[m]))) >= -1e-9


def test_subset_lattice():
    assert list(subset_lattice(toy_universe(4)))[:3] == [1, 2, 3]
    assert len(list(subset_lattice(toy_universe(4)))) == 15
    assert list(subset_lattice(toy_universe(1))) == [1]
    from dssbound.model import enumerate_universe
    assert sum(1 for _ in subset_lattice(enumerate_universe(DssParams(3, 2, 2)))) == 1023


def test_width_limit():
    with pytest.raises(CapacityError):
        list(subset_lattice(toy_universe(65)))
    with pytest.raises(CapacityError):
        elemental_inequalities(toy_universe(30))


def test_render_roundtrip(u322):
    m = varset(u322, [u322.parse_var("Y1"), u322.parse_var("U2[1]")])
    assert render(u322, m) == "{Y1,U2[1]}"
    assert parse_varset(u322, "{Y1,U2[1]}") == m
    assert parse_varset(u322, "U2[1],Y1") == m


def test_normalization():
    c = LinearConstraint.build([(3, Fraction(-2, 3)), (1, Fraction(4, 3))], LE, Fraction(2, 3))
    n = c.normalized()
    assert n.as_dict() == {1: 2, 3: -1} and n.relation == LE and n.rhs == 1
    d = LinearConstraint.build([(1, -2), (3, 1)], GE, -1)
    assert d.normalized().relation == LE and d.key() == c.key()


def test_build_merges_and_drops_zeros():
    c = LinearConstraint.build([(5, 1), (5, -1), (2, 3)], EQ, 0)
    assert c.coeffs == ((2, Fraction(3)),)


def test_deduplicate_and_trivial():
    a = LinearConstraint.build([(1, 1)], GE, 0)
    b = LinearConstraint.build([(1, 2)], GE, 0)
    t = LinearConstraint.build([], EQ, 0)
    f = LinearConstraint.build([], GE, 1)
    out = deduplicate([a, b, t, f])
    assert len(out) == 2 and out[0].key() == a.key()
    assert not f.is_trivial()


def test_parameter_columns_sort_first():
    c = LinearConstraint.build([(4, 1), (ALPHA, -1)], LE, 0)
    assert c.columns == [ALPHA, 4]
