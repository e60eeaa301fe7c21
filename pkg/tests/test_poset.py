import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import le_count_dp, linear_extensions_naive, random_sp_order
from vsporder.errors import CycleDetected, OracleBoundExceeded, UnknownActor
from vsporder.poset import (
    PartialOrder,
    depth,
    enumerate_linear_extensions,
    enumerate_posets,
    enumerate_vsps,
    find_forbidden,
    is_vsp,
    restrict,
    transitive_closure,
    transitive_reduction,
)


def test_closure_of_chain_edges():
    po = transitive_closure(np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], bool), "abc")
    assert po.edges() == {("a", "b"), ("b", "c"), ("a", "c")}


def test_closure_rejects_cycle():
    raw = np.zeros((3, 3), bool)
    raw[0, 1] = raw[1, 2] = raw[2, 0] = True
    with pytest.raises(CycleDetected):
        transitive_closure(raw)


def test_from_edges_unknown_actor():
    with pytest.raises(UnknownActor):
        PartialOrder.from_edges([1, 2], [(1, 3)])


def test_constructor_checks():
    with pytest.raises(CycleDetected):
        PartialOrder([1, 2], [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        PartialOrder([1, 2, 3], [[0, 1, 0], [0, 0, 1], [0, 0, 0]])


def test_relation_is_readonly(v0):
    with pytest.raises(ValueError):
        v0.relation[0, 0] = True


def test_equality_ignores_label_order(v0):
    w = v0.reorder([5, 4, 3, 2, 1])
    assert w == v0 and hash(w) == hash(v0)
    assert v0 != PartialOrder.empty([1, 2, 3, 4, 5])


def test_reduction_of_v0(v0):
    assert transitive_reduction(v0) == {(1, 2), (1, 3), (3, 4), (4, 5), (2, 5)}


def test_depth(v0):
    assert depth(v0) == 4
    assert depth(PartialOrder.chain(range(6))) == 6
    assert depth(PartialOrder.empty(range(6))) == 1


def test_restrict(v0):
    r = restrict(v0, [2, 3, 5])
    assert r.edges() == {(2, 5), (3, 5)}


def test_forbidden_pattern(n_order, v0):
    assert find_forbidden(n_order) == (1, 2, 3, 4)
    assert not is_vsp(n_order)
    assert is_vsp(v0)


def test_v0_has_three_extensions(v0):
    les = enumerate_linear_extensions(v0)
    assert len(les) == 3
    assert set(les) == set(linear_extensions_naive(v0))


def test_extension_bound():
    with pytest.raises(OracleBoundExceeded):
        enumerate_linear_extensions(PartialOrder.empty(range(11)))


def test_poset_counts():
    # labelled poset counts, OEIS A001035
    assert [len(enumerate_posets(n)) for n in range(1, 6)] == [1, 3, 19, 219, 4231]


def test_vsp_counts():
    # labelled series-parallel orders, OEIS A006351
    assert [len(enumerate_vsps(n)) for n in range(1, 6)] == [1, 3, 19, 195, 2791]


def test_poset_enumeration_bound():
    with pytest.raises(OracleBoundExceeded):
        enumerate_posets(6)


def test_every_sp_composition_is_vsp():
    rng = np.random.default_rng(0)
    for _ in range(200):
        assert is_vsp(random_sp_order(int(rng.integers(1, 9)), rng))


@st.composite
def dags(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    raw = np.triu(np.array(bits, bool).reshape(n, n), 1)
    perm = draw(st.permutations(range(n)))
    return raw[np.ix_(perm, perm)]


@given(dags())
@settings(max_examples=60, deadline=None)
def test_closure_and_reduction_roundtrip(raw):
    po = transitive_closure(raw)
    red = transitive_reduction(po)
    assert PartialOrder.from_edges(po.labels, red) == po
    # every raw edge survives closure, reduction edges are not implied by others
    assert all(po.relation[i, j] for i, j in zip(*np.nonzero(raw)))
    for e in red:
        assert PartialOrder.from_edges(po.labels, red - {e}) != po


@given(dags(max_n=6))
@settings(max_examples=60, deadline=None)
def test_extension_count_matches_dp(raw):
    po = transitive_closure(raw)
    assert len(enumerate_linear_extensions(po)) == le_count_dp(po.relation)


@given(dags(max_n=6))
@settings(max_examples=60, deadline=None)
def test_vsp_iff_no_induced_n(raw):
    po = transitive_closure(raw)
    rel = po.relation
    comp = rel | rel.T
    found = False
    for quad in itertools.permutations(range(po.n), 4):
        a, b, c, d = quad
        if rel[a, c] and rel[a, d] and rel[b, d] and not comp[a, b] and not comp[b, c] and not comp[c, d]:
            found = True
            break
    assert is_vsp(po) == (not found)
