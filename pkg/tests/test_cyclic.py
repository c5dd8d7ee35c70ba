"""Cyclic order semantics, pinned by small frozen cases plus properties."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from peplan.cyclic import (
    CyclicOrder,
    InvalidElement,
    InvalidMerge,
    NotConsecutive,
)


def co(*items):
    return CyclicOrder(items)


class TestCanonicalAndEquality:
    def test_rotation_to_least(self):
        assert co(3, 1, 2).canonical().items == (1, 2, 3)

    def test_singleton(self):
        assert co("x").canonical().items == ("x",)

    def test_rotation_not_sort(self):
        assert co(2, 1, 3).canonical().items == (1, 3, 2)

    def test_equality_is_rotation(self):
        assert co(1, 2, 3) == co(2, 3, 1) == co(3, 1, 2)
        assert co(1, 2, 3) != co(1, 3, 2)

    def test_reversal_is_not_equality(self):
        assert co(1, 2, 3, 4) != co(1, 2, 3, 4).reverse()

    def test_duplicates_rejected(self):
        with pytest.raises(InvalidElement):
            co(1, 1, 2)


class TestReverse:
    def test_simple(self):
        assert co(1, 2, 3).reverse() == co(1, 3, 2)

    def test_two_elements_self_reverse(self):
        assert co("a", "b").reverse() == co("a", "b")

    def test_empty(self):
        assert co().reverse() == co()

    @given(st.lists(st.integers(), unique=True))
    def test_involution(self, xs):
        s = CyclicOrder(xs)
        assert s.reverse().reverse() == s


class TestMerge:
    def test_paper_shape(self):
        # [a,b,l] merged with [l,c,d] at l gives [a,b,c,d]
        assert co("a", "b", "l").merge(co("l", "c", "d"), "l") == co("a", "b", "c", "d")

    def test_singleton_removal(self):
        assert co("a", "l").merge(co("l"), "l") == co("a")

    def test_minimal_sides(self):
        assert co("l", "x").merge(co("y", "l"), "l") == co("x", "y")

    def test_shared_element_violation(self):
        with pytest.raises(InvalidMerge):
            co(1, 2, 9).merge(co(9, 2, 3), 9)
        with pytest.raises(InvalidMerge):
            co(1, 2).merge(co(3, 4), 9)


class TestConsecutive:
    def test_wraparound(self):
        assert co(1, 2, 3, 4).is_consecutive({4, 1})

    def test_split_pair(self):
        assert not co(1, 2, 3, 4).is_consecutive({1, 3})

    def test_singleton_always(self):
        assert co(1, 2, 3, 4).is_consecutive({2})

    def test_trivial_sizes(self):
        assert co(1, 2, 3).is_consecutive(set())
        assert co(1, 2, 3).is_consecutive({1, 2, 3})

    @given(st.data())
    def test_complement_and_reversal_invariance(self, data):
        n = data.draw(st.integers(2, 8))
        items = list(range(n))
        random.Random(data.draw(st.integers(0, 10**6))).shuffle(items)
        s = CyclicOrder(items)
        a = set(data.draw(st.sets(st.sampled_from(items), min_size=1, max_size=n - 1)))
        comp = set(items) - a
        assert s.is_consecutive(a) == s.is_consecutive(comp)
        assert s.is_consecutive(a) == s.reverse().is_consecutive(a)


class TestProjectContract:
    def test_project(self):
        assert co(1, 2, 3, 4).project({2, 4}) == co(2, 4)

    def test_project_identity(self):
        s = co(5, 1, 3)
        assert s.project({1, 3, 5}) == s

    def test_project_empty(self):
        assert co(1, 2, 3).project(set()) == co()

    def test_contract_block(self):
        assert co(1, 2, 3, 4).contract({2, 3}, "x") == co(1, "x", 4)

    def test_contract_all(self):
        assert co(1, 2, 3).contract({1, 2, 3}, "x") == co("x")

    def test_contract_nonconsecutive(self):
        with pytest.raises(NotConsecutive):
            co(1, 2, 3, 4).contract({1, 3}, "x")

    def test_contract_existing_element(self):
        with pytest.raises(InvalidElement):
            co(1, 2, 3).contract({2}, 1)


@given(st.data())
def test_merge_contract_roundtrip(data):
    """contract(merge(s, t, l), X2 \\ {l}, l) recovers s; projection recovers t."""
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    k1 = data.draw(st.integers(2, 5))
    k2 = data.draw(st.integers(2, 5))
    xs1 = list(range(k1)) + ["l"]
    xs2 = ["l"] + [10 + i for i in range(k2)]
    rng.shuffle(xs1)
    rng.shuffle(xs2)
    s, t = CyclicOrder(xs1), CyclicOrder(xs2)
    m = s.merge(t, "l")
    back_s = m.contract(set(t.ground_set) - {"l"}, "l")
    assert back_s == s
    # sigma = (sigma (x) tau)[X2] identity, with l re-inserted via contract
    back_t = m.contract(set(s.ground_set) - {"l"}, "l")
    assert back_t == t


@given(st.data())
def test_contract_then_expand_consecutive(data):
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    n = data.draw(st.integers(3, 8))
    items = list(range(n))
    rng.shuffle(items)
    s = CyclicOrder(items)
    start = data.draw(st.integers(0, n - 1))
    size = data.draw(st.integers(1, n - 1))
    block = [s.items[(start + i) % n] for i in range(size)]
    c = s.contract(set(block), "a")
    # expand a by any ordering of the block: block stays consecutive
    rng.shuffle(block)
    i = c.items.index("a")
    expanded = CyclicOrder(c.items[:i] + tuple(block) + c.items[i + 1:])
    assert expanded.is_consecutive(set(block))
