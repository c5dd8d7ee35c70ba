"""Membership and flip-probe against enumeration."""

from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from peplan.ccintersect import (
    EMPTY,
    FIXED_REVERSED,
    FIXED_SAME,
    FREE,
    fixed_cycle_of_vertex_side,
    membership,
    probe_flip,
    restricted_intersect_nonempty,
)
from peplan.constraints import ColorConstraint
from peplan.cyclic import CyclicOrder
from peplan.pctree import PCTree, build_tree

from util_trees import make_tree, omega, random_subset


def projections(orders, X):
    out = set()
    for o in orders:
        out.add(o.project(X))
    return out


def relax_colors(t: PCTree) -> PCTree:
    """Clone with restricted annotations erased (fixed structure kept)."""
    from peplan.pctree import LEAF as _L, RESTRICTED as _R, FREE as _F
    c = t.clone()
    stack = [c.top] if c.top is not None else []
    while stack:
        x = stack.pop()
        if x.kind == _L:
            continue
        if x.as_kind == _R:
            x.as_kind = _F
        for ch in c._children(x):
            if ch.ap_kind == _R:
                ch.ap_kind = _F
            stack.append(ch)
    return c


class TestMembership:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9), st.integers(3, 8))
    def test_membership_matches_relaxed_projection(self, seed, n):
        # membership deliberately ignores restricted colors (the pipeline
        # guarantees them); its exact semantics is the color-relaxed tree
        rng = random.Random(seed)
        t = make_tree(rng, n, cc=True)
        base = omega(relax_colors(t))
        if not base:
            return
        X = random_subset(rng, range(n), min_size=3, max_size=n)
        projs = projections(base, X)
        ids = sorted(X)
        rng.shuffle(ids)
        cand = list(rng.choice(sorted(projs, key=repr)).items) if rng.random() < 0.5 else ids
        got = membership(t, cand)
        want = CyclicOrder(cand) in projs
        assert got == want, (seed, n, cand)
        # and true projections of the constrained tree are never rejected
        strict = projections(omega(t), X)
        if CyclicOrder(cand) in strict:
            assert got

    def test_small_candidates_always_pass(self):
        t = PCTree.from_leaves([1, 2, 3, 4])
        assert membership(t, [1, 2])
        assert membership(t, [3])
        assert membership(t, [])


class TestVertexSideExtraction:
    def test_plain_no_fixed(self):
        s = PCTree.from_constraint(ColorConstraint(free=(1, 2, 3)))
        assert fixed_cycle_of_vertex_side(s) == []

    def test_constrained(self):
        c = ColorConstraint(fixed=(4, 5), angle_colors=("r", "b"),
                            restricted={6: "r"}, free=(7,))
        s = PCTree.from_constraint(c)
        rho = fixed_cycle_of_vertex_side(s)
        assert CyclicOrder(rho) == CyclicOrder((4, 5))

    def test_pure_fixed_cnode(self):
        c = ColorConstraint(fixed=(4, 5, 6), angle_colors=("r", "b", "g"))
        s = PCTree.from_constraint(c)
        rho = fixed_cycle_of_vertex_side(s)
        assert CyclicOrder(rho) == CyclicOrder((4, 5, 6))

    def test_exclude(self):
        c = ColorConstraint(fixed=(4, 5, 6), angle_colors=("r", "b", "g"))
        s = PCTree.from_constraint(c)
        rho = fixed_cycle_of_vertex_side(s, exclude=5)
        assert CyclicOrder(rho) == CyclicOrder((4, 6))


class TestRestrictedIntersect:
    def test_no_fixed_vertex_side_always_true(self):
        rng = random.Random(1)
        t = make_tree(rng, 5, cc=True)
        s = PCTree.from_constraint(ColorConstraint(free=tuple(range(5))))
        assert restricted_intersect_nonempty(t, s)

    def test_fixed_rotation_matching_and_not(self):
        # component side: fixed C with order [1,2,3,4] (plus the root 0)
        t = build_tree(
            0, ("C", True, [("leaf", 1), ("leaf", 2), ("leaf", 3), ("leaf", 4)])
        )
        # vertex side wants, reversed, the orders of {1,2,3}: rho such that
        # reverse(rho) is a projection of [0,1,2,3,4]
        good = ColorConstraint(fixed=(3, 2, 1), angle_colors=("x", "y", "z"),
                               free=(0, 4))
        bad = ColorConstraint(fixed=(2, 3, 1), angle_colors=("x", "y", "z"),
                              free=(0, 4))
        sg = PCTree.from_constraint(good)
        sb = PCTree.from_constraint(bad)
        assert restricted_intersect_nonempty(t, sg)
        assert not restricted_intersect_nonempty(t, sb)
        # cross-check by enumeration
        wt = omega(t)
        for s, expect in ((sg, True), (sb, False)):
            ws = omega(s)
            hit = any(a.reverse() in ws for a in wt)
            assert hit == expect

    def test_null_tree_false(self):
        t = PCTree.null_tree()
        s = PCTree.from_constraint(ColorConstraint(free=(1, 2)))
        assert not restricted_intersect_nonempty(t, s)


class TestProbe:
    @settings(max_examples=120, deadline=None)
    @given(st.integers(0, 10**9), st.integers(4, 8))
    def test_probe_matches_enumeration(self, seed, n):
        rng = random.Random(seed)
        # a tree with a guaranteed ordinary C-node near the top
        kids = [("leaf", i) for i in range(1, n)]
        half = rng.randint(2, len(kids) - 1)
        spec = ("C", False, [("P", None, kids[:half]) if half > 1 else kids[0],
                             ("P", None, kids[half:]) if len(kids) - half > 1 else kids[half]])
        t = build_tree(0, spec)
        cn = t.top
        base = omega(t)
        X = sorted(random_subset(rng, range(n), min_size=3, max_size=n))
        rng.shuffle(X)
        # choose a candidate from the projections half the time
        projs = projections(base, X)
        if rng.random() < 0.6 and projs:
            cand = list(rng.choice(sorted(projs, key=repr)).items)
        else:
            cand = X
        same = membership(t, cand, force=(cn, +1))
        rev = membership(t, cand, force=(cn, -1))
        # enumeration ground truth: fix the node each way and project
        t_same = t.clone()
        t_same.fix_cnode(t_same.top, same=True)
        t_rev = t.clone()
        t_rev.fix_cnode(t_rev.top, same=False)
        want_same = CyclicOrder(cand) in projections(omega(t_same), set(X))
        want_rev = CyclicOrder(cand) in projections(omega(t_rev), set(X))
        assert same == want_same and rev == want_rev

    def test_probe_verdicts(self):
        t = build_tree(
            0, ("C", False, [("leaf", 1), ("leaf", 2), ("leaf", 3), ("leaf", 4)])
        )
        cn = t.top
        free_s = PCTree.from_constraint(ColorConstraint(free=(0, 1, 2, 3, 4)))
        assert probe_flip(t, free_s, cn) == FREE
        pin = ColorConstraint(fixed=(3, 2, 1), angle_colors=("x",) * 3, free=(0, 4))
        s = PCTree.from_constraint(pin)
        assert probe_flip(t, s, cn) == FIXED_SAME
        pin_rev = ColorConstraint(fixed=(1, 2, 3), angle_colors=("x",) * 3, free=(0, 4))
        s2 = PCTree.from_constraint(pin_rev)
        assert probe_flip(t, s2, cn) == FIXED_REVERSED
        impossible = ColorConstraint(fixed=(1, 3, 2, 4), angle_colors=("x",) * 4,
                                     free=(0,))
        s3 = PCTree.from_constraint(impossible)
        assert probe_flip(t, s3, cn) == EMPTY
