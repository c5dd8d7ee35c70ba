"""Oracle sanity: planarity sweep, side sets, extension fixtures."""

from __future__ import annotations

import itertools

import pytest

from peplan.graph import Graph
from peplan.instance import parse_instance
from peplan.oracle import (
    TooLarge,
    oracle_pep,
    oracle_planarity,
    oracle_sides,
    rotation_space_size,
)

from test_instance import k4_iso_doc, triangle_doc


def complete_graph(n):
    return Graph(n, list(itertools.combinations(range(n), 2)))


class TestPlanarity:
    def test_k4_planar(self):
        assert oracle_planarity(complete_graph(4))

    def test_k5_not_planar(self):
        assert not oracle_planarity(complete_graph(5))

    def test_k33_not_planar(self):
        edges = [(a, b) for a in range(3) for b in range(3, 6)]
        assert not oracle_planarity(Graph(6, edges))

    def test_petersen_not_planar(self):
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        g = Graph(10, outer + spokes + inner)
        assert rotation_space_size(g) == 2**10
        assert not oracle_planarity(g)

    def test_too_large_guarded(self):
        # a wheel: sparse enough to dodge the edge-count bound, yet with a
        # rotation space far over the limit
        n = 9
        edges = [(0, i) for i in range(1, n)]
        edges += [(i, i % (n - 1) + 1) for i in range(1, n)]
        g = Graph(n, edges)
        with pytest.raises(TooLarge):
            oracle_planarity(g, limit=10)

    def test_dense_rejected_by_edge_bound(self):
        # K9 is over the planar edge bound: decided without enumeration
        assert not oracle_planarity(complete_graph(9), limit=10)


class TestSides:
    def test_k4_sides(self):
        g = complete_graph(4)
        # edges: 01=0 02=1 03=2 12=3 13=4 23=5
        rot = {0: [0, 2, 1], 1: [3, 4, 0], 2: [1, 5, 3], 3: [2, 4, 5]}
        from peplan.graph import euler_planar
        assert euler_planar(g, rot)
        # directed triangle 0->1->2->0
        walk = [(0, 1), (3, 2), (1, 0)]
        left, right = oracle_sides(g, rot, walk)
        assert (left, right) in ((({3}), set()), (set(), {3}))
        # reversing the walk swaps the sides
        rwalk = [(1, 2), (3, 1), (0, 0)]
        l2, r2 = oracle_sides(g, rot, rwalk)
        assert (l2, r2) == (right, left)

    def test_lone_triangle_empty_sides(self):
        g = Graph(3, [(0, 1), (1, 2), (2, 0)])
        rot = {v: tuple(g.adj[v]) for v in range(3)}
        walk = [(0, 1), (1, 2), (2, 0)]
        left, right = oracle_sides(g, rot, walk)
        assert left == right == set()

    def test_tree_walk_both_sides_empty(self):
        # an H-edge walked in both directions encloses nothing
        g = Graph(3, [(0, 1), (1, 2), (2, 0)])
        rot = {v: tuple(g.adj[v]) for v in range(3)}
        walk = [(0, 1), (0, 0)]
        left, right = oracle_sides(g, rot, walk)
        assert left == right == set()


class TestOraclePep:
    def test_h_equals_g_true(self):
        inst = parse_instance(triangle_doc())
        assert oracle_pep(inst)

    def test_h_empty_reduces_to_planarity(self):
        doc = {
            "n": 4,
            "edges": [[u, v] for u, v in itertools.combinations(range(4), 2)],
            "h_edges": [], "h_isolated": [], "rotations": {}, "components": [],
        }
        assert oracle_pep(parse_instance(doc))
        doc5 = {
            "n": 5,
            "edges": [[u, v] for u, v in itertools.combinations(range(5), 2)],
            "h_edges": [], "h_isolated": [], "rotations": {}, "components": [],
        }
        assert not oracle_pep(parse_instance(doc5))

    def test_k4_iso_fixture(self):
        assert not oracle_pep(parse_instance(k4_iso_doc((4, 2))))
        assert oracle_pep(parse_instance(k4_iso_doc((4, 0))))

    def test_h_equals_k4(self):
        doc = k4_iso_doc((4, 0))
        doc["n"] = 4
        doc["edges"] = doc["edges"][:6]
        doc["h_isolated"] = []
        doc["components"] = doc["components"][:1]
        inst = parse_instance(doc)
        assert oracle_pep(inst)
        # a transposed rotation is not even a planar drawing of H
        bad = dict(doc)
        bad["rotations"] = dict(doc["rotations"])
        bad["rotations"]["3"] = [4, 3, 5]
        from peplan.instance import InstanceError
        import pytest as _pytest
        with _pytest.raises(InstanceError):
            parse_instance(bad)
