"""Instance parsing, global faces, bridges, coloring, constraints."""

from __future__ import annotations

import json

import pytest

from peplan.cyclic import CyclicOrder
from peplan.instance import (
    Infeasible,
    InstanceError,
    color_bridges,
    h_bridges,
    h_faces,
    parse_instance,
    preprocess,
    serialize_instance,
    split_components,
    vertex_constraints,
)


def triangle_doc(extra_edges=(), h_isolated=(), placement="outer"):
    edges = [[0, 1], [1, 2], [2, 0]] + [list(e) for e in extra_edges]
    return {
        "n": 3 + len({v for e in extra_edges for v in e if v > 2}),
        "edges": edges,
        "h_edges": [0, 1, 2],
        "h_isolated": list(h_isolated),
        "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2]},
        "components": [
            {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
             "placement": placement}
        ],
    }


class TestParse:
    def test_triangle_valid(self):
        inst = parse_instance(json.dumps(triangle_doc()))
        assert inst.g.n == 3
        assert inst.h_vertices == frozenset({0, 1, 2})

    def test_unknown_field_rejected(self):
        doc = triangle_doc()
        doc["extra"] = 1
        with pytest.raises(InstanceError):
            parse_instance(doc)

    def test_bad_rotation_rejected(self):
        doc = triangle_doc()
        doc["rotations"]["0"] = [0, 1]  # edge 1 not incident to 0
        with pytest.raises(InstanceError):
            parse_instance(doc)

    def test_cyclic_placement_rejected(self):
        # two triangles placed inside each other
        doc = {
            "n": 6,
            "edges": [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]],
            "h_edges": [0, 1, 2, 3, 4, 5],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2],
                          "3": [3, 5], "4": [3, 4], "5": [4, 5]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": {"component": 1, "face": {"v": 3, "e_in": 3}}},
                {"rep": 3, "outer_local_face": {"v": 3, "e_in": 3},
                 "placement": {"component": 0, "face": {"v": 0, "e_in": 0}}},
            ],
        }
        with pytest.raises(InstanceError):
            parse_instance(doc)

    def test_roundtrip(self):
        inst = parse_instance(json.dumps(triangle_doc()))
        blob = serialize_instance(inst)
        inst2 = parse_instance(blob)
        assert serialize_instance(inst2) == blob


class TestFaces:
    def test_one_triangle_two_faces(self):
        inst = parse_instance(triangle_doc())
        fm = h_faces(inst)
        assert fm.n_faces == 2

    def test_nested_triangles_three_faces(self):
        doc = {
            "n": 6,
            "edges": [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]],
            "h_edges": [0, 1, 2, 3, 4, 5],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2],
                          "3": [3, 5], "4": [3, 4], "5": [4, 5]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": "outer"},
                {"rep": 3, "outer_local_face": {"v": 3, "e_in": 3},
                 "placement": {"component": 0,
                               "face": {"v": 0, "e_in": 2}}},
            ],
        }
        inst = parse_instance(doc)
        fm = h_faces(inst)
        assert fm.n_faces == 3

    def test_sibling_triangles_three_faces(self):
        doc = {
            "n": 6,
            "edges": [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]],
            "h_edges": [0, 1, 2, 3, 4, 5],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2],
                          "3": [3, 5], "4": [3, 4], "5": [4, 5]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": "outer"},
                {"rep": 3, "outer_local_face": {"v": 3, "e_in": 3},
                 "placement": "outer"},
            ],
        }
        fm = h_faces(parse_instance(doc))
        assert fm.n_faces == 3


class TestBridges:
    def test_g_equals_h_no_bridges(self):
        inst = parse_instance(triangle_doc())
        assert h_bridges(inst) == []

    def test_single_edge_bridge(self):
        doc = triangle_doc()
        doc["edges"].append([0, 2])
        with pytest.raises(InstanceError):
            parse_instance(doc)  # parallel to an H-edge: rejected
        doc = {
            "n": 4,
            "edges": [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]],
            "h_edges": [0, 1, 2],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": "outer"},
            ],
        }
        inst = parse_instance(doc)
        bridges = h_bridges(inst)
        assert len(bridges) == 1
        b = bridges[0]
        assert b.kind == "component"
        assert b.attachments == frozenset({0, 1, 2})
        assert b.edges == frozenset({3, 4, 5})

    def test_path_bridge_through_one_inner_vertex(self):
        doc = {
            "n": 4,
            "edges": [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3]],
            "h_edges": [0, 1, 2],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": "outer"},
            ],
        }
        bridges = h_bridges(parse_instance(doc))
        assert len(bridges) == 1
        assert bridges[0].attachments == frozenset({0, 1})


def k4_iso_doc(extra_edge):
    """K4 on 0..3 drawn with 3 inside, isolated H-vertex 4 placed in a
    bounded face, plus one bridge edge from 4 to the given vertex."""
    # edges: 01=0 12=1 20=2 03=3 13=4 23=5
    edges = [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]]
    edges.append(list(extra_edge))
    return {
        "n": 5,
        "edges": edges,
        "h_edges": [0, 1, 2, 3, 4, 5],
        "h_isolated": [4],
        "rotations": {
            # planar K4: outer face 0-1-2, vertex 3 inside
            "0": [0, 3, 2],
            "1": [1, 4, 0],
            "2": [2, 5, 1],
            "3": [3, 4, 5],
        },
        "components": [
            {"rep": 0, "outer_local_face": {"v": 0, "e_in": 2},
             "placement": "outer"},
            # isolated vertex inside the face bounded by 0-1-3
            {"rep": "iso:4", "outer_local_face": None,
             "placement": {"component": 0, "face": {"v": 0, "e_in": 0}}},
        ],
    }


class TestK4IsoFixture:
    def test_faces(self):
        inst = parse_instance(k4_iso_doc((4, 0)))
        fm = h_faces(inst)
        # K4 has 4 faces; the isolated vertex merges into one of them
        assert fm.n_faces == 4
        assert fm.vertex_gids[4] != frozenset()

    def test_bridge_into_wrong_face_is_infeasible(self):
        inst = parse_instance(k4_iso_doc((4, 2)))
        fm = h_faces(inst)
        bridges = h_bridges(inst)
        with pytest.raises(Infeasible):
            color_bridges(inst, fm, bridges)

    def test_bridge_into_shared_face_gets_colored(self):
        inst = parse_instance(k4_iso_doc((4, 0)))
        fm = h_faces(inst)
        bridges = h_bridges(inst)
        coloring = color_bridges(inst, fm, bridges)
        assert coloring[6] is not None
        # the forced face is the placement face of the isolated vertex
        assert coloring[6] in fm.vertex_gids[4]

    def test_constraints(self):
        inst = parse_instance(k4_iso_doc((4, 0)))
        fm, bridges, coloring, cons, comps = preprocess(inst)
        c0 = cons[0]
        assert set(c0.fixed) == {0, 3, 2}
        assert 6 in c0.restricted
        # degree matches: all G-edges at vertex 0 covered
        assert c0.elements == frozenset(inst.g.adj[0])
        # vertex 4: no fixed edges, restricted bridge edge
        c4 = cons[4]
        assert c4.fixed == ()
        assert 6 in c4.restricted


class TestUncoloredBridge:
    def test_single_block_attachments_unrestricted(self):
        # H is one triangle block; a chord-ish bridge inside it stays free
        doc = {
            "n": 4,
            "edges": [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3]],
            "h_edges": [0, 1, 2],
            "h_isolated": [],
            "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2]},
            "components": [
                {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
                 "placement": "outer"},
            ],
        }
        inst = parse_instance(doc)
        fm = h_faces(inst)
        coloring = color_bridges(inst, fm, h_bridges(inst))
        assert all(v is None for v in coloring.values())


def test_split_components():
    doc = {
        "n": 6,
        "edges": [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]],
        "h_edges": [0, 1, 2],
        "h_isolated": [],
        "rotations": {"0": [0, 2], "1": [0, 1], "2": [1, 2]},
        "components": [
            {"rep": 0, "outer_local_face": {"v": 0, "e_in": 0},
             "placement": "outer"},
        ],
    }
    inst = parse_instance(doc)
    comps = split_components(inst)
    assert comps == [[0, 1, 2], [3, 4, 5]]
