"""Brute-force ground truth by exhaustive rotation-system enumeration.

A drawing extension exists iff some rotation system of G is planar by the
Euler check, matches the prescribed rotations at every H-vertex with the
given orientation, and places, for every directed facial walk of the
embedded subgraph, the same H-vertices on its left and right sides as the
prescribed embedding does.  None of the bridge coloring machinery is used
here, so the oracle is independent of the tested pipeline.
"""

from __future__ import annotations

import itertools
from math import factorial

from .cyclic import CyclicOrder
from .graph import Graph, connected_components, euler_planar, trace_faces
from .instance import PEPInstance, h_faces


class TooLarge(Exception):
    pass


def rotation_space_size(g: Graph) -> int:
    size = 1
    for v in range(g.n):
        d = g.degree(v)
        if d > 2:
            size *= factorial(d - 1)
    return size


def all_rotations(g: Graph, v: int):
    """All cyclic orders of E(v), one representative each (first edge pinned)."""
    edges = g.adj[v]
    if len(edges) <= 2:
        yield tuple(edges)
        return
    first = edges[0]
    for perm in itertools.permutations(edges[1:]):
        yield (first,) + perm


def consistent_rotations(g: Graph, v: int, rho: tuple):
    """Cyclic orders of E(v) whose projection to the H-edges equals rho,
    orientation included.  Generated by inserting the other edges into the
    prescribed cycle one at a time (each result arises exactly once)."""
    others = [e for e in g.adj[v] if e not in set(rho)]
    seqs = [list(rho)]
    for e in others:
        nxt = []
        for s in seqs:
            for i in range(len(s)):
                nxt.append(s[:i + 1] + [e] + s[i + 1:])
        seqs = nxt
    seen = set()
    for s in seqs:
        t = tuple(s)
        if t not in seen:
            seen.add(t)
            yield t


def _fast_planar_sweep(sub: Graph, limit: int) -> bool:
    """Exhaustive Euler sweep over one connected graph, early exit."""
    n, m = sub.n, sub.m
    if m == 0 or n <= 4:
        return True
    size = rotation_space_size(sub)
    if size > limit:
        raise TooLarge(f"{size} rotation systems in one component")
    # directed edge ids: 2e toward edges[e][1], 2e+1 toward edges[e][0]
    dir_into = [[] for _ in range(n)]  # directed ids arriving at v
    for e, (u, v) in enumerate(sub.edges):
        dir_into[v].append(2 * e)
        dir_into[u].append(2 * e + 1)

    def dir_out(e, v):  # edge e leaving vertex v
        return 2 * e if sub.edges[e][0] == v else 2 * e + 1

    pools = []
    for v in range(n):
        cands = []
        for order in all_rotations(sub, v):
            k = len(order)
            tab = []
            for i, e in enumerate(order):
                p = order[i - 1]
                d_in = 2 * e if sub.edges[e][1] == v else 2 * e + 1
                tab.append((d_in, dir_out(p, v)))
            cands.append(tab)
        pools.append(cands)
    want_faces = 2 - n + m
    if want_faces < 1:
        return True  # a tree-ish component is always planar
    nxt = [0] * (2 * m)
    for combo in itertools.product(*pools):
        for tab in combo:
            for d_in, d_out in tab:
                nxt[d_in] = d_out
        seen = [False] * (2 * m)
        faces = 0
        for d0 in range(2 * m):
            if seen[d0]:
                continue
            faces += 1
            if faces > want_faces:
                break
            d = d0
            while not seen[d]:
                seen[d] = True
                d = nxt[d]
        if faces == want_faces:
            return True
    return False


def oracle_planarity(g: Graph, limit: int = 10**7) -> bool:
    """Some rotation system passes the Euler check (component-wise)."""
    comp = connected_components(g)
    k = max(comp) + 1 if comp else 0
    for ci in range(k):
        verts = [v for v in range(g.n) if comp[v] == ci]
        if len(verts) <= 4:
            continue  # at most K4: always planar
        nc = len(verts)
        mc = sum(1 for u, w in g.edges if comp[u] == ci)
        if nc >= 3 and mc > 3 * nc - 6:
            return False  # Euler bound: too many edges for planarity
        index = {v: i for i, v in enumerate(verts)}
        sub_edges = [
            (index[u], index[w]) for (u, w) in g.edges if comp[u] == ci
        ]
        sub = Graph(nc, sub_edges)
        if not _fast_planar_sweep(sub, limit):
            return False
    return True


def oracle_sides(g: Graph, rot, walk):
    """H-vertex sets left and right of a directed closed walk of H-edges.

    walk: list of directed edges (eid, head).  Faces unreachable from the
    walk's left corners without crossing a walk edge form the right side;
    a vertex counts for a side when none of its faces touch the other one.
    Vertices on the walk are excluded.
    """
    fs = trace_faces(g, rot)
    blocked = {e for e, _head in walk}
    nf = len(fs.faces)
    adj: list[list[int]] = [[] for _ in range(nf)]
    for (e, head) in fs.dir_face:
        if e in blocked:
            continue
        f1 = fs.dir_face[(e, head)]
        f2 = fs.dir_face[(e, g.other(e, head))]
        adj[f1].append(f2)

    def reach(starts):
        seen = set(starts)
        stack = list(starts)
        while stack:
            f = stack.pop()
            for f2 in adj[f]:
                if f2 not in seen:
                    seen.add(f2)
                    stack.append(f2)
        return seen

    left_start = {fs.dir_face[(e, head)] for (e, head) in walk}
    right_start = {fs.dir_face[(e, g.other(e, head))] for (e, head) in walk}
    left = reach(left_start)
    right = reach(right_start)
    walk_verts = set()
    for (e, head) in walk:
        u, v = g.edges[e]
        walk_verts.add(u)
        walk_verts.add(v)
    vfaces: dict[int, set] = {}
    for fi, verts in enumerate(fs.face_vertices):
        for v in verts:
            vfaces.setdefault(v, set()).add(fi)
    left_set = set()
    right_set = set()
    for v in range(g.n):
        if v in walk_verts or v not in vfaces:
            continue
        faces_v = vfaces[v]
        if not (faces_v & right):
            left_set.add(v)
        if not (faces_v & left):
            right_set.add(v)
    return left_set, right_set


def _h_walks(inst: PEPInstance, faces) -> list[list[tuple[int, int]]]:
    """Directed facial walks of every embedded component, as (eid, head)."""
    walks = []
    for fs in faces.local_faces:
        if fs is None:
            continue
        for corners in fs.faces:
            walk = []
            # corner (v, e_in, e_out): the walk left v along e_in after
            # entering along e_out; emit each face's directed boundary
            for (v, e_in, _e_out) in corners:
                walk.append((e_in, inst.g.other(e_in, v)))
            walks.append(walk)
    return walks


def _h_side_sets(inst: PEPInstance, faces, walk):
    """Left/right H-vertex sets of the walk inside the given embedding."""
    blocked = {e for e, _ in walk}
    adj: dict[int, set] = {}
    for (e, head), gid in faces.dir_gid.items():
        if e in blocked:
            continue
        other = faces.dir_gid[(e, inst.g.other(e, head))]
        adj.setdefault(gid, set()).add(other)

    def reach(starts):
        seen = set(starts)
        stack = list(starts)
        while stack:
            f = stack.pop()
            for f2 in adj.get(f, ()):
                if f2 not in seen:
                    seen.add(f2)
                    stack.append(f2)
        return seen

    left = reach({faces.dir_gid[(e, head)] for (e, head) in walk})
    right = reach({faces.dir_gid[(e, inst.g.other(e, head))] for (e, head) in walk})
    walk_verts = set()
    for (e, _) in walk:
        walk_verts.update(inst.g.edges[e])
    left_set, right_set = set(), set()
    for v in inst.h_vertices:
        if v in walk_verts:
            continue
        fv = faces.vertex_gids[v]
        if not (fv & right):
            left_set.add(v)
        if not (fv & left):
            right_set.add(v)
    return left_set, right_set


def rotations_match(inst: PEPInstance, rot) -> bool:
    """Condition on rotations: the H-projection equals the prescription,
    orientation included (no mirror)."""
    for v, rho in inst.rotations.items():
        proj = tuple(e for e in rot[v] if e in inst.h_edges)
        if CyclicOrder(proj) != CyclicOrder(rho):
            return False
    return True


def oracle_pep(inst: PEPInstance, limit: int = 10**6) -> bool:
    """Exhaustively decide whether the embedding of H extends to G.

    Supports connected G only (relative positions of whole G-components
    cannot be expressed by a rotation system).
    """
    g = inst.g
    if g.n and max(connected_components(g)) > 0:
        raise ValueError("oracle supports connected G only")
    if rotation_space_size(g) > limit:
        raise TooLarge(f"{rotation_space_size(g)} rotation systems")
    faces = h_faces(inst)
    walks = _h_walks(inst, faces)
    want_sides = [_h_side_sets(inst, faces, w) for w in walks]
    pools = []
    for v in range(g.n):
        if v in inst.rotations:
            pools.append(list(consistent_rotations(g, v, inst.rotations[v])))
        else:
            pools.append(list(all_rotations(g, v)))
    hv = inst.h_vertices
    for combo in itertools.product(*pools):
        rot = {v: combo[v] for v in range(g.n)}
        if not euler_planar(g, rot):
            continue
        ok = True
        for w, (wl, wr) in zip(walks, want_sides):
            gl, gr = oracle_sides(g, rot, w)
            if (gl & hv) != wl or (gr & hv) != wr:
                ok = False
                break
        if ok:
            return True
    return False


def constraint_implication(inst: PEPInstance, rot, faces, constraints):
    """(satisfies all color-constraints, meets the rotation and side
    conditions) for one Euler-planar rotation system."""
    from .constraints import satisfies_constraint

    lhs = True
    for v in range(inst.g.n):
        order = CyclicOrder(rot[v]) if rot[v] else CyclicOrder(())
        if not satisfies_constraint(order, constraints[v]):
            lhs = False
            break
    rhs = rotations_match(inst, rot)
    if rhs:
        walks = _h_walks(inst, faces)
        hv = inst.h_vertices
        for w in walks:
            wl, wr = _h_side_sets(inst, faces, w)
            gl, gr = oracle_sides(inst.g, rot, w)
            if (gl & hv) != wl or (gr & hv) != wr:
                rhs = False
                break
    return lhs, rhs
