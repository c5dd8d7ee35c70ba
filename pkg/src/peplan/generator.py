"""Positive-instance generator and structure-preserving mutations.

Builds a random planar triangulation with a known rotation system (insert a
vertex into a random face, connect to its three corners), optionally
deletes non-tree edges, samples H among the surviving edges plus a few
isolated vertices, and derives the embedding of H from the construction:
the faces of the drawing of H are unions of triangulation faces merged
across the non-H edges, nesting falls out of a breadth-first scan of those
merged regions from the outer one.  Every emitted instance is therefore
extendable by construction.
"""

from __future__ import annotations

import random

from .graph import Graph, trace_faces_partial
from .instance import PEPInstance, parse_instance


class _Triangulation:
    """Rotations as circular next/prev arrays over (edge, endpoint) slots."""

    def __init__(self, rng: random.Random, n: int):
        if n < 3:
            raise ValueError("need n >= 3")
        self.edges: list[tuple[int, int]] = [(0, 1), (1, 2), (0, 2)]
        self.rnext: list[int] = []
        self.rprev: list[int] = []
        # directed slot id for edge e leaving vertex v
        self._grow(3)
        for v, (e_a, e_b) in ((0, (0, 2)), (1, (0, 1)), (2, (1, 2))):
            a = self._slot(e_a, v)
            b = self._slot(e_b, v)
            self.rnext[a] = b
            self.rnext[b] = a
            self.rprev[a] = b
            self.rprev[b] = a
        # faces as corner lists [(v, leave_edge), ...]; chain property:
        # the next corner's vertex is the other end of the leave edge
        f0 = ((0, 0), (1, 1), (2, 2))   # 0-e0->1-e1->2-e2->0
        f1 = ((1, 0), (0, 2), (2, 1))   # the other orbit
        self.faces: list[tuple] = [f0, f1]
        for v in range(3, n):
            self._insert(rng, v)

    def _grow(self, k: int) -> None:
        self.rnext.extend([0] * (2 * k))
        self.rprev.extend([0] * (2 * k))

    def _slot(self, e: int, v: int) -> int:
        return 2 * e if self.edges[e][0] == v else 2 * e + 1

    def _insert(self, rng: random.Random, u: int) -> None:
        fi = rng.randrange(len(self.faces))
        (x, a), (y, b), (z, c) = self.faces[fi]
        base = len(self.edges)
        ex, ey, ez = base, base + 1, base + 2
        self.edges.extend([(x, u), (y, u), (z, u)])
        self._grow(3)
        for (v, e_in, e_new) in ((x, a, ex), (y, b, ey), (z, c, ez)):
            s_in = self._slot(e_in, v)
            s_new = self._slot(e_new, v)
            nxt = self.rnext[s_in]
            self.rnext[s_in] = s_new
            self.rprev[s_new] = s_in
            self.rnext[s_new] = nxt
            self.rprev[nxt] = s_new
        sx, sy, sz = self._slot(ex, u), self._slot(ey, u), self._slot(ez, u)
        self.rnext[sx], self.rnext[sy], self.rnext[sz] = sy, sz, sx
        self.rprev[sy], self.rprev[sz], self.rprev[sx] = sx, sy, sz
        self.faces[fi] = ((x, a), (y, ey), (u, ex))
        self.faces.append(((y, b), (z, ez), (u, ey)))
        self.faces.append(((z, c), (x, ex), (u, ez)))

    def rotation_of(self, v: int, start_edge: int, alive) -> list[int]:
        """Surviving edges around v in ccw order, from any alive edge."""
        out = []
        s0 = self._slot(start_edge, v)
        s = s0
        while True:
            e = s >> 1
            if alive[e]:
                out.append(e)
            s = self.rnext[s]
            if s == s0:
                break
        return out

    def unlink(self, e: int) -> None:
        for v in self.edges[e]:
            s = self._slot(e, v)
            nxt, prv = self.rnext[s], self.rprev[s]
            self.rnext[prv] = nxt
            self.rprev[nxt] = prv


def generate_doc(n: int, h_ratio: float, seed: int,
                 del_ratio: float = 0.25, iso_ratio: float = 0.05) -> dict:
    """Raw instance document (JSON-shaped dict), positive by construction."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = random.Random(seed)
    tri = _Triangulation(rng, n)
    m0 = len(tri.edges)
    # spanning tree via DFS over the triangulation; only non-tree edges
    # may be deleted, so G stays connected
    adj: list[list[int]] = [[] for _ in range(n)]
    for e, (u, v) in enumerate(tri.edges):
        adj[u].append(e)
        adj[v].append(e)
    tree_edge = [False] * m0
    seen = [False] * n
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for e in adj[v]:
            u, w = tri.edges[e]
            o = w if v == u else u
            if not seen[o]:
                seen[o] = True
                tree_edge[e] = True
                stack.append(o)
    alive = [True] * m0
    for e in range(m0):
        if not tree_edge[e] and rng.random() < del_ratio:
            alive[e] = False
    # H sample among survivors
    in_h = [False] * m0
    for e in range(m0):
        if alive[e] and rng.random() < h_ratio:
            in_h[e] = True
    h_deg = [0] * n
    for e in range(m0):
        if in_h[e]:
            u, v = tri.edges[e]
            h_deg[u] += 1
            h_deg[v] += 1
    h_iso = [v for v in range(n)
             if h_deg[v] == 0 and rng.random() < iso_ratio]
    # apply deletions to the rotation structure
    for e in range(m0):
        if not alive[e]:
            tri.unlink(e)
    # survivors re-indexed
    new_id = [-1] * m0
    edges_out = []
    for e in range(m0):
        if alive[e]:
            new_id[e] = len(edges_out)
            edges_out.append(list(tri.edges[e]))
    # corner -> triangulation face, per (vertex, leave_edge)
    corner_face: dict[tuple[int, int], int] = {}
    dirface: dict[tuple[int, int], int] = {}
    for fi, corners in enumerate(tri.faces):
        for (v, e) in corners:
            corner_face[(v, e)] = fi
            u, w = tri.edges[e]
            dirface[(e, w if v == u else u)] = fi
    # merge faces across every non-H edge (deleted or bridge)
    parent = list(range(len(tri.faces)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, (u, v) in enumerate(tri.edges):
        if in_h[e]:
            continue
        a, b = find(dirface[(e, v)]), find(dirface[(e, u)])
        if a != b:
            parent[a] = b
    outer_class = find(corner_face[tri.faces[0][0]])

    # H rotations (ccw order of H-edges, re-indexed)
    rotations = {}
    for v in range(n):
        if h_deg[v] == 0:
            continue
        start = next(e for e in adj[v] if in_h[e])
        order = [new_id[e] for e in tri.rotation_of(v, start, in_h)]
        rotations[str(v)] = order

    # H components
    comp_of: dict[int, int] = {}
    comps: list[list[int]] = []
    h_adj: dict[int, list[int]] = {}
    for e in range(m0):
        if in_h[e]:
            u, v = tri.edges[e]
            h_adj.setdefault(u, []).append(v)
            h_adj.setdefault(v, []).append(u)
    for v in sorted(set(h_adj) | set(h_iso)):
        if v in comp_of:
            continue
        ci = len(comps)
        stack = [v]
        comp_of[v] = ci
        members = [v]
        while stack:
            x = stack.pop()
            for y in h_adj.get(x, ()):
                if y not in comp_of:
                    comp_of[y] = ci
                    members.append(y)
                    stack.append(y)
        comps.append(members)

    # local faces per component, class per local face
    h_graph = Graph(n, [tuple(e) for e in edges_out])
    old_of = {ne: e for e, ne in enumerate(new_id) if ne >= 0}
    local_anchor: list[dict[int, tuple]] = []   # comp -> class -> corner ref
    comp_classes: list[set] = []
    for members in comps:
        if not any(h_deg[v] for v in members):
            v = members[0]
            cls = find(corner_face[(v, adj[v][0])])
            local_anchor.append({})
            comp_classes.append({cls})
            continue
        rot = {v: tuple(rotations[str(v)]) for v in members}
        fs = trace_faces_partial(h_graph, rot)
        anchors: dict[int, tuple] = {}
        classes = set()
        for fi2 in range(len(fs.faces)):
            v, e_in, _ = fs.face_ids[fi2]
            cls = find(corner_face[(v, old_of[e_in])])
            anchors[cls] = (v, e_in)
            classes.add(cls)
        local_anchor.append(anchors)
        comp_classes.append(classes)

    # nesting scan over merged classes from the outer one
    cls_adj: dict[int, list[tuple[int, int]]] = {}
    for e in range(m0):
        if not in_h[e]:
            continue
        u, v = tri.edges[e]
        a, b = find(dirface[(e, v)]), find(dirface[(e, u)])
        ci = comp_of[u]
        cls_adj.setdefault(a, []).append((b, ci))
        cls_adj.setdefault(b, []).append((a, ci))
    depth = {outer_class: 0}
    disc_comp = {outer_class: None}
    queue = [outer_class]
    qi = 0
    while qi < len(queue):
        c = queue[qi]
        qi += 1
        for (d, ci) in cls_adj.get(c, ()):
            if d not in depth:
                depth[d] = depth[c] + 1
                disc_comp[d] = ci
                queue.append(d)

    components_doc = []
    for ci, members in enumerate(comps):
        is_iso = not any(h_deg[v] for v in members)
        rep = f"iso:{members[0]}" if is_iso else min(members)
        classes = comp_classes[ci]
        pcls = min(classes, key=lambda c: (depth.get(c, 0), c))
        if is_iso:
            olf = None
        else:
            v, e_in = local_anchor[ci][pcls]
            olf = {"v": v, "e_in": e_in}
        if pcls == outer_class:
            placement = "outer"
        else:
            pj = disc_comp[pcls]
            pv, pe = local_anchor[pj][pcls]
            placement = {"component": pj, "face": {"v": pv, "e_in": pe}}
        components_doc.append(
            {"rep": rep, "outer_local_face": olf, "placement": placement}
        )

    return {
        "n": n,
        "edges": edges_out,
        "h_edges": sorted(new_id[e] for e in range(m0) if in_h[e]),
        "h_isolated": sorted(h_iso),
        "rotations": rotations,
        "components": components_doc,
    }


def generate_instance(n: int, h_ratio: float, seed: int, **kw) -> PEPInstance:
    return parse_instance(generate_doc(n, h_ratio, seed, **kw))


# ----------------------------------------------------------------------
# mutations (outcome unknown; the oracle adjudicates at small sizes)
# ----------------------------------------------------------------------

def mutate_doc(doc: dict, seed: int, kind: str) -> tuple[dict, bool]:
    """One structure-preserving perturbation; (new_doc, applied)."""
    rng = random.Random(seed)
    doc = json_roundtrip(doc)
    if kind == "rotation-swap":
        cands = [v for v, order in doc["rotations"].items() if len(order) >= 3]
        if not cands:
            return doc, False
        v = rng.choice(sorted(cands))
        order = doc["rotations"][v]
        i = rng.randrange(len(order))
        j = (i + 1) % len(order)
        order[i], order[j] = order[j], order[i]
        return doc, True
    if kind == "placement-move":
        movable = [i for i, c in enumerate(doc["components"])]
        if len(movable) < 2:
            return doc, False
        ci = rng.choice(movable)
        targets = []
        for j, c in enumerate(doc["components"]):
            if j == ci or c["outer_local_face"] is None:
                continue
            # nesting under a descendant would be cyclic
            cur, ok = j, True
            while True:
                p = doc["components"][cur]["placement"]
                if p == "outer":
                    break
                cur = p["component"]
                if cur == ci:
                    ok = False
                    break
            if ok:
                targets.append(j)
        choices = ["outer"] + targets
        pick = rng.choice(choices)
        if pick == "outer":
            doc["components"][ci]["placement"] = "outer"
            return doc, True
        rot = doc["rotations"][str(_rep_vertex(doc, pick))]
        # any corner of the target component
        v = _rep_vertex(doc, pick)
        e_in = rng.choice(doc["rotations"][str(v)])
        doc["components"][ci]["placement"] = {
            "component": pick, "face": {"v": v, "e_in": e_in}
        }
        return doc, True
    if kind == "edge-add":
        n = doc["n"]
        present = {tuple(sorted(e)) for e in doc["edges"]}
        for _ in range(50):
            u, v = rng.randrange(n), rng.randrange(n)
            if u != v and tuple(sorted((u, v))) not in present:
                doc["edges"].append([u, v])
                return doc, True
        return doc, False
    raise ValueError(f"unknown mutation kind {kind!r}")


def _rep_vertex(doc: dict, ci: int) -> int:
    rep = doc["components"][ci]["rep"]
    return int(rep[4:]) if isinstance(rep, str) else rep


def json_roundtrip(doc: dict) -> dict:
    import json
    return json.loads(json.dumps(doc))
