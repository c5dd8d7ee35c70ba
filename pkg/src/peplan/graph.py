"""Graphs, rotation systems, face tracing, vertex orderings, blocks.

Face-traversal convention, used identically by every module: from the
directed edge (u -> v), the next directed edge is (v -> w) where edge vw is
the counter-clockwise *predecessor* of edge vu in the rotation at v.  A
corner is (v, e_in, e_out) with e_out the ccw successor of e_in at v; each
traversal step through v covers exactly one corner.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .cyclic import CyclicOrder


class GraphError(Exception):
    pass


class InvalidInput(GraphError):
    pass


class Graph:
    """Simple undirected graph; edge id = position in the edge list."""

    __slots__ = ("n", "edges", "adj", "_edge_set")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise InvalidInput("negative vertex count")
        self.n = n
        self.edges: list[tuple[int, int]] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self._edge_set: set[tuple[int, int]] = set()
        for u, v in edges:
            eid = len(self.edges)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"edge ({u},{v}) out of range")
            if u == v:
                raise InvalidInput(f"self-loop at {u}")
            key = (u, v) if u < v else (v, u)
            if key in self._edge_set:
                raise InvalidInput(f"parallel edge ({u},{v})")
            self._edge_set.add(key)
            self.edges.append((u, v))
            self.adj[u].append(eid)
            self.adj[v].append(eid)

    @property
    def m(self) -> int:
        return len(self.edges)

    def other(self, eid: int, v: int) -> int:
        u, w = self.edges[eid]
        return w if v == u else u

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_set

    def degree(self, v: int) -> int:
        return len(self.adj[v])


RotationSystem = Mapping[int, Sequence[int]]  # vertex -> ccw edge ids


class FaceSet:
    """Faces of a rotation system under the fixed traversal convention."""

    __slots__ = ("faces", "face_ids", "corner_face", "dir_face", "face_vertices")

    def __init__(self, faces, face_ids, corner_face, dir_face, face_vertices):
        self.faces = faces              # list of corner tuples (v, e_in, e_out)
        self.face_ids = face_ids        # canonical id per face = min corner
        self.corner_face = corner_face  # (v, e_in) -> face index
        self.dir_face = dir_face        # (eid, head) -> face index
        self.face_vertices = face_vertices

    def __len__(self) -> int:
        return len(self.faces)


def trace_faces(g: Graph, rot: RotationSystem) -> FaceSet:
    """Trace all facial walks of the rotation system."""
    pred: dict[tuple[int, int], int] = {}
    succ: dict[tuple[int, int], int] = {}
    for v, order in rot.items():
        order = list(order)
        if sorted(order) != sorted(g.adj[v]):
            raise InvalidInput(f"rotation at {v} is not a permutation of its edges")
        k = len(order)
        for i, e in enumerate(order):
            pred[(v, e)] = order[i - 1]
            succ[(v, e)] = order[(i + 1) % k]
    faces: list[tuple] = []
    face_ids: list[tuple] = []
    corner_face: dict[tuple[int, int], int] = {}
    dir_face: dict[tuple[int, int], int] = {}
    face_vertices: list[frozenset] = []
    seen: set[tuple[int, int]] = set()
    for v0, order in rot.items():
        for e0 in order:
            start = (e0, g.other(e0, v0))  # directed edge v0 -> other
            if start in seen:
                continue
            walk = []
            cur = start
            while cur not in seen:
                seen.add(cur)
                e, head = cur
                nxt_e = pred[(head, e)]
                # corner covered at head: (head, e_in=nxt_e, e_out=e)
                walk.append((head, nxt_e, e))
                cur = (nxt_e, g.other(nxt_e, head))
            fi = len(faces)
            corners = tuple(walk)
            faces.append(corners)
            face_ids.append(min(corners))
            verts = set()
            for (cv, ci, co) in corners:
                corner_face[(cv, ci)] = fi
                verts.add(cv)
            face_vertices.append(frozenset(verts))
            # re-walk to register directed edges
            cur = start
            for _ in corners:
                e, head = cur
                dir_face[cur] = fi
                nxt_e = pred[(head, e)]
                cur = (nxt_e, g.other(nxt_e, head))
    return FaceSet(faces, face_ids, corner_face, dir_face, face_vertices)


def connected_components(g: Graph) -> list[int]:
    """Component id per vertex (ids dense, ordered by least vertex)."""
    comp = [-1] * g.n
    cid = 0
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = cid
        while stack:
            v = stack.pop()
            for e in g.adj[v]:
                w = g.other(e, v)
                if comp[w] < 0:
                    comp[w] = cid
                    stack.append(w)
        cid += 1
    return comp


def euler_planar(g: Graph, rot: RotationSystem) -> bool:
    """Per-component Euler check n - m + f == 2 (isolated vertex: f = 1)."""
    fs = trace_faces(g, rot)
    comp = connected_components(g)
    k = max(comp) + 1 if comp else 0
    nc = [0] * k
    mc = [0] * k
    fc = [0] * k
    for v in range(g.n):
        nc[comp[v]] += 1
    for u, _ in g.edges:
        mc[comp[u]] += 1
    for corners in fs.faces:
        fc[comp[corners[0][0]]] += 1
    for i in range(k):
        if mc[i] == 0:
            fc_i = 1  # an isolated vertex sits in one face region
        else:
            fc_i = fc[i]
        if nc[i] - mc[i] + fc_i != 2:
            return False
    return True


def st_ordering(g: Graph, s: int, t: int) -> list[int]:
    """Vertex order s..t where every inner vertex has an earlier and a
    later neighbor.  Requires a biconnected graph containing edge st.

    Path insertion: grow an ordering from [s, t]; repeatedly attach a path
    of new vertices between two ordered ones.  Quadratic, which is fine:
    the main pipeline orders vertices by DFS instead.
    """
    if not g.has_edge(s, t):
        raise InvalidInput("edge st missing")
    if g.n > 2:
        _, cut, _ = blocks_and_cutvertices(g)
        if any(cut) or max(connected_components(g)) > 0:
            raise InvalidInput("graph is not biconnected")
    order = [s, t]
    placed = {s: 0, t: 1}
    frontier = [v for v in (s, t)]
    while len(order) < g.n:
        # find an unplaced vertex adjacent to a placed one
        u = w = -1
        while frontier:
            x = frontier[-1]
            for e in g.adj[x]:
                y = g.other(e, x)
                if y not in placed:
                    u, w = x, y
                    break
            if u >= 0:
                break
            frontier.pop()
        if u < 0:
            raise InvalidInput("graph is not connected")
        # BFS from w through unplaced vertices, avoiding u, to a placed z
        par = {w: -1}
        queue = [w]
        z = -1
        qi = 0
        while qi < len(queue):
            x = queue[qi]
            qi += 1
            for e in g.adj[x]:
                y = g.other(e, x)
                if y == u:
                    continue
                if y in placed:
                    z = y
                    par[z] = x
                    queue = []
                    break
                if y not in par:
                    par[y] = x
                    queue.append(y)
            if z >= 0:
                break
        if z < 0:
            raise InvalidInput("graph is not biconnected")
        path = []
        x = par[z]
        while x != -1:
            path.append(x)
            x = par[x]
        path.reverse()  # u-side first: path = w .. predecessor of z
        if placed[u] > placed[z]:
            u, z = z, u
            path.reverse()
        at = placed[u] + 1
        order[at:at] = path
        placed = {v: i for i, v in enumerate(order)}
        frontier.extend(path)
    for i, v in enumerate(order[1:-1], start=1):
        nb = [placed[g.other(e, v)] for e in g.adj[v]]
        assert min(nb) < i < max(nb), "st-order predicate violated"
    return order


def dfs_postorder(g: Graph, roots: Sequence[int] | None = None):
    """DFS forest postorder: every non-root vertex precedes its parent.

    Returns (order, parent, root_list); parent[v] = -1 for roots.
    Neighbors are explored in ascending edge id for determinism.
    """
    parent = [-1] * g.n
    seen = [False] * g.n
    order: list[int] = []
    root_list: list[int] = []
    it = roots if roots is not None else range(g.n)
    for r in it:
        if seen[r]:
            continue
        root_list.append(r)
        seen[r] = True
        stack: list[tuple[int, int]] = [(r, 0)]
        while stack:
            v, i = stack[-1]
            if i < len(g.adj[v]):
                stack[-1] = (v, i + 1)
                w = g.other(g.adj[v][i], v)
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    stack.append((w, 0))
            else:
                stack.pop()
                order.append(v)
    return order, parent, root_list


def blocks_and_cutvertices(g: Graph):
    """Biconnected components: (block id per edge, cutvertex flags,
    block id sets per vertex).  Isolated vertices get their own edgeless
    block, recorded only in the per-vertex sets.
    """
    block_of_edge = [-1] * g.m
    is_cut = [False] * g.n
    vertex_blocks: list[set[int]] = [set() for _ in range(g.n)]
    disc = [-1] * g.n
    low = [0] * g.n
    timer = 0
    estack: list[int] = []
    nblocks = 0
    for r in range(g.n):
        if disc[r] >= 0:
            continue
        if not g.adj[r]:
            vertex_blocks[r].add(nblocks)
            nblocks += 1
            continue
        root_children = 0
        disc[r] = low[r] = timer
        timer += 1
        stack: list[tuple[int, int, int]] = [(r, -1, 0)]  # vertex, parent edge, adj idx
        while stack:
            v, pe, i = stack[-1]
            if i < len(g.adj[v]):
                stack[-1] = (v, pe, i + 1)
                e = g.adj[v][i]
                if e == pe:
                    continue
                w = g.other(e, v)
                if disc[w] < 0:
                    estack.append(e)
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, e, 0))
                elif disc[w] < disc[v]:
                    estack.append(e)
                    if disc[w] < low[v]:
                        low[v] = disc[w]
            else:
                stack.pop()
                if not stack:
                    continue
                p = stack[-1][0]
                if low[v] < low[p]:
                    low[p] = low[v]
                if p == r:
                    root_children += 1
                if low[v] >= disc[p]:
                    # pop one block ending with edge pe
                    bid = nblocks
                    nblocks += 1
                    while True:
                        e = estack.pop()
                        block_of_edge[e] = bid
                        a, b = g.edges[e]
                        vertex_blocks[a].add(bid)
                        vertex_blocks[b].add(bid)
                        if e == pe:
                            break
                    if p != r:
                        is_cut[p] = True
        if root_children > 1:
            is_cut[r] = True
    return block_of_edge, is_cut, vertex_blocks


def rotation_from_lists(rot: Mapping[int, Sequence[int]]) -> dict[int, CyclicOrder]:
    return {v: CyclicOrder(order) for v, order in rot.items()}


class _PartialView:
    """Graph facade restricted to the edges a partial rotation mentions."""

    __slots__ = ("g", "adj")

    def __init__(self, g: Graph, rot: Mapping[int, Sequence[int]]):
        self.g = g
        self.adj = {v: list(order) for v, order in rot.items()}

    def other(self, eid: int, v: int) -> int:
        return self.g.other(eid, v)


def trace_faces_partial(g: Graph, rot: Mapping[int, Sequence[int]]) -> FaceSet:
    """Face trace of a sub-rotation-system (e.g. one subgraph component)."""
    return trace_faces(_PartialView(g, rot), rot)
