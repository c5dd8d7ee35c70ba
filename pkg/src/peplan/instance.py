"""Instance model and preprocessing.

An instance is a graph G, a subgraph H, and an embedding of H given as
per-vertex ccw rotations plus, per H-component, a designated outer local
face and a placement (the outer region or a face of another component).
Preprocessing enumerates the global faces of the embedding, decomposes
G - H into bridges, pins each bridge with attachments in several H-blocks
to the unique face containing all its attachments, and turns the result
into per-vertex rotation constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .constraints import ColorConstraint
from .cyclic import CyclicOrder
from .graph import (
    Graph,
    blocks_and_cutvertices,
    connected_components,
    trace_faces_partial,
)


class InstanceError(Exception):
    """Invalid instance data; the CLI maps this to exit code 2."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class Infeasible(Exception):
    """The instance is negative already at the preprocessing stage."""

    def __init__(self, reason: str, detail: Any = None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


@dataclass
class HComponent:
    rep: Any                      # min vertex, or ("iso", v)
    vertices: frozenset
    outer_corner: tuple | None    # (v, e_in); None for an isolated vertex
    placement: Any                # "outer" | (component index, (v, e_in))


@dataclass
class PEPInstance:
    g: Graph
    h_edges: frozenset
    h_isolated: frozenset
    rotations: dict                  # H-vertex -> tuple of H-edge ids (ccw)
    components: list[HComponent] = field(default_factory=list)

    @property
    def h_vertices(self) -> frozenset:
        verts = set(self.h_isolated)
        for e in self.h_edges:
            u, v = self.g.edges[e]
            verts.add(u)
            verts.add(v)
        return frozenset(verts)


@dataclass
class HFaceMap:
    n_faces: int
    outer_gid: int
    corner_gid: dict        # (v, e_in) -> global face id
    vertex_gids: dict       # H-vertex -> frozenset of global face ids
    dir_gid: dict           # directed H-edge (e, head) -> global face id
    local_faces: list       # per component: FaceSet or None (isolated)
    comp_of_vertex: dict    # H-vertex -> component index
    gid_vertices: list      # global face id -> frozenset of boundary vertices


@dataclass
class Bridge:
    bid: int
    kind: str                # "edge" | "component"
    edges: frozenset
    attachments: frozenset


# ----------------------------------------------------------------------
# parsing and serialization
# ----------------------------------------------------------------------

_TOP_FIELDS = {"n", "edges", "h_edges", "h_isolated", "rotations", "components"}


def parse_instance(data) -> PEPInstance:
    """Validate raw JSON data (bytes/str/dict) into an instance."""
    if isinstance(data, (bytes, str)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise InstanceError("$", f"not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise InstanceError("$", "top level must be an object")
    unknown = set(data) - _TOP_FIELDS
    if unknown:
        raise InstanceError("$", f"unknown fields {sorted(unknown)}")
    for f_ in ("n", "edges", "h_edges", "h_isolated", "rotations", "components"):
        if f_ not in data:
            raise InstanceError("$", f"missing field {f_!r}")
    n = data["n"]
    if not isinstance(n, int) or n < 0:
        raise InstanceError("n", "must be a nonnegative integer")
    edges = data["edges"]
    if not isinstance(edges, list):
        raise InstanceError("edges", "must be a list of pairs")
    try:
        g = Graph(n, [tuple(e) for e in edges])
    except Exception as e:
        raise InstanceError("edges", str(e)) from None
    h_edges = data["h_edges"]
    if not isinstance(h_edges, list) or len(set(h_edges)) != len(h_edges):
        raise InstanceError("h_edges", "must be a list of distinct edge ids")
    for e in h_edges:
        if not isinstance(e, int) or not (0 <= e < g.m):
            raise InstanceError("h_edges", f"edge id {e} out of range")
    h_edges = frozenset(h_edges)
    h_iso = data["h_isolated"]
    if not isinstance(h_iso, list):
        raise InstanceError("h_isolated", "must be a list of vertices")
    endpoint_set = set()
    for e in h_edges:
        endpoint_set.update(g.edges[e])
    for v in h_iso:
        if not isinstance(v, int) or not (0 <= v < n):
            raise InstanceError("h_isolated", f"vertex {v} out of range")
        if v in endpoint_set:
            raise InstanceError("h_isolated", f"vertex {v} has incident H-edges")
    h_iso = frozenset(h_iso)
    # rotations
    rot_raw = data["rotations"]
    if not isinstance(rot_raw, dict):
        raise InstanceError("rotations", "must be an object")
    h_adj: dict[int, list[int]] = {}
    for e in h_edges:
        u, v = g.edges[e]
        h_adj.setdefault(u, []).append(e)
        h_adj.setdefault(v, []).append(e)
    rotations = {}
    for key, order in rot_raw.items():
        try:
            v = int(key)
        except ValueError:
            raise InstanceError("rotations", f"bad vertex key {key!r}") from None
        if v not in h_adj:
            raise InstanceError("rotations", f"vertex {v} has no H-edges")
        if sorted(order) != sorted(h_adj[v]):
            raise InstanceError(
                "rotations", f"rotation at {v} is not a permutation of its H-edges"
            )
        rotations[v] = tuple(order)
    missing = set(h_adj) - set(rotations)
    if missing:
        raise InstanceError("rotations", f"missing vertices {sorted(missing)}")

    inst = PEPInstance(g, h_edges, h_iso, rotations, [])
    comps, comp_of = _h_components(inst)

    comp_raw = data["components"]
    if not isinstance(comp_raw, list):
        raise InstanceError("components", "must be a list")
    if len(comp_raw) != len(comps):
        raise InstanceError(
            "components", f"expected {len(comps)} entries, got {len(comp_raw)}"
        )
    seen_reps = set()
    parsed = []
    for i, c in enumerate(comp_raw):
        path = f"components[{i}]"
        if not isinstance(c, dict) or set(c) != {"rep", "outer_local_face", "placement"}:
            raise InstanceError(path, "needs exactly rep/outer_local_face/placement")
        rep_raw = c["rep"]
        if isinstance(rep_raw, str) and rep_raw.startswith("iso:"):
            rep = ("iso", int(rep_raw[4:]))
            rv = rep[1]
            if rv not in h_iso:
                raise InstanceError(path, f"{rep_raw} is not an isolated H-vertex")
        elif isinstance(rep_raw, int):
            rep = rep_raw
            rv = rep_raw
        else:
            raise InstanceError(path, "rep must be a vertex or 'iso:<v>'")
        ci = comp_of.get(rv)
        if ci is None:
            raise InstanceError(path, f"rep vertex {rv} not in H")
        if ci in seen_reps:
            raise InstanceError(path, "component listed twice")
        seen_reps.add(ci)
        parsed.append((ci, rep, c["outer_local_face"], c["placement"]))
    if len(seen_reps) != len(comps):
        raise InstanceError("components", "not all H-components are listed")
    # reorder entries to component index order
    parsed.sort(key=lambda t: t[0])
    # local faces per component, for corner validation
    local = _trace_local_faces(inst, comps)
    out_components = []
    for ci, rep, olf, plc in parsed:
        path = f"components[rep={rep}]"
        is_iso = isinstance(rep, tuple)
        if is_iso:
            if olf is not None:
                raise InstanceError(path, "isolated component has no outer face")
            corner = None
        else:
            corner = _parse_corner(olf, path + ".outer_local_face")
            if corner not in local[ci].corner_face:
                raise InstanceError(path, f"corner {corner} is not a corner here")
            if corner[0] not in comps[ci]:
                raise InstanceError(path, "outer face corner in wrong component")
        if plc == "outer":
            placement = "outer"
        elif isinstance(plc, dict) and set(plc) == {"component", "face"}:
            pj = plc["component"]
            if not isinstance(pj, int) or not (0 <= pj < len(comps)) or pj == ci:
                raise InstanceError(path, f"bad parent component {pj}")
            pc = _parse_corner(plc["face"], path + ".placement.face")
            if local[pj] is None or pc not in local[pj].corner_face:
                raise InstanceError(path, "placement face is not a parent corner")
            placement = (pj, pc)
        else:
            raise InstanceError(path, "placement must be 'outer' or a face ref")
        out_components.append(
            HComponent(rep, frozenset(comps[ci]), corner, placement)
        )
    inst.components = out_components
    # placements must form a forest
    for start in range(len(out_components)):
        seen = set()
        cur = start
        while out_components[cur].placement != "outer":
            if cur in seen:
                raise InstanceError("components", "cyclic placement nesting")
            seen.add(cur)
            cur = out_components[cur].placement[0]
    # per-component planarity of the given rotations
    mc = [0] * len(comps)
    for e in h_edges:
        mc[comp_of[g.edges[e][0]]] += 1
    for ci, fs in enumerate(local):
        if fs is None:
            continue
        if len(comps[ci]) - mc[ci] + len(fs) != 2:
            raise InstanceError(
                f"components[{ci}]", "rotation system is not planar"
            )
    return inst


def _parse_corner(raw, path) -> tuple:
    if not isinstance(raw, dict) or set(raw) != {"v", "e_in"}:
        raise InstanceError(path, "face ref needs exactly v and e_in")
    return (raw["v"], raw["e_in"])


def _h_components(inst: PEPInstance):
    """H-components as vertex sets, ordered by least vertex; index map."""
    adj: dict[int, list[int]] = {}
    for e in inst.h_edges:
        u, v = inst.g.edges[e]
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seen = set()
    comps = []
    for v in sorted(set(adj) | set(inst.h_isolated)):
        if v in seen:
            continue
        stack = [v]
        seen.add(v)
        comp = {v}
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(frozenset(comp))
    comp_of = {}
    for i, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = i
    return comps, comp_of


def _trace_local_faces(inst: PEPInstance, comps):
    """FaceSet per component (None for isolated vertices)."""
    out = []
    for comp in comps:
        rot = {v: inst.rotations[v] for v in comp if v in inst.rotations}
        out.append(_trace_sub(inst.g, rot) if rot else None)
    return out


def _trace_sub(g: Graph, rot):
    """trace_faces over a vertex-induced subset of the rotation map."""
    return trace_faces_partial(g, rot)


def serialize_instance(inst: PEPInstance) -> bytes:
    comps = []
    for c in inst.components:
        rep = f"iso:{c.rep[1]}" if isinstance(c.rep, tuple) else c.rep
        olf = None if c.outer_corner is None else {
            "v": c.outer_corner[0], "e_in": c.outer_corner[1]
        }
        plc = "outer" if c.placement == "outer" else {
            "component": c.placement[0],
            "face": {"v": c.placement[1][0], "e_in": c.placement[1][1]},
        }
        comps.append({"rep": rep, "outer_local_face": olf, "placement": plc})
    doc = {
        "n": inst.g.n,
        "edges": [[u, v] for u, v in inst.g.edges],
        "h_edges": sorted(inst.h_edges),
        "h_isolated": sorted(inst.h_isolated),
        "rotations": {str(v): list(order) for v, order in sorted(inst.rotations.items())},
        "components": comps,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


# ----------------------------------------------------------------------
# global faces
# ----------------------------------------------------------------------

def h_faces(inst: PEPInstance) -> HFaceMap:
    comps, comp_of = _h_components(inst)
    local = _trace_local_faces(inst, comps)
    # union-find over (component, local face index) plus the outer region
    parent: dict = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    OUTER = ("outer",)
    keys = [OUTER]
    for ci, fs in enumerate(local):
        if fs is None:
            keys.append((ci, 0))
        else:
            keys.extend((ci, fi) for fi in range(len(fs)))
    for ci, hc in enumerate(inst.components):
        if local[ci] is None:
            mine = (ci, 0)
        else:
            mine = (ci, local[ci].corner_face[hc.outer_corner])
        if hc.placement == "outer":
            union(mine, OUTER)
        else:
            pj, pcorner = hc.placement
            union(mine, (pj, local[pj].corner_face[pcorner]))
    roots = {}
    for k in keys:
        roots.setdefault(find(k), len(roots))
    gid_of = {k: roots[find(k)] for k in keys}
    corner_gid = {}
    dir_gid = {}
    vertex_gids: dict[int, set] = {v: set() for v in inst.h_vertices}
    gid_vertices: list[set] = [set() for _ in range(len(roots))]
    for ci, fs in enumerate(local):
        if fs is None:
            v = next(iter(comps[ci]))
            gid = gid_of[(ci, 0)]
            vertex_gids[v].add(gid)
            gid_vertices[gid].add(v)
            continue
        for fi, corners in enumerate(fs.faces):
            gid = gid_of[(ci, fi)]
            for (v, e_in, _e_out) in corners:
                corner_gid[(v, e_in)] = gid
                vertex_gids[v].add(gid)
                gid_vertices[gid].add(v)
        for key, fi in fs.dir_face.items():
            dir_gid[key] = gid_of[(ci, fi)]
    return HFaceMap(
        n_faces=len(roots),
        outer_gid=gid_of[OUTER],
        corner_gid=corner_gid,
        vertex_gids={v: frozenset(s) for v, s in vertex_gids.items()},
        dir_gid=dir_gid,
        local_faces=local,
        comp_of_vertex=comp_of,
        gid_vertices=[frozenset(s) for s in gid_vertices],
    )


# ----------------------------------------------------------------------
# bridges and the face coloring
# ----------------------------------------------------------------------

def h_bridges(inst: PEPInstance) -> list[Bridge]:
    g = inst.g
    hv = inst.h_vertices
    he = inst.h_edges
    bridges = []
    seen = [False] * g.n
    for s in range(g.n):
        if s in hv or seen[s]:
            continue
        # component of G - V(H)
        seen[s] = True
        comp = [s]
        stack = [s]
        edges = set()
        attach = set()
        while stack:
            x = stack.pop()
            for e in g.adj[x]:
                y = g.other(e, x)
                edges.add(e)
                if y in hv:
                    attach.add(y)
                elif not seen[y]:
                    seen[y] = True
                    comp.append(y)
                    stack.append(y)
        bridges.append(Bridge(len(bridges), "component",
                              frozenset(edges), frozenset(attach)))
    for e in range(g.m):
        if e in he:
            continue
        u, v = g.edges[e]
        if u in hv and v in hv:
            bridges.append(Bridge(len(bridges), "edge",
                                  frozenset({e}), frozenset({u, v})))
    return bridges


def color_bridges(inst: PEPInstance, faces: HFaceMap, bridges) -> dict:
    """edge -> global face id, or None when the face is arbitrary."""
    hv = inst.h_vertices
    h_sub_blocks = _h_vertex_blocks(inst)
    coloring: dict[int, Any] = {}
    for b in bridges:
        att = sorted(b.attachments)
        restricted = False
        if len(att) >= 2:
            common = set(h_sub_blocks[att[0]])
            for v in att[1:]:
                common &= h_sub_blocks[v]
                if not common:
                    break
            restricted = not common
        if not restricted:
            for e in b.edges:
                coloring[e] = None
            continue
        face_sets = [faces.vertex_gids[v] for v in att]
        candidates = set(face_sets[0])
        for s in face_sets[1:]:
            candidates &= s
        if not candidates:
            raise Infeasible(
                "bridge attachments share no face", detail=b.bid
            )
        assert len(candidates) == 1, "forced face must be unique"
        gid = next(iter(candidates))
        for e in b.edges:
            coloring[e] = gid
    return coloring


def _h_vertex_blocks(inst: PEPInstance):
    """Block id sets of H per H-vertex (isolated vertices: own blocks)."""
    hv = sorted(inst.h_vertices)
    index = {v: i for i, v in enumerate(hv)}
    edges = [(index[inst.g.edges[e][0]], index[inst.g.edges[e][1]])
             for e in sorted(inst.h_edges)]
    sub = Graph(len(hv), edges)
    _, _, vblocks = blocks_and_cutvertices(sub)
    return {v: vblocks[index[v]] for v in hv}


# ----------------------------------------------------------------------
# per-vertex constraints and the component split
# ----------------------------------------------------------------------

def vertex_constraints(inst: PEPInstance, faces: HFaceMap, coloring) -> dict:
    """ColorConstraint per vertex of G, colors densified to 0..k-1."""
    g = inst.g
    hv = inst.h_vertices
    dense: dict[int, int] = {}

    def color_of(gid) -> int:
        if gid not in dense:
            dense[gid] = len(dense)
        return dense[gid]

    out = {}
    for v in range(g.n):
        incident = g.adj[v]
        if v in inst.rotations:
            rho = inst.rotations[v]
            # the corner (v, h) is the angle ccw-after h by the convention
            angle_colors = [color_of(faces.corner_gid[(v, h)]) for h in rho]
            restricted = {}
            free = []
            for e in incident:
                if e in inst.h_edges:
                    continue
                gid = coloring.get(e)
                if gid is None:
                    free.append(e)
                else:
                    col = color_of(gid)
                    if col not in set(angle_colors):
                        raise Infeasible(
                            "restricted edge color matches no angle",
                            detail=(v, e),
                        )
                    restricted[e] = col
            out[v] = ColorConstraint(
                fixed=tuple(rho), angle_colors=tuple(angle_colors),
                restricted=restricted, free=tuple(free),
            )
        else:
            restricted = {}
            free = []
            for e in incident:
                gid = coloring.get(e)
                if gid is None:
                    free.append(e)
                else:
                    restricted[e] = color_of(gid)
            out[v] = ColorConstraint(restricted=restricted, free=tuple(free))
    return out


def split_components(inst: PEPInstance) -> list[list[int]]:
    """Vertex lists of G's connected components (global data is shared)."""
    comp = connected_components(inst.g)
    k = max(comp) + 1 if comp else 0
    out: list[list[int]] = [[] for _ in range(k)]
    for v in range(inst.g.n):
        out[comp[v]].append(v)
    return out


def preprocess(inst: PEPInstance):
    """(faces, bridges, coloring, constraints, components) or Infeasible."""
    faces = h_faces(inst)
    bridges = h_bridges(inst)
    coloring = color_bridges(inst, faces, bridges)
    constraints = vertex_constraints(inst, faces, coloring)
    comps = split_components(inst)
    return faces, bridges, coloring, constraints, comps
