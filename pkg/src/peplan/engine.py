"""The planarity tests: plain, biconnected, and general.

One insertion step serves every driver: make the connecting edges
consecutive on both sides, split both trees, check that some order of the
connecting edges works for both (reversed on the vertex side), fix the
split C-node's flip when the vertex side pins it, and merge.  Vertices are
inserted in DFS postorder (general case) or an st-order (biconnected
driver); components and blocks incident to the next vertex are processed
nested-first, with the block of still-unfinished parts last.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ccintersect import (
    EMPTY,
    FIXED_REVERSED,
    FIXED_SAME,
    FREE,
    probe_flip,
    restricted_intersect_nonempty,
)
from .constraints import ColorConstraint
from .graph import Graph, connected_components, dfs_postorder, st_ordering
from .instance import Infeasible, PEPInstance, preprocess
from .pctree import PCTree


@dataclass
class Stats:
    updates: int = 0
    splits: int = 0
    tp_edges: int = 0
    intersects: int = 0
    probes: int = 0


@dataclass
class Result:
    answer: bool
    reject_stage: str | None = None
    stats: Stats = field(default_factory=Stats)


class _Reject(Exception):
    def __init__(self, stage: str):
        self.stage = stage


def _fresh_ids():
    return map(lambda k: -k, itertools.count(1))


def _insert_group(S: PCTree, TC: PCTree, F: set, finished: bool,
                  stats: Stats, fresh) -> PCTree:
    """One component/block absorbed into the vertex tree; raises _Reject."""
    if not TC.update(F, stats):
        raise _Reject("component-update")
    if not S.update(F, stats):
        raise _Reject("vertex-update")
    if finished:
        if F == S.leaf_ids():
            # nothing of the vertex remains: compare whole trees
            stats.intersects += 1
            if len(F) >= 2 and not restricted_intersect_nonempty(TC, S):
                raise _Reject("block-intersect")
            return PCTree.empty_tree()
        ell = next(fresh)
        S_off, _ = S.split(F, ell, stats)
        stats.intersects += 1
        if len(F) >= 2 and not restricted_intersect_nonempty(TC, S_off, exclude=ell):
            raise _Reject("block-intersect")
        S.remove_leaf(ell)
        return S
    ell = next(fresh)
    T_off, info = TC.split(F, ell, stats)
    S_off, _ = S.split(F, ell, stats)
    if len(F) >= 2:
        if info.single or info.half_off is None:
            stats.intersects += 1
            if not restricted_intersect_nonempty(T_off, S_off):
                raise _Reject("intersect")
        else:
            stats.probes += 1
            verdict = probe_flip(T_off, S_off, info.half_off)
            if verdict == EMPTY:
                raise _Reject("intersect")
            if verdict == FIXED_SAME and info.half_keep is not None:
                TC.fix_cnode(info.half_keep, same=True)
            elif verdict == FIXED_REVERSED and info.half_keep is not None:
                TC.fix_cnode(info.half_keep, same=False)
    return PCTree.merge(S, TC, ell)


def block_order(c: ColorConstraint, groups, future_edges):
    """Order the incident groups: blocks without fixed edges first, then
    finished blocks by the stack scan of the fixed rotation, then the
    unfinished parts (they belong to the rest-block, processed last).

    groups: list of (key, F_set, finished).  Raises Infeasible when two
    blocks' fixed edges alternate around the vertex.
    """
    if not groups:
        return []
    fixed = list(c.fixed)
    finished_idx = [i for i, g in enumerate(groups) if g[2]]
    unfinished_idx = [i for i, g in enumerate(groups) if not g[2]]
    order_key = lambda i: min(groups[i][1])
    if not fixed:
        idx = sorted(finished_idx, key=order_key) + sorted(unfinished_idx, key=order_key)
        return [groups[i] for i in idx]
    edge_item = {}
    BR = ("br",)
    for i in finished_idx:
        for e in groups[i][1]:
            edge_item[e] = ("g", i)
    for i in unfinished_idx:
        for e in groups[i][1]:
            edge_item[e] = BR
    for e in future_edges:
        edge_item[e] = BR
    items = [edge_item[h] for h in fixed]
    remaining: dict = {}
    for it in items:
        remaining[it] = remaining.get(it, 0) + 1
    # choose the scan start
    start = 0
    if BR in remaining:
        br_positions = [i for i, it in enumerate(items) if it == BR]
        h_star = min(br_positions, key=lambda i: fixed[i])
        start = (h_star + 1) % len(fixed)
    else:
        br_restricted = sorted(
            e for e in c.restricted
            if edge_item.get(e, BR) == BR
        )
        if br_restricted:
            col = c.restricted[br_restricted[0]]
            hits = [i for i, ac in enumerate(c.angle_colors) if ac == col]
            if not hits:  # pragma: no cover - prep guarantees an angle
                raise Infeasible("rest-block color has no angle")
            start = (hits[0] + 1) % len(fixed)
    stack: list = []
    on_stack: set = set()
    popped: list = []
    for idx in range(len(fixed)):
        it = items[(start + idx) % len(fixed)]
        if stack and stack[-1] == it:
            pass
        elif it in on_stack:
            raise Infeasible("blocks alternate around a cut vertex")
        else:
            stack.append(it)
            on_stack.add(it)
        remaining[it] -= 1
        if remaining[it] == 0:
            top = stack.pop()
            on_stack.discard(top)
            popped.append(top)
    assert not stack, "scan must close every block"
    if BR in remaining and popped and popped[-1] != BR:
        # the start rule guarantees the rest-block closes last
        raise Infeasible("rest-block enclosed by a finished block")
    fixless = [i for i in finished_idx if ("g", i) not in remaining]
    ordered = sorted(fixless, key=order_key)
    ordered += [it[1] for it in popped if it != BR]
    ordered += sorted(unfinished_idx, key=order_key)
    return [groups[i] for i in ordered]


def _run_component(g: Graph, constraints, order, parent, stats: Stats) -> None:
    """Insert the vertices in the given order; raises _Reject on failure."""
    fresh = _fresh_ids()
    inserted = set()
    comp_uf: dict[int, int] = {}

    def find(v: int) -> int:
        while comp_uf[v] != v:
            comp_uf[v] = comp_uf[comp_uf[v]]
            v = comp_uf[v]
        return v

    trees: dict[int, PCTree] = {}
    for v in order:
        c = constraints[v]
        groups_map: dict[int, set] = {}
        future_edges = []
        parent_edge = None
        for e in g.adj[v]:
            u = g.other(e, v)
            if u in inserted:
                groups_map.setdefault(find(u), set()).add(e)
            else:
                future_edges.append(e)
                if parent is not None and parent[v] == u:
                    parent_edge = e
        groups = []
        for key, F in sorted(groups_map.items(), key=lambda kv: min(kv[1])):
            finished = len(F) == trees[key].leaf_count
            groups.append((key, F, finished))
        try:
            ordered = block_order(c, groups, future_edges)
        except Infeasible as e:
            raise _Reject(f"block-order: {e.reason}") from None
        # root the vertex tree so every merge has the fresh leaf at a root
        root_leaf = None
        if len(ordered) == 1 and not ordered[0][2]:
            key, F, _fin = ordered[0]
            t_root = trees[key].root.leaf_id if trees[key].root is not None else None
            if t_root not in F:
                root_leaf = min(F)
        if root_leaf is None:
            if parent_edge is not None:
                root_leaf = parent_edge
            elif future_edges:
                root_leaf = min(future_edges)
            elif ordered:
                root_leaf = min(ordered[-1][1])
        if c.elements:
            S = PCTree.from_constraint(c, root_leaf)
            if S.null:
                raise _Reject("vertex-constraint")
        else:
            S = PCTree.empty_tree()
        for key, F, finished in ordered:
            TC = trees.pop(key)
            S = _insert_group(S, TC, F, finished, stats, fresh)
        inserted.add(v)
        comp_uf[v] = v
        for key, _F, _fin in ordered:
            comp_uf[key] = v
        trees[v] = S


def test_pep_general(g: Graph, constraints, vertices=None, stats=None) -> bool:
    """Not-necessarily-biconnected test over one connected vertex set."""
    stats = stats if stats is not None else Stats()
    if vertices is None:
        vertices = list(range(g.n))
    root = min(vertices)
    vs = set(vertices)
    order, parent, _roots = dfs_postorder(g, roots=[root])
    order = [v for v in order if v in vs]
    try:
        _run_component(g, constraints, order, parent, stats)
    except _Reject:
        return False
    return True


def test_pep_biconnected(g: Graph, constraints, stats=None) -> bool:
    """st-order driver; requires a biconnected G on all vertices."""
    stats = stats if stats is not None else Stats()
    if g.n == 1:
        return True
    s = min(v for v in range(g.n) if g.adj[v])
    t = g.other(min(g.adj[s]), s)
    order = st_ordering(g, s, t)
    try:
        _run_component(g, constraints, order, None, stats)
    except _Reject:
        return False
    return True


def test_planarity(g: Graph, stats=None) -> bool:
    """Plain planarity: the same loop with unconstrained vertices."""
    stats = stats if stats is not None else Stats()
    constraints = {v: ColorConstraint(free=tuple(g.adj[v])) for v in range(g.n)}
    comp = connected_components(g)
    k = max(comp) + 1 if comp else 0
    members: list[list[int]] = [[] for _ in range(k)]
    for v in range(g.n):
        members[comp[v]].append(v)
    for verts in members:
        if len(verts) <= 2:
            continue
        if not test_pep_general(g, constraints, verts, stats):
            return False
    return True


def check_instance(inst: PEPInstance, stats: Stats | None = None) -> Result:
    """Full pipeline: preprocess, then test every component of G."""
    stats = stats if stats is not None else Stats()
    try:
        _faces, _bridges, _coloring, constraints, comps = preprocess(inst)
    except Infeasible as e:
        return Result(False, f"coloring: {e.reason}", stats)
    for verts in comps:
        if len(verts) == 1:
            continue
        if not test_pep_general(inst.g, constraints, verts, stats):
            return Result(False, "insertion", stats)
    return Result(True, None, stats)
