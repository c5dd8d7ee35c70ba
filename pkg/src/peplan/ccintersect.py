"""Non-empty intersection test between a split-off tree and a vertex node.

The planarity step must decide whether some order of the connecting edges
admitted by the component side (T^F) is, reversed, admitted by the vertex
side (S^F, a single constrained node).  Within the pipeline both sides
agree on colors, so only the order of the vertex side's fixed edges can
fail: it suffices to drop all non-fixed leaves from T^F and test whether
the reversed fixed rotation is an admissible order of what remains.

The flip probe runs the same membership twice, pinning a split C-node half
to each of its two orientations, to learn whether the vertex constraint
fixes that node's flip.
"""

from __future__ import annotations

from .pctree import (
    CNODE,
    FIXED,
    LEAF,
    PNODE,
    UP,
    PCTree,
    _eff_next,
    _uf_find,
)

EMPTY = "empty"
FREE = "free"
FIXED_SAME = "fixed_same"
FIXED_REVERSED = "fixed_reversed"


def fixed_cycle_of_vertex_side(sF: PCTree, exclude=None) -> list:
    """Leaf ids of sF's fixed edges in rho order (sF has one inner node)."""
    top = sF.top
    if top is None or top.kind == LEAF or sF.null:
        return []
    if top.kind == CNODE:
        if not top.cfixed:
            return []
        ids = []
        for s in sF._ring_order(top):
            ids.append(sF.root.leaf_id if s.node is None else s.node.leaf_id)
        return [i for i in ids if i != exclude]
    if top.ctrs is None:
        return []
    ids = []
    for arc in sF._fix_order(top):
        if arc is UP:
            ids.append(sF.root.leaf_id)
        else:
            if arc.kind != LEAF:  # pragma: no cover - vertex side is flat
                raise AssertionError("vertex side must be a single node")
            ids.append(arc.leaf_id)
    return [i for i in ids if i != exclude]


def _cyclic_eq(a: list, b: list) -> bool:
    if len(a) != len(b):
        return False
    if not a:
        return True
    try:
        i = b.index(a[0])
    except ValueError:
        return False
    n = len(a)
    return all(b[(i + j) % n] is a[j] or b[(i + j) % n] == a[j] for j in range(n))


def membership(tF: PCTree, cand: list, force=None) -> bool:
    """Is the cyclic order ``cand`` a projection of some admissible order?

    ``cand`` lists a subset of tF's leaves; all other leaves are ignored
    (removable).  ``force`` = (cnode, +1|-1) additionally pins one C-node to
    its stored or reversed orientation.
    """
    if tF.null:
        return False
    k = len(cand)
    if k <= 2:
        return True
    pos = {x: i for i, x in enumerate(cand)}
    if len(pos) != k:
        raise ValueError("candidate has repeated ids")
    forced_node = None
    forced_dir = 0
    if force is not None:
        half, d = force
        root, _ = _uf_find(half.uf)
        forced_node = root.cnode
        forced_dir = d

    root_in = 1 if tF.root.leaf_id in pos else 0
    ok = _check_node(tF, tF.top, pos, k, forced_node, forced_dir)
    if ok is None:
        return False
    cnt, _, _ = ok
    if cnt + root_in != k:  # pragma: no cover - candidate must cover tF
        raise ValueError("candidate mentions leaves outside the tree")
    return True


def _check_node(tF, x, pos, k, forced_node, forced_dir):
    """Returns (count, start, length) of the subtree's candidate block, or
    None on failure.  Subtrees without candidate leaves yield (0, 0, 0)."""
    if x.kind == LEAF:
        i = pos.get(x.leaf_id)
        if i is None:
            return (0, 0, 0)
        return (1, i, 1)
    infos = []
    handles = []
    for c in tF._children(x):
        sub = _check_node(tF, c, pos, k, forced_node, forced_dir)
        if sub is None:
            return None
        if sub[0]:
            infos.append(sub)
            handles.append(c)
    cnt = sum(i[0] for i in infos)
    if cnt == 0:
        return (0, 0, 0)
    order = sorted(range(len(infos)), key=lambda i: infos[i][1])
    gaps = 0
    gap_after = -1
    for j in range(len(order)):
        a = infos[order[j]]
        b = infos[order[(j + 1) % len(order)]]
        if (a[1] + a[2]) % k != b[1]:
            gaps += 1
            gap_after = j
    if cnt == k:
        if gaps != 0 and len(order) > 1:
            return None
        if gaps > 1:
            return None
    else:
        if len(order) == 1:
            gaps, gap_after = 1, 0
        if gaps != 1:
            return None
    # induced cyclic arc sequence around x, UP in the gap when it exists
    seq = [handles[order[j]] for j in range(len(order))]
    if cnt < k:
        seq = seq[gap_after + 1:] + seq[:gap_after + 1] + [UP]
    if not _node_order_ok(tF, x, seq, forced_node, forced_dir):
        return None
    if cnt == k:
        return (cnt, infos[order[0]][1], k)
    start = infos[order[(gap_after + 1) % len(order)]][1]
    return (cnt, start, cnt)


def _node_order_ok(tF, x, seq, forced_node, forced_dir) -> bool:
    """Does the induced arc cycle respect x's own ordering constraint?"""
    present = {id(h) for h in seq}
    if x.kind == CNODE:
        ring = []
        for s in tF._ring_order(x):
            h = UP if s.node is None else s.node
            if id(h) in present:
                ring.append(h)
        fixed = x.cfixed
        allow_same, allow_rev = True, True
        if fixed:
            allow_rev = False
        root, _ = _uf_find(x.uf)
        if forced_node is not None and root.cnode is forced_node:
            if forced_dir > 0:
                allow_rev = False
            else:
                allow_same = False
                if fixed:
                    return False
        if allow_same and _cyclic_eq(ring, seq):
            return True
        if allow_rev and _cyclic_eq(list(reversed(ring)), seq):
            return True
        return False
    if x.ctrs is None:
        return True
    rho = [h for h in tF._fix_order(x) if id(h) in present]
    induced = []
    for h in seq:
        kind = tF._arc_kind_at(x, h)[0]
        if kind == FIXED:
            induced.append(h)
    return _cyclic_eq(rho, induced)


def restricted_intersect_nonempty(tF: PCTree, sF: PCTree, exclude=None) -> bool:
    """True iff some admissible order of tF, reversed, satisfies sF."""
    if tF.null or sF.null:
        return False
    rho = fixed_cycle_of_vertex_side(sF, exclude)
    if len(rho) <= 2:
        return True
    cand = list(reversed(rho))
    return membership(tF, cand)


def probe_flip(tF: PCTree, sF: PCTree, half, exclude=None) -> str:
    """How the vertex side constrains the split half's orientation."""
    if tF.null or sF.null:
        return EMPTY
    rho = fixed_cycle_of_vertex_side(sF, exclude)
    if len(rho) <= 2:
        return FREE
    cand = list(reversed(rho))
    same = membership(tF, cand, force=(half, +1))
    rev = membership(tF, cand, force=(half, -1))
    if same and rev:
        return FREE
    if same:
        return FIXED_SAME
    if rev:
        return FIXED_REVERSED
    return EMPTY
