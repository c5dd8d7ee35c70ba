"""Random tree specs and enumeration-level reference semantics."""

from __future__ import annotations

import random

from peplan.cyclic import CyclicOrder
from peplan.pctree import PCTree, build_tree

COLORS = ["red", "green", "blue"]


def random_tree_spec(rng: random.Random, n_leaves: int, cc: bool = False):
    """A random tree spec over leaves 0..n_leaves-1 plus the root choice."""
    ids = list(range(n_leaves))
    rng.shuffle(ids)
    root = ids[0]
    rest = ids[1:]
    spec = _random_subtree(rng, rest, cc, top=True)
    return root, spec


def _random_subtree(rng, ids, cc, top=False):
    if len(ids) == 1:
        return ("leaf", ids[0])
    # split into 2..4 groups; occasionally make single-leaf groups
    k = min(len(ids), rng.choice([2, 2, 3, 3, 4]))
    groups = [[] for _ in range(k)]
    for i, x in enumerate(ids):
        groups[i % k].append(x)
    rng.shuffle(groups)
    children = [_random_subtree(rng, g, cc) for g in groups]
    # keep inner degree >= 3: with the parent arc, need >= 2 children
    if len(children) == 1:
        return children[0]
    kind = rng.choice(["P", "P", "C"])
    if kind == "C":
        fixed = cc and rng.random() < 0.4
        return ("C", fixed, children)
    cdesc = None
    if cc and rng.random() < 0.6:
        cdesc = _random_constraint(rng, len(children))
    return ("P", cdesc, children)


def _random_constraint(rng, nkids):
    sels = ["up"] + list(range(nkids))
    rng.shuffle(sels)
    nfix = rng.randint(0, len(sels))
    if nfix == 0:
        return None
    fixed = sels[:nfix]
    angles = [rng.choice(COLORS) for _ in fixed]
    rest = sels[nfix:]
    restricted = {}
    for s in rest:
        if rng.random() < 0.5:
            # mostly colors that have an angle; sometimes not (infeasible ok
            # only if the builder accepts it, so clamp to present colors)
            restricted[s] = rng.choice(angles)
    return {"fixed": fixed, "angles": angles, "restricted": restricted}


def make_tree(rng: random.Random, n_leaves: int, cc: bool = False) -> PCTree:
    root, spec = random_tree_spec(rng, n_leaves, cc)
    return build_tree(root, spec)


def omega(t: PCTree, bound: int = 10) -> frozenset:
    return frozenset(t.enumerate_orders(bound))


def filter_consecutive(orders, A) -> frozenset:
    A = set(A)
    return frozenset(o for o in orders if o.is_consecutive(A))


def project_orders(orders, keep, fresh) -> frozenset:
    """sigma[drop -> fresh] for each order (contract the complement)."""
    out = set()
    for o in orders:
        drop = set(o.ground_set) - set(keep)
        out.add(o.contract(drop, fresh))
    return frozenset(out)


def merge_orders(os1, os2, ell) -> frozenset:
    out = set()
    for a in os1:
        for b in os2:
            out.add(a.merge(b, ell))
    return frozenset(out)


def random_subset(rng, ids, min_size=0, max_size=None):
    ids = list(ids)
    if max_size is None:
        max_size = len(ids)
    k = rng.randint(min_size, max_size)
    rng.shuffle(ids)
    return set(ids[:k])
