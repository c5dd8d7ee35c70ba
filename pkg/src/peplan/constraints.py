"""Per-vertex rotation constraints.

A constraint partitions the edges at a vertex into fixed edges (with a
prescribed ccw order and a face color per following angle), restricted
edges (pinned to a face color), and unrestricted edges.  A cyclic order of
all edges is valid when the fixed edges appear in the prescribed oriented
order and every restricted edge sits in an angle of its color, i.e. its
ccw-preceding fixed edge carries that angle color.  With no fixed edges,
every order is valid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable

from .cyclic import CyclicOrder


@dataclass
class ColorConstraint:
    fixed: tuple = ()                 # rho: ccw order of fixed edges
    angle_colors: tuple = ()          # color of the angle after fixed[i]
    restricted: dict = field(default_factory=dict)  # edge -> color
    free: tuple = ()

    def __post_init__(self):
        if len(self.fixed) != len(self.angle_colors):
            raise ValueError("one angle color per fixed edge")
        parts = [set(self.fixed), set(self.restricted), set(self.free)]
        if sum(len(p) for p in parts) != len(set().union(*parts)):
            raise ValueError("fixed/restricted/free must partition the edges")

    @property
    def elements(self) -> frozenset:
        return frozenset(self.fixed) | set(self.restricted) | set(self.free)

    def color_of_angle_after(self, h) -> Hashable:
        return self.angle_colors[self.fixed.index(h)]


def satisfies_constraint(order: CyclicOrder, c: ColorConstraint) -> bool:
    """True iff the order is valid for the constraint (see module doc)."""
    if order.ground_set != c.elements:
        raise ValueError("order must range over the constraint's edges")
    if not c.fixed:
        return True
    if order.project(c.fixed) != CyclicOrder(c.fixed):
        return False
    if not c.restricted:
        return True
    items = order.items
    n = len(items)
    fixed_set = set(c.fixed)
    for i, e in enumerate(items):
        color = c.restricted.get(e)
        if color is None:
            continue
        j = (i - 1) % n
        while items[j] not in fixed_set:
            j = (j - 1) % n
        if c.color_of_angle_after(items[j]) != color:
            return False
    return True


def valid_orders(c: ColorConstraint, cap: int = 100000) -> set[CyclicOrder]:
    """All valid cyclic orders, by brute force (test oracle)."""
    elems = sorted(c.elements, key=lambda x: (x.__class__.__name__, x))
    if not elems:
        return {CyclicOrder(())}
    first, rest = elems[0], elems[1:]
    out = set()
    count = 0
    for perm in itertools.permutations(rest):
        count += 1
        if count > cap:
            raise ValueError("too many orders to enumerate")
        order = CyclicOrder((first,) + perm)
        if satisfies_constraint(order, c):
            out.add(order)
    return out
