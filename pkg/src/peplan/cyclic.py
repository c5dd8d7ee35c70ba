"""Exact arithmetic on cyclic orders.

A cyclic order is an equivalence class of linear sequences under rotation.
Reversal is *not* equality: ``[1,2,3]`` and ``[1,3,2]`` are distinct orders.
Element ids are opaque but must be totally ordered (ints in practice);
callers own the mapping to graph edges, tree leaves, faces, etc.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class CyclicOrderError(Exception):
    pass


class InvalidMerge(CyclicOrderError):
    pass


class NotConsecutive(CyclicOrderError):
    pass


class InvalidElement(CyclicOrderError):
    pass


class CyclicOrder:
    """One representative rotation of a cyclic sequence of distinct elements."""

    __slots__ = ("_items", "_index")

    def __init__(self, items: Iterable = ()):
        items = tuple(items)
        if len(set(items)) != len(items):
            raise InvalidElement(f"duplicate elements in {items!r}")
        self._items = items
        self._index = {x: i for i, x in enumerate(items)}

    @property
    def items(self) -> tuple:
        return self._items

    @property
    def ground_set(self) -> frozenset:
        return frozenset(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator:
        return iter(self._items)

    def __contains__(self, x) -> bool:
        return x in self._index

    @staticmethod
    def _elem_key(x) -> tuple:
        # total order even for mixed element types (ints in practice)
        return (x.__class__.__name__, x)

    def canonical(self) -> "CyclicOrder":
        """Rotation starting at the least element (identity for len < 2)."""
        return CyclicOrder(self._canon_key())

    def _canon_key(self) -> tuple:
        if len(self._items) < 2:
            return self._items
        i = self._items.index(min(self._items, key=self._elem_key))
        return self._items[i:] + self._items[:i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CyclicOrder):
            return NotImplemented
        return self._canon_key() == other._canon_key()

    def __hash__(self) -> int:
        return hash(self._canon_key())

    def __repr__(self) -> str:
        return f"CyclicOrder({list(self._canon_key())!r})"

    def reverse(self) -> "CyclicOrder":
        return CyclicOrder(self._items[::-1])

    def project(self, subset: Iterable) -> "CyclicOrder":
        """Subsequence of the given elements, in cyclic order.

        Total on arbitrary subsets; consecutivity is the caller's business.
        """
        keep = set(subset)
        bad = keep - set(self._items)
        if bad:
            raise InvalidElement(f"not in ground set: {sorted(bad)!r}")
        return CyclicOrder(tuple(x for x in self._items if x in keep))

    def is_consecutive(self, subset: Iterable) -> bool:
        """True iff the elements occupy one contiguous cyclic arc."""
        keep = set(subset)
        bad = keep - set(self._items)
        if bad:
            raise InvalidElement(f"not in ground set: {sorted(bad)!r}")
        k, n = len(keep), len(self._items)
        if k == 0 or k == n:
            return True
        # contiguous iff exactly one member is followed by a non-member
        breaks = 0
        for i, x in enumerate(self._items):
            if x in keep and self._items[(i + 1) % n] not in keep:
                breaks += 1
        return breaks == 1

    def contract(self, subset: Iterable, fresh) -> "CyclicOrder":
        """Replace a consecutive block by a single fresh element."""
        keep = set(subset)
        if fresh in self._index:
            raise InvalidElement(f"{fresh!r} already present")
        if not keep:
            raise NotConsecutive("cannot contract the empty set")
        if not self.is_consecutive(keep):
            raise NotConsecutive(f"{sorted(keep)!r} not consecutive")
        n = len(self._items)
        if len(keep) == n:
            return CyclicOrder((fresh,))
        # rotate so the block starts at position 0
        start = next(
            i
            for i, x in enumerate(self._items)
            if x in keep and self._items[(i - 1) % n] not in keep
        )
        rot = self._items[start:] + self._items[:start]
        return CyclicOrder((fresh,) + rot[len(keep):])

    def merge(self, other: "CyclicOrder", ell) -> "CyclicOrder":
        """Merge two orders that share exactly the element ``ell``."""
        if ell not in self._index or ell not in other._index:
            raise InvalidMerge(f"{ell!r} must occur in both orders")
        shared = self.ground_set & other.ground_set
        if shared != {ell}:
            raise InvalidMerge(f"orders share {sorted(shared)!r}, expected only {ell!r}")
        if len(other) == 1:
            i = self._items.index(ell)
            return CyclicOrder(self._items[:i] + self._items[i + 1:])
        if len(self) == 1:
            i = other._items.index(ell)
            return CyclicOrder(other._items[:i] + other._items[i + 1:])
        # self = [alpha ell], other = [ell beta]  ->  [alpha beta]
        i = self._items.index(ell)
        alpha = self._items[i + 1:] + self._items[:i]
        j = other._items.index(ell)
        beta = other._items[j + 1:] + other._items[:j]
        return CyclicOrder(alpha + beta)
