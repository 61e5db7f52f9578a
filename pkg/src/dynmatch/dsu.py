"""Disjoint sets with a per-set parity bit and a global odd-set counter.

Union by size with path compression.  Each set carries one parity bit; a new
singleton starts odd, merging XORs the bits, and ``change_parity`` flips one
set.  ``all_even()`` is O(1) via the maintained count of odd sets.  Unlike the
textbook structure, whole sets can be deregistered (``remove_all``), which the
grid matcher needs when it rebuilds a split component.
"""

from __future__ import annotations

ODD = 1
EVEN = 0


class ParitySet:
    def __init__(self):
        self._parent: dict = {}
        self._size: dict = {}      # root -> member count
        self._parity: dict = {}    # root -> 0 (even) | 1 (odd)
        self._members: dict = {}   # root -> list of members
        self._odd = 0
        self.find_steps = 0        # total parent hops, for amortized-cost checks

    def __len__(self) -> int:
        return len(self._parent)

    @property
    def set_count(self) -> int:
        return len(self._size)

    @property
    def odd_count(self) -> int:
        return self._odd

    def all_even(self) -> bool:
        return self._odd == 0

    def make_set(self, x) -> None:
        """Register ``x`` as a fresh singleton with odd parity."""
        if x in self._parent:
            raise ValueError(f"element already registered: {x!r}")
        self._parent[x] = x
        self._size[x] = 1
        self._parity[x] = ODD
        self._members[x] = [x]
        self._odd += 1

    def find(self, x):
        parent = self._parent
        try:
            root = parent[x]
        except KeyError:
            raise KeyError(f"unregistered element: {x!r}") from None
        while parent[root] != root:
            self.find_steps += 1
            root = parent[root]
        while parent[x] != root:   # path compression
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y) -> None:
        """Merge the sets of ``x`` and ``y``; no-op when already joined.

        The bigger set's representative survives (ties keep ``x``'s), and the
        merged parity is the XOR of the two parities.
        """
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self._size[rx] < self._size[ry]:
            rx, ry = ry, rx
        self._parent[ry] = rx
        self._size[rx] += self._size.pop(ry)
        big, small = self._members[rx], self._members.pop(ry)
        big.extend(small)
        px, py = self._parity[rx], self._parity.pop(ry)
        self._odd -= px + py
        merged = px ^ py
        self._parity[rx] = merged
        self._odd += merged

    def change_parity(self, x) -> None:
        root = self.find(x)
        flipped = self._parity[root] ^ 1
        self._parity[root] = flipped
        self._odd += 1 if flipped else -1

    def parity_of(self, x) -> int:
        return self._parity[self.find(x)]

    def members(self, x) -> list:
        """Every element in ``x``'s set (a copy)."""
        return list(self._members[self.find(x)])

    def remove_all(self, elements) -> None:
        """Deregister one or more whole sets.

        ``elements`` must be the complete membership of every set it touches;
        removing part of a set is rejected before any change is made.
        """
        by_root: dict = {}
        for x in elements:
            by_root.setdefault(self.find(x), []).append(x)
        for root, group in by_root.items():
            if len(group) != self._size[root]:
                raise ValueError(
                    f"partial removal of set {root!r}: "
                    f"{len(group)} of {self._size[root]} elements")
            if len(set(group)) != len(group):
                raise ValueError("duplicate elements in removal")
        for root, group in by_root.items():
            self._odd -= self._parity.pop(root)
            del self._size[root]
            del self._members[root]
            for x in group:
                del self._parent[x]

    def check(self) -> None:
        """Internal consistency: sizes, member lists, and the odd counter."""
        assert set(self._size) == set(self._parity) == set(self._members)
        seen = 0
        for root, members in self._members.items():
            assert self.find(root) == root
            assert len(members) == self._size[root]
            assert all(self.find(m) == root for m in members)
            seen += len(members)
        assert seen == len(self._parent)
        assert self._odd == sum(self._parity.values())
