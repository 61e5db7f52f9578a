"""Approximate bottleneck matching for a dynamic planar point set.

The bounding box is cut into a hierarchy of square grids: level ``i`` uses
cells of side ``2^i * min_dist``, and the top level is a single cell.  Two
cells are adjacent when they share a side or a corner.  Per level, a
:class:`~dynmatch.dsu.ParitySet` tracks the connected components of the
occupied cells together with each component's point-count parity.

The smallest level at which every component holds an even number of points
yields a threshold ``t = 2^(i-1) * min_dist`` with ``t < opt <= 6*sqrt(2)*t``
for the true bottleneck ``opt``, and a perfect matching with every edge at
most ``3*sqrt(2) * 2^i * min_dist`` can be read off the occupied cells in
linear time.

Cell indices are computed once at level 0 and derived for coarser levels by
integer shifts, so a point's cells nest exactly: the levels at which a deleted
point leaves an empty cell behind always form a prefix 0..m of the hierarchy.

Deleting a point may disconnect a component at one level.  Emptied cells are
retired by bumping a per-cell epoch (the classic union-find cannot remove
elements); when the remaining occupied neighbors of a retired cell are not
mutually connected within its 3x3 block, the whole component is rebuilt from
a BFS over its occupied cells.  At most one level can actually split per
deletion, which ``last_delete_splits`` instruments.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .core import PlanePoint, plane_dist
from .dsu import ParitySet

_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
            (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class Threshold:
    """Smallest all-even level and the derived lower-bound value ``t``."""

    level: int
    t: float


class GridConfig:
    """Bounding box geometry and the level count of the grid hierarchy."""

    def __init__(self, side: float, min_dist: float,
                 origin: tuple[float, float] = (0.0, 0.0)):
        if not side > 0:
            raise ValueError(f"box side must be positive, got {side}")
        if not min_dist > 0:
            raise ValueError(f"minimum distance must be positive, got {min_dist}")
        if side < min_dist:
            raise ValueError(f"box side {side} smaller than minimum distance {min_dist}")
        self.side = float(side)
        self.min_dist = float(min_dist)
        self.origin = (float(origin[0]), float(origin[1]))
        levels = 0
        while min_dist * (1 << levels) < side:
            levels += 1
        self.levels = levels           # top level: one cell covers the box
        self.cells0 = math.ceil(side / min_dist)   # level-0 cells per side

    def cell_side(self, level: int) -> float:
        return self.min_dist * (1 << level)

    def cells_per_side(self, level: int) -> int:
        return ((self.cells0 - 1) >> level) + 1

    def contains(self, x: float, y: float) -> bool:
        ox, oy = self.origin
        return ox <= x <= ox + self.side and oy <= y <= oy + self.side

    def cell0(self, x: float, y: float) -> tuple[int, int]:
        """Level-0 cell of an in-box point; the far boundary folds inward."""
        ox, oy = self.origin
        last = self.cells0 - 1
        ix = int((x - ox) // self.min_dist)
        iy = int((y - oy) // self.min_dist)
        return (last if ix > last else ix, last if iy > last else iy)


class _Level:
    __slots__ = ("occ", "gen", "sets")

    def __init__(self):
        self.occ: dict[tuple[int, int], set] = {}   # cell -> ids of its points
        self.gen: dict[tuple[int, int], int] = {}   # cell -> retirement epoch
        self.sets = ParitySet()                     # over (ix, iy, epoch)

    def element(self, cell: tuple[int, int]) -> tuple[int, int, int]:
        return (cell[0], cell[1], self.gen.get(cell, 0))


def _connected_components(cells: set) -> list[list[tuple[int, int]]]:
    """Partition cells into 8-adjacency components, deterministically ordered."""
    components = []
    seen = set()
    for start in sorted(cells):
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            cx, cy = queue.popleft()
            comp.append((cx, cy))
            for dx, dy in _OFFSETS:
                nb = (cx + dx, cy + dy)
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        components.append(comp)
    return components


class GridMatcher:
    """Dynamic planar point set with an approximate bottleneck threshold.

    Points must stay inside the configured box and pairwise at least
    ``min_dist`` apart; the latter is the caller's promise unless
    ``check_spacing`` is set.  Single writer; reads are safe between
    mutations.
    """

    def __init__(self, config: GridConfig, check_spacing: bool = False):
        self.config = config
        self.check_spacing = check_spacing
        self._levels = [_Level() for _ in range(config.levels + 1)]
        self._points: dict = {}
        self._cells0: dict = {}        # id -> level-0 cell
        self.last_insert_ops = 0
        self.last_delete_ops = 0
        self.last_delete_slow = 0      # levels that ran the BFS rebuild
        self.last_delete_splits = 0    # levels where the rebuild split a set
        self._last_rebuild_parts = 0

    def size(self) -> int:
        return len(self._points)

    def __len__(self) -> int:
        return len(self._points)

    def contains(self, point_id) -> bool:
        return point_id in self._points

    def points(self):
        return iter(self._points.values())

    # mutations

    def insert(self, p: PlanePoint) -> None:
        if p.id in self._points:
            raise ValueError(f"duplicate point id {p.id!r}")
        if not self.config.contains(p.x, p.y):
            raise ValueError(
                f"point {p.id!r} at ({p.x}, {p.y}) outside the bounding box")
        cell = self.config.cell0(p.x, p.y)
        if self.check_spacing:
            self._assert_spacing(p, cell)
        ops = 0
        for i, lv in enumerate(self._levels):
            key = (cell[0] >> i, cell[1] >> i)
            ids = lv.occ.get(key)
            if ids is not None:
                lv.sets.change_parity(lv.element(key))
                ops += 1
                ids.add(p.id)
                continue
            elem = lv.element(key)
            lv.sets.make_set(elem)
            ops += 1
            kx, ky = key
            for dx, dy in _OFFSETS:
                nb = (kx + dx, ky + dy)
                if nb in lv.occ:
                    lv.sets.union(lv.element(nb), elem)
                    ops += 1
            lv.occ[key] = {p.id}
        self._points[p.id] = p
        self._cells0[p.id] = cell
        self.last_insert_ops = ops

    def delete(self, point_id) -> None:
        p = self._points.get(point_id)
        if p is None:
            raise KeyError(f"unknown point id {point_id!r}")
        cell = self._cells0.pop(point_id)
        del self._points[point_id]
        ops = 0
        emptied = []
        for i, lv in enumerate(self._levels):
            key = (cell[0] >> i, cell[1] >> i)
            lv.sets.change_parity(lv.element(key))
            ops += 1
            ids = lv.occ[key]
            ids.remove(point_id)
            if not ids:
                del lv.occ[key]
                emptied.append((i, key))
        slow = splits = 0
        for i, key in emptied:
            lv = self._levels[i]
            old_elem = lv.element(key)
            lv.gen[key] = lv.gen.get(key, 0) + 1   # retire the emptied cell
            kx, ky = key
            neighbors = [(kx + dx, ky + dy) for dx, dy in _OFFSETS
                         if (kx + dx, ky + dy) in lv.occ]
            if not neighbors:
                # Isolated cell: its whole set (plus any stale cells glued to
                # it earlier) goes away.
                dead = lv.sets.members(old_elem)
                lv.sets.remove_all(dead)
                ops += len(dead)
                continue
            if _cells_are_connected(neighbors):
                # The occupied neighbors stay mutually connected inside the
                # 3x3 block, so the component cannot split.  The retired
                # element stays in the set as a stale, point-free connector.
                continue
            slow += 1
            ops += self._rebuild_component(lv, old_elem)
            if self._last_rebuild_parts > 1:
                splits += 1
        self.last_delete_ops = ops
        self.last_delete_slow = slow
        self.last_delete_splits = splits

    def _rebuild_component(self, lv: _Level, old_elem) -> int:
        """Tear the element's set down and rebuild it from occupancy."""
        members = lv.sets.members(lv.sets.find(old_elem))
        occupied = {
            (ex, ey) for ex, ey, eg in members
            if (ex, ey) in lv.occ and lv.gen.get((ex, ey), 0) == eg
        }
        lv.sets.remove_all(members)
        parts = _connected_components(occupied)
        self._last_rebuild_parts = len(parts)
        ops = len(members)
        for part in parts:
            first = lv.element(part[0])
            lv.sets.make_set(first)
            for other in part[1:]:
                elem = lv.element(other)
                lv.sets.make_set(elem)
                lv.sets.union(first, elem)
            ops += 2 * len(part) - 1
            points = sum(len(lv.occ[c]) for c in part)
            if (len(part) & 1) != (points & 1):
                lv.sets.change_parity(first)
                ops += 1
        return ops

    def _assert_spacing(self, p: PlanePoint, cell: tuple[int, int]) -> None:
        # Any conflicting point sits within one level-0 cell in each axis.
        lv0 = self._levels[0]
        limit = self.config.min_dist ** 2
        cx, cy = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for pid in lv0.occ.get((cx + dx, cy + dy), ()):
                    q = self._points[pid]
                    if (p.x - q.x) ** 2 + (p.y - q.y) ** 2 < limit:
                        raise ValueError(
                            f"points {p.id!r} and {q.id!r} closer than "
                            f"the configured minimum distance")

    # queries

    def all_even_at(self, level: int) -> bool:
        if not 0 <= level <= self.config.levels:
            raise ValueError(f"level {level} out of range 0..{self.config.levels}")
        return self._levels[level].sets.all_even()

    def threshold(self) -> Threshold:
        """Smallest all-even level ``i`` and ``t = 2^(i-1) * min_dist``."""
        n = len(self._points)
        if n == 0 or n % 2:
            raise ValueError(f"point count {n} has no perfect matching")
        for i, lv in enumerate(self._levels):
            if lv.sets.all_even():
                return Threshold(i, 2.0 ** (i - 1) * self.config.min_dist)
        # Unreachable with this cell layout (the top level is one cell, and a
        # single cell holding an even number of points is all-even), but kept
        # as the defined answer for a virtual one-cell level above the top.
        c = self.config.levels
        return Threshold(c + 1, 2.0 ** c * self.config.min_dist)

    def extract_matching(self) -> list[tuple[PlanePoint, PlanePoint]]:
        """Perfect matching with every edge within a 3x3 block of cells.

        Works level ``threshold().level``: per component, a BFS tree of the
        occupied cells is consumed bottom-up.  The points of a node's children
        are pooled, topped up with one point pulled from the node itself when
        the pool is odd, and paired greedily in id order.  Every pool lives in
        the 3x3 block around one cell, so each edge is at most
        ``3*sqrt(2) * cell_side`` long.
        """
        level = self.threshold().level
        edges: list[tuple[PlanePoint, PlanePoint]] = []
        if level > self.config.levels:
            self._pair_pool(sorted(self._points), edges)
            return edges
        lv = self._levels[level]
        remaining = {cell: deque(sorted(ids)) for cell, ids in lv.occ.items()}
        for comp in _connected_components(set(lv.occ)):
            root = comp[0]
            children: dict = {cell: [] for cell in comp}
            depth = {root: 0}
            queue = deque([root])
            order = []
            while queue:
                cur = queue.popleft()
                order.append(cur)
                cx, cy = cur
                for dx, dy in _OFFSETS:
                    nb = (cx + dx, cy + dy)
                    if nb in children and nb not in depth:
                        depth[nb] = depth[cur] + 1
                        children[cur].append(nb)
                        queue.append(nb)
            for cell in sorted(order, key=lambda c: (-depth[c], c)):
                kids = children[cell]
                if not kids:
                    continue
                pool = []
                for kid in kids:
                    pool.extend(remaining[kid])
                    remaining[kid].clear()
                if len(pool) & 1:
                    pool.append(remaining[cell].popleft())
                self._pair_pool(sorted(pool), edges)
            leftover = list(remaining[root])
            remaining[root].clear()
            self._pair_pool(leftover, edges)
        assert 2 * len(edges) == len(self._points)
        return edges

    def _pair_pool(self, ids: list, edges: list) -> None:
        assert len(ids) % 2 == 0
        pts = self._points
        for i in range(0, len(ids), 2):
            edges.append((pts[ids[i]], pts[ids[i + 1]]))

    # verification

    def verify_components(self) -> None:
        """Compare every level against a from-scratch recomputation.

        Rebuilds the occupied-cell components by BFS and asserts that the
        maintained sets induce the same partition, that each set's parity is
        its point count mod 2, and that the odd-set counter agrees.
        """
        for i, lv in enumerate(self._levels):
            lv.sets.check()
            comps = _connected_components(set(lv.occ))
            roots = set()
            odd = 0
            for comp in comps:
                comp_roots = {lv.sets.find(lv.element(c)) for c in comp}
                assert len(comp_roots) == 1, \
                    f"level {i}: component {comp} spans several sets"
                root = comp_roots.pop()
                assert root not in roots, \
                    f"level {i}: one set covers several components"
                roots.add(root)
                points = sum(len(lv.occ[c]) for c in comp)
                parity = lv.sets.parity_of(lv.element(comp[0]))
                assert parity == points % 2, \
                    f"level {i}: component {comp} parity {parity} != {points % 2}"
                odd += points % 2
            assert lv.sets.set_count == len(comps), \
                f"level {i}: {lv.sets.set_count} sets for {len(comps)} components"
            assert lv.sets.odd_count == odd, \
                f"level {i}: odd counter {lv.sets.odd_count} != {odd}"


def _cells_are_connected(cells: list) -> bool:
    """Whether the given cells are mutually 8-connected among themselves."""
    if len(cells) <= 1:
        return True
    cell_set = set(cells)
    seen = {cells[0]}
    stack = [cells[0]]
    while stack:
        cx, cy = stack.pop()
        for dx, dy in _OFFSETS:
            nb = (cx + dx, cy + dy)
            if nb in cell_set and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cell_set)


def max_edge(edges) -> float:
    """Longest edge of a plane matching; 0 for an empty one."""
    return max((plane_dist(a, b) for a, b in edges), default=0.0)
