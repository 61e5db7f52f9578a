"""Dynamic optimal-matching value for points on a line.

A leaf-oriented height-balanced tree stores the points in ``(x, id)`` order.
Every node carries eight matching costs for its leaf set ``P``:

=========  ==================================================================
all        perfect matching of ``P``
all_l      perfect matching of ``P`` minus its leftmost point
all_r      perfect matching of ``P`` minus its rightmost point
all_lr     perfect matching of ``P`` minus both extreme points
all_1      best matching of ``|P| - 1`` points (one point skipped anywhere)
all_1_l    leftmost removed, plus one more point skipped
all_1_r    rightmost removed, plus one more point skipped
all_1_lr   both extremes removed, plus one more point skipped
=========  ==================================================================

A cost is ``inf`` whenever the matched point count would be odd, i.e. no
perfect matching exists.  On a line the optimal matching pairs neighbors in sorted
order, so each attribute of an internal node is the best of a handful of
alternatives built from its children's attributes plus the single candidate
"cross" edge between the subtrees (the ``gap``).  Both objectives share the
same alternatives; bottleneck combines edge costs with ``max``, min-weight
with ``+``, and both select with ``min``.

Updates refresh the attributes along one leaf-to-root path plus any rotated
nodes, so inserts and deletes run in O(log n).  The matching itself is not
maintained; ``extract_matching`` replays the winning alternatives top-down in
O(n) on demand.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

from .core import INF, LinePoint, MatchingResult, Objective

ALL, ALL_L, ALL_R, ALL_LR, ALL_1, ALL_1_L, ALL_1_R, ALL_1_LR = range(8)

# Alternatives per attribute: (left child attribute, right child attribute,
# whether the cross edge between the subtrees is part of the combination).
# The first listed alternative wins ties during extraction.
_ALTS = (
    ((ALL, ALL, False), (ALL_R, ALL_L, True)),                        # all
    ((ALL_L, ALL, False), (ALL_LR, ALL_L, True)),                     # all_l
    ((ALL, ALL_R, False), (ALL_R, ALL_LR, True)),                     # all_r
    ((ALL_L, ALL_R, False), (ALL_LR, ALL_LR, True)),                  # all_lr
    ((ALL_1, ALL, False), (ALL, ALL_1, False),
     (ALL_1_R, ALL_L, True), (ALL_R, ALL_1_L, True)),                 # all_1
    ((ALL_1_L, ALL, False), (ALL_L, ALL_1, False),
     (ALL_1_LR, ALL_L, True), (ALL_LR, ALL_1_L, True)),               # all_1_l
    ((ALL_1, ALL_R, False), (ALL, ALL_1_R, False),
     (ALL_1_R, ALL_LR, True), (ALL_R, ALL_1_LR, True)),               # all_1_r
    ((ALL_1_L, ALL_R, False), (ALL_L, ALL_1_R, False),
     (ALL_1_LR, ALL_LR, True), (ALL_LR, ALL_1_LR, True)),             # all_1_lr
)


class CostVector(NamedTuple):
    all: float
    all_l: float
    all_r: float
    all_lr: float
    all_1: float
    all_1_l: float
    all_1_r: float
    all_1_lr: float


# A single point has no perfect matching (all = inf); removing one of its
# extremes leaves the empty matching (all_l = all_r = 0); skipping one point
# also leaves the empty matching (all_1 = 0); there is no extra point to skip
# once an extreme is removed (all_1_* = inf).
_LEAF_COSTS = CostVector(INF, 0.0, 0.0, INF, 0.0, INF, INF, INF)


def combine_costs(lc: CostVector, rc: CostVector, gap: float,
                  bottleneck: bool) -> CostVector:
    """Attributes of a node from its children's attributes and the cross gap."""
    out = []
    for alts in _ALTS:
        best = INF
        for la, ra, use_gap in alts:
            a = lc[la]
            b = rc[ra]
            if bottleneck:
                v = a if a >= b else b
                if use_gap and gap > v:
                    v = gap
            else:
                v = a + b
                if use_gap:
                    v = v + gap
            if v < best:
                best = v
        out.append(best)
    return CostVector._make(out)


def check_parity_law(costs: CostVector, leaves: int) -> None:
    """Assert which attributes must be finite/infinite for this leaf count."""
    if leaves % 2 == 0:
        finite = [ALL, ALL_LR, ALL_1_L, ALL_1_R]
        infinite = [ALL_L, ALL_R, ALL_1, ALL_1_LR]
    else:
        finite = [ALL_L, ALL_R, ALL_1]
        infinite = [ALL, ALL_LR, ALL_1_L, ALL_1_R]
        if leaves >= 3:
            finite.append(ALL_1_LR)
        else:
            infinite.append(ALL_1_LR)
    for i in finite:
        assert costs[i] != INF, f"attribute {CostVector._fields[i]} should be finite"
    for i in infinite:
        assert costs[i] == INF, f"attribute {CostVector._fields[i]} should be inf"


class _Node:
    __slots__ = ("point", "left", "right", "height", "leaves",
                 "leftmost", "rightmost", "gap", "costs")

    def __init__(self, point=None, left=None, right=None):
        self.point = point
        self.left = left
        self.right = right
        if point is not None:
            self.height = 0
            self.leaves = 1
            self.leftmost = point
            self.rightmost = point
            self.gap = 0.0
            self.costs = _LEAF_COSTS


class LineMatchTree:
    """Points on a line with an incrementally maintained matching value.

    ``match_value()`` is the optimal perfect-matching cost when the size is
    even, the best skip-one matching cost when it is odd, and 0 for at most
    one point.  Mutations are not thread safe; concurrent reads between
    mutations are.
    """

    def __init__(self, objective: Objective = Objective.BOTTLENECK):
        self._objective = objective
        self._bottleneck = objective is Objective.BOTTLENECK
        self._root: _Node | None = None
        self._points: dict = {}
        self._touches = 0
        self.touches_total = 0

    @classmethod
    def build(cls, points, objective: Objective = Objective.BOTTLENECK
              ) -> "LineMatchTree":
        """Bulk construction: O(n) work after sorting."""
        tree = cls(objective)
        pts = sorted(points, key=lambda p: (p.x, p.id))
        for p in pts:
            if p.id in tree._points:
                raise ValueError(f"duplicate point id {p.id!r}")
            tree._points[p.id] = p

        def grow(lo: int, hi: int) -> _Node:
            if hi - lo == 1:
                return _Node(pts[lo])
            mid = (lo + hi) // 2
            node = _Node(left=grow(lo, mid), right=grow(mid, hi))
            tree._refresh(node)
            return node

        if pts:
            tree._root = grow(0, len(pts))
        return tree

    @property
    def objective(self) -> Objective:
        return self._objective

    def size(self) -> int:
        return len(self._points)

    def __len__(self) -> int:
        return len(self._points)

    def contains(self, point_id) -> bool:
        return point_id in self._points

    def __contains__(self, point_id) -> bool:
        return point_id in self._points

    def points(self) -> Iterator[LinePoint]:
        return iter(self._points.values())

    @property
    def last_touches(self) -> int:
        """Attribute recomputations performed by the most recent update."""
        return self._touches

    def root_costs(self) -> CostVector | None:
        return self._root.costs if self._root is not None else None

    # mutations

    def insert(self, point: LinePoint) -> None:
        if point.id in self._points:
            raise ValueError(f"duplicate point id {point.id!r}")
        self._touches = 0
        if self._root is None:
            self._root = _Node(point)
        else:
            self._root = self._insert(self._root, point)
        self._points[point.id] = point
        self.touches_total += self._touches

    def delete(self, point_id) -> None:
        p = self._points.get(point_id)
        if p is None:
            raise KeyError(f"unknown point id {point_id!r}")
        self._touches = 0
        if self._root.point is not None:
            self._root = None
        else:
            self._root = self._delete(self._root, (p.x, p.id))
        del self._points[point_id]
        self.touches_total += self._touches

    # queries

    def match_value(self) -> float:
        n = len(self._points)
        if n <= 1:
            return 0.0
        costs = self._root.costs
        return costs[ALL] if n % 2 == 0 else costs[ALL_1]

    def extract_matching(self) -> MatchingResult:
        """Replay the winning alternative of every recurrence top-down.

        Ties go to the first listed alternative, so the output is
        deterministic for a given tree shape.  O(n).
        """
        n = len(self._points)
        if n == 0:
            return MatchingResult(0.0)
        if n == 1:
            return MatchingResult(0.0, [], next(iter(self._points.values())))
        result = MatchingResult(self.match_value())
        state = ALL if n % 2 == 0 else ALL_1
        self._extract(self._root, state, result)
        return result

    def _extract(self, v: _Node, state: int, result: MatchingResult) -> None:
        if v.point is not None:
            # ALL_L / ALL_R: the point was consumed by an ancestor cross edge.
            if state == ALL_1:
                result.skipped = v.point
            return
        target = v.costs[state]
        lc, rc, gap = v.left.costs, v.right.costs, v.gap
        bottleneck = self._bottleneck
        for la, ra, use_gap in _ALTS[state]:
            # Recompute the alternative exactly as combine_costs did so the
            # winner can be re-identified by exact float equality.
            a = lc[la]
            b = rc[ra]
            if bottleneck:
                val = a if a >= b else b
                if use_gap and gap > val:
                    val = gap
            else:
                val = a + b
                if use_gap:
                    val = val + gap
            if val == target:
                if use_gap:
                    result.edges.append((v.left.rightmost, v.right.leftmost))
                self._extract(v.left, la, result)
                self._extract(v.right, ra, result)
                return
        raise AssertionError("stored attribute matches no alternative")

    # internals

    def _refresh(self, v: _Node) -> None:
        self._touches += 1
        left, right = v.left, v.right
        v.height = (left.height if left.height > right.height else right.height) + 1
        v.leaves = left.leaves + right.leaves
        v.leftmost = left.leftmost
        v.rightmost = right.rightmost
        v.gap = right.leftmost.x - left.rightmost.x
        v.costs = combine_costs(left.costs, right.costs, v.gap, self._bottleneck)

    def _insert(self, v: _Node, p: LinePoint) -> _Node:
        if v.point is not None:
            if (p.x, p.id) < (v.point.x, v.point.id):
                node = _Node(left=_Node(p), right=v)
            else:
                node = _Node(left=v, right=_Node(p))
            self._refresh(node)
            return node
        lr = v.left.rightmost
        if (p.x, p.id) < (lr.x, lr.id):
            v.left = self._insert(v.left, p)
        else:
            v.right = self._insert(v.right, p)
        return self._rebalance(v)

    def _delete(self, v: _Node, key) -> _Node:
        lr = v.left.rightmost
        if key <= (lr.x, lr.id):
            child = v.left
            if child.point is not None:
                return v.right       # sibling replaces the parent
            v.left = self._delete(child, key)
        else:
            child = v.right
            if child.point is not None:
                return v.left
            v.right = self._delete(child, key)
        return self._rebalance(v)

    def _rebalance(self, v: _Node) -> _Node:
        bal = v.left.height - v.right.height
        if bal > 1:
            if v.left.left.height < v.left.right.height:
                v.left = self._rotate_left(v.left)
            return self._rotate_right(v)
        if bal < -1:
            if v.right.right.height < v.right.left.height:
                v.right = self._rotate_right(v.right)
            return self._rotate_left(v)
        self._refresh(v)
        return v

    def _rotate_right(self, v: _Node) -> _Node:
        pivot = v.left
        v.left = pivot.right
        pivot.right = v
        self._refresh(v)
        self._refresh(pivot)
        return pivot

    def _rotate_left(self, v: _Node) -> _Node:
        pivot = v.right
        v.right = pivot.left
        pivot.left = v
        self._refresh(v)
        self._refresh(pivot)
        return pivot

    # verification

    def self_check(self) -> None:
        """Recompute every structural fact bottom-up and compare exactly.

        Covers: leaf order, height balance, subtree summaries, the stored
        cost vectors, and the finite/infinite parity pattern per node.
        """
        leaves: list[LinePoint] = []

        def walk(v: _Node) -> None:
            if v.point is not None:
                assert v.height == 0 and v.leaves == 1
                assert v.costs == _LEAF_COSTS
                leaves.append(v.point)
                return
            walk(v.left)
            walk(v.right)
            assert abs(v.left.height - v.right.height) <= 1, "height balance"
            assert v.height == 1 + max(v.left.height, v.right.height)
            assert v.leaves == v.left.leaves + v.right.leaves
            assert v.leftmost is v.left.leftmost
            assert v.rightmost is v.right.rightmost
            gap = v.right.leftmost.x - v.left.rightmost.x
            assert v.gap == gap
            assert v.costs == combine_costs(
                v.left.costs, v.right.costs, gap, self._bottleneck)
            check_parity_law(v.costs, v.leaves)

        if self._root is None:
            assert not self._points
            return
        walk(self._root)
        assert len(leaves) == len(self._points)
        keys = [(p.x, p.id) for p in leaves]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)
