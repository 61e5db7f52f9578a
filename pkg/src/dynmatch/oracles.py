"""Brute-force reference matchers used by tests and verify-mode replay.

These are deliberately independent of the incremental structures: the line
oracles work on freshly sorted lists, the exact solver enumerates matchings
with a subset DP.  They are only meant for small inputs.
"""

from __future__ import annotations

from array import array

from .core import INF, MatchingResult, Objective, line_dist, plane_dist

DP_MAX_POINTS = 20


def _sorted(points) -> list:
    return sorted(points, key=lambda p: (p.x, p.id))


def _pair_up(pts: list, objective: Objective) -> MatchingResult:
    # pts sorted, even length: pair neighbors (p0,p1), (p2,p3), ...
    edges = [(pts[i], pts[i + 1]) for i in range(0, len(pts), 2)]
    gaps = [b.x - a.x for a, b in edges]
    if not gaps:
        return MatchingResult(0.0)
    if objective is Objective.BOTTLENECK:
        return MatchingResult(max(gaps), edges)
    return MatchingResult(sum(gaps), edges)


def line_consecutive(points, objective: Objective) -> MatchingResult:
    """Optimal matching of an even set of collinear points.

    Sorting and pairing neighbors is optimal on a line (for both objectives)
    and the resulting pairing is unique.  O(n log n).
    """
    pts = _sorted(points)
    if len(pts) % 2:
        raise ValueError(f"odd point count {len(pts)}: no perfect matching")
    return _pair_up(pts, objective)


def line_skip_one(points, objective: Objective) -> MatchingResult:
    """Best matching of an odd set with exactly one point left out.

    Tries every candidate point; ties keep the skip with the smallest
    ``(x, id)``.  O(n^2).
    """
    pts = _sorted(points)
    n = len(pts)
    if n % 2 == 0:
        raise ValueError(f"even point count {n}: nothing to skip")
    best = None
    best_k = -1
    for k in range(n):
        res = _pair_up(pts[:k] + pts[k + 1:], objective)
        if best is None or res.value < best.value:
            best = res
            best_k = k
    best.skipped = pts[best_k]
    return best


def exact_dp(points, objective: Objective, metric: str = "line") -> float:
    """Exact optimum over every perfect matching via subset DP.

    State f(S) pairs the lowest-index member of S with each other member.
    ``metric`` is ``"line"`` (|x - x'|) or ``"euclidean"``.  Guarded to
    n <= 20 so the 2^n table stays desk-scale.
    """
    n = len(points)
    if n % 2:
        raise ValueError(f"odd point count {n}: no perfect matching")
    if n > DP_MAX_POINTS:
        raise ValueError(f"point count {n} exceeds DP limit {DP_MAX_POINTS}")
    if n == 0:
        return 0.0
    if metric == "line":
        dist = line_dist
    elif metric == "euclidean":
        dist = plane_dist
    else:
        raise ValueError(f"unknown metric {metric!r}")
    d = [[dist(p, q) for q in points] for p in points]

    take_max = objective is Objective.BOTTLENECK
    f = array("d", [INF]) * (1 << n)
    f[0] = 0.0
    for mask in range(3, 1 << n):
        if mask.bit_count() & 1:
            continue
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        row = d[low]
        best = INF
        m = rest
        while m:
            bit = m & -m
            m ^= bit
            sub = f[rest ^ bit]
            w = row[bit.bit_length() - 1]
            cand = (w if w > sub else sub) if take_max else (w + sub)
            if cand < best:
                best = cand
        f[mask] = best
    return f[(1 << n) - 1]
