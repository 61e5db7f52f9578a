import random

from dynmatch import LinePoint, PlanePoint


def dyadic(rng: random.Random, span: int = 4096) -> float:
    # Multiples of 1/256: every min-weight partial sum is exact in binary
    # floating point, so value comparisons can demand exact equality.
    return rng.randrange(span * 256) / 256.0


def rand_line_points(rng: random.Random, n: int, start_id: int = 0):
    return [LinePoint(start_id + i, dyadic(rng)) for i in range(n)]


def rand_plane_points(rng: random.Random, n: int, side: float,
                      min_dist: float = 1.0, origin=(0.0, 0.0)):
    """Rejection-sample n points with pairwise distance >= min_dist."""
    pts: list[PlanePoint] = []
    limit = min_dist * min_dist
    guard = 0
    while len(pts) < n:
        guard += 1
        assert guard < 100000, "sampling stalled; box too small"
        x = origin[0] + rng.randrange(int(side) * 256) / 256.0
        y = origin[1] + rng.randrange(int(side) * 256) / 256.0
        if all((x - q.x) ** 2 + (y - q.y) ** 2 >= limit for q in pts):
            pts.append(PlanePoint(len(pts), x, y))
    return pts
