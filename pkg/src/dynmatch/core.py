"""Shared vocabulary: identified points, the cost objective, matching results.

Costs are IEEE doubles with ``math.inf`` as the explicit "no matching exists"
value.  Infinity absorbs under ``+`` and dominates under ``max`` exactly, so no
large-float sentinel is ever needed and no overflow can occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

INF = math.inf


class Objective(Enum):
    """How a matching is scored: by its longest edge or by its total length."""

    BOTTLENECK = "bottleneck"
    MIN_WEIGHT = "minweight"


@dataclass(frozen=True)
class LinePoint:
    """A point on the line, identified by ``id``.

    Ordering inside the structures is by the pair ``(x, id)``, so duplicate
    coordinates are fine as long as ids are unique (and mutually orderable).
    """

    id: int | str
    x: float

    @property
    def key(self) -> tuple[float, int | str]:
        return (self.x, self.id)


@dataclass(frozen=True)
class PlanePoint:
    id: int | str
    x: float
    y: float


def line_dist(p: LinePoint, q: LinePoint) -> float:
    return abs(p.x - q.x)


def plane_dist(p: PlanePoint, q: PlanePoint) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


@dataclass
class MatchingResult:
    """A concrete matching witness.

    ``edges`` is a perfect matching of the point set minus ``skipped``;
    ``skipped`` is only set for odd cardinality.  ``value`` is the max edge
    length (bottleneck) or the sum of edge lengths (min-weight); an empty
    matching has value 0.
    """

    value: float
    edges: list[tuple] = field(default_factory=list)
    skipped: object | None = None
