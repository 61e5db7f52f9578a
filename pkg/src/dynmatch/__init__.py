"""Dynamic geometric matching structures.

* :class:`LineMatchTree` maintains the exact bottleneck or minimum-weight
  matching value of points on a line in O(log n) per insert/delete.
* :class:`GridMatcher` maintains a constant-factor approximate bottleneck
  matching of a planar point set of bounded spread.
* :mod:`dynmatch.oracles` holds the brute-force references everything is
  verified against; :mod:`dynmatch.trace` replays and benchmarks operation
  traces.
"""

from .core import INF, LinePoint, MatchingResult, Objective, PlanePoint
from .dsu import ParitySet
from .grid import GridConfig, GridMatcher, Threshold
from .line_tree import CostVector, LineMatchTree
from .oracles import exact_dp, line_consecutive, line_skip_one
from .trace import (StepReport, TraceError, TraceHeader, TraceOp,
                    VerificationError, bench, format_trace, generate,
                    parse_trace, replay)

__all__ = [
    "INF", "LinePoint", "PlanePoint", "Objective", "MatchingResult",
    "CostVector", "LineMatchTree",
    "ParitySet",
    "GridConfig", "GridMatcher", "Threshold",
    "line_consecutive", "line_skip_one", "exact_dp",
    "TraceHeader", "TraceOp", "StepReport", "TraceError", "VerificationError",
    "generate", "parse_trace", "format_trace", "replay", "bench",
]
