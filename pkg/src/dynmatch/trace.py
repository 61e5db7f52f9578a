"""Operation traces: file format, random generation, replay, benchmarking.

A trace is line-delimited JSON: one header object followed by one object per
operation.  Field names are exactly ``mode``, ``lambda``, ``bbox_origin``,
``bbox_side``, ``seed`` (header) and ``op``, ``id``, ``x``, ``y`` (ops).

Example::

    {"mode":"line-bottleneck","seed":7}
    {"op":"insert","id":0,"x":1.5}
    {"op":"insert","id":1,"x":4.0}
    {"op":"query"}

Replay applies the operations to the structure selected by the mode and can
cross-check every k-th step against the brute-force oracles; any disagreement
aborts with the step index and both values.  The benchmark runner times each
operation and reports CSV rows, either for the incremental structure or for a
rebuild-from-scratch baseline.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass
from io import StringIO

from .core import LinePoint, MatchingResult, Objective, PlanePoint
from .grid import GridConfig, GridMatcher, max_edge
from .line_tree import LineMatchTree
from . import oracles

MODES = ("line-bottleneck", "line-minweight", "plane")
APPROX_FACTOR = 6 * math.sqrt(2)
EXTRACT_FACTOR = 3 * math.sqrt(2)
REL_SLACK = 1e-9
PLANE_VERIFY_MAX = 16      # exact-solver cross-checks only up to this size

# Coordinates are emitted on a dyadic grid (multiples of 1/256) so that
# min-weight sums are exact in binary floating point no matter how the
# additions associate; verification can then demand exact equality.
_COORD_SCALE = 256


class TraceError(ValueError):
    """Malformed or invalid trace input; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class VerificationError(RuntimeError):
    """A maintained value disagreed with its oracle during replay."""

    def __init__(self, step: int, value, oracle_value, detail: str = ""):
        msg = f"verification failed at step {step}: structure={value!r} oracle={oracle_value!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.step = step
        self.value = value
        self.oracle_value = oracle_value


@dataclass
class TraceHeader:
    mode: str
    lam: float | None = None
    bbox_origin: tuple[float, float] | None = None
    bbox_side: float | None = None
    seed: int | None = None


@dataclass
class TraceOp:
    op: str
    id: int | str | None = None
    x: float | None = None
    y: float | None = None


@dataclass
class StepReport:
    step: int
    op: TraceOp
    value: float | None
    oracle_value: float | None
    elapsed_ns: int
    touched_nodes: int


# format

def format_trace(header: TraceHeader, ops: list[TraceOp]) -> str:
    out = StringIO()
    rec: dict = {"mode": header.mode}
    if header.mode == "plane":
        rec["lambda"] = header.lam
        rec["bbox_origin"] = list(header.bbox_origin)
        rec["bbox_side"] = header.bbox_side
    if header.seed is not None:
        rec["seed"] = header.seed
    out.write(json.dumps(rec, separators=(",", ":")) + "\n")
    for op in ops:
        rec = {"op": op.op}
        if op.id is not None:
            rec["id"] = op.id
        if op.x is not None:
            rec["x"] = op.x
        if op.y is not None:
            rec["y"] = op.y
        out.write(json.dumps(rec, separators=(",", ":")) + "\n")
    return out.getvalue()


def _need(rec: dict, field: str, lineno: int):
    if field not in rec:
        raise TraceError(lineno, f"missing field {field!r}")
    return rec[field]


def _real(value, field: str, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TraceError(lineno, f"field {field!r} must be a number")
    return float(value)


def parse_trace(stream) -> tuple[TraceHeader, list[TraceOp]]:
    """Parse and validate a trace; every complaint names its line."""
    if isinstance(stream, str):
        stream = StringIO(stream)
    lines = enumerate(stream, start=1)
    lineno, first = next(lines, (0, None))
    if first is None or not first.strip():
        raise TraceError(1, "empty trace: header record expected")
    header = _parse_header(first, lineno)
    ops = []
    live: set = set()
    for lineno, line in lines:
        if not line.strip():
            continue
        ops.append(_parse_op(line, lineno, header, live))
    return header, ops


def _parse_json(line: str, lineno: int) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceError(lineno, f"invalid JSON: {exc}") from None
    if not isinstance(rec, dict):
        raise TraceError(lineno, "record must be a JSON object")
    return rec


def _parse_header(line: str, lineno: int) -> TraceHeader:
    rec = _parse_json(line, lineno)
    mode = _need(rec, "mode", lineno)
    if mode not in MODES:
        raise TraceError(lineno, f"unknown mode {mode!r}")
    allowed = {"mode", "seed"}
    header = TraceHeader(mode=mode, seed=rec.get("seed"))
    if header.seed is not None and not isinstance(header.seed, int):
        raise TraceError(lineno, "field 'seed' must be an integer")
    if mode == "plane":
        allowed |= {"lambda", "bbox_origin", "bbox_side"}
        lam = _real(_need(rec, "lambda", lineno), "lambda", lineno)
        side = _real(_need(rec, "bbox_side", lineno), "bbox_side", lineno)
        origin = _need(rec, "bbox_origin", lineno)
        if (not isinstance(origin, (list, tuple)) or len(origin) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in origin)):
            raise TraceError(lineno, "field 'bbox_origin' must be [x, y]")
        if lam <= 0:
            raise TraceError(lineno, "'lambda' must be positive")
        if side < lam:
            raise TraceError(lineno, "'bbox_side' must be at least 'lambda'")
        header.lam = lam
        header.bbox_side = side
        header.bbox_origin = (float(origin[0]), float(origin[1]))
    extra = set(rec) - allowed
    if extra:
        raise TraceError(lineno, f"unexpected header field {sorted(extra)[0]!r}")
    return header


def _parse_op(line: str, lineno: int, header: TraceHeader, live: set) -> TraceOp:
    rec = _parse_json(line, lineno)
    kind = _need(rec, "op", lineno)
    plane = header.mode == "plane"
    if kind == "insert":
        allowed = {"op", "id", "x", "y"} if plane else {"op", "id", "x"}
        pid = _need(rec, "id", lineno)
        if not isinstance(pid, (int, str)) or isinstance(pid, bool):
            raise TraceError(lineno, "field 'id' must be an integer or string")
        x = _real(_need(rec, "x", lineno), "x", lineno)
        y = _real(_need(rec, "y", lineno), "y", lineno) if plane else None
        if pid in live:
            raise TraceError(lineno, f"insert of live id {pid!r}")
        if plane:
            ox, oy = header.bbox_origin
            if not (ox <= x <= ox + header.bbox_side
                    and oy <= y <= oy + header.bbox_side):
                raise TraceError(lineno, f"point {pid!r} outside the bounding box")
        live.add(pid)
        op = TraceOp("insert", pid, x, y)
    elif kind == "delete":
        allowed = {"op", "id"}
        pid = _need(rec, "id", lineno)
        if pid not in live:
            raise TraceError(lineno, f"delete of unknown id {pid!r}")
        live.discard(pid)
        op = TraceOp("delete", pid)
    elif kind in ("query", "extract"):
        allowed = {"op"}
        op = TraceOp(kind)
    else:
        raise TraceError(lineno, f"unknown op {kind!r}")
    extra = set(rec) - allowed
    if extra:
        raise TraceError(lineno, f"unexpected field {sorted(extra)[0]!r} for op {kind!r}")
    return op


# generation

def generate(mode: str, n: int, seed: int = 0, lam: float = 1.0,
             bbox_origin: tuple[float, float] = (0.0, 0.0),
             bbox_side: float = 64.0) -> tuple[TraceHeader, list[TraceOp]]:
    """Deterministic random trace with ~1.5n operations.

    The schedule inserts up to ``n`` points with occasional deletions, then a
    churn phase; queries (and a few extracts) are only emitted at even sizes.
    Plane points are rejection-sampled to keep every pairwise distance at
    least ``lam``; the box must satisfy ``n * (2 * lam)^2 <= bbox_side^2`` so
    that sampling cannot get stuck.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if n < 1:
        raise ValueError("n must be positive")
    plane = mode == "plane"
    if plane:
        if lam <= 0 or bbox_side < lam:
            raise ValueError("need 0 < lambda <= bbox_side")
        if n * (2 * lam) ** 2 > bbox_side ** 2:
            raise ValueError(
                f"capacity guard: {n} points need n*(2*lambda)^2 <= side^2")
        header = TraceHeader(mode, lam=lam, bbox_origin=tuple(bbox_origin),
                             bbox_side=bbox_side, seed=seed)
    else:
        header = TraceHeader(mode, seed=seed)

    rng = random.Random(seed)
    ops: list[TraceOp] = []
    live: dict = {}
    live_ids: list = []        # parallel list for O(1) random victim choice
    next_id = 0

    def snap(value: float) -> float:
        return math.floor(value * _COORD_SCALE) / _COORD_SCALE

    def sample_point():
        nonlocal next_id
        if not plane:
            x = rng.randrange(16 * _COORD_SCALE * max(n, 4)) / _COORD_SCALE
            p = (x, None)
        else:
            ox, oy = header.bbox_origin
            for _ in range(10000):
                x = snap(ox + rng.uniform(0.0, bbox_side))
                y = snap(oy + rng.uniform(0.0, bbox_side))
                if all((x - qx) ** 2 + (y - qy) ** 2 >= lam * lam
                       for qx, qy in live.values()):
                    break
            else:
                raise RuntimeError("rejection sampling stalled")
            p = (x, y)
        pid = next_id
        next_id += 1
        return pid, p

    def emit_insert():
        pid, (x, y) = sample_point()
        live[pid] = (x, y)
        live_ids.append(pid)
        ops.append(TraceOp("insert", pid, x, y))

    def emit_delete():
        idx = rng.randrange(len(live_ids))
        live_ids[idx], live_ids[-1] = live_ids[-1], live_ids[idx]
        pid = live_ids.pop()
        del live[pid]
        ops.append(TraceOp("delete", pid))

    def maybe_query(prob: float = 0.3):
        if len(live) % 2 == 0 and (len(live) >= 2 or not plane) and rng.random() < prob:
            # Extraction is linear time, so ration it on large traces.
            extract_share = 0.15 if len(live) <= 2048 else 0.01
            kind = "extract" if rng.random() < extract_share else "query"
            ops.append(TraceOp(kind))

    while len(live) < n:
        if live and rng.random() < 0.12:
            emit_delete()
        else:
            emit_insert()
        maybe_query()
    for _ in range(n // 2):
        if len(live) <= 2 or (len(live) < n and rng.random() < 0.5):
            emit_insert()
        else:
            emit_delete()
        maybe_query()
    if len(live) % 2:
        emit_delete()
    if len(live) >= 2 or not plane:
        ops.append(TraceOp("query"))
    return header, ops


# replay

def _objective_for(mode: str) -> Objective:
    return Objective.MIN_WEIGHT if mode == "line-minweight" else Objective.BOTTLENECK


def peak_size(ops: list[TraceOp]) -> int:
    size = peak = 0
    for op in ops:
        if op.op == "insert":
            size += 1
            peak = max(peak, size)
        elif op.op == "delete":
            size -= 1
    return peak


def default_check_every(ops: list[TraceOp]) -> int:
    return 1 if peak_size(ops) <= 256 else 16


def replay(header: TraceHeader, ops: list[TraceOp], verify: bool = False,
           check_every: int | None = None, on_step=None) -> list[StepReport]:
    """Run a trace against the structure selected by ``header.mode``.

    With ``verify``, every ``check_every``-th step is cross-checked: line
    modes demand exact equality with the consecutive-pairing or skip-one
    oracle (plus a full structural self check); plane mode recomputes the
    components from scratch and, for at most 16 live points, checks the
    threshold sandwich and the extraction bound against the exact solver.
    Raises :class:`VerificationError` on the first disagreement.
    """
    if check_every is None:
        check_every = default_check_every(ops)
    if check_every < 1:
        raise ValueError("check_every must be >= 1")
    plane = header.mode == "plane"
    if plane:
        config = GridConfig(header.bbox_side, header.lam, header.bbox_origin)
        grid = GridMatcher(config, check_spacing=verify)
        tree = None
    else:
        tree = LineMatchTree(_objective_for(header.mode))
        grid = None
    live: dict = {}
    reports = []
    for step, op in enumerate(ops, start=1):
        start = time.perf_counter_ns()
        value = None
        if plane:
            if op.op == "insert":
                p = PlanePoint(op.id, op.x, op.y)
                grid.insert(p)
                live[op.id] = p
                touched = grid.last_insert_ops
            elif op.op == "delete":
                grid.delete(op.id)
                del live[op.id]
                touched = grid.last_delete_ops
            elif op.op == "query":
                value = grid.threshold().t
                touched = 0
            else:
                value = max_edge(grid.extract_matching())
                touched = 0
        else:
            if op.op == "insert":
                p = LinePoint(op.id, op.x)
                tree.insert(p)
                live[op.id] = p
                touched = tree.last_touches
            elif op.op == "delete":
                tree.delete(op.id)
                del live[op.id]
                touched = tree.last_touches
            elif op.op == "query":
                value = tree.match_value()
                touched = 0
            else:
                value = tree.extract_matching().value
                touched = 0
        elapsed = time.perf_counter_ns() - start
        if on_step is not None:
            on_step(step, grid if plane else tree)
        oracle_value = None
        if verify and step % check_every == 0:
            if plane:
                oracle_value = _verify_plane(grid, live, step)
            else:
                oracle_value = _verify_line(tree, live, step)
        reports.append(StepReport(step, op, value, oracle_value, elapsed, touched))
    return reports


def _verify_line(tree: LineMatchTree, live: dict, step: int) -> float:
    try:
        tree.self_check()
    except AssertionError as exc:
        raise VerificationError(step, None, None, f"self check: {exc}") from None
    points = list(live.values())
    if len(points) <= 1:
        expected = 0.0
    elif len(points) % 2 == 0:
        expected = oracles.line_consecutive(points, tree.objective).value
    else:
        expected = oracles.line_skip_one(points, tree.objective).value
    got = tree.match_value()
    if got != expected:
        raise VerificationError(step, got, expected)
    extracted = tree.extract_matching()
    if extracted.value != got:
        raise VerificationError(step, extracted.value, got, "extraction value")
    _check_cover(extracted, points, step)
    return expected


def _check_cover(result: MatchingResult, points: list, step: int) -> None:
    seen = [p.id for a, b in result.edges for p in (a, b)]
    if result.skipped is not None:
        seen.append(result.skipped.id)
    if sorted(seen) != sorted(p.id for p in points):
        raise VerificationError(step, None, None, "extraction is not a matching")


def _verify_plane(grid: GridMatcher, live: dict, step: int) -> float | None:
    try:
        grid.verify_components()
    except AssertionError as exc:
        raise VerificationError(step, None, None, f"component check: {exc}") from None
    n = len(live)
    if n == 0 or n % 2 or n > PLANE_VERIFY_MAX:
        return None
    best = oracles.exact_dp(list(live.values()), Objective.BOTTLENECK, "euclidean")
    result = grid.threshold()
    if not result.t < best:
        raise VerificationError(step, result.t, best, "lower bound")
    if best > APPROX_FACTOR * result.t * (1 + REL_SLACK):
        raise VerificationError(step, result.t, best, "upper bound")
    edges = grid.extract_matching()
    _check_cover(MatchingResult(0.0, edges), list(live.values()), step)
    bound = EXTRACT_FACTOR * grid.config.cell_side(result.level) + 1e-9
    worst = max_edge(edges)
    if worst > bound:
        raise VerificationError(step, worst, bound, "extraction bound")
    return best


# benchmarking

def bench(header: TraceHeader, ops: list[TraceOp],
          baseline: str = "dynamic") -> list[dict]:
    """Time every operation; returns rows for :func:`write_bench_csv`.

    ``baseline="rebuild"`` keeps only the point set between queries and
    reconstructs the whole structure for each query, as the no-data-structure
    comparison point.
    """
    if baseline == "dynamic":
        reports = replay(header, ops, verify=False)
        size = 0
        rows = []
        for rep in reports:
            size += 1 if rep.op.op == "insert" else -1 if rep.op.op == "delete" else 0
            rows.append({"step": rep.step, "op": rep.op.op,
                         "elapsed_ns": rep.elapsed_ns,
                         "touched_nodes": rep.touched_nodes, "n": size})
        return rows
    if baseline != "rebuild":
        raise ValueError(f"unknown baseline {baseline!r}")

    plane = header.mode == "plane"
    objective = _objective_for(header.mode)
    live: dict = {}
    rows = []
    for step, op in enumerate(ops, start=1):
        start = time.perf_counter_ns()
        touched = 0
        if op.op == "insert":
            live[op.id] = (PlanePoint(op.id, op.x, op.y) if plane
                           else LinePoint(op.id, op.x))
        elif op.op == "delete":
            del live[op.id]
        else:
            if plane:
                config = GridConfig(header.bbox_side, header.lam, header.bbox_origin)
                grid = GridMatcher(config)
                for p in live.values():
                    grid.insert(p)
                    touched += grid.last_insert_ops
                if len(live) >= 2 and len(live) % 2 == 0:
                    if op.op == "query":
                        grid.threshold()
                    else:
                        grid.extract_matching()
            else:
                tree = LineMatchTree.build(live.values(), objective)
                touched = tree.touches_total
                if op.op == "query":
                    tree.match_value()
                else:
                    tree.extract_matching()
        elapsed = time.perf_counter_ns() - start
        rows.append({"step": step, "op": op.op, "elapsed_ns": elapsed,
                     "touched_nodes": touched, "n": len(live)})
    return rows


BENCH_FIELDS = ("step", "op", "elapsed_ns", "touched_nodes", "n")


def write_bench_csv(rows: list[dict], stream) -> None:
    import csv

    writer = csv.DictWriter(stream, fieldnames=BENCH_FIELDS)
    writer.writeheader()
    writer.writerows(rows)
