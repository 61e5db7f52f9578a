import math
import subprocess
import sys

import pytest

from dynmatch import (TraceError, TraceHeader, TraceOp, VerificationError,
                      bench, format_trace, generate, parse_trace, replay)
from dynmatch.cli import main
from dynmatch.line_tree import ALL
from dynmatch.trace import default_check_every, write_bench_csv


def line_trace(xs, tail=("query",)):
    ops = [TraceOp("insert", i, float(x)) for i, x in enumerate(xs)]
    ops += [TraceOp(kind) for kind in tail]
    return TraceHeader("line-bottleneck"), ops


def test_round_trip_handmade():
    header, ops = line_trace([0, 1, 3, 6], tail=("query", "extract"))
    ops.insert(2, TraceOp("delete", 0))
    ops.insert(3, TraceOp("insert", 0, 2.5))
    assert parse_trace(format_trace(header, ops)) == (header, ops)


def test_round_trip_generated_all_modes():
    for mode in ("line-bottleneck", "line-minweight", "plane"):
        header, ops = generate(mode, 24, seed=3, lam=1.0, bbox_side=32.0)
        assert parse_trace(format_trace(header, ops)) == (header, ops)


def test_generation_is_deterministic():
    a = format_trace(*generate("plane", 16, seed=9, bbox_side=32.0))
    b = format_trace(*generate("plane", 16, seed=9, bbox_side=32.0))
    assert a == b
    c = format_trace(*generate("plane", 16, seed=10, bbox_side=32.0))
    assert a != c


def test_generated_plane_points_respect_spacing():
    header, ops = generate("plane", 12, seed=4, lam=2.0, bbox_side=64.0)
    points = [(op.x, op.y) for op in ops if op.op == "insert"]
    for i, (ax, ay) in enumerate(points):
        for bx, by in points[i + 1:]:
            assert math.hypot(ax - bx, ay - by) >= 2.0 or (ax, ay) == (bx, by)


def test_generate_capacity_guard():
    with pytest.raises(ValueError, match="capacity"):
        generate("plane", 1000, seed=0, lam=1.0, bbox_side=32.0)


@pytest.mark.parametrize("line,complaint", [
    ('{"op":"warp"}', "unknown op"),
    ('{"op":"insert","id":3}', "missing field 'x'"),
    ('{"op":"insert","id":3,"x":1.0}', "missing field 'y'"),
    ('{"op":"insert","id":3,"x":1.0,"y":99.0}', "outside"),
    ('{"op":"delete","id":3}', "unknown id"),
    ('{"op":"query","id":1}', "unexpected field"),
    ('not json', "invalid JSON"),
])
def test_parse_errors_carry_line_numbers(line, complaint):
    text = '{"mode":"plane","lambda":1.0,"bbox_origin":[0,0],"bbox_side":8.0}\n' + line + "\n"
    with pytest.raises(TraceError, match="line 2") as err:
        parse_trace(text)
    assert complaint in str(err.value)


def test_parse_header_errors():
    with pytest.raises(TraceError, match="line 1"):
        parse_trace('{"mode":"warp-speed"}\n')
    with pytest.raises(TraceError, match="lambda"):
        parse_trace('{"mode":"plane","bbox_origin":[0,0],"bbox_side":8.0}\n')
    with pytest.raises(TraceError, match="empty"):
        parse_trace("")
    with pytest.raises(TraceError, match="at least"):
        parse_trace('{"mode":"plane","lambda":4.0,"bbox_origin":[0,0],"bbox_side":2.0}\n')


def test_insert_of_live_id_rejected():
    text = ('{"mode":"line-bottleneck"}\n'
            '{"op":"insert","id":1,"x":0.0}\n'
            '{"op":"insert","id":1,"x":2.0}\n')
    with pytest.raises(TraceError, match="line 3"):
        parse_trace(text)


def test_replay_line_example():
    header, ops = line_trace([0, 1, 3, 6])
    reports = replay(header, ops, verify=True)
    last = reports[-1]
    assert last.value == 3 and last.oracle_value == 3


def test_replay_plane_sandwich_example():
    header = TraceHeader("plane", lam=1.0, bbox_origin=(0.0, 0.0), bbox_side=4.0)
    ops = [TraceOp("insert", 0, 0.5, 0.5), TraceOp("insert", 1, 3.5, 3.5),
           TraceOp("query")]
    reports = replay(header, ops, verify=True)
    last = reports[-1]
    assert last.value == 1.0
    assert math.isclose(last.oracle_value, 3 * math.sqrt(2), rel_tol=1e-12)
    assert last.value < last.oracle_value <= 6 * math.sqrt(2) * last.value


def test_generated_traces_replay_clean_under_verify():
    for mode, n in (("line-bottleneck", 8), ("line-minweight", 40), ("plane", 10)):
        header, ops = generate(mode, n, seed=1, lam=1.0, bbox_side=32.0)
        reports = replay(header, ops, verify=True, check_every=1)
        assert len(reports) == len(ops)


def test_replay_is_deterministic():
    header, ops = generate("line-minweight", 48, seed=21)
    first = [r.value for r in replay(header, ops)]
    second = [r.value for r in replay(header, ops)]
    assert first == second


def test_replay_rejects_bad_cadence():
    header, ops = line_trace([0, 1])
    with pytest.raises(ValueError):
        replay(header, ops, verify=True, check_every=0)


def test_default_cadence_thresholds():
    header, ops = generate("line-bottleneck", 64, seed=0)
    assert default_check_every(ops) == 1
    header, ops = generate("line-bottleneck", 400, seed=0)
    assert default_check_every(ops) == 16


def test_corrupted_attribute_is_detected_at_next_check():
    header, ops = line_trace([0, 1, 3, 6], tail=("query",))
    target_step = 4   # corrupt right after the last insert

    def corrupt(step, tree):
        if step == target_step:
            root = tree._root
            root.costs = root.costs._replace(all=root.costs[ALL] + 1.0)

    with pytest.raises(VerificationError) as err:
        replay(header, ops, verify=True, check_every=1, on_step=corrupt)
    assert err.value.step == target_step


def test_corrupted_grid_parity_is_detected():
    header = TraceHeader("plane", lam=1.0, bbox_origin=(0.0, 0.0), bbox_side=4.0)
    ops = [TraceOp("insert", 0, 0.5, 0.5), TraceOp("insert", 1, 3.5, 3.5),
           TraceOp("query")]

    def corrupt(step, grid):
        if step == 2:
            level = grid._levels[0]
            level.sets.change_parity(next(iter(level.occ)) + (0,))

    with pytest.raises(VerificationError) as err:
        replay(header, ops, verify=True, check_every=1, on_step=corrupt)
    assert err.value.step == 2


def test_bench_emits_one_row_per_op():
    header, ops = generate("line-bottleneck", 32, seed=2)
    rows = bench(header, ops)
    assert len(rows) == len(ops)
    assert list(rows[0]) == ["step", "op", "elapsed_ns", "touched_nodes", "n"]
    import io

    out = io.StringIO()
    write_bench_csv(rows, out)
    lines = out.getvalue().strip().splitlines()
    assert lines[0] == "step,op,elapsed_ns,touched_nodes,n"
    assert len(lines) == len(ops) + 1


def test_bench_touched_grows_logarithmically():
    small = generate("line-bottleneck", 2 ** 10, seed=6)
    large = generate("line-bottleneck", 2 ** 14, seed=6)

    def mean_update_touch(rows):
        counts = [r["touched_nodes"] for r in rows if r["op"] in ("insert", "delete")]
        return sum(counts) / len(counts)

    t_small = mean_update_touch(bench(*small))
    t_large = mean_update_touch(bench(*large))
    assert t_large <= 2 * t_small


def test_bench_rebuild_baseline_grows_linearly():
    def mean_query_touch(n):
        header, ops = generate("line-bottleneck", n, seed=12)
        rows = bench(header, ops, baseline="rebuild")
        touch = [r["touched_nodes"] for r in rows if r["op"] == "query"]
        return sum(touch) / len(touch)

    small, large = mean_query_touch(128), mean_query_touch(512)
    assert large >= 2.5 * small      # ~linear in n, far beyond log growth


# command line

def run_cli(*argv):
    return main(list(argv))


def test_cli_gen_replay_bench(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    assert run_cli("gen", "--mode", "line-bottleneck", "--n", "24",
                   "--seed", "3", "--out", str(trace)) == 0
    assert run_cli("replay", str(trace), "--verify") == 0
    out = capsys.readouterr().out
    assert "all passed" in out
    csv_path = tmp_path / "r.csv"
    assert run_cli("bench", str(trace), "--baseline", "rebuild",
                   "--out", str(csv_path)) == 0
    header = csv_path.read_text().splitlines()[0]
    assert header == "step,op,elapsed_ns,touched_nodes,n"


def test_cli_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"mode":"line-bottleneck"}\n{"op":"delete","id":5}\n')
    assert run_cli("replay", str(bad)) == 2
    assert "line 2" in capsys.readouterr().err
    assert run_cli("gen", "--mode", "plane", "--n", "100000",
                   "--bbox-side", "8") == 2
    assert run_cli("gen", "--mode", "line-bottleneck", "--n", "4",
                   "--bbox-origin", "nope") == 2


def test_cli_verification_failure_exit_1(tmp_path, capsys, monkeypatch):
    import dynmatch.cli as cli

    def boom(header, ops, verify, check_every):
        raise VerificationError(3, 1.0, 2.0)

    monkeypatch.setattr(cli, "replay", boom)
    trace = tmp_path / "t.jsonl"
    trace.write_text('{"mode":"line-bottleneck"}\n{"op":"query"}\n')
    assert run_cli("replay", str(trace), "--verify") == 1
    assert "step 3" in capsys.readouterr().err


def test_cli_pipeline_stdin_stdout():
    gen = subprocess.run(
        [sys.executable, "-m", "dynmatch.cli", "gen", "--mode", "plane",
         "--n", "8", "--seed", "5", "--bbox-side", "32"],
        capture_output=True, text=True, check=True)
    rep = subprocess.run(
        [sys.executable, "-m", "dynmatch.cli", "replay", "--verify"],
        input=gen.stdout, capture_output=True, text=True)
    assert rep.returncode == 0, rep.stderr
    assert "all passed" in rep.stdout
