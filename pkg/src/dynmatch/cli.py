"""Command line front end: generate, replay, and benchmark traces.

Exit codes: 0 full pass, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys

from .trace import (TraceError, VerificationError, bench, format_trace,
                    generate, parse_trace, replay, write_bench_csv, MODES)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynmatch",
        description="dynamic matching structures: trace generator, replay, benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random operation trace")
    gen.add_argument("--mode", required=True, choices=MODES)
    gen.add_argument("--n", type=int, required=True, help="target point count")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--lambda", dest="lam", type=float, default=1.0,
                     help="minimum pairwise distance (plane mode)")
    gen.add_argument("--bbox-origin", default="0,0", metavar="X,Y")
    gen.add_argument("--bbox-side", type=float, default=64.0)
    gen.add_argument("--out", help="output path (default: stdout)")

    rep = sub.add_parser("replay", help="replay a trace")
    rep.add_argument("trace", nargs="?", help="trace path (default: stdin)")
    rep.add_argument("--verify", action="store_true",
                     help="cross-check maintained values against the oracles")
    rep.add_argument("--check-every", type=int, default=None,
                     help="verify cadence (default: 1 up to 256 points, else 16)")
    rep.add_argument("--out", help="write the step report here (default: stdout)")

    ben = sub.add_parser("bench", help="time a trace, write a CSV report")
    ben.add_argument("trace", nargs="?", help="trace path (default: stdin)")
    ben.add_argument("--baseline", choices=("dynamic", "rebuild"),
                     default="dynamic")
    ben.add_argument("--out", help="CSV path (default: stdout)")

    return parser


def _read_trace(path: str | None):
    if path is None:
        return parse_trace(sys.stdin)
    with open(path, "r", encoding="utf-8") as handle:
        return parse_trace(handle)


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _cmd_gen(args) -> int:
    try:
        origin = tuple(float(v) for v in args.bbox_origin.split(","))
        if len(origin) != 2:
            raise ValueError
    except ValueError:
        print("dynmatch: --bbox-origin expects X,Y", file=sys.stderr)
        return 2
    header, ops = generate(args.mode, args.n, seed=args.seed, lam=args.lam,
                           bbox_origin=origin, bbox_side=args.bbox_side)
    _write(args.out, format_trace(header, ops))
    return 0


def _cmd_replay(args) -> int:
    header, ops = _read_trace(args.trace)
    reports = replay(header, ops, verify=args.verify,
                     check_every=args.check_every)
    lines = []
    checks = 0
    for rep in reports:
        if rep.oracle_value is not None:
            checks += 1
        if rep.value is not None:
            line = f"step={rep.step} op={rep.op.op} value={rep.value}"
            if rep.oracle_value is not None:
                line += f" oracle={rep.oracle_value}"
            lines.append(line)
    lines.append(f"replayed {len(reports)} ops ({header.mode}), "
                 f"{checks} oracle checks, all passed" if args.verify else
                 f"replayed {len(reports)} ops ({header.mode})")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_bench(args) -> int:
    header, ops = _read_trace(args.trace)
    rows = bench(header, ops, baseline=args.baseline)
    if args.out is None:
        write_bench_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            write_bench_csv(rows, handle)
    return 0


def _fuse_origin(argv: list[str]) -> list[str]:
    # argparse mistakes "-8,-8" for an option; pass the pair as one token.
    out: list[str] = []
    i = 0
    while i < len(argv):
        if argv[i] == "--bbox-origin" and i + 1 < len(argv):
            out.append(f"--bbox-origin={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = _build_parser().parse_args(_fuse_origin(list(argv)))
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_bench(args)
    except VerificationError as exc:
        print(f"dynmatch: {exc}", file=sys.stderr)
        return 1
    except (TraceError, ValueError, KeyError, OSError) as exc:
        print(f"dynmatch: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
