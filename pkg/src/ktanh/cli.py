"""Command-line front end: ``ktanh <command> [flags]``.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, evaluate, optimizer
from . import numerics as nx
from .kernel import TABLE_SIZE, ParamTable, TableValidationError, canonical_table, ktanh_array

ALGOS = ("ktanh", "minimax2", "minimax3", "pade32", "pade78", "taylor2", "taylor3", "oracle", "identity")


def build_approximator(name: str, table: ParamTable | None = None):
    if name == "ktanh":
        table = table or canonical_table()
        return lambda bits: ktanh_array(bits, table)
    if name == "oracle":
        return lambda bits: nx.encode_array(nx.tanh_oracle(nx.decode_array(bits)))
    if name == "identity":
        return lambda bits: np.asarray(bits, dtype=np.uint16)
    if name.startswith("minimax"):
        return baselines.fit_minimax(int(name[-1]))
    if name.startswith("pade"):
        return baselines.fit_pade(int(name[-2]), int(name[-1]))
    if name.startswith("taylor"):
        return baselines.fit_taylor(int(name[-1]))
    raise KeyError(name)


def _parse_algos(parser, text: str) -> list[str]:
    names = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in names if a not in ALGOS]
    if bad or not names:
        parser.error(f"unknown algo(s) {bad}; choose from {', '.join(ALGOS)}")
    return names


def _load_table(path) -> ParamTable:
    return ParamTable.load(path) if path else canonical_table()


def _write(path, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _domain(args) -> evaluate.Domain:
    return evaluate.Domain(lo=args.lo, hi=args.hi, positive_only=args.positive)


# --- commands ------------------------------------------------------------------------

def cmd_gen_table(args) -> int:
    cfg = optimizer.OptimizerConfig(r_max=args.r_max, ablation_bmin_zero=args.bmin_zero)
    try:
        table = optimizer.generate_table(cfg)
    except TableValidationError as exc:
        print(f"table validation failed: {exc}", file=sys.stderr)
        return 1
    fits = sorted(optimizer.fit_intervals(cfg), key=lambda f: f.t)
    if args.report:
        Path(args.report).write_text(optimizer.fit_report_csv(fits))
    table.save(args.out)
    print(optimizer.fit_report_csv(fits), end="")
    return 0


def cmd_dump_table(args) -> int:
    print(_load_table(args.table).dump_text(), end="")
    return 0


def cmd_verify_table(args) -> int:
    table = _load_table(args.table)
    ref = _load_table(args.reference)
    ivs = {iv.t: iv for iv in optimizer.build_intervals()}
    failed = None
    exact = 0
    for t in range(TABLE_SIZE):
        ours = optimizer.entry_objective(ivs[t], *table.entry(t))
        theirs = optimizer.entry_objective(ivs[t], *ref.entry(t))
        same = table.entry(t) == ref.entry(t)
        exact += same
        status = "equal" if same else ("dominates" if ours <= theirs else "WORSE")
        print(f"{t:05b}  {table.entry(t)}  {ref.entry(t)}  obj {ours:g} vs {theirs:g}  {status}")
        if ours > theirs and failed is None:
            failed = t
    print(f"exact matches: {exact}/{TABLE_SIZE}")
    if failed is not None:
        print(f"first violating index: {failed:05b}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    table = _load_table(args.table)
    approx = {a: build_approximator(a, table) for a in args.algos}
    reports = [evaluate.sweep(fn, _domain(args), name) for name, fn in approx.items()]
    _emit_reports(args, reports)
    return 0


def cmd_compare(args) -> int:
    table = _load_table(args.table)
    approx = {a: build_approximator(a, table) for a in args.algos}
    reports = evaluate.compare(approx, _domain(args))
    _emit_reports(args, reports)
    return 0


def _emit_reports(args, reports) -> None:
    out = args.out
    if out and out.endswith(".json"):
        _write(out, evaluate.reports_json(reports))
        return
    _write(out, evaluate.reports_csv(reports))
    if out:
        Path(out).with_suffix(".json").write_text(evaluate.reports_json(reports))


def cmd_ablate(args) -> int:
    default = _load_table(args.default)
    if args.ablation:
        ablation = ParamTable.load(args.ablation)
    else:
        ablation = optimizer.generate_table(optimizer.OptimizerConfig(ablation_bmin_zero=True))
    rep = evaluate.ablation_report(default, ablation)
    _write(args.out, json.dumps(rep.to_dict(), indent=2) + "\n")
    print(
        f"default max_abs_err={rep.default.max_abs_err:.6g}  "
        f"ablation max_abs_err={rep.ablation.max_abs_err:.6g}  "
        f"differing={[f'{t:05b}' for t in rep.differing]}",
        file=sys.stderr,
    )
    return 0


def cmd_bench(args) -> int:
    table = _load_table(args.table)
    approx = {a: build_approximator(a, table) for a in args.algos}
    rows = evaluate.bench(approx, batch=args.batch, reps=args.reps)
    _write(args.out, evaluate.bench_csv(rows))
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ktanh", description="K-TanH BF16 tables, sweeps and benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-table", help="fit a parameter table")
    p.add_argument("--r-max", type=int, default=7, choices=range(8))
    p.add_argument("--bmin-zero", action="store_true", help="ablation: forbid negative add constants")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="optional per-interval fit CSV")
    p.set_defaults(func=cmd_gen_table)

    p = sub.add_parser("dump-table", help="print a table in the published layout")
    p.add_argument("--table")
    p.set_defaults(func=cmd_dump_table)

    p = sub.add_parser("verify-table", help="per-index objective dominance against a reference")
    p.add_argument("--table")
    p.add_argument("--reference", help="defaults to the shipped published table")
    p.set_defaults(func=cmd_verify_table)

    for name, func in (("sweep", cmd_sweep), ("compare", cmd_compare)):
        p = sub.add_parser(name, help=f"{name} approximators over BF16 inputs")
        p.add_argument("--algos", default="ktanh")
        p.add_argument("--table")
        p.add_argument("--out", help="CSV path (a .json twin is written alongside); .json for JSON only")
        p.add_argument("--lo", type=float, default=0.0)
        p.add_argument("--hi", type=float, default=float("inf"))
        p.add_argument("--positive", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("ablate", help="compare a table against its b_min = 0 counterpart")
    p.add_argument("--default")
    p.add_argument("--ablation", help="defaults to a freshly generated b_min = 0 table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="wall-clock ns per element (report only)")
    p.add_argument("--algos", default="ktanh")
    p.add_argument("--table")
    p.add_argument("--batch", type=int, default=65536)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "algos"):
        args.algos = _parse_algos(parser, args.algos)
    if getattr(args, "batch", 1024) < 1024:
        parser.error("--batch must be at least 1024")
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TableValidationError as exc:
        print(f"table validation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
