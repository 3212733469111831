"""Command-line front end.

Exit codes: 0 success, 2 bad input or validation error, 3 internal failure.
Every output file is written atomically.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from ._io import atomic_open, write_json, write_text
from .canonical import CANONICAL_CSV_VERSION, load, write_canonical_csv
from .eventlog import (
    EVENTLOG_CSV_VERSION,
    CaseField,
    build_event_log,
    derive_case_field,
    export_eventlog_csv,
    export_xes,
    import_eventlog_csv,
)
from .ingestion import RAW_DUMP_VERSION, parse_raw_blocks, preprocess
from .metrics import compute_metrics
from .miner import alpha_mine, compute_footprint, detect_anomalous_paths, export_dot, mine_dfg
from .model import Thresholds, validate_log
from .recommender import delta_write_near_misses, mine_anomalies, recommend, render_report
from .simulator import SimConfig, apply_optimization, builtin_scenarios, emit_raw, run

THRESHOLDS_ENV = "LEDGERLENS_THRESHOLDS"


class InputError(Exception):
    """Bad user input; maps to exit status 2."""


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_log(path: str):
    _read(path)
    log = load(path)
    problems = validate_log(log)
    if problems:
        raise InputError(f"{path}: invalid log: {problems[0]}" + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
    return log


def _thresholds(args) -> Thresholds:
    path = getattr(args, "thresholds", None) or os.environ.get(THRESHOLDS_ENV)
    if not path:
        return Thresholds()
    return Thresholds.from_text(_read(path))


def _sim_config(args) -> SimConfig:
    if args.config:
        cfg = SimConfig.from_text(_read(args.config))
    elif args.preset:
        presets = builtin_scenarios()
        if args.preset not in presets:
            raise InputError(f"unknown preset {args.preset!r}; choose from {', '.join(sorted(presets))}")
        cfg = presets[args.preset]
    else:
        cfg = SimConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    log, perf = run(cfg)
    with atomic_open(args.out) as fh:
        write_canonical_csv(log, fh)
    if args.emit_raw:
        write_text(args.emit_raw, "\n".join(emit_raw(log)) + "\n")
    if args.summary:
        write_json(args.summary, perf.to_dict())
    print(f"simulated {perf.n_transactions} transactions, success rate {perf.success_rate:.3f}, "
          f"throughput {perf.throughput:.1f} tx/s", file=sys.stderr)
    return 0


def cmd_ingest(args) -> int:
    with open(args.inp, encoding="utf-8") as fh:
        log = preprocess(parse_raw_blocks(fh))
    with atomic_open(args.out) as fh:
        write_canonical_csv(log, fh)
    print(f"ingested {len(log)} transactions in {len(log.blocks)} blocks", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    log = _load_log(args.inp)
    m = compute_metrics(log, _thresholds(args))
    doc = m.to_json(max_pairs=args.max_pairs)
    write_json(args.out, doc)
    if args.text:
        lines = [f"{k}: {doc[k]}" for k in ("n_tx", "n_failed", "Tr", "TFr", "B_sizeavg", "HK", "corDV_pair_count")]
        write_text(args.text, "\n".join(lines) + "\n")
    return 0


def cmd_recommend(args) -> int:
    log = _load_log(args.inp)
    th = _thresholds(args)
    m = compute_metrics(log, th)
    anomalies = mine_anomalies(log)
    recs = recommend(log, m, th, anomalies)
    notes = [f"delta-write near miss: {d['activity']} on {d['key']} steps by {d['step']:g}"
             for d in delta_write_near_misses(log, m)] + list(m.notes)
    md, js = render_report(recs, m, notes)
    if args.out:
        write_text(args.out, md)
    else:
        sys.stdout.write(md)
    if args.json:
        write_text(args.json, js)
    return 0


def cmd_eventlog(args) -> int:
    log = _load_log(args.inp)
    if args.case_field:
        cf = CaseField.parse(args.case_field)
    else:
        cf, cov = derive_case_field(log)
        print(f"case field {cf} (coverage {cov:.2f})", file=sys.stderr)
    el = build_event_log(log, cf, successes_only=args.successes_only)
    if args.xes:
        write_text(args.xes, export_xes(el))
    if args.csv:
        with atomic_open(args.csv) as fh:
            export_eventlog_csv(el, fh)
    return 0


def cmd_mine(args) -> int:
    text = _read(args.inp)
    el = import_eventlog_csv(io.StringIO(text))
    dfg = mine_dfg(el)
    if args.dfg:
        write_text(args.dfg, export_dot(dfg))
    if args.alpha:
        write_text(args.alpha, export_dot(alpha_mine(el)))
    if args.footprint:
        write_text(args.footprint, compute_footprint(dfg).render())
    if args.anomalies:
        found = detect_anomalous_paths(None, el)
        write_json(args.anomalies, [a.to_dict() for a in found])
    return 0


def _leg(cfg: SimConfig) -> dict:
    return run(cfg)[1].to_dict()


def _loop_rows(cfg: SimConfig, th: Thresholds, mode: str, jobs: int):
    log, base = run(cfg)
    m = compute_metrics(log, th)
    recs = recommend(log, m, th)
    legs, labels, skipped = [], [], []
    applied = cfg
    for r in recs:
        try:
            changed = apply_optimization(cfg if mode == "each" else applied, r)
        except ValueError as exc:
            skipped.append(f"{r.kind}: {exc}")
            continue
        if mode == "each":
            legs.append(changed)
            labels.append(r.kind)
        else:
            applied = changed
    if mode == "all" and recs:
        legs.append(applied)
        labels.append("+".join(r.kind for r in recs))
    if jobs > 1 and len(legs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_leg, legs))
    else:
        results = [_leg(c) for c in legs]
    return base.to_dict(), [r.kind for r in recs], list(zip(labels, results)), skipped


def cmd_loop(args) -> int:
    cfg = _sim_config(args)
    base, kinds, rows, skipped = _loop_rows(cfg, _thresholds(args), args.mode, args.jobs)

    def rel(after, before):
        return f"{(after / before - 1) * 100:+.1f}%" if before else "n/a"

    md = ["# Closed-loop comparison", "", f"Recommendations: {', '.join(kinds) or 'none'}", "",
          "| optimization | success rate | throughput (tx/s) | avg latency (ms) | mvcc conflicts |",
          "|---|---|---|---|---|",
          f"| baseline | {base['success_rate']:.3f} | {base['throughput']:.1f} | {base['avg_latency_ms']:.1f} | "
          f"{base['failure_counts']['mvcc_read_conflict']} |"]
    for label, p in rows:
        md.append(
            f"| {label} | {p['success_rate']:.3f} ({rel(p['success_rate'], base['success_rate'])}) | "
            f"{p['throughput']:.1f} ({rel(p['throughput'], base['throughput'])}) | {p['avg_latency_ms']:.1f} | "
            f"{p['failure_counts']['mvcc_read_conflict']} |")
    for s in skipped:
        md.append(f"\n- skipped {s}")
    text = "\n".join(md) + "\n"
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.json:
        write_json(args.json, {"baseline": base, "recommendations": kinds,
                               "legs": [{"optimization": lbl, "perf": p} for lbl, p in rows],
                               "skipped": skipped})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ledgerlens", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version",
                    version=f"ledgerlens {__version__} (canonical-csv v{CANONICAL_CSV_VERSION}, "
                            f"raw-dump v{RAW_DUMP_VERSION}, eventlog-csv v{EVENTLOG_CSV_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)

    def sim_source(p):
        p.add_argument("--config", help="key=value simulation config (may name a preset)")
        p.add_argument("--preset", help="built-in scenario: " + ", ".join(sorted(builtin_scenarios())))
        p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="run the simulator and write a canonical log")
    sim_source(p)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-raw", dest="emit_raw")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="raw block dump (NDJSON) -> canonical CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="compute metrics")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--thresholds")
    p.add_argument("--out", required=True, help="metrics JSON")
    p.add_argument("--text", help="short human-readable summary")
    p.add_argument("--max-pairs", type=int, default=100_000)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("recommend", help="evaluate the optimization rules")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--thresholds")
    p.add_argument("--out", help="markdown report (stdout if omitted)")
    p.add_argument("--json")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("eventlog", help="derive a process-mining event log")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--xes")
    p.add_argument("--csv")
    p.add_argument("--case-field", help="argN or prefix:<p>")
    p.add_argument("--successes-only", action="store_true")
    p.set_defaults(func=cmd_eventlog)

    p = sub.add_parser("mine", help="mine process models from an event-log CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--dfg")
    p.add_argument("--alpha")
    p.add_argument("--footprint")
    p.add_argument("--anomalies")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("loop", help="simulate, recommend, apply and re-simulate")
    sim_source(p)
    p.add_argument("--thresholds")
    p.add_argument("--mode", choices=("each", "all"), default="each")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--json")
    p.set_defaults(func=cmd_loop)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"ledgerlens {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"ledgerlens {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
