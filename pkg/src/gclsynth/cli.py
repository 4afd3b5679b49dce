"""Command line: gen, synth, analyze, validate, simulate and compare.

Every command exits 0 on success.  Failures print one JSON object on stderr
(``{"error": kind, "message": ...}``) and exit with the code listed in ``EXIT``.
Relative output paths are resolved against ``$GCLSYNTH_OUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import RateLatencyAnalyzer
from .baselines import COMPARISON_WARNING, Infeasible, Timeout, schedule_0gcl, schedule_fgcl, schedule_wnd
from .io import (ParseError, ValidationFailed, dumps, file_digest, load_instance,
                 load_schedule, save_instance, save_schedule, write_atomic)
from .model import AnalysisParams, Instance
from .proxy import QueueProxy
from .schedule import Schedule, gantt_rows, objective_omega
from .sim import NS_PER_US, ConfigError, SimConfig, simulate
from .synthesis import EmptyDomain, NoFeasibleSolutionFound, SearchParams, optimize
from .testgen import GenSpec, TopologyTooSmall, generate
from .validate import ALL_RULES, FRAME_RULES, validate_schedule

EXIT = {"ok": 0, "no-solution": 1, "usage": 2, "file-not-found": 3, "bad-input": 4, "invalid": 5}
METHODS = ("cpwo", "0gcl", "fgcl", "wnd")
OUT_ENV = "GCLSYNTH_OUT_DIR"


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUT_ENV)
    return p if p.is_absolute() or not base else Path(base) / p


def _table(rows: list[dict], columns: list[str]) -> str:
    def fmt(v):
        if v is None:
            return "N/A"
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)
    cells = [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _manifest(command: str, params: dict, inputs: dict[str, str]) -> dict:
    """Reproduction data; kept free of timestamps so artifacts stay byte-stable."""
    return {"command": command, "params": params, "tool": f"gclsynth {__version__}",
            "inputs": {k: file_digest(v) for k, v in sorted(inputs.items())}}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _analysis_params(args) -> AnalysisParams:
    return AnalysisParams(delta_precision_us=getattr(args, "delta", 0), backlog=getattr(args, "backlog", 1))


# -- synthesis shared by synth and compare ----------------------------------

def run_method(instance: Instance, method: str, args) -> dict:
    """Synthesize with one method; returns schedule, report and statistics."""
    analysis = _analysis_params(args)
    analyzer = RateLatencyAnalyzer(instance, analysis)
    t0 = time.monotonic()
    stats: dict = {}
    if method == "cpwo":
        params = SearchParams(time_budget=args.budget, max_iterations=args.max_iterations,
                              backlog=args.backlog, seed=args.seed, analysis=analysis)
        result = optimize(instance, params, analyzer)
        best = result.best
        schedule = best.schedule("cpwo")
        report = best.report
        stats = result.stats.as_dict()
        stats["incumbents"] = [{"iteration": s.iteration, "omega": str(s.omega)} for s in result.incumbents]
        calls = max(1, result.stats.analyzer_calls)
        stats["prune_rate"] = result.stats.pruned_timing / max(1, result.stats.pruned_timing + calls)
        stats["analyzer_pass_rate"] = result.stats.analyzer_schedulable / calls
    elif method == "wnd":
        res = schedule_wnd(instance, analyzer)
        schedule, report = res.schedule, res.report
        stats = {"analyzed": res.tried, "shapes": {str(p): [w.offset, w.length, w.period]
                                                   for p, w in sorted(res.shapes.items())}}
    else:
        fn = schedule_0gcl if method == "0gcl" else schedule_fgcl
        fs = fn(instance, args.delta, time_budget=args.budget)
        schedule = fs.to_schedule()
        report = fs.report()
        stats = {"nodes": fs.nodes, "unsynchronized_analysis_schedulable":
                 analyzer.analyze(schedule).all_schedulable}
    elapsed = time.monotonic() - t0
    return {"schedule": schedule, "report": report, "stats": stats, "runtime_s": elapsed}


_FAILURES = (NoFeasibleSolutionFound, Infeasible, Timeout, EmptyDomain)


# -- commands --------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GenSpec(args.topology, args.sw, args.es, args.flows, seed=args.seed, speed_mbps=args.speed,
                   priorities=tuple(args.priorities))
    inst = generate(spec)
    path = out_path(args.out)
    d = save_instance(inst, path)
    print(f"{inst.name}: {len(inst.flows)} flows, digest {d[:12]} -> {path}")
    return EXIT["ok"]


def cmd_synth(args) -> int:
    inst = load_instance(args.instance)
    if args.method in ("0gcl", "fgcl"):
        print(f"warning: {COMPARISON_WARNING}", file=sys.stderr)
    try:
        res = run_method(inst, args.method, args)
    except _FAILURES as exc:
        raise CliError("no-solution", f"{type(exc).__name__}: {exc}") from None
    params = {"method": args.method, "budget": args.budget, "backlog": args.backlog, "seed": args.seed,
              "max_iterations": args.max_iterations, "delta": args.delta}
    manifest = _manifest("synth", params, {"instance": args.instance})
    path = out_path(args.out)
    d = save_schedule(res["schedule"], path, inst, manifest)
    omega = objective_omega(res["schedule"])
    report = res["report"]
    print(f"{args.method}: omega={float(omega):.6f} mean_wcd={report.mean_wcd} "
          f"schedulable={report.all_schedulable} digest {d[:12]} -> {path}")
    if args.report:
        doc = {"manifest": manifest, "finished": _now(), "runtime_s": res["runtime_s"],
               "omega": str(omega), "omega_x1000": float(omega) * 1000, "mean_wcd_us": report.mean_wcd,
               "flows": report.rows(), "stats": res["stats"]}
        write_atomic(out_path(args.report), dumps(doc))
    return EXIT["ok"]


def cmd_analyze(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule)
    report = RateLatencyAnalyzer(inst, _analysis_params(args)).analyze(sched)
    rows = report.rows()
    if args.json:
        print(dumps({"flows": rows, "mean_wcd_us": report.mean_wcd, "schedulable": report.all_schedulable}), end="")
    else:
        print(_table(rows, ["flow", "wcd_us", "deadline_us", "slack_us", "schedulable"]))
    if args.proxy:
        proxy = QueueProxy(inst, args.backlog)
        prows = []
        for (link, q), wins in sorted(sched.windows.items()):
            if (link, q) not in proxy.sets or len(wins) != 1:
                continue
            chk = proxy.check((link, q), wins[0])
            prows.append({"port": f"{link[0]}->{link[1]}", "queue": q, "capacity": float(chk.capacity.total),
                          "demand": float(chk.demand.total), "feasible": chk.feasible})
        print(_table(prows, ["port", "queue", "capacity", "demand", "feasible"]))
    return EXIT["ok"] if report.all_schedulable else EXIT["invalid"]


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule)
    rules = FRAME_RULES if sched.method in ("0gcl", "fgcl") else ALL_RULES
    found = validate_schedule(sched, inst, rules)
    for f in found:
        print(f)
    print(f"{len(found)} finding(s) over rules {', '.join(rules)}")
    return EXIT["ok"] if not found else EXIT["invalid"]


def _sim_rows(inst: Instance, sched: Schedule, seeds: int, duration, synchronized: bool, trace_path=None):
    bounds = {fid: fd.wcd_us for fid, fd in RateLatencyAnalyzer(inst).analyze(sched).flows.items()}
    worst = {f.id: 0 for f in inst.flows}
    frames = {f.id: 0 for f in inst.flows}
    trace_rows = []
    phases = None
    if synchronized:
        offs = sched.meta.get("release_offsets_us")
        if not offs:
            raise CliError("bad-input", "schedule carries no release offsets for synchronized sources")
        phases = {fid: int(v) * NS_PER_US for fid, v in offs.items()}
        bounds = {fid: int(v) for fid, v in sched.meta.get("latency_us", {}).items()}
        seeds = 1
    for seed in range(seeds):
        res = simulate(inst, sched, SimConfig(seed=seed, phases_ns=phases, duration_us=duration,
                                              trace=trace_path is not None))
        if res.dropped or res.undelivered > len(inst.flows) * 2:
            print(f"warning: seed {seed}: {res.dropped} dropped, {res.undelivered} undelivered", file=sys.stderr)
        for fid, st in res.flows.items():
            worst[fid] = max(worst[fid], st.max_delay_ns)
            frames[fid] += st.frames
        if trace_path is not None:
            for rec in res.trace:
                for i, h in enumerate(rec.hops):
                    trace_rows.append({"seed": seed, "flow": rec.flow, "frame": rec.index, "hop": i,
                                       "link": f"{h.link[0]}->{h.link[1]}", "queue": h.queue,
                                       "enqueued_ns": h.enqueued_ns, "start_ns": h.start_ns, "end_ns": h.end_ns})
    rows = []
    for f in inst.flows:
        bound = bounds.get(f.id)
        sim_us = worst[f.id] / NS_PER_US
        rows.append({"flow": f.id, "frames": frames[f.id], "sim_max_us": sim_us, "bound_us": bound,
                     "deadline_us": f.deadline_us, "within_bound": bound is not None and sim_us <= bound})
    if trace_path is not None:
        write_atomic(trace_path, dumps(trace_rows))
    return rows


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule)
    rows = _sim_rows(inst, sched, args.seeds, args.duration, args.synchronized,
                     out_path(args.trace) if args.trace else None)
    if args.json:
        print(dumps(rows), end="")
    else:
        print(_table(rows, ["flow", "frames", "sim_max_us", "bound_us", "deadline_us", "within_bound"]))
    return EXIT["ok"]


def cmd_compare(args) -> int:
    out_dir = out_path(args.out_dir)
    table = []
    for path in args.instances:
        inst = load_instance(path)
        name = inst.name or Path(path).stem
        for method in args.methods:
            row = {"instance": name, "method": method}
            try:
                res = run_method(inst, method, args)
            except _FAILURES as exc:
                row.update({"omega_x1000": None, "mean_wcd_us": None, "runtime_s": None,
                            "schedulable": None, "status": f"N/A ({type(exc).__name__})"})
                table.append(row)
                continue
            sched, report = res["schedule"], res["report"]
            row.update({"omega_x1000": float(objective_omega(sched)) * 1000, "mean_wcd_us": report.mean_wcd,
                        "runtime_s": round(res["runtime_s"], 3), "schedulable": report.all_schedulable,
                        "status": "ok"})
            table.append(row)
            stem = f"{name}.{method}"
            save_schedule(sched, out_dir / f"{stem}.schedule.json", inst)
            write_atomic(out_dir / f"{stem}.gantt.json", dumps(gantt_rows(sched)))
            if method in ("cpwo", "wnd") and args.seeds > 0:
                rows = _sim_rows(inst, sched, args.seeds, None, False)
                write_atomic(out_dir / f"{stem}.delays.json", dumps(rows))
    write_atomic(out_dir / "compare.json", dumps({"rows": table, "finished": _now()}))
    print(_table(table, ["instance", "method", "omega_x1000", "mean_wcd_us", "runtime_s", "schedulable", "status"]))
    return EXIT["ok"]


# -- parser ----------------------------------------------------------------

def _synth_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--budget", type=float, default=60.0, help="time budget in seconds")
    p.add_argument("--backlog", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=150)
    p.add_argument("--delta", type=int, default=0, help="network precision in microseconds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gclsynth", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gclsynth {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--topology", required=True, choices=["srm", "mr", "mm", "st", "mt", "st1", "mt2"])
    p.add_argument("--sw", type=int, required=True)
    p.add_argument("--es", type=int, required=True)
    p.add_argument("--flows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speed", type=int, default=100, help="link speed in Mbps")
    p.add_argument("--priorities", type=int, nargs="+", default=[7, 6])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("synth", help="synthesize gate windows")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=METHODS, default="cpwo")
    _synth_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write Ω, per-flow delays and search statistics here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="worst-case delay bounds of a schedule")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--backlog", type=int, default=1)
    p.add_argument("--delta", type=int, default=0)
    p.add_argument("--proxy", action="store_true", help="also print capacity and demand per queue")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="audit a schedule's windows on a slot timeline")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="simulate a schedule with random end-system phases")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--duration", type=int, help="simulated time in microseconds (default two hyperperiods)")
    p.add_argument("--synchronized", action="store_true",
                   help="release frames at the offsets stored by a frame-level schedule")
    p.add_argument("--trace", help="write per-frame hop timestamps here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several methods on several instances")
    p.add_argument("--instances", nargs="+", required=True)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    _synth_options(p)
    p.add_argument("--seeds", type=int, default=10, help="simulation seeds for the delay table")
    p.add_argument("--out-dir", default="compare")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        kind, msg = exc.kind, str(exc)
    except FileNotFoundError as exc:
        kind, msg = "file-not-found", f"{exc.filename}: no such file"
    except (ParseError, ValidationFailed, ConfigError, TopologyTooSmall, ValueError) as exc:
        kind, msg = "bad-input", str(exc)
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return EXIT[kind]


if __name__ == "__main__":
    sys.exit(main())
