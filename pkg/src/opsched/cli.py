"""Command-line front-end.

Subcommands wire the pipeline end to end: ``gen`` writes graph files,
``tune`` picks per-key widths (its evaluations are the profile), ``profile``
samples explicit width lists for noise experiments, ``schedule`` runs the
simulator and writes trace/report files, and ``compare`` tabulates traces
or runs a strategy sweep.

Exit codes: 0 success, 2 usage or configuration error, 1 internal error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import re
import sys
from pathlib import Path

from . import fixtures as fixture_store
from .errors import OpschedError
from .graph import (
    PATTERNS,
    GraphGenSpec,
    generate_synthetic,
    parse_graph,
    serialize_graph,
)
from .machine import MachineModel, parse_machine
from .perf_model import (
    TunerConfig,
    curves_by_key,
    tune_graph,
    tuned_from_json,
    tuned_to_json,
)
from .profiler import histories_to_json, profile_op
from .reporting import (
    build_report,
    comparison_json,
    comparison_text,
    compare,
    export_chrome_trace,
)
from .scheduler import (
    ScheduleTrace,
    StrategyConfig,
    simulate,
    trace_from_json,
    trace_to_json,
)

log = logging.getLogger("opsched")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("LOG_LEVEL", "warn").lower()
    if level not in _LOG_LEVELS:
        level = "warn"
    logging.basicConfig(level=_LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


def _read(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as exc:
        raise OpschedError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")


def _load_machine(path: str | None) -> MachineModel:
    if path is None:
        return MachineModel()
    return parse_machine(_read(path))


def _parse_baseline(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m:
        raise OpschedError(f"--baseline must look like INTERxINTRA (e.g. 1x68), got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _strategy_from_args(args, machine: MachineModel) -> StrategyConfig:
    if args.strategy_config:
        return StrategyConfig.from_dict(json.loads(_read(args.strategy_config)))
    if args.baseline:
        inter, intra = _parse_baseline(args.baseline)
        if inter * intra > machine.total_hw_threads:
            raise OpschedError(
                f"--baseline {args.baseline} exceeds {machine.total_hw_threads} hardware threads"
            )
        return StrategyConfig.baseline(inter=inter, intra=intra)
    if args.all_strategies:
        return StrategyConfig.all_strategies(delta=args.delta, eta=args.eta)
    return StrategyConfig(
        s1_change_penalty=args.s1,
        s1_delta=args.delta,
        s2_per_op_width=args.s2,
        s3_corun=args.s3,
        s4_hyperthread=args.s4,
        uniform_intra=args.intra,
        uniform_inter=args.inter,
        eta=args.eta,
    )


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.fixture:
        text = fixture_store.fixture_text(args.fixture)
        graph = parse_graph(text)
    else:
        spec = GraphGenSpec(
            pattern=args.pattern, depth=args.depth, fanout=args.fanout, seed=args.seed
        )
        graph = generate_synthetic(spec)
        text = serialize_graph(graph)
    _write(Path(args.output), text)
    print(f"wrote {args.output}: {len(graph.nodes)} ops, {len(graph.edges)} edges")
    return 0


def cmd_tune(args) -> int:
    graph = parse_graph(_read(args.graph))
    machine = _load_machine(args.machine)
    config = TunerConfig(
        max_width=machine.physical_cores,
        max_evals=args.max_evals,
        min_step=args.min_step,
    )
    tuned = tune_graph(
        graph, machine, config,
        repeats=args.repeats, noise_sigma=args.noise_sigma, seed=args.seed,
    )
    _write(Path(args.output), tuned_to_json(tuned))
    if args.profile_out:
        _write(Path(args.profile_out), histories_to_json([t.history for t in tuned.values()]))
    for key in sorted(tuned, key=lambda k: (k.op_type, k.signature)):
        t = tuned[key]
        print(
            f"{key.label()}: width {t.width}, predicted {t.predicted_ms:.4f} ms, "
            f"{len(t.history.samples)} evaluations"
        )
    print(f"wrote {args.output}: {len(tuned)} op keys")
    return 0


def cmd_profile(args) -> int:
    graph = parse_graph(_read(args.graph))
    widths = sorted({int(w) for w in args.widths.split(",")})
    curves = curves_by_key(graph)
    histories = [
        profile_op(key, curves[key], widths, args.repeats, args.noise_sigma, args.seed)
        for key in graph.distinct_keys()
    ]
    _write(Path(args.output), histories_to_json(histories))
    print(f"wrote {args.output}: {len(histories)} op keys x {len(widths)} widths")
    return 0


def cmd_schedule(args) -> int:
    graph = parse_graph(_read(args.graph))
    machine = _load_machine(args.machine)
    config = _strategy_from_args(args, machine)
    tuned = None
    if config.s2_per_op_width:
        if not args.tuned:
            raise OpschedError(
                "per-op widths (--s2/--all-strategies) need a tuned-width table; "
                "run `opsched tune` and pass --tuned"
            )
        tuned = tuned_from_json(_read(args.tuned))
    trace = simulate(graph, machine, tuned=tuned, config=config)

    out = Path(args.out_dir)
    _write(out / "trace.json", trace_to_json(trace))
    _write(out / "trace.chrome.json", export_chrome_trace(trace) + "\n")
    report = build_report(trace, events_window=args.events_window)
    _write(out / "report.json", json.dumps(report.to_dict(), indent=2) + "\n")
    print(
        f"makespan {trace.makespan:.4f} ms, utilization {report.utilization:.3f}, "
        f"corun mean {report.corun_mean:.3f} -> {out}"
    )
    return 0


_SWEEP_STEPS = ("baseline", "s1s2", "s1s2s3", "s1s2s3s4")


def _sweep_config(step: str, inter: int, intra: int | None, delta: float, eta: float) -> StrategyConfig:
    if step == "baseline":
        return StrategyConfig.baseline(inter=inter, intra=intra)
    flags = {
        "s1s2": (True, True, False, False),
        "s1s2s3": (True, True, True, False),
        "s1s2s3s4": (True, True, True, True),
    }[step]
    return StrategyConfig(
        s1_change_penalty=flags[0],
        s1_delta=delta,
        s2_per_op_width=flags[1],
        s3_corun=flags[2],
        s4_hyperthread=flags[3],
        eta=eta,
    )


def _run_sweep_step(step, graph_text, machine, tuned, delta, eta, inter, intra):
    graph = parse_graph(graph_text)
    config = _sweep_config(step, inter, intra, delta, eta)
    return step, simulate(graph, machine, tuned=tuned, config=config)


def cmd_compare(args) -> int:
    named: list[tuple[str, ScheduleTrace]]
    if args.sweep:
        if not args.graph:
            raise OpschedError("--sweep needs --graph")
        graph_text = _read(args.graph)
        machine = _load_machine(args.machine)
        tuned = tuned_from_json(_read(args.tuned)) if args.tuned else None
        if tuned is None:
            raise OpschedError("--sweep needs --tuned (strategy steps use per-op widths)")
        inter, intra = _parse_baseline(args.baseline) if args.baseline else (1, None)
        steps = list(_SWEEP_STEPS)
        results = {}
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            futures = [
                pool.submit(
                    _run_sweep_step, step, graph_text, machine, tuned,
                    args.delta, args.eta, inter, intra,
                )
                for step in steps
            ]
            for fut in futures:
                step, trace = fut.result()
                results[step] = trace
        named = [(step, results[step]) for step in steps]
        if args.out_dir:
            out = Path(args.out_dir)
            for step, trace in named:
                _write(out / f"trace_{step}.json", trace_to_json(trace))
    else:
        if len(args.traces) < 2:
            raise OpschedError("compare needs at least two trace files (or --sweep)")
        named = [(Path(p).stem, trace_from_json(_read(p))) for p in args.traces]

    rows = compare(named)
    sys.stdout.write(comparison_text(rows))
    if args.json_out:
        _write(Path(args.json_out), comparison_json(rows))
    return 0


def cmd_export(args) -> int:
    trace = trace_from_json(_read(args.trace))
    text = export_chrome_trace(trace) + "\n"
    if args.output:
        _write(Path(args.output), text)
        print(f"wrote {args.output}: {len(trace.events)} events")
    else:
        sys.stdout.write(text)
    return 0


# -- argument parsing --------------------------------------------------------------

def _add_strategy_flags(p: argparse.ArgumentParser):
    p.add_argument("--s1", action="store_true", help="charge width-change penalty")
    p.add_argument("--s2", action="store_true", help="use tuned per-op widths")
    p.add_argument("--s3", action="store_true", help="co-run ready ops on disjoint cores")
    p.add_argument("--s4", action="store_true", help="allow hyper-thread slot sharing")
    p.add_argument("--all-strategies", action="store_true", help="enable s1-s4")
    p.add_argument("--baseline", metavar="IxP", help="uniform inter x intra config (e.g. 1x68)")
    p.add_argument("--delta", type=float, default=0.1, help="width-change penalty in ms")
    p.add_argument("--eta", type=float, default=0.515, help="shared-slot throughput fraction")
    p.add_argument("--inter", type=int, default=1, help="uniform inter-op parallelism")
    p.add_argument("--intra", type=int, default=None, help="uniform intra-op width (default: all cores)")
    p.add_argument("--strategy-config", help="JSON strategy config file (overrides flags)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsched",
        description="Moldable-operation scheduling engine on a simulated manycore machine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic graph file")
    p.add_argument("--pattern", choices=PATTERNS, help="topology pattern")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--fanout", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixture", choices=fixture_store.FIXTURES, help="write a shipped fixture instead")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("tune", help="pick per-key widths by hill climbing")
    p.add_argument("--graph", required=True)
    p.add_argument("--machine")
    p.add_argument("--max-evals", type=int, default=16)
    p.add_argument("--min-step", type=int, default=1)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile-out", help="also write the evaluation history store")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("profile", help="sample op times at explicit widths")
    p.add_argument("--graph", required=True)
    p.add_argument("--widths", required=True, help="comma-separated width list")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("schedule", help="simulate one training step")
    p.add_argument("--graph", required=True)
    p.add_argument("--machine")
    p.add_argument("--tuned", help="tuned-width table from `opsched tune`")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--events-window", type=int, default=None, help="middle-N co-run series window")
    _add_strategy_flags(p)
    p.add_argument("-o", "--out-dir", default="out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("compare", help="tabulate traces or run a strategy sweep")
    p.add_argument("traces", nargs="*", help="trace JSON files")
    p.add_argument("--sweep", action="store_true", help="run baseline/s1s2/s3/s4 ablation")
    p.add_argument("--graph")
    p.add_argument("--machine")
    p.add_argument("--tuned")
    p.add_argument("--jobs", type=int, default=1, help="parallel simulations in --sweep")
    p.add_argument("--json-out", help="also write the table as JSON")
    p.add_argument("-o", "--out-dir", help="write sweep traces here")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.515)
    p.add_argument("--baseline", metavar="IxP", help="sweep baseline config (default 1x<cores>)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="re-export a trace in Chrome trace format")
    p.add_argument("--trace", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OpschedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        log.error("internal error: %s", exc, exc_info=True)
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
