"""Discrete-event execution of a dataflow graph on the machine model.

Dispatch happens at t=0 and at op-completion instants; nothing else changes
system state.  Each dispatch:

(a) orders ready ops by predicted solo time at their target width,
    descending (ties by id), so large ops claim dedicated cores first;
(b) gives every candidate a minimum grant from empty cores, then grows
    grants one core at a time toward the op whose predicted time drops the
    most per added core (water-filling), never past the op's target width;
(c) defers any op that cannot get its minimum from empty cores, unless
    hyper-thread sharing is enabled, in which case the op may run on spare
    slots of occupied cores at reduced throughput;
(d) with co-running disabled, instead grants at most ``uniform_inter``
    concurrent ops, each at its target width capped by free empty cores.

Granted widths are fixed for the op's lifetime (moldable, not malleable),
and a grant's duration is computed from the ground-truth cost curve at the
moment of the grant.  Strategy 1 charges a small reconfiguration penalty
when a dispatch lane's width differs from the previous width granted on
that lane, and prefers width-preserving grants on water-filling ties.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from typing import Callable

from .cost import CostCurve, InterferenceContext, exec_time
from .errors import ConfigError, OpschedError
from .graph import DataflowGraph, OpKey, ready_set, serialize_graph
from .machine import Allocation, AllocationState, MachineModel
from .perf_model import TunedWidth, curves_by_key, predict


@dataclass(frozen=True)
class StrategyConfig:
    """Which scheduling strategies are active, plus the baseline knobs.

    ``uniform_intra`` / ``uniform_inter`` drive scheduling when per-op
    widths / co-running are off; ``uniform_intra=None`` means "all physical
    cores" (the framework-guide recommendation).
    """

    s1_change_penalty: bool = False
    s1_delta: float = 0.1
    s2_per_op_width: bool = False
    s3_corun: bool = False
    s4_hyperthread: bool = False
    min_useful_width: int = 1
    uniform_intra: int | None = None
    uniform_inter: int = 1
    eta: float = 0.515

    def __post_init__(self):
        if self.s1_delta < 0:
            raise ValueError(f"s1_delta must be >= 0, got {self.s1_delta}")
        if self.min_useful_width < 1:
            raise ValueError(f"min_useful_width must be >= 1, got {self.min_useful_width}")
        if self.uniform_intra is not None and self.uniform_intra < 1:
            raise ValueError(f"uniform_intra must be >= 1, got {self.uniform_intra}")
        if self.uniform_inter < 1:
            raise ValueError(f"uniform_inter must be >= 1, got {self.uniform_inter}")
        if not (0 < self.eta <= 1):
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")

    @classmethod
    def all_strategies(cls, delta: float = 0.1, eta: float = 0.515) -> "StrategyConfig":
        return cls(
            s1_change_penalty=True,
            s1_delta=delta,
            s2_per_op_width=True,
            s3_corun=True,
            s4_hyperthread=True,
            eta=eta,
        )

    @classmethod
    def baseline(cls, inter: int, intra: int | None) -> "StrategyConfig":
        return cls(uniform_inter=inter, uniform_intra=intra)

    def to_dict(self) -> dict:
        return {
            "s1_change_penalty": self.s1_change_penalty,
            "s1_delta": self.s1_delta,
            "s2_per_op_width": self.s2_per_op_width,
            "s3_corun": self.s3_corun,
            "s4_hyperthread": self.s4_hyperthread,
            "min_useful_width": self.min_useful_width,
            "uniform_intra": self.uniform_intra,
            "uniform_inter": self.uniform_inter,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StrategyConfig":
        try:
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad strategy config: {exc}") from None


@dataclass(frozen=True)
class ScheduleEvent:
    op_id: str
    start: float
    end: float
    width: int
    cores: frozenset[int]
    shared: bool
    reconfig_penalty: float = 0.0


@dataclass(frozen=True)
class ScheduleTrace:
    events: tuple[ScheduleEvent, ...]
    makespan: float
    machine: MachineModel
    strategy: StrategyConfig
    decision_log: tuple[dict, ...]
    graph_fingerprint: str


@dataclass(frozen=True)
class ReadyTask:
    """Dispatch view of one ready op: its target width and a predictor."""

    op_id: str
    demand: int
    predict: Callable[[int], float]


@dataclass(frozen=True)
class Grant:
    op_id: str
    width: int
    allocation: Allocation
    lane: int
    strategy: str  # which dispatch path fired: corun / serial / ht-shared
    penalty: float


def graph_fingerprint(graph: DataflowGraph) -> str:
    return hashlib.blake2b(serialize_graph(graph).encode(), digest_size=8).hexdigest()


def dispatch_step(
    tasks: list[ReadyTask],
    state: AllocationState,
    config: StrategyConfig,
    running_count: int = 0,
    lane_widths: dict[int, int] | None = None,
) -> list[Grant]:
    """Decide and commit grants for one dispatch instant.

    Mutates ``state`` (allocations are applied) and ``lane_widths`` (the
    per-lane width memory used by the strategy-1 penalty).
    """
    if not tasks:
        return []
    lane_widths = lane_widths if lane_widths is not None else {}
    order = sorted(tasks, key=lambda t: (-t.predict(t.demand), t.op_id))

    # the inter-op limit caps concurrently *placed* ops; a candidate that
    # cannot be placed does not consume one of the open slots
    open_slots = None if config.s3_corun else max(0, config.uniform_inter - running_count)

    empty_left = state.empty_cores()
    widths: dict[str, int] = {}
    allocated: list[ReadyTask] = []
    overflow: list[ReadyTask] = []

    for task in order:
        if open_slots is not None and len(allocated) >= open_slots:
            break
        floor = min(config.min_useful_width, task.demand)
        if config.s3_corun:
            grant_w = floor
        else:
            grant_w = min(task.demand, empty_left)
        if grant_w >= floor and grant_w >= 1 and grant_w <= empty_left:
            widths[task.op_id] = grant_w
            allocated.append(task)
            empty_left -= grant_w
        else:
            overflow.append(task)

    if config.s3_corun and empty_left > 0:
        lane_of = {t.op_id: i for i, t in enumerate(allocated)}
        while empty_left > 0:
            best = None
            for pos, task in enumerate(allocated):
                w = widths[task.op_id]
                if w >= task.demand:
                    continue
                gain = task.predict(w) - task.predict(w + 1)
                keeps_width = (
                    config.s1_change_penalty
                    and lane_widths.get(lane_of[task.op_id]) == w + 1
                )
                # ties: prefer width-preserving grants (strategy 1), then
                # level the water toward the narrower op, then dispatch order
                rank = (-gain, 0 if keeps_width else 1, w, pos)
                if best is None or rank < best[0]:
                    best = (rank, task)
            if best is None:
                break
            widths[best[1].op_id] += 1
            empty_left -= 1

    grants: list[Grant] = []

    def commit(task: ReadyTask, width: int, allow_ht: bool, tag: str) -> None:
        alloc = state.allocate(task.op_id, width, allow_ht=allow_ht)
        if alloc is None:
            raise OpschedError(
                f"internal: planned grant for {task.op_id!r} failed to place"
            )
        lane = len(grants)
        penalty = 0.0
        if config.s1_change_penalty:
            prev = lane_widths.get(lane)
            if prev is not None and prev != width:
                penalty = config.s1_delta
        lane_widths[lane] = width
        grants.append(Grant(task.op_id, width, alloc, lane, tag, penalty))

    for task in allocated:
        commit(task, widths[task.op_id], False, "corun" if config.s3_corun else "serial")

    if config.s4_hyperthread:
        for task in overflow:
            if open_slots is not None and len(grants) >= open_slots:
                break
            placeable = state.placeable_width(allow_ht=True)
            width = min(task.demand, placeable)
            if width >= min(config.min_useful_width, task.demand) and width >= 1:
                commit(task, width, True, "ht-shared")

    return grants


def _demand_table(
    graph: DataflowGraph,
    machine: MachineModel,
    tuned: dict[OpKey, TunedWidth] | None,
    config: StrategyConfig,
) -> dict[OpKey, int]:
    demands = {}
    for key in graph.distinct_keys():
        if config.s2_per_op_width:
            entry = tuned.get(key) if tuned else None
            if entry is None:
                raise ConfigError(
                    f"per-op widths requested but no tuned width for {key.label()}"
                )
            width = entry.width
        else:
            width = config.uniform_intra or machine.physical_cores
        demands[key] = max(1, min(width, machine.physical_cores))
    return demands


def _predictor_table(
    graph: DataflowGraph,
    curves: dict[OpKey, CostCurve],
    tuned: dict[OpKey, TunedWidth] | None,
    config: StrategyConfig,
) -> dict[OpKey, Callable[[int], float]]:
    predictors = {}
    for key in graph.distinct_keys():
        entry = tuned.get(key) if (tuned and config.s2_per_op_width) else None
        if entry is not None and len(entry.history.samples) >= 2:
            history = entry.history
            predictors[key] = lambda w, history=history: predict(history, w)
        else:
            curve = curves[key]
            predictors[key] = lambda w, curve=curve: exec_time(curve, w)
    return predictors


def simulate(
    graph: DataflowGraph,
    machine: MachineModel,
    tuned: dict[OpKey, TunedWidth] | None = None,
    curves: dict[OpKey, CostCurve] | None = None,
    config: StrategyConfig | None = None,
) -> ScheduleTrace:
    """Run one training step; returns the placement trace.

    Deterministic: identical inputs produce identical traces.
    """
    config = config or StrategyConfig()
    curves = dict(curves) if curves else curves_by_key(graph)
    for key in graph.distinct_keys():
        if key not in curves:
            raise ConfigError(f"no cost curve for op key {key.label()}")
    demands = _demand_table(graph, machine, tuned, config)
    predictors = _predictor_table(graph, curves, tuned, config)

    state = AllocationState(machine)
    completed: set[str] = set()
    dispatched: set[str] = set()
    lane_widths: dict[int, int] = {}
    heap: list[tuple[float, str]] = []
    events: list[ScheduleEvent] = []
    log: list[dict] = []
    now = 0.0
    total = len(graph.nodes)

    while len(completed) < total:
        ready = sorted(ready_set(graph, completed) - dispatched)
        if ready:
            tasks = [
                ReadyTask(op_id, demands[graph.nodes[op_id].key], predictors[graph.nodes[op_id].key])
                for op_id in ready
            ]
            grants = dispatch_step(
                tasks, state, config, running_count=len(heap), lane_widths=lane_widths
            )
            for g in grants:
                key = graph.nodes[g.op_id].key
                ctx = InterferenceContext(shared=g.allocation.shared, eta=config.eta)
                duration = exec_time(curves[key], g.width, ctx)
                end = now + duration + g.penalty
                heapq.heappush(heap, (end, g.op_id))
                dispatched.add(g.op_id)
                events.append(
                    ScheduleEvent(
                        op_id=g.op_id,
                        start=now,
                        end=end,
                        width=g.width,
                        cores=g.allocation.cores,
                        shared=g.allocation.shared,
                        reconfig_penalty=g.penalty,
                    )
                )
                log.append(
                    {
                        "t": now,
                        "op": g.op_id,
                        "width": g.width,
                        "shared": g.allocation.shared,
                        "lane": g.lane,
                        "strategy": g.strategy,
                    }
                )
        if not heap:
            raise OpschedError(
                "internal: nothing running and nothing dispatchable before all "
                "ops completed"
            )
        now = heap[0][0]
        while heap and heap[0][0] == now:
            _, op_id = heapq.heappop(heap)
            state.release(op_id)
            completed.add(op_id)

    events.sort(key=lambda e: (e.start, e.op_id))
    makespan = max(e.end for e in events) - min(e.start for e in events)
    return ScheduleTrace(
        events=tuple(events),
        makespan=makespan,
        machine=machine,
        strategy=config,
        decision_log=tuple(log),
        graph_fingerprint=graph_fingerprint(graph),
    )


def baseline_schedule(
    graph: DataflowGraph,
    machine: MachineModel,
    inter: int,
    intra: int,
    curves: dict[OpKey, CostCurve] | None = None,
) -> ScheduleTrace:
    """Static uniform configuration: ``inter`` ops at ``intra`` threads each."""
    if inter < 1 or intra < 1:
        raise ConfigError(f"inter and intra must be >= 1, got {inter}x{intra}")
    if inter * intra > machine.total_hw_threads:
        raise ConfigError(
            f"{inter}x{intra} exceeds {machine.total_hw_threads} hardware threads"
        )
    config = StrategyConfig.baseline(inter=inter, intra=intra)
    return simulate(graph, machine, tuned=None, curves=curves, config=config)


# -- trace file ------------------------------------------------------------------

def trace_to_json(trace: ScheduleTrace) -> str:
    doc = {
        "makespan": trace.makespan,
        "graph_fingerprint": trace.graph_fingerprint,
        "machine": trace.machine.to_dict(),
        "strategy": trace.strategy.to_dict(),
        "events": [
            {
                "op_id": e.op_id,
                "start": e.start,
                "end": e.end,
                "width": e.width,
                "cores": sorted(e.cores),
                "shared": e.shared,
                "reconfig_penalty": e.reconfig_penalty,
            }
            for e in trace.events
        ],
        "decision_log": list(trace.decision_log),
    }
    return json.dumps(doc, indent=2) + "\n"


def trace_from_json(text: str) -> ScheduleTrace:
    try:
        doc = json.loads(text)
        events = tuple(
            ScheduleEvent(
                op_id=e["op_id"],
                start=float(e["start"]),
                end=float(e["end"]),
                width=int(e["width"]),
                cores=frozenset(e["cores"]),
                shared=bool(e["shared"]),
                reconfig_penalty=float(e.get("reconfig_penalty", 0.0)),
            )
            for e in doc["events"]
        )
        return ScheduleTrace(
            events=events,
            makespan=float(doc["makespan"]),
            machine=MachineModel(**doc["machine"]),
            strategy=StrategyConfig.from_dict(doc["strategy"]),
            decision_log=tuple(doc.get("decision_log", [])),
            graph_fingerprint=doc["graph_fingerprint"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad trace file: {exc}") from None
