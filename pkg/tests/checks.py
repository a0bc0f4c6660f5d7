"""Trace safety checkers shared by the scheduler tests and the fuzz suite."""

from opsched import InterferenceContext, exec_time
from opsched.perf_model import curves_by_key
from opsched.scheduler import _demand_table

EPS = 1e-9


def check_exactly_once(trace, graph):
    ids = [e.op_id for e in trace.events]
    assert sorted(ids) == sorted(graph.nodes), "every op must execute exactly once"


def check_dependency_safety(trace, graph):
    by_id = {e.op_id: e for e in trace.events}
    for prod, cons in graph.edges:
        assert by_id[prod].end <= by_id[cons].start + EPS, (
            f"{cons} started at {by_id[cons].start} before {prod} ended "
            f"at {by_id[prod].end}"
        )


def check_capacity(trace):
    machine = trace.machine
    cap = machine.max_corun_per_core if trace.strategy.s4_hyperthread else 1
    per_core = {}
    for e in trace.events:
        for core in e.cores:
            assert 0 <= core < machine.physical_cores
            per_core.setdefault(core, []).append((e.start, 1))
            per_core[core].append((e.end, -1))
    for core, deltas in per_core.items():
        # ends sort before starts at the same instant: a completing op frees
        # its slot for one dispatched at that instant
        deltas.sort(key=lambda d: (d[0], d[1]))
        occ = 0
        for _, delta in deltas:
            occ += delta
            assert 0 <= occ <= cap, f"core {core} holds {occ} ops (cap {cap})"


def check_durations(trace, graph):
    curves = curves_by_key(graph)
    for e in trace.events:
        ctx = InterferenceContext(shared=e.shared, eta=trace.strategy.eta)
        expect = exec_time(curves[graph.nodes[e.op_id].key], e.width, ctx)
        assert abs((e.end - e.start) - (expect + e.reconfig_penalty)) < EPS, e


def check_makespan(trace):
    starts = [e.start for e in trace.events]
    ends = [e.end for e in trace.events]
    assert abs(trace.makespan - (max(ends) - min(starts))) < EPS


def check_work_conservation(trace, graph, tuned=None):
    """No decision instant leaves a placeable ready op undispatched.

    An op counts as wrongly skipped when, after all completions and grants
    at the instant, there were still enough empty cores for its minimum
    grant and (with co-running off) the inter-op limit was not saturated.
    """
    config = trace.strategy
    machine = trace.machine
    demands = _demand_table(graph, machine, tuned, config)
    by_id = {e.op_id: e for e in trace.events}
    instants = sorted({e.start for e in trace.events} | {e.end for e in trace.events})
    for t in instants:
        live = [e for e in trace.events if e.start <= t < e.end]
        occupied = {c for e in live for c in e.cores}
        empty = machine.physical_cores - len(occupied)
        for op_id, node in graph.nodes.items():
            e = by_id[op_id]
            if e.start <= t:  # already dispatched (or done)
                continue
            if any(by_id[p].end > t + EPS for p in graph.producers[op_id]):
                continue  # not ready yet
            floor = min(config.min_useful_width, demands[node.key])
            if empty < floor:
                continue
            if not config.s3_corun and len(live) >= config.uniform_inter:
                continue
            raise AssertionError(
                f"work conservation violated at t={t}: {op_id} was ready with "
                f"{empty} empty cores and was not dispatched"
            )


def check_all(trace, graph, tuned=None):
    check_exactly_once(trace, graph)
    check_dependency_safety(trace, graph)
    check_capacity(trace)
    check_durations(trace, graph)
    check_makespan(trace)
    check_work_conservation(trace, graph, tuned)
