"""Dataflow graphs of operations: representation, validation, file format,
readiness computation, and synthetic generation.

An operation is keyed by (type, input-size signature); instances with the
same key share one cost curve, which is why tuning happens once per key.
Node iteration order is lexicographic by id everywhere, so every downstream
tie-break is deterministic.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .cost import CostCurve
from .errors import ConsistencyError, GraphParseError, GraphValidationError

PATTERNS = ("chain", "fork_join", "resnet_block", "inception_block", "random_dag")


@dataclass(frozen=True)
class OpKey:
    """Tuning key of an operation: type name plus input-size signature."""

    op_type: str
    signature: tuple[int, ...]

    def __post_init__(self):
        if not self.op_type:
            raise ValueError("op_type must be non-empty")
        sig = tuple(int(d) for d in self.signature)
        object.__setattr__(self, "signature", sig)
        if not sig or any(d < 1 for d in sig):
            raise ValueError(f"signature must be non-empty positive ints, got {sig}")

    @property
    def work(self) -> int:
        """Product of signature dims; the work proxy used by regression."""
        return math.prod(self.signature)

    def label(self) -> str:
        return f"{self.op_type}[{','.join(map(str, self.signature))}]"


@dataclass(frozen=True)
class OpNode:
    id: str
    key: OpKey
    cost: CostCurve

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be non-empty")


class DataflowGraph:
    """Validated DAG of operations.

    Construction rejects duplicate ids, dangling or duplicate edges,
    self-edges, and cycles; errors name the offending element.
    """

    def __init__(self, nodes, edges):
        by_id: dict[str, OpNode] = {}
        for node in nodes:
            if node.id in by_id:
                raise GraphValidationError(f"duplicate op id {node.id!r}")
            by_id[node.id] = node
        edge_set = set()
        for prod, cons in edges:
            if prod == cons:
                raise GraphValidationError(f"self-edge on {prod!r}")
            for end in (prod, cons):
                if end not in by_id:
                    raise GraphValidationError(f"edge endpoint {end!r} is not an op")
            if (prod, cons) in edge_set:
                raise GraphValidationError(f"duplicate edge {prod!r} -> {cons!r}")
            edge_set.add((prod, cons))

        self.nodes: dict[str, OpNode] = {i: by_id[i] for i in sorted(by_id)}
        self.edges: tuple[tuple[str, str], ...] = tuple(sorted(edge_set))
        self.producers: dict[str, tuple[str, ...]] = {i: () for i in self.nodes}
        self.consumers: dict[str, tuple[str, ...]] = {i: () for i in self.nodes}
        prod_acc: dict[str, list[str]] = {i: [] for i in self.nodes}
        cons_acc: dict[str, list[str]] = {i: [] for i in self.nodes}
        for prod, cons in self.edges:
            prod_acc[cons].append(prod)
            cons_acc[prod].append(cons)
        for i in self.nodes:
            self.producers[i] = tuple(sorted(prod_acc[i]))
            self.consumers[i] = tuple(sorted(cons_acc[i]))
        self._check_acyclic()

    def _check_acyclic(self):
        indegree = {i: len(self.producers[i]) for i in self.nodes}
        queue = sorted(i for i, d in indegree.items() if d == 0)
        seen = 0
        while queue:
            nxt = queue.pop(0)
            seen += 1
            for cons in self.consumers[nxt]:
                indegree[cons] -= 1
                if indegree[cons] == 0:
                    queue.append(cons)
        if seen != len(self.nodes):
            cyclic = sorted(i for i, d in indegree.items() if d > 0)
            raise GraphValidationError(f"cycle among ops {{{', '.join(cyclic)}}}")

    @property
    def node_ids(self) -> list[str]:
        return list(self.nodes)

    def distinct_keys(self) -> list[OpKey]:
        return sorted(
            {n.key for n in self.nodes.values()},
            key=lambda k: (k.op_type, k.signature),
        )

    def __eq__(self, other):
        if not isinstance(other, DataflowGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return f"DataflowGraph({len(self.nodes)} ops, {len(self.edges)} edges)"


def ready_set(graph: DataflowGraph, completed: set[str]) -> set[str]:
    """Ops whose producers are all completed and which are not completed.

    ``completed`` must be dependency-closed: nothing may be marked complete
    before all of its producers.
    """
    unknown = completed - graph.nodes.keys()
    if unknown:
        raise ConsistencyError(f"completed contains unknown ops {sorted(unknown)}")
    for op_id in sorted(completed):
        missing = [p for p in graph.producers[op_id] if p not in completed]
        if missing:
            raise ConsistencyError(
                f"completed set is not dependency-closed: {op_id!r} completed "
                f"before its producer {missing[0]!r}"
            )
    return {
        op_id
        for op_id in graph.nodes
        if op_id not in completed
        and all(p in completed for p in graph.producers[op_id])
    }


# -- file format --------------------------------------------------------------
#
# {"ops": [{"id": str, "type": str, "signature": [int, ...],
#           "cost": {"t_s": float, "t_w": float, "c": float}}, ...],
#  "edges": [["prod", "cons"], ...]}

def graph_to_dict(graph: DataflowGraph) -> dict:
    return {
        "ops": [
            {
                "id": n.id,
                "type": n.key.op_type,
                "signature": list(n.key.signature),
                "cost": {"t_s": n.cost.t_s, "t_w": n.cost.t_w, "c": n.cost.c},
            }
            for n in graph.nodes.values()
        ],
        "edges": [[u, v] for u, v in graph.edges],
    }


def serialize_graph(graph: DataflowGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


def graph_from_dict(doc: dict) -> DataflowGraph:
    try:
        ops = doc["ops"]
        edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise GraphParseError(f"graph document missing field: {exc}") from None
    nodes = []
    for entry in ops:
        try:
            node = OpNode(
                id=entry["id"],
                key=OpKey(entry["type"], tuple(entry["signature"])),
                cost=CostCurve(
                    entry["cost"]["t_s"], entry["cost"]["t_w"], entry["cost"]["c"]
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphParseError(f"bad op entry {entry!r}: {exc}") from None
        nodes.append(node)
    return DataflowGraph(nodes, [tuple(e) for e in edges])


def parse_graph(text: str) -> DataflowGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return graph_from_dict(doc)


# -- synthetic generation ------------------------------------------------------

@dataclass(frozen=True)
class OpMixEntry:
    """One weighted archetype in a generator op mix.

    Curve parameters are sampled uniformly from the given (min, max) ranges,
    once per distinct key, so duplicate keys share a curve.
    """

    op_type: str
    signature: tuple[int, ...]
    weight: float
    t_s_range: tuple[float, float]
    t_w_range: tuple[float, float]
    c_range: tuple[float, float]

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"op-mix weight must be > 0, got {self.weight}")
        for name in ("t_s_range", "t_w_range", "c_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is degenerate: min {lo} > max {hi}")


DEFAULT_OP_MIX = (
    OpMixEntry("Conv2D", (32, 16, 16, 128), 3.0, (0.5, 2.5), (40.0, 200.0), (0.02, 0.3)),
    OpMixEntry("MatMul", (256, 256), 2.0, (0.2, 1.0), (10.0, 80.0), (0.01, 0.15)),
    OpMixEntry("FusedBatchNorm", (32, 16, 16, 128), 2.0, (0.1, 0.5), (1.0, 8.0), (0.005, 0.05)),
    OpMixEntry("AddN", (32, 16, 16, 128), 1.0, (0.05, 0.3), (0.5, 5.0), (0.005, 0.05)),
)


@dataclass(frozen=True)
class GraphGenSpec:
    pattern: str
    depth: int
    fanout: int = 1
    op_mix: tuple[OpMixEntry, ...] = DEFAULT_OP_MIX
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(
                f"unknown pattern {self.pattern!r}; valid patterns: {', '.join(PATTERNS)}"
            )
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.fanout < 1:
            raise ValueError(f"fanout must be >= 1, got {self.fanout}")
        if not self.op_mix:
            raise ValueError("op_mix must be non-empty")


def _pattern_topology(spec: GraphGenSpec) -> tuple[int, list[tuple[int, int]]]:
    """Node count and edge list (by index) for the requested pattern."""
    d, f = spec.depth, spec.fanout
    edges = []
    if spec.pattern == "chain":
        count = d
        edges = [(i, i + 1) for i in range(d - 1)]
    elif spec.pattern == "fork_join":
        # d stacked stages; the sink of one stage is the source of the next.
        count = d * (f + 1) + 1
        src = 0
        nxt = 1
        for _ in range(d):
            mids = list(range(nxt, nxt + f))
            sink = nxt + f
            edges += [(src, m) for m in mids]
            edges += [(m, sink) for m in mids]
            src = sink
            nxt = sink + 1
    elif spec.pattern == "resnet_block":
        # stem, then d blocks of conv-bn-conv-bn-add with a skip edge.
        count = 1 + 5 * d
        block_in = 0
        nxt = 1
        for _ in range(d):
            conv1, bn1, conv2, bn2, add = range(nxt, nxt + 5)
            edges += [(block_in, conv1), (conv1, bn1), (bn1, conv2), (conv2, bn2)]
            edges += [(bn2, add), (block_in, add)]
            block_in = add
            nxt += 5
    elif spec.pattern == "inception_block":
        # d modules of f parallel branches (alternating lengths 1 and 2)
        # between a split node and a concat node.
        lengths = [1 + (b % 2) for b in range(f)]
        per_module = sum(lengths) + 1  # branch ops plus concat
        count = 1 + d * per_module
        module_in = 0
        nxt = 1
        for _ in range(d):
            concat = nxt + sum(lengths)
            for b in range(f):
                prev = module_in
                for _ in range(lengths[b]):
                    edges.append((prev, nxt))
                    prev = nxt
                    nxt += 1
                edges.append((prev, concat))
            module_in = concat
            nxt = concat + 1
    else:  # random_dag: d layers of f nodes, edges only to earlier layers
        rng = random.Random(spec.seed ^ 0x9E3779B97F4A7C15)
        count = d * f
        for layer in range(1, d):
            lo = max(0, (layer - 2) * f)
            hi = layer * f
            for j in range(f):
                node = layer * f + j
                for prod in sorted(rng.sample(range(lo, hi), k=min(rng.randint(1, 3), hi - lo))):
                    edges.append((prod, node))
    return count, edges


def generate_synthetic(spec: GraphGenSpec) -> DataflowGraph:
    """Deterministic synthetic graph for the given spec and seed."""
    count, idx_edges = _pattern_topology(spec)
    rng = random.Random(spec.seed)
    entries = list(spec.op_mix)
    weights = [e.weight for e in entries]
    curve_by_key: dict[OpKey, CostCurve] = {}
    nodes = []
    pad = max(4, len(str(count - 1)))
    for i in range(count):
        entry = rng.choices(entries, weights=weights, k=1)[0]
        key = OpKey(entry.op_type, entry.signature)
        if key not in curve_by_key:
            curve_by_key[key] = CostCurve(
                t_s=rng.uniform(*entry.t_s_range),
                t_w=rng.uniform(*entry.t_w_range),
                c=rng.uniform(*entry.c_range),
            )
        nodes.append(OpNode(id=f"n{i:0{pad}d}", key=key, cost=curve_by_key[key]))
    edges = [(nodes[u].id, nodes[v].id) for u, v in idx_edges]
    return DataflowGraph(nodes, edges)
