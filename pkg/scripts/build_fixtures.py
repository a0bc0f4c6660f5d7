#!/usr/bin/env python3
"""Build the shipped fixture graphs and verify their headline properties.

Each *_like fixture is one synthetic training step: a forward chain, a
backward pass whose weight-gradient ops branch off the spine, and a
gradient-update swarm gated by a global-norm clip.  Swarm sizes above the
core count are what give hyper-thread sharing something to do; the LSTM
fixture deliberately never exceeds the core count so sharing never fires.

Run from the repository root:  python scripts/build_fixtures.py
"""

from __future__ import annotations

import sys
from pathlib import Path

SRC = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC))

from opsched import (  # noqa: E402
    CostCurve,
    DataflowGraph,
    MachineModel,
    OpKey,
    OpNode,
    StrategyConfig,
    optimal_width,
    serialize_graph,
    simulate,
)
from opsched.perf_model import tune_graph  # noqa: E402
from opsched.profiler import profiling_cost  # noqa: E402
from opsched.reporting import corun_stats  # noqa: E402

OUT = SRC / "opsched" / "fixtures"
MACHINE = MachineModel()


class Builder:
    def __init__(self):
        self.nodes: list[OpNode] = []
        self.edges: list[tuple[str, str]] = []

    def op(self, node_id: str, key: OpKey, curve: CostCurve, deps=()):
        self.nodes.append(OpNode(node_id, key, curve))
        for d in deps:
            self.edges.append((d, node_id))
        return node_id

    def graph(self) -> DataflowGraph:
        return DataflowGraph(self.nodes, self.edges)


def table3_pair() -> DataflowGraph:
    # Calibrated so T(68)=20.55 and T(34)=29.8 (a saturating op pair).
    curve = CostCurve(11.3, 629.0, 0.0)
    b = Builder()
    b.op("f", OpKey("Conv2DBackpropFilter", (32, 8, 8, 2048)), curve)
    b.op("i", OpKey("Conv2DBackpropInput", (32, 8, 8, 2048)), curve)
    return b.graph()


def resnet_like() -> DataflowGraph:
    k_stem = (OpKey("Conv2D", (64, 32, 32, 64)), CostCurve(0.8, 220.0, 0.012))
    k_conv_a = (OpKey("Conv2D", (64, 16, 16, 128)), CostCurve(2.0, 120.0, 0.17))
    k_conv_b = (OpKey("Conv2D", (64, 8, 8, 256)), CostCurve(1.5, 90.0, 0.05))
    k_bn = (OpKey("FusedBatchNorm", (64, 16, 16, 128)), CostCurve(0.3, 4.0, 0.012))
    k_add = (OpKey("AddN", (64, 16, 16, 128)), CostCurve(0.2, 2.5, 0.012))
    k_loss = (OpKey("SoftmaxCrossEntropy", (64, 1000)), CostCurve(0.5, 30.0, 0.03))
    k_bwd_in = (OpKey("Conv2DBackpropInput", (64, 16, 16, 128)), CostCurve(1.8, 130.0, 0.08))
    # Matches the profiled best width of 26 for this operation and size.
    k_bwd_flt = (OpKey("Conv2DBackpropFilter", (32, 8, 8, 384)), CostCurve(2.1, 67.6, 0.1))
    k_clip = (OpKey("GlobalNormClip", (256,)), CostCurve(0.3, 6.0, 0.01))
    k_upd = (OpKey("ApplyAdam", (4096,)), CostCurve(0.15, 0.6, 0.05))

    b = Builder()
    prev = b.op("stem", *k_stem)
    blocks = 8
    for i in range(1, blocks + 1):
        c1 = b.op(f"b{i}_conv1", *k_conv_a, deps=[prev])
        n1 = b.op(f"b{i}_bn1", *k_bn, deps=[c1])
        c2 = b.op(f"b{i}_conv2", *k_conv_b, deps=[n1])
        n2 = b.op(f"b{i}_bn2", *k_bn, deps=[c2])
        prev = b.op(f"b{i}_add", *k_add, deps=[n2, prev])
    loss = b.op("loss", *k_loss, deps=[prev])

    spine = loss
    grads = []
    for i in range(blocks, 0, -1):
        spine = b.op(f"g{i}_din", *k_bwd_in, deps=[spine])
        grads.append(b.op(f"g{i}_dflt", *k_bwd_flt, deps=[spine]))
    clip = b.op("grad_clip", *k_clip, deps=grads)
    for j in range(84):
        b.op(f"upd_{j:03d}", *k_upd, deps=[clip])
    return b.graph()


def dcgan_like() -> DataflowGraph:
    k_z = (OpKey("RandomUniform", (64, 100)), CostCurve(0.2, 1.5, 0.01))
    k_real = (OpKey("InputConversion", (64, 64, 64, 3)), CostCurve(0.6, 18.0, 0.04))
    k_deconv = (OpKey("Conv2DBackpropInput", (64, 16, 16, 128)), CostCurve(1.6, 140.0, 0.09))
    k_gbn = (OpKey("FusedBatchNorm", (64, 16, 16, 128)), CostCurve(0.25, 3.0, 0.01))
    k_dconv = (OpKey("Conv2D", (64, 32, 32, 64)), CostCurve(1.2, 110.0, 0.14))
    k_lrelu = (OpKey("LeakyRelu", (64, 32, 32, 64)), CostCurve(0.15, 1.8, 0.015))
    k_loss = (OpKey("SigmoidCrossEntropy", (64, 1)), CostCurve(0.3, 8.0, 0.02))
    k_dflt = (OpKey("Conv2DBackpropFilter", (64, 16, 16, 128)), CostCurve(1.9, 100.0, 0.12))
    k_din = (OpKey("Conv2DBackpropInput", (64, 32, 32, 64)), CostCurve(1.5, 95.0, 0.07))
    k_clip = (OpKey("GlobalNormClip", (128,)), CostCurve(0.25, 5.0, 0.01))
    k_upd = (OpKey("ApplyAdam", (2048,)), CostCurve(0.12, 0.5, 0.05))

    b = Builder()
    prev = b.op("z", *k_z)
    for i in range(1, 5):
        d = b.op(f"g{i}_deconv", *k_deconv, deps=[prev])
        prev = b.op(f"g{i}_bn", *k_gbn, deps=[d])
    fake = prev
    real = b.op("real_input", *k_real)

    def tower(tag: str, src: str) -> str:
        prev = src
        for i in range(1, 5):
            c = b.op(f"{tag}{i}_conv", *k_dconv, deps=[prev])
            prev = b.op(f"{tag}{i}_lrelu", *k_lrelu, deps=[c])
        return prev

    df = tower("df", fake)  # discriminator on generated batch
    dr = tower("dr", real)  # discriminator on real batch, co-runnable
    loss_f = b.op("loss_fake", *k_loss, deps=[df])
    loss_r = b.op("loss_real", *k_loss, deps=[dr])

    grads = []

    def backward(tag: str, src: str, depth: int) -> str:
        spine = src
        for i in range(depth, 0, -1):
            spine = b.op(f"{tag}{i}_din", *k_din, deps=[spine])
            grads.append(b.op(f"{tag}{i}_dflt", *k_dflt, deps=[spine]))
        return spine

    bf = backward("bf", loss_f, 4)
    backward("br", loss_r, 4)
    backward("bg", bf, 4)  # generator gradients flow from the fake tower
    clip = b.op("grad_clip", *k_clip, deps=grads)
    for j in range(76):
        b.op(f"upd_{j:03d}", *k_upd, deps=[clip])
    return b.graph()


def inception_like() -> DataflowGraph:
    k_stem = (OpKey("Conv2D", (32, 35, 35, 192)), CostCurve(1.0, 180.0, 0.02))
    k_c1 = (OpKey("Conv2D", (32, 17, 17, 192)), CostCurve(1.0, 60.0, 0.06))
    k_c3 = (OpKey("Conv2D", (32, 17, 17, 96)), CostCurve(1.8, 110.0, 0.11))
    k_c5 = (OpKey("Conv2D", (32, 17, 17, 64)), CostCurve(2.2, 130.0, 0.09))
    k_pool = (OpKey("AvgPool", (32, 17, 17, 192)), CostCurve(2.5, 140.0, 0.2))
    k_cat = (OpKey("ConcatV2", (32, 17, 17, 480)), CostCurve(0.2, 2.0, 0.01))
    k_loss = (OpKey("SoftmaxCrossEntropy", (32, 1000)), CostCurve(0.4, 20.0, 0.03))
    k_din = (OpKey("Conv2DBackpropInput", (32, 17, 17, 480)), CostCurve(1.7, 120.0, 0.07))
    k_dflt = (OpKey("Conv2DBackpropFilter", (32, 17, 17, 384)), CostCurve(1.9, 105.0, 0.06))
    k_tile = (OpKey("Tile", (32, 17, 17, 192)), CostCurve(1.2, 55.0, 0.13))
    k_clip = (OpKey("GlobalNormClip", (192,)), CostCurve(0.3, 5.5, 0.01))
    k_upd = (OpKey("ApplyAdam", (3072,)), CostCurve(0.13, 0.55, 0.05))

    b = Builder()
    prev = b.op("stem", *k_stem)
    modules = 5
    for m in range(1, modules + 1):
        b0 = b.op(f"m{m}_b0_c1", *k_c1, deps=[prev])
        b1a = b.op(f"m{m}_b1_c1", *k_c1, deps=[prev])
        b1b = b.op(f"m{m}_b1_c3", *k_c3, deps=[b1a])
        b2a = b.op(f"m{m}_b2_c1", *k_c1, deps=[prev])
        b2b = b.op(f"m{m}_b2_c5", *k_c5, deps=[b2a])
        b3a = b.op(f"m{m}_b3_pool", *k_pool, deps=[prev])
        b3b = b.op(f"m{m}_b3_c1", *k_c1, deps=[b3a])
        prev = b.op(f"m{m}_concat", *k_cat, deps=[b0, b1b, b2b, b3b])
    loss = b.op("loss", *k_loss, deps=[prev])

    spine = loss
    grads = []
    for m in range(modules, 0, -1):
        spine = b.op(f"g{m}_din", *k_din, deps=[spine])
        b.op(f"g{m}_tile", *k_tile, deps=[spine])
        for t in range(3):
            grads.append(b.op(f"g{m}_dflt{t}", *k_dflt, deps=[spine]))
    clip = b.op("grad_clip", *k_clip, deps=grads)
    for j in range(80):
        b.op(f"upd_{j:03d}", *k_upd, deps=[clip])
    return b.graph()


def lstm_like() -> DataflowGraph:
    # No dispatch instant ever has more ready ops than cores, so
    # hyper-thread sharing never fires on this fixture.
    k_mmx = (OpKey("MatMul", (20, 200, 800)), CostCurve(0.5, 14.0, 0.03))
    k_mmh = (OpKey("MatMul", (200, 800)), CostCurve(0.5, 13.0, 0.03))
    k_bias = (OpKey("BiasAdd", (20, 800)), CostCurve(0.08, 0.6, 0.01))
    k_sig = (OpKey("Sigmoid", (20, 600)), CostCurve(0.06, 0.5, 0.012))
    k_tanh = (OpKey("Tanh", (20, 200)), CostCurve(0.05, 0.4, 0.012))
    k_mul = (OpKey("Mul", (20, 200)), CostCurve(0.05, 0.35, 0.01))
    k_addn = (OpKey("AddN", (20, 200)), CostCurve(0.06, 0.4, 0.01))
    k_loss = (OpKey("SparseSoftmaxCross", (20, 10000)), CostCurve(0.8, 11.0, 0.025))
    k_bwd = (OpKey("MatMul", (800, 200)), CostCurve(0.45, 12.0, 0.03))
    k_dwx = (OpKey("Conv2DBackpropFilter", (20, 200, 800)), CostCurve(0.5, 13.5, 0.035))
    k_dwh = (OpKey("Conv2DBackpropFilter", (200, 800)), CostCurve(0.45, 12.5, 0.035))
    k_acc = (OpKey("AddN", (200, 800)), CostCurve(0.1, 1.0, 0.01))
    k_clip = (OpKey("GlobalNormClip", (64,)), CostCurve(0.15, 2.0, 0.01))
    k_upd = (OpKey("ApplyAdam", (1024,)), CostCurve(0.1, 0.45, 0.04))

    b = Builder()
    steps = 10
    h_prev = None
    fwd_tail = []
    for t in range(1, steps + 1):
        mmx = b.op(f"t{t:02d}_mmx", *k_mmx)
        mmh_deps = [h_prev] if h_prev else []
        mmh = b.op(f"t{t:02d}_mmh", *k_mmh, deps=mmh_deps)
        bias = b.op(f"t{t:02d}_bias", *k_bias, deps=[mmx, mmh])
        sig = b.op(f"t{t:02d}_gates", *k_sig, deps=[bias])
        tnh = b.op(f"t{t:02d}_cand", *k_tanh, deps=[bias])
        cell = b.op(f"t{t:02d}_cell", *k_addn, deps=[sig, tnh])
        h_prev = b.op(f"t{t:02d}_hout", *k_mul, deps=[cell])
        fwd_tail.append(h_prev)
    loss = b.op("loss", *k_loss, deps=[h_prev])

    spine = loss
    dwx_all, dwh_all = [], []
    for t in range(steps, 0, -1):
        spine = b.op(f"g{t:02d}_dh", *k_bwd, deps=[spine])
        dwx_all.append(b.op(f"g{t:02d}_dwx", *k_dwx, deps=[spine]))
        dwh_all.append(b.op(f"g{t:02d}_dwh", *k_dwh, deps=[spine]))
    acc_x = b.op("acc_dwx", *k_acc, deps=dwx_all)
    acc_h = b.op("acc_dwh", *k_acc, deps=dwh_all)
    clip = b.op("grad_clip", *k_clip, deps=[acc_x, acc_h])
    for j in range(12):
        b.op(f"upd_{j:02d}", *k_upd, deps=[clip])
    return b.graph()


FIXTURES = {
    "table3_pair": table3_pair,
    "resnet_like": resnet_like,
    "dcgan_like": dcgan_like,
    "inception_like": inception_like,
    "lstm_like": lstm_like,
}

ABLATION = ("baseline", "s1s2", "s1s2s3", "s1s2s3s4")


def ablation_config(step: str) -> StrategyConfig:
    if step == "baseline":
        return StrategyConfig.baseline(inter=1, intra=None)
    return StrategyConfig(
        s1_change_penalty=True,
        s2_per_op_width=True,
        s3_corun=step in ("s1s2s3", "s1s2s3s4"),
        s4_hyperthread=step == "s1s2s3s4",
    )


def check(name: str, graph: DataflowGraph) -> None:
    print(f"== {name}: {len(graph.nodes)} ops, {len(graph.edges)} edges")
    tuned = tune_graph(graph, MACHINE)
    for key in graph.distinct_keys():
        t = tuned[key]
        brute = optimal_width(
            [n.cost for n in graph.nodes.values() if n.key == key][0], MACHINE.physical_cores
        )
        mark = "" if t.width == brute else f"  (brute {brute})"
        print(f"   {key.label():48s} width {t.width:3d}{mark}")
    if name == "table3_pair":
        return
    spans = {}
    means = {}
    for step in ABLATION:
        trace = simulate(graph, MACHINE, tuned=tuned, config=ablation_config(step))
        spans[step] = trace.makespan
        means[step] = corun_stats(trace)[1]
        print(f"   {step:10s} makespan {trace.makespan:10.3f}  corun_mean {means[step]:.3f}")
    improvement = 1 - spans["s1s2s3s4"] / spans["baseline"]
    print(f"   end-to-end improvement {improvement:.1%}")
    ok = spans["baseline"] >= spans["s1s2"] >= spans["s1s2s3"] >= spans["s1s2s3s4"]
    print(f"   monotone: {ok}")
    if name == "lstm_like":
        print(f"   s4 contribution: {spans['s1s2s3'] - spans['s1s2s3s4']:.6f}")
    else:
        print(f"   corun s4 gain: {means['s1s2s3s4'] - means['s1s2s3']:.3f}")
    if name == "resnet_like":
        cost = profiling_cost(
            [t.history for t in tuned.values()], 10_000, spans["baseline"]
        )
        print(f"   profiling cost over 10k steps: {cost:.6f}")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in FIXTURES.items():
        graph = build()
        check(name, graph)
        (OUT / f"{name}.json").write_text(serialize_graph(graph), "utf-8")
        print(f"   wrote {OUT / (name + '.json')}")


if __name__ == "__main__":
    main()
