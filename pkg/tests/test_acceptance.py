"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured value once its assertions hold.

Expected fixture makespans were computed by the shipped oracle run
(scripts/build_fixtures.py) and are pinned here; tolerances are stated per
criterion.
"""

import hashlib
import random
import time

import pytest

from opsched import (
    CostCurve,
    GraphGenSpec,
    MachineModel,
    OpKey,
    StrategyConfig,
    accuracy,
    baseline_schedule,
    exec_time,
    generate_synthetic,
    hill_climb,
    optimal_width,
    predict,
    simulate,
)
from opsched.cli import main as cli_main
from opsched.fixtures import load_fixture
from opsched.perf_model import TunedWidth, TunerConfig, fit_regression, tune_graph, tune_key
from opsched.profiler import ProfileHistory, profiling_cost
from opsched.reporting import corun_stats

from checks import check_all

M68 = MachineModel()

# makespans of the shipped fixtures per ablation step, pinned from the
# oracle run; the ablation inequalities are asserted on the live values
PINNED = {
    "resnet_like": {
        "baseline": 652.0741176470582,
        "s1s2": 321.60133380018544,
        "s1s2s3": 234.60133380018644,
        "s1s2s3s4": 234.17512020795346,
    },
    "dcgan_like": {
        "baseline": 650.8408823529428,
        "s1s2": 335.5387224562978,
        "s1s2s3": 144.28795310597886,
        "s1s2s3s4": 143.93209550080087,
    },
    "inception_like": {
        "baseline": 811.1038235294077,
        "s1s2": 465.4415969261704,
        "s1s2s3": 161.79320167678776,
        "s1s2s3s4": 161.40245734021818,
    },
    "lstm_like": {
        "baseline": 218.76470588235267,
        "s1s2": 108.41972658920034,
        "s1s2s3": 53.379633699633736,
        "s1s2s3s4": 53.379633699633736,
    },
}

ABLATION_STEPS = ("baseline", "s1s2", "s1s2s3", "s1s2s3s4")


def ablation_config(step):
    if step == "baseline":
        return StrategyConfig.baseline(inter=1, intra=None)
    return StrategyConfig(
        s1_change_penalty=True,
        s2_per_op_width=True,
        s3_corun=step in ("s1s2s3", "s1s2s3s4"),
        s4_hyperthread=step == "s1s2s3s4",
    )


def random_curve(rng):
    return CostCurve(rng.uniform(0, 10), rng.uniform(10, 1000), rng.uniform(0.01, 2))


@pytest.fixture(scope="module")
def curve_suite():
    rng = random.Random(123)
    return [random_curve(rng) for _ in range(1000)]


@pytest.fixture(scope="module")
def tuned_suite(curve_suite):
    config = TunerConfig(max_width=68)
    key = OpKey("Op", (8,))
    results = []
    for curve in curve_suite:
        evals = 0

        def evaluate(width):
            nonlocal evals
            evals += 1
            return exec_time(curve, width)

        tuned = hill_climb(evaluate, config, key=key)
        results.append((curve, tuned, evals))
    return results


def test_criterion_1_table3_fixture():
    graph = load_fixture("table3_pair")
    curves = {n.key: n.cost for n in graph.nodes.values()}
    for curve in curves.values():
        assert exec_time(curve, 68) == pytest.approx(20.55, abs=1e-9)
        assert exec_time(curve, 34) == pytest.approx(29.8, abs=1e-9)

    serial = baseline_schedule(graph, M68, 1, 68)
    assert serial.makespan == pytest.approx(41.1, abs=1e-9)

    tuned = tune_graph(graph, M68)
    corun = simulate(
        graph, M68, tuned=tuned, config=StrategyConfig(s2_per_op_width=True, s3_corun=True)
    )
    assert corun.makespan == pytest.approx(29.8, abs=1e-9)
    speedup = serial.makespan / corun.makespan
    assert speedup == pytest.approx(1.38, abs=0.005)

    ht = simulate(
        graph,
        M68,
        config=StrategyConfig(s4_hyperthread=True, uniform_inter=2, uniform_intra=68, eta=0.515),
    )
    ht_speedup = serial.makespan / ht.makespan
    assert ht_speedup == pytest.approx(1.03, abs=0.01)
    print(
        f"\nACCEPTANCE 1 PASS: table3 serial {serial.makespan:.2f}, co-run {corun.makespan:.2f} "
        f"(speedup {speedup:.3f}), hyper-threaded speedup {ht_speedup:.3f}"
    )


def test_criterion_2_tuner_exactness(tuned_suite):
    exact = within_one = total_evals = 0
    for curve, tuned, evals in tuned_suite:
        best = optimal_width(curve, 68)
        exact += tuned.width == best
        within_one += abs(tuned.width - best) <= 1
        total_evals += evals
    n = len(tuned_suite)
    assert exact / n >= 0.95
    assert within_one == n
    assert total_evals / n <= 20
    print(
        f"\nACCEPTANCE 2 PASS: exact argmin on {exact / n:.1%} of {n} curves, "
        f"all within one step, mean {total_evals / n:.1f} evaluations"
    )


def test_criterion_3_predictor_accuracy(tuned_suite):
    held_candidates = (5, 10, 20, 40, 56)
    errors = []
    for curve, tuned, _ in tuned_suite:
        held = [w for w in held_candidates if w not in tuned.history.samples]
        if held:
            errors.append(accuracy(lambda w: predict(tuned.history, w), curve, held))
    mean_err = sum(errors) / len(errors)
    assert mean_err <= 0.05

    # heterogeneous op set: one global regression vs per-op histories
    rng = random.Random(77)
    keys_curves = [
        (
            OpKey("Conv2D", (32, 2 ** (i % 5 + 1), 8, 64)),
            CostCurve(rng.uniform(0, 10), rng.uniform(20, 500), rng.uniform(0.02, 1)),
        )
        for i in range(10)
    ]
    config = TunerConfig(max_width=68)
    tuned = {key: tune_key(key, curve, config) for key, curve in keys_curves}
    model = fit_regression([t.history for t in tuned.values()])
    hist_errs, reg_errs = [], []
    for key, curve in keys_curves:
        held = [w for w in held_candidates if w not in tuned[key].history.samples]
        hist_errs.append(accuracy(lambda w: predict(tuned[key].history, w), curve, held))
        reg_errs.append(accuracy(lambda w: model.predict(w, key.work), curve, held))
    hist_mean = sum(hist_errs) / len(hist_errs)
    reg_mean = sum(reg_errs) / len(reg_errs)
    assert hist_mean < reg_mean
    print(
        f"\nACCEPTANCE 3 PASS: held-out error {mean_err:.2%} (<= 5%); history predictor "
        f"{hist_mean:.2%} beats regression {reg_mean:.2%} on heterogeneous ops"
    )


def test_criterion_4_strategy_ablation_monotonicity():
    spans = {}
    for name, pins in PINNED.items():
        graph = load_fixture(name)
        tuned = tune_graph(graph, M68)
        spans[name] = {}
        for step in ABLATION_STEPS:
            trace = simulate(graph, M68, tuned=tuned, config=ablation_config(step))
            spans[name][step] = trace.makespan
            assert trace.makespan == pytest.approx(pins[step], rel=1e-9)
        s = spans[name]
        assert s["baseline"] >= s["s1s2"] >= s["s1s2s3"] >= s["s1s2s3s4"]
    improvement = 1 - spans["resnet_like"]["s1s2s3s4"] / spans["resnet_like"]["baseline"]
    assert improvement >= 0.20
    lstm_s4 = spans["lstm_like"]["s1s2s3"] - spans["lstm_like"]["s1s2s3s4"]
    assert lstm_s4 == pytest.approx(0.0, abs=1e-9)
    print(
        f"\nACCEPTANCE 4 PASS: monotone ablations on all fixtures; resnet_like end-to-end "
        f"improvement {improvement:.1%} (>= 20%); lstm_like S4 contribution {lstm_s4:.2e}"
    )


def test_criterion_5_corun_accounting():
    gains = {}
    for name in ("resnet_like", "dcgan_like", "inception_like"):
        graph = load_fixture(name)
        tuned = tune_graph(graph, M68)
        on = simulate(graph, M68, tuned=tuned, config=ablation_config("s1s2s3s4"))
        off = simulate(graph, M68, tuned=tuned, config=ablation_config("s1s2s3"))
        mean_on = corun_stats(on)[1]
        mean_off = corun_stats(off)[1]
        assert mean_on > mean_off, name
        gains[name] = (mean_off, mean_on)
    summary = ", ".join(f"{k} {a:.2f}->{b:.2f}" for k, (a, b) in gains.items())
    print(f"\nACCEPTANCE 5 PASS: hyper-threading raises co-run mean: {summary}")


def test_criterion_6_safety_fuzz():
    patterns = ("chain", "fork_join", "resnet_block", "inception_block", "random_dag")
    started = time.monotonic()
    trials = 10_000
    for trial in range(trials):
        rng = random.Random(trial * 7919 + 13)
        pattern = patterns[rng.randrange(len(patterns))]
        depth = rng.randint(1, 6) if pattern == "chain" else rng.randint(1, 3)
        graph = generate_synthetic(
            GraphGenSpec(pattern, depth=depth, fanout=rng.randint(1, 3), seed=trial)
        )
        cores = rng.randint(2, 12)
        hw_threads = rng.randint(2, 4)
        machine = MachineModel(cores, hw_threads, rng.randint(1, hw_threads))
        config = StrategyConfig(
            s1_change_penalty=rng.random() < 0.5,
            s1_delta=rng.choice([0.0, 0.1, 0.5]),
            s2_per_op_width=rng.random() < 0.5,
            s3_corun=rng.random() < 0.5,
            s4_hyperthread=rng.random() < 0.5,
            min_useful_width=rng.randint(1, 2),
            uniform_intra=rng.choice([None, rng.randint(1, cores)]),
            uniform_inter=rng.randint(1, 3),
            eta=rng.uniform(0.3, 1.0),
        )
        tuned = None
        if config.s2_per_op_width:
            tuned = {}
            for key in graph.distinct_keys():
                curve = next(n.cost for n in graph.nodes.values() if n.key == key)
                width = optimal_width(curve, cores)
                other = 1 if width != 1 else min(2, cores)
                samples = {width: exec_time(curve, width)}
                if other != width:
                    samples[other] = exec_time(curve, other)
                tuned[key] = TunedWidth(
                    key, width, samples[width], ProfileHistory(key, samples)
                )
        trace = simulate(graph, machine, tuned=tuned, config=config)
        check_all(trace, graph, tuned)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    print(f"\nACCEPTANCE 6 PASS: {trials} randomized simulations safe in {elapsed:.1f}s (< 60s)")


def test_criterion_7_cli_determinism(tmp_path):
    def run(argv):
        assert cli_main([str(a) for a in argv]) == 0

    def digest(root):
        return {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    hashes = []
    for attempt in ("one", "two"):
        root = tmp_path / attempt
        graph = root / "graph.json"
        run(["gen", "--pattern", "resnet_block", "--depth", "4", "--seed", "11", "-o", graph])
        fixture = root / "resnet.json"
        run(["gen", "--fixture", "resnet_like", "-o", fixture])
        tuned = root / "tuned.json"
        run(["tune", "--graph", fixture, "-o", tuned, "--profile-out", root / "profile.json"])
        run(["profile", "--graph", graph, "--widths", "1,4,16,64", "--repeats", "3",
             "--noise-sigma", "0.05", "--seed", "5", "-o", root / "store.json"])
        run(["schedule", "--graph", fixture, "--tuned", tuned, "--all-strategies",
             "--seed", "7", "-o", root / "sched"])
        run(["schedule", "--graph", fixture, "--baseline", "1x68", "-o", root / "base"])
        run(["compare", "--sweep", "--graph", fixture, "--tuned", tuned, "--jobs", "2",
             "--json-out", root / "compare.json", "-o", root / "sweep"])
        run(["export", "--trace", root / "sched" / "trace.json", "-o", root / "chrome.json"])
        hashes.append(digest(root))
    assert hashes[0] == hashes[1]
    print(f"\nACCEPTANCE 7 PASS: {len(hashes[0])} CLI output files byte-identical across reruns")


def test_criterion_8_profiling_overhead():
    graph = load_fixture("resnet_like")
    tuned = tune_graph(graph, M68)
    baseline = baseline_schedule(graph, M68, 1, 68)
    fraction = profiling_cost(
        [t.history for t in tuned.values()], total_steps=10_000,
        baseline_step_ms=baseline.makespan,
    )
    assert fraction < 0.0005
    print(
        f"\nACCEPTANCE 8 PASS: profiling cost {fraction:.6f} of a 10,000-step run (< 0.0005)"
    )
