import random
import subprocess
import sys

import pytest

from opsched._backend import BACKEND, load_backend

py = load_backend("python")
try:
    cy = load_backend("compiled")
except ImportError:
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def random_curves(n, seed):
    rng = random.Random(seed)
    for _ in range(n):
        yield rng.uniform(0, 10), rng.uniform(0.1, 1000), rng.uniform(0, 2)


@needs_compiled
def test_exec_time_bit_identical():
    rng = random.Random(41)
    for t_s, t_w, c in random_curves(5000, 41):
        width = rng.randint(1, 96)
        eta = rng.choice([1.0, 0.515, rng.uniform(0.05, 1.0)])
        assert py.exec_time(t_s, t_w, c, width, eta) == cy.exec_time(t_s, t_w, c, width, eta)


@needs_compiled
def test_best_width_identical():
    for t_s, t_w, c in random_curves(2000, 42):
        assert py.best_width(t_s, t_w, c, 68) == cy.best_width(t_s, t_w, c, 68)


@needs_compiled
def test_curve_times_identical():
    for t_s, t_w, c in random_curves(500, 43):
        assert py.curve_times(t_s, t_w, c, 1.0, 68) == cy.curve_times(t_s, t_w, c, 1.0, 68)
        assert py.curve_times(t_s, t_w, c, 0.515, 68) == cy.curve_times(t_s, t_w, c, 0.515, 68)


def test_selected_backend_is_known():
    assert BACKEND in ("python", "compiled")


def test_backend_env_override():
    code = "import opsched; print(opsched.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"OPSCHED_BACKEND": "python", "PATH": "/usr/bin:/bin"},
        cwd="/",
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"


@needs_compiled
def test_full_pipeline_identical_across_backends(tmp_path):
    # the same schedule run under both backends produces identical traces
    script = """
import sys
from opsched import GraphGenSpec, MachineModel, StrategyConfig, generate_synthetic, simulate
from opsched.perf_model import tune_graph
from opsched.scheduler import trace_to_json
g = generate_synthetic(GraphGenSpec("random_dag", depth=5, fanout=4, seed=17))
m = MachineModel()
tuned = tune_graph(g, m)
trace = simulate(g, m, tuned=tuned, config=StrategyConfig.all_strategies())
sys.stdout.write(trace_to_json(trace))
"""
    outputs = {}
    for backend in ("python", "compiled"):
        res = subprocess.run(
            [sys.executable, "-c", script],
            capture_output=True,
            text=True,
            env={"OPSCHED_BACKEND": backend, "PATH": "/usr/bin:/bin"},
            cwd="/",
        )
        assert res.returncode == 0, res.stderr
        outputs[backend] = res.stdout
    assert outputs["python"] == outputs["compiled"]
