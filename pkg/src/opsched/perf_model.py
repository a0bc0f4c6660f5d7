"""Performance models for choosing and predicting intra-op parallelism.

Two predictors are implemented:

* a hill-climbing tuner whose evaluation history doubles as a
  piecewise-linear predictor (the one the runtime uses), and
* an ordinary-least-squares regression baseline over observable features,
  kept for the accuracy comparison (it generalizes measurably worse).

The tuner's search runs in two phases.  Phase 1 measures every width on a
coarse lattice (powers of two plus the maximum) and seeds at the best.
Phase 2 probes seed +- s, moving to strict improvements and halving s on
failure, until the step falls below min_step or the budget runs out.  The
step starts at half the larger gap to the seed's lattice neighbors.
Interpolation between measured widths is linear in p: near and above the
optimum the per-thread overhead term dominates and is itself linear in p,
and the history is densest near the optimum where accuracy matters.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cost import CostCurve, SOLO, exec_time
from .errors import ConfigError, InsufficientHistoryError, UnderdeterminedError
from .graph import DataflowGraph, OpKey
from .machine import MachineModel
from .profiler import ProfileHistory, measure


def default_lattice(max_width: int) -> tuple[int, ...]:
    """Half-octave lattice: powers of two and their 1.5x midpoints, plus
    max_width.

    Octave-wide gaps leave linear interpolation with ~10% error between
    measured widths; halving the gap keeps held-out prediction error under
    5% while staying within ~20 evaluations per op.
    """
    points = set()
    p = 1
    while p <= max_width:
        points.add(p)
        if p >= 2 and 3 * p // 2 <= max_width:
            points.add(3 * p // 2)
        p *= 2
    points.add(max_width)
    return tuple(sorted(points))


@dataclass(frozen=True)
class TunerConfig:
    max_width: int
    coarse_lattice: tuple[int, ...] = ()
    max_evals: int = 16
    min_step: int = 1

    def __post_init__(self):
        if self.max_width < 1:
            raise ValueError(f"max_width must be >= 1, got {self.max_width}")
        lattice = self.coarse_lattice or default_lattice(self.max_width)
        lattice = tuple(lattice)
        if list(lattice) != sorted(set(lattice)):
            raise ValueError(f"lattice must be sorted and distinct, got {lattice}")
        if lattice[0] < 1 or lattice[-1] > self.max_width:
            raise ValueError(f"lattice must lie within [1, {self.max_width}]")
        object.__setattr__(self, "coarse_lattice", lattice)
        if self.max_evals < 0:
            raise ValueError(f"max_evals must be >= 0, got {self.max_evals}")
        if self.min_step < 1:
            raise ValueError(f"min_step must be >= 1, got {self.min_step}")


@dataclass(frozen=True)
class TunedWidth:
    """Chosen width for one op key plus the history that chose it."""

    key: OpKey
    width: int
    predicted_ms: float
    history: ProfileHistory


def hill_climb(
    evaluate: Callable[[int], float],
    config: TunerConfig,
    key: OpKey | None = None,
) -> TunedWidth:
    """Search for the fastest width; returns the best measured point.

    Total evaluations never exceed len(coarse_lattice) + max_evals.
    """
    measured: dict[int, float] = {}

    def probe(width: int) -> float:
        ms = evaluate(width)
        measured[width] = ms
        return ms

    for w in config.coarse_lattice:
        probe(w)
    best_w = min(measured, key=lambda w: (measured[w], w))

    lattice = config.coarse_lattice
    idx = lattice.index(best_w)
    lo_gap = best_w - lattice[idx - 1] if idx > 0 else 0
    hi_gap = lattice[idx + 1] - best_w if idx + 1 < len(lattice) else 0
    step = max(lo_gap, hi_gap) // 2

    budget = config.max_evals
    while step >= config.min_step and budget > 0:
        improvements = []
        for cand in (best_w - step, best_w + step):
            cand = min(max(cand, 1), config.max_width)
            if cand in measured or budget <= 0:
                continue
            budget -= 1
            ms = probe(cand)
            if ms < measured[best_w]:
                improvements.append((ms, cand))
        if improvements:
            improvements.sort()  # largest improvement first, tie toward smaller width
            best_w = improvements[0][1]
        else:
            step //= 2

    history = ProfileHistory(
        key=key or OpKey("anonymous", (1,)),
        samples=dict(measured),
        total_ms=sum(measured.values()),
    )
    return TunedWidth(
        key=history.key, width=best_w, predicted_ms=measured[best_w], history=history
    )


def predict(history: ProfileHistory, width: int) -> float:
    """Predicted ms at ``width`` from the measured history.

    Exact at measured widths; linear interpolation in p between the nearest
    measured neighbors; clamped to the boundary measurement outside the span.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if len(history.samples) < 2:
        raise InsufficientHistoryError(
            f"need >= 2 measured widths to predict, have {len(history.samples)}"
        )
    if width in history.samples:
        return history.samples[width]
    widths = history.sorted_widths()
    if width < widths[0]:
        return history.samples[widths[0]]
    if width > widths[-1]:
        return history.samples[widths[-1]]
    # width is strictly inside the span and unmeasured
    hi_idx = bisect.bisect_left(widths, width)
    lo_w, hi_w = widths[hi_idx - 1], widths[hi_idx]
    lo_ms, hi_ms = history.samples[lo_w], history.samples[hi_w]
    frac = (width - lo_w) / (hi_w - lo_w)
    return lo_ms + (hi_ms - lo_ms) * frac


@dataclass(frozen=True)
class RegressionModel:
    """OLS fit over the basis [1, 1/p, p, w]; w is the op's work proxy."""

    intercept: float
    coef_inv_p: float
    coef_p: float
    coef_work: float
    residual: float

    def predict(self, width: int, work: float) -> float:
        return (
            self.intercept
            + self.coef_inv_p / width
            + self.coef_p * width
            + self.coef_work * work
        )


def fit_regression(histories: list[ProfileHistory]) -> RegressionModel:
    rows = []
    for h in histories:
        for w, ms in sorted(h.samples.items()):
            rows.append((w, h.key.work, ms))
    if len(rows) < 4:
        raise UnderdeterminedError(f"need >= 4 samples to fit, got {len(rows)}")
    p = np.array([r[0] for r in rows], dtype=float)
    work = np.array([r[1] for r in rows], dtype=float)
    y = np.array([r[2] for r in rows], dtype=float)

    columns = [np.ones_like(p), 1.0 / p, p]
    work_varies = bool(np.ptp(work) > 0)
    if work_varies:
        columns.append(work)
    design = np.column_stack(columns)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise UnderdeterminedError(
            "design matrix is rank-deficient; measure more distinct widths"
        )
    residual = float(np.linalg.norm(design @ coef - y))
    coef = list(map(float, coef))
    if not work_varies:
        coef.append(0.0)
    return RegressionModel(coef[0], coef[1], coef[2], coef[3], residual)


def accuracy(
    predictor: Callable[[int], float],
    curve: CostCurve,
    held_out_widths: list[int],
) -> float:
    """Mean relative error of a predictor against the true curve."""
    errors = []
    for w in held_out_widths:
        true_ms = exec_time(curve, w, SOLO)
        errors.append(abs(predictor(w) - true_ms) / true_ms)
    return sum(errors) / len(errors)


# -- graph-level tuning ---------------------------------------------------------

def tune_key(
    key: OpKey,
    curve: CostCurve,
    config: TunerConfig,
    repeats: int = 1,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> TunedWidth:
    """Hill-climb one key, drawing measurements from the profiling streams."""
    total = 0.0

    def evaluate(width: int) -> float:
        nonlocal total
        med, spent = measure(key, curve, width, repeats, noise_sigma, seed)
        total += spent
        return med

    tuned = hill_climb(evaluate, config, key=key)
    history = ProfileHistory(
        key=key,
        samples=dict(tuned.history.samples),
        repeats=repeats,
        noise_sigma=noise_sigma,
        seed=seed,
        total_ms=total,
    )
    return TunedWidth(key, tuned.width, tuned.predicted_ms, history)


def curves_by_key(graph: DataflowGraph) -> dict[OpKey, CostCurve]:
    """Distinct-key curve table; instances of one key must agree."""
    table: dict[OpKey, CostCurve] = {}
    for node in graph.nodes.values():
        prev = table.get(node.key)
        if prev is None:
            table[node.key] = node.cost
        elif prev != node.cost:
            raise ConfigError(
                f"op key {node.key.label()} carries conflicting cost curves; "
                "instances of one (type, signature) must share a curve"
            )
    return table


def tune_graph(
    graph: DataflowGraph,
    machine: MachineModel,
    config: TunerConfig | None = None,
    repeats: int = 1,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> dict[OpKey, TunedWidth]:
    """Tune every distinct op key once (instances share the result)."""
    config = config or TunerConfig(max_width=machine.physical_cores)
    curves = curves_by_key(graph)
    return {
        key: tune_key(key, curves[key], config, repeats, noise_sigma, seed)
        for key in graph.distinct_keys()
    }


# -- tuned-width table file ------------------------------------------------------

def tuned_to_json(tuned: dict[OpKey, TunedWidth]) -> str:
    rows = [
        {
            "type": t.key.op_type,
            "signature": list(t.key.signature),
            "width": t.width,
            "predicted_ms": t.predicted_ms,
        }
        for t in sorted(tuned.values(), key=lambda t: (t.key.op_type, t.key.signature))
    ]
    return json.dumps(rows, indent=2) + "\n"


def tuned_from_json(text: str) -> dict[OpKey, TunedWidth]:
    try:
        rows = json.loads(text)
        out = {}
        for r in rows:
            key = OpKey(r["type"], tuple(r["signature"]))
            width = int(r["width"])
            ms = float(r["predicted_ms"])
            history = ProfileHistory(key=key, samples={width: ms}, total_ms=ms)
            out[key] = TunedWidth(key, width, ms, history)
        return out
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad tuned-width table: {exc}") from None
