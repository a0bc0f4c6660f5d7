"""Analytic execution-time model for operations.

An operation's time at intra-op width p follows a three-term curve:
serial time, parallelizable work divided across p threads, and a per-thread
management overhead that grows with p.  When an operation is placed on
hyper-thread slots of already-occupied cores, every slot delivers only an
``eta`` fraction of a dedicated core's throughput, so the whole curve is
scaled by 1/eta.

This module is the simulator's ground truth and the profiler's measurement
source.  ``optimal_width`` is the exhaustive-scan oracle that the search
based tuner is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._backend import kernels
from .errors import UnderdeterminedError


@dataclass(frozen=True)
class CostCurve:
    """Scalability curve parameters, all in abstract milliseconds.

    t_s: non-parallelizable time
    t_w: parallelizable work (divided across threads)
    c:   per-thread spawn/management overhead (charged per extra thread)
    """

    t_s: float
    t_w: float
    c: float

    def __post_init__(self):
        for name in ("t_s", "t_w", "c"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.t_s == 0 and self.t_w == 0 and self.c == 0:
            raise ValueError("cost curve cannot be identically zero")


@dataclass(frozen=True)
class InterferenceContext:
    """Placement context: shared hyper-thread slots deliver eta throughput."""

    shared: bool = False
    eta: float = 0.515

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")


SOLO = InterferenceContext(shared=False)


def exec_time(curve: CostCurve, width: int, ctx: InterferenceContext = SOLO) -> float:
    """Execution time of one op instance at the given width."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    eta_eff = ctx.eta if ctx.shared else 1.0
    return kernels.exec_time(curve.t_s, curve.t_w, curve.c, width, eta_eff)


def curve_times(curve: CostCurve, max_width: int, ctx: InterferenceContext = SOLO) -> list[float]:
    """exec_time at every width 1..max_width."""
    if max_width < 1:
        raise ValueError(f"max_width must be >= 1, got {max_width}")
    eta_eff = ctx.eta if ctx.shared else 1.0
    return kernels.curve_times(curve.t_s, curve.t_w, curve.c, eta_eff, max_width)


def optimal_width(curve: CostCurve, max_width: int) -> int:
    """Best width by exhaustive scan over 1..max_width, ties to smaller p.

    Smaller-p tie-breaking frees cores for co-running other operations.
    """
    if max_width < 1:
        raise ValueError(f"max_width must be >= 1, got {max_width}")
    return kernels.best_width(curve.t_s, curve.t_w, curve.c, max_width)


class CalibrationFit(NamedTuple):
    curve: CostCurve
    residual: float


def calibrate_from_samples(samples: Sequence[tuple[int, float]]) -> CalibrationFit:
    """Least-squares fit of (t_s, t_w, c) to measured (width, ms) samples.

    Fits on the basis [1, 1/p, p-1]; fitted values are clamped at 0 and the
    reported residual is the 2-norm of the clamped curve's misfit.
    """
    widths = [int(w) for w, _ in samples]
    if any(w < 1 for w in widths):
        raise ValueError("sample widths must be >= 1")
    if len(set(widths)) < 3:
        raise UnderdeterminedError(
            f"need samples at >= 3 distinct widths, got {len(set(widths))}"
        )
    p = np.array(widths, dtype=float)
    y = np.array([ms for _, ms in samples], dtype=float)
    design = np.column_stack([np.ones_like(p), 1.0 / p, p - 1.0])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    t_s, t_w, c = (max(0.0, float(v)) for v in coef)
    curve = CostCurve(t_s, t_w, c)
    fitted = np.array([exec_time(curve, w) for w in widths])
    residual = float(np.linalg.norm(fitted - y))
    return CalibrationFit(curve, residual)
